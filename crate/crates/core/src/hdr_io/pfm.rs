//! Portable Float Map codec.
//!
//! `PF` files carry three channels, `Pf` one. The sign of the scale field
//! selects endianness (negative = little-endian). Rows are stored bottom to
//! top.

use std::io::Write;

use crate::error::{Error, Result};
use crate::hdr_io::HdrImage;
use crate::plane::Plane;

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    little_endian: bool,
    data_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let channels = match bytes.get(..2) {
        Some(b"PF") => 3,
        Some(b"Pf") => 1,
        _ => return Err(Error::CorruptHeader("missing PF/Pf magic".into())),
    };
    let mut pos = 2;
    let mut token = || -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::CorruptHeader("header ends early".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let dim = |s: String| {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| Error::CorruptHeader(format!("bad dimension {s:?}")))
    };
    let width = dim(token()?)?;
    let height = dim(token()?)?;
    let scale_text = token()?;
    let scale: f64 = scale_text
        .parse()
        .ok()
        .filter(|s: &f64| s.is_finite() && *s != 0.0)
        .ok_or_else(|| Error::CorruptHeader(format!("bad scale {scale_text:?}")))?;
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::CorruptHeader("missing separator after scale".into()));
    }
    Ok(Header {
        channels,
        width,
        height,
        little_endian: scale < 0.0,
        data_offset: pos + 1,
    })
}

fn read_floats(bytes: &[u8], header: &Header) -> Result<Vec<f32>> {
    let count = header.width * header.height * header.channels;
    let payload = &bytes[header.data_offset..];
    if payload.len() < count * 4 {
        return Err(Error::TruncatedPayload(format!(
            "expected {} bytes of samples, found {}",
            count * 4,
            payload.len()
        )));
    }
    Ok(payload[..count * 4]
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            if header.little_endian {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect())
}

pub fn decode(bytes: &[u8]) -> Result<HdrImage> {
    let header = parse_header(bytes)?;
    let samples = read_floats(bytes, &header)?;
    let (w, h, ch) = (header.width, header.height, header.channels);
    let mut rgb = vec![[0f32; 3]; w * h];
    for (file_row, chunk) in samples.chunks_exact(w * ch).enumerate() {
        let y = h - 1 - file_row;
        for x in 0..w {
            rgb[y * w + x] = if ch == 3 {
                [chunk[3 * x], chunk[3 * x + 1], chunk[3 * x + 2]]
            } else {
                [chunk[x]; 3]
            };
        }
    }
    HdrImage::new(w, h, rgb)
}

/// Writes a little-endian color PFM.
pub fn write(mut out: impl Write, img: &HdrImage) -> Result<()> {
    let (w, h) = img.dims();
    let mut buf = format!("PF\n{w} {h}\n-1.0\n").into_bytes();
    buf.reserve(w * h * 12);
    for y in (0..h).rev() {
        for px in &img.pixels()[y * w..(y + 1) * w] {
            for c in px {
                buf.extend_from_slice(&c.to_le_bytes());
            }
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Writes a single-channel little-endian PFM. Unlike [`write`] this takes
/// any plane, including kernels smaller than the image minimum and signed
/// values.
pub fn write_plane(mut out: impl Write, plane: &Plane) -> Result<()> {
    let (w, h) = plane.dims();
    let mut buf = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    buf.reserve(w * h * 4);
    for row in plane.rows().rev() {
        for &v in row {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Reads a PFM as a single plane (channel 0 of color files), without the
/// image-size and sign checks applied to [`HdrImage`].
pub fn read_plane(bytes: &[u8]) -> Result<Plane> {
    let header = parse_header(bytes)?;
    let samples = read_floats(bytes, &header)?;
    let (w, h, ch) = (header.width, header.height, header.channels);
    Ok(Plane::from_fn(w, h, |x, y| samples[((h - 1 - y) * w + x) * ch] as f64))
}
