//! Radiance RGBE (`.hdr`) codec.
//!
//! Pixels are four bytes: three 8-bit mantissas sharing one biased exponent,
//! decoded as `(m / 256) * 2^(e - 128)`, with `e == 0` meaning black.
//! Scanlines may be flat, old-style run-length (`1 1 1 n` repeat markers), or
//! new-style run-length (`2 2 hi lo` prefix, channels stored as separate
//! runs).

use std::io::Write;

use crate::error::{Error, Result};
use crate::hdr_io::HdrImage;

const MIN_RLE_WIDTH: usize = 8;
const MAX_RLE_WIDTH: usize = 0x7fff;

/// Decodes one RGBE quadruple to linear floats.
#[inline]
pub fn rgbe_to_float(px: [u8; 4]) -> [f32; 3] {
    if px[3] == 0 {
        return [0.0; 3];
    }
    let f = 2f64.powi(px[3] as i32 - 136);
    [
        (px[0] as f64 * f) as f32,
        (px[1] as f64 * f) as f32,
        (px[2] as f64 * f) as f32,
    ]
}

/// Encodes a linear triple, truncating mantissas the way Radiance does.
#[inline]
pub fn float_to_rgbe(rgb: [f32; 3]) -> [u8; 4] {
    let v = rgb[0].max(rgb[1]).max(rgb[2]) as f64;
    if !(v >= 1e-32) {
        return [0; 4];
    }
    // v = m * 2^e with m in [0.5, 1)
    let mut e = v.log2().floor() as i32 + 1;
    let mut m = v / 2f64.powi(e);
    if m >= 1.0 {
        e += 1;
        m /= 2.0;
    } else if m < 0.5 {
        e -= 1;
        m *= 2.0;
    }
    if e + 128 > 255 {
        return [255, 255, 255, 255];
    }
    if e + 128 < 1 {
        return [0; 4];
    }
    let scale = m * 256.0 / v;
    let q = |c: f32| ((c.max(0.0) as f64 * scale) as u32).min(255) as u8;
    [q(rgb[0]), q(rgb[1]), q(rgb[2]), (e + 128) as u8]
}

struct Header {
    width: usize,
    height: usize,
    flip_y: bool,
    data_offset: usize,
}

fn read_line(bytes: &[u8], pos: &mut usize) -> Result<String> {
    let start = *pos;
    let end = bytes[start..]
        .iter()
        .position(|&b| b == b'\n')
        .map(|i| start + i)
        .ok_or_else(|| Error::CorruptHeader("unterminated header line".into()))?;
    *pos = end + 1;
    Ok(String::from_utf8_lossy(&bytes[start..end])
        .trim_end_matches('\r')
        .to_string())
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let magic = read_line(bytes, &mut pos)?;
    if !magic.starts_with("#?") {
        return Err(Error::CorruptHeader(format!("bad magic {magic:?}")));
    }
    loop {
        let line = read_line(bytes, &mut pos)?;
        if line.trim().is_empty() {
            break;
        }
        if let Some(fmt) = line.strip_prefix("FORMAT=") {
            let fmt = fmt.trim();
            if fmt != "32-bit_rle_rgbe" {
                return Err(Error::UnsupportedFormat(format!("RGBE pixel format {fmt}")));
            }
        }
    }
    let res = read_line(bytes, &mut pos)?;
    let tokens: Vec<&str> = res.split_whitespace().collect();
    let (flip_y, height, width) = match tokens.as_slice() {
        ["-Y", h, "+X", w] => (false, *h, *w),
        ["+Y", h, "+X", w] => (true, *h, *w),
        _ => {
            return Err(Error::CorruptHeader(format!(
                "unsupported resolution line {res:?}"
            )))
        }
    };
    let parse = |s: &str| {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| Error::CorruptHeader(format!("bad dimension {s:?}")))
    };
    Ok(Header {
        width: parse(width)?,
        height: parse(height)?,
        flip_y,
        data_offset: pos,
    })
}

fn truncated(y: usize) -> Error {
    Error::TruncatedPayload(format!("scanline {y} ends early"))
}

fn read_scanline(data: &[u8], pos: &mut usize, width: usize, y: usize, out: &mut [[u8; 4]]) -> Result<()> {
    let head = data.get(*pos..*pos + 4).ok_or_else(|| truncated(y))?;
    let is_new_rle = (MIN_RLE_WIDTH..=MAX_RLE_WIDTH).contains(&width)
        && head[0] == 2
        && head[1] == 2
        && head[2] & 0x80 == 0;
    if !is_new_rle {
        return read_flat_scanline(data, pos, width, y, out);
    }
    let declared = ((head[2] as usize) << 8) | head[3] as usize;
    if declared != width {
        return Err(Error::CorruptHeader(format!(
            "scanline {y} declares width {declared}, header says {width}"
        )));
    }
    *pos += 4;
    for ch in 0..4 {
        let mut x = 0;
        while x < width {
            let count = *data.get(*pos).ok_or_else(|| truncated(y))? as usize;
            *pos += 1;
            if count > 128 {
                let n = count - 128;
                let value = *data.get(*pos).ok_or_else(|| truncated(y))?;
                *pos += 1;
                if x + n > width {
                    return Err(Error::CorruptHeader(format!("run overflows scanline {y}")));
                }
                out[x..x + n].iter_mut().for_each(|p| p[ch] = value);
                x += n;
            } else {
                if count == 0 || x + count > width {
                    return Err(Error::CorruptHeader(format!("bad literal run in scanline {y}")));
                }
                let src = data.get(*pos..*pos + count).ok_or_else(|| truncated(y))?;
                for (p, &v) in out[x..x + count].iter_mut().zip(src) {
                    p[ch] = v;
                }
                *pos += count;
                x += count;
            }
        }
    }
    Ok(())
}

fn read_flat_scanline(data: &[u8], pos: &mut usize, width: usize, y: usize, out: &mut [[u8; 4]]) -> Result<()> {
    let mut x = 0;
    let mut shift = 0;
    while x < width {
        let px = data.get(*pos..*pos + 4).ok_or_else(|| truncated(y))?;
        *pos += 4;
        if px[0] == 1 && px[1] == 1 && px[2] == 1 {
            // old-style repeat of the previous pixel
            if x == 0 {
                return Err(Error::CorruptHeader(format!("repeat marker at start of scanline {y}")));
            }
            let n = (px[3] as usize) << shift;
            if x + n > width {
                return Err(Error::CorruptHeader(format!("repeat overflows scanline {y}")));
            }
            let prev = out[x - 1];
            out[x..x + n].iter_mut().for_each(|p| *p = prev);
            x += n;
            shift += 8;
        } else {
            out[x] = [px[0], px[1], px[2], px[3]];
            x += 1;
            shift = 0;
        }
    }
    Ok(())
}

pub fn decode(bytes: &[u8]) -> Result<HdrImage> {
    let header = parse_header(bytes)?;
    let Header {
        width,
        height,
        flip_y,
        data_offset,
    } = header;
    let mut pos = data_offset;
    let mut scan = vec![[0u8; 4]; width];
    let mut rgb = vec![[0f32; 3]; width * height];
    for y in 0..height {
        read_scanline(bytes, &mut pos, width, y, &mut scan)?;
        let row = if flip_y { height - 1 - y } else { y };
        for (dst, &src) in rgb[row * width..(row + 1) * width].iter_mut().zip(&scan) {
            *dst = rgbe_to_float(src);
        }
    }
    HdrImage::new(width, height, rgb)
}

fn write_rle_channel(out: &mut Vec<u8>, data: &[u8]) {
    let run_at = |i: usize| {
        let v = data[i];
        data[i..].iter().take(127).take_while(|&&b| b == v).count()
    };
    let mut i = 0;
    while i < data.len() {
        let run = run_at(i);
        if run >= 4 {
            out.push(128 + run as u8);
            out.push(data[i]);
            i += run;
            continue;
        }
        let start = i;
        while i < data.len() && i - start < 128 && run_at(i) < 4 {
            i += 1;
        }
        out.push((i - start) as u8);
        out.extend_from_slice(&data[start..i]);
    }
}

/// Serializes `img` as a Radiance file. Run-length scanlines are used when
/// `rle` is set and the width is encodable that way; flat otherwise.
pub fn encode(img: &HdrImage, rle: bool) -> Vec<u8> {
    let (w, h) = img.dims();
    let mut out = Vec::with_capacity(w * h * 4 + 64);
    out.extend_from_slice(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n");
    out.extend_from_slice(format!("-Y {h} +X {w}\n").as_bytes());
    let use_rle = rle && (MIN_RLE_WIDTH..=MAX_RLE_WIDTH).contains(&w);
    let mut channel = vec![0u8; w];
    for row in img.pixels().chunks_exact(w) {
        let quads: Vec<[u8; 4]> = row.iter().map(|&p| float_to_rgbe(p)).collect();
        if use_rle {
            out.extend_from_slice(&[2, 2, (w >> 8) as u8, (w & 0xff) as u8]);
            for ch in 0..4 {
                for (c, q) in channel.iter_mut().zip(&quads) {
                    *c = q[ch];
                }
                write_rle_channel(&mut out, &channel);
            }
        } else {
            quads.iter().for_each(|q| out.extend_from_slice(q));
        }
    }
    out
}

pub fn write(mut w: impl Write, img: &HdrImage) -> Result<()> {
    w.write_all(&encode(img, true))?;
    Ok(())
}
