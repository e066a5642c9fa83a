use std::path::PathBuf;

use lgfm::hdr_io::{self, pfm, rgbe};
use lgfm::{HdrImage, ImageFormat, Lgfm, MetricConfig};

fn asset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("testdata").join(name)
}

#[test]
fn decodes_externally_written_rle_file() {
    let img = hdr_io::load_image(asset("scene_ref.hdr"), ImageFormat::Auto).unwrap();
    assert_eq!(img.dims(), (64, 48));
    // values from an independent numpy decode of the same bytes
    assert_eq!(img.pixel(0, 0), [450.0, 450.0, 404.0]);
    assert_eq!(img.pixel(63, 47), [27.625, 26.5, 29.125]);
    assert_eq!(img.pixel(44, 12), [19712.0, 19712.0, 21120.0]);
    let sum: f64 = img.pixels().iter().flat_map(|p| p.iter().map(|&c| c as f64)).sum();
    assert_eq!(sum, 5905774.65625);
}

#[test]
fn rgbe_file_round_trip_is_lossless_after_first_quantization() {
    let img = hdr_io::load_image(asset("scene_ref.hdr"), ImageFormat::Rgbe).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("copy.hdr");
    rgbe::write(std::fs::File::create(&path).unwrap(), &img).unwrap();
    let back = hdr_io::load_image(&path, ImageFormat::Auto).unwrap();
    assert_eq!(back, img);
}

#[test]
fn pfm_file_round_trip_is_exact() {
    let img = hdr_io::load_image(asset("scene_noisy.hdr"), ImageFormat::Auto).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("copy.pfm");
    pfm::write(std::fs::File::create(&path).unwrap(), &img).unwrap();
    let back: HdrImage = hdr_io::load_image(&path, ImageFormat::Auto).unwrap();
    assert_eq!(back, img);
}

#[test]
fn scores_real_files() {
    let metric = Lgfm::new(MetricConfig::default()).unwrap();
    let same = metric.score_files(asset("scene_ref.hdr"), asset("scene_ref.hdr")).unwrap();
    assert!((same.q_lgfm - 1.0).abs() < 1e-12);
    let noisy = metric.score_files(asset("scene_ref.hdr"), asset("scene_noisy.hdr")).unwrap();
    assert!(noisy.q_lgfm < 1.0 && noisy.q_lgfm > 0.0, "{noisy:?}");
    let err = metric.score_files(asset("scene_ref.hdr"), asset("scene_small.hdr")).unwrap_err();
    assert!(matches!(err, lgfm::Error::DimensionMismatch(..)));
}
