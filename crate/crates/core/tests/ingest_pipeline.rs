use std::path::PathBuf;

use ringtherm_core::ingest::{extract_site_intensities, load_image, Background, RasterImage, SiteSpot};
use ringtherm_core::Error;

const WIDTH: f64 = 3.5;

fn spots() -> Vec<SiteSpot> {
    [(20.0, 20.0), (50.0, 20.0), (80.0, 22.0), (35.0, 50.0), (65.0, 50.0)]
        .into_iter()
        .map(|(x, y)| SiteSpot { x, y, radius_1e: WIDTH })
        .collect()
}

fn scene(amplitudes: &[f64], offset: f64, maxval: u16) -> RasterImage {
    let centres: Vec<(f64, f64)> = spots().iter().map(|s| (s.x + 0.3, s.y - 0.2)).collect();
    RasterImage::from_fn(100, 70, maxval, |x, y| {
        offset
            + centres
                .iter()
                .zip(amplitudes)
                .map(|(&(cx, cy), &a)| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (WIDTH * WIDTH)).exp())
                .sum::<f64>()
    })
}

fn expected(amplitudes: &[f64]) -> Vec<f64> {
    let total: f64 = amplitudes.iter().sum();
    amplitudes.iter().map(|a| a / total).collect()
}

fn temp_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn file_round_trip_recovers_fractions() {
    let amps = [30_000.0, 12_000.0, 6_000.0, 20_000.0, 2_000.0];
    let path = temp_path("five_spots.pgm");
    std::fs::write(&path, scene(&amps, 1_500.0, 65_535).to_pgm()).unwrap();
    let image = load_image(&path).unwrap();
    assert_eq!(image.bit_depth(), 16);
    let got = extract_site_intensities(&image, &spots(), Background::AnnulusMedian).unwrap();
    assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    for (g, e) in got.iter().zip(expected(&amps)) {
        assert!((g - e).abs() / e < 0.01, "{got:?}");
    }
}

#[test]
fn spot_order_permutes_output() {
    let amps = [200.0, 90.0, 40.0, 150.0, 60.0];
    let image = scene(&amps, 0.0, 255);
    let forward = extract_site_intensities(&image, &spots(), Background::None).unwrap();
    let mut reversed_spots = spots();
    reversed_spots.reverse();
    let mut backward = extract_site_intensities(&image, &reversed_spots, Background::None).unwrap();
    backward.reverse();
    for (a, b) in forward.iter().zip(&backward) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn pixel_scaling_leaves_output_unchanged() {
    let amps = [1_000.0, 400.0, 250.0, 700.0, 120.0];
    let base = extract_site_intensities(&scene(&amps, 50.0, 65_535), &spots(), Background::AnnulusMedian).unwrap();
    for s in [3.0, 17.0, 40.0] {
        let scaled: Vec<f64> = amps.iter().map(|a| a * s).collect();
        let got =
            extract_site_intensities(&scene(&scaled, 50.0 * s, 65_535), &spots(), Background::AnnulusMedian).unwrap();
        for (a, b) in base.iter().zip(&got) {
            assert!((a - b).abs() < 2e-3, "scale {s}: {base:?} vs {got:?}");
        }
    }
}

#[test]
fn known_constant_background() {
    let amps = [180.0, 60.0, 120.0, 30.0, 90.0];
    let got = extract_site_intensities(&scene(&amps, 25.0, 255), &spots(), Background::Constant(25.0)).unwrap();
    for (g, e) in got.iter().zip(expected(&amps)) {
        assert!((g - e).abs() / e < 0.02, "{got:?}");
    }
}

#[test]
fn missing_file_is_io_error() {
    let err = load_image(temp_path("does_not_exist.pgm")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}
