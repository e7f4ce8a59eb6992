//! Synthetic and photographic inputs shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use stpd::imgproc::{self, Plane};
use stpd::video_io::{ColorSpace, Frame, FrameSequence, ValueRange};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

/// Uniform noise blurred with `sigma`, rescaled to span [0.1, 0.9].
pub fn smooth_texture(w: usize, h: usize, sigma: f64, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Plane::from_fn(w, h, |_, _| rng.random::<f64>());
    let b = imgproc::gaussian_blur(&noise, sigma);
    let (lo, hi) = b
        .data()
        .iter()
        .fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    b.map(|v| 0.1 + 0.8 * (v - lo) / (hi - lo))
}

pub fn noise_plane(w: usize, h: usize, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Plane::from_fn(w, h, |_, _| rng.random::<f64>())
}

/// Photograph from the fixture set as a byte-range RGB frame.
pub fn photo(name: &str) -> Frame {
    let img = image::open(data_dir().join(name)).unwrap().to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Frame::new(w, h, 3, img.into_raw().into_iter().map(f64::from).collect()).unwrap()
}

/// Camera pan over a photograph: `n` windows of `size`×`size` moving by
/// (`dx`, `dy`) px per frame.
pub fn pan_clip(name: &str, n: usize, size: usize, dx: usize, dy: usize) -> FrameSequence {
    let p = photo(name);
    let frames = (0..n).map(|t| p.crop(8 + dy * t, 8 + dx * t, size, size)).collect();
    FrameSequence::new(frames, ValueRange::Byte, ColorSpace::Rgb, name).unwrap()
}

/// Gray byte-range sequence from unit-range planes.
pub fn gray_byte_seq(planes: &[Plane], name: &str) -> FrameSequence {
    let scaled: Vec<Plane> = planes
        .iter()
        .map(|p| p.map(|v| (v * 255.0).clamp(0.0, 255.0)))
        .collect();
    FrameSequence::from_planes(&scaled, ValueRange::Byte, name).unwrap()
}

/// Ten 256×256 gray crops from the fixture photographs, byte scale.
pub fn pristine_corpus() -> Vec<Plane> {
    let picks: [(&str, &[(usize, usize)]); 4] = [
        ("astronaut.png", &[(0, 0), (200, 200), (100, 250)]),
        ("coffee.png", &[(0, 0), (100, 300)]),
        ("chelsea.png", &[(0, 0), (40, 190)]),
        ("rocket.png", &[(0, 0), (100, 300), (150, 150)]),
    ];
    let mut out = Vec::new();
    for (name, offsets) in picks {
        let p = photo(name);
        for &(t, l) in offsets {
            let (t, l) = (t.min(p.height() - 256), l.min(p.width() - 256));
            out.push(quantize(&p.crop(t, l, 256, 256).luma()));
        }
    }
    out
}

/// Round and clamp to 8-bit levels.
pub fn quantize(p: &Plane) -> Plane {
    p.map(|v| v.round().clamp(0.0, 255.0))
}

pub fn blurred(p: &Plane, sigma: f64) -> Plane {
    if sigma == 0.0 {
        return p.clone();
    }
    quantize(&imgproc::gaussian_blur(p, sigma))
}

/// Additive white Gaussian noise of standard deviation `sigma` (8-bit levels).
pub fn noisy(p: &Plane, sigma: f64, seed: u64) -> Plane {
    if sigma == 0.0 {
        return p.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, sigma).unwrap();
    let data = p.data().iter().map(|&v| v + n.sample(&mut rng)).collect();
    quantize(&Plane::new(p.width(), p.height(), data))
}

pub fn gaussian_samples(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(0.0, 1.0).unwrap();
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

/// One row of the transcribed results table; `of_mse_x100` and
/// `straightness_x100` are stored as printed.
#[derive(Debug, Clone, serde::Deserialize)]
pub struct PublishedRow {
    pub method: String,
    pub group: String,
    pub psnr: f64,
    pub ssim: f64,
    pub mse_pix: f64,
    pub of_mse_x100: f64,
    pub niqe: f64,
    pub lpips_alex: f64,
    pub lpips_vgg: f64,
    pub straightness_x100: f64,
    pub d_st: f64,
    pub p_st: f64,
}

pub fn published_results() -> Vec<PublishedRow> {
    let mut r = csv::Reader::from_path(data_dir().join("published_results.csv")).unwrap();
    r.deserialize().map(|row| row.unwrap()).collect()
}

/// A minimal report document carrying a table row's printed values.
pub fn published_report(row: &PublishedRow) -> serde_json::Value {
    serde_json::json!({
        "meta": { "schema": stpd::report::REPORT_SCHEMA, "name": row.method },
        "scalars": {
            "psnr_mean": row.psnr,
            "ssim_mean": row.ssim,
            "mse_pix": row.mse_pix,
            "mse_of": row.of_mse_x100 / 100.0,
            "niqe_mean": row.niqe,
            "lpips_alex_mean": row.lpips_alex,
            "lpips_vgg_mean": row.lpips_vgg,
            "pq_temporal": row.straightness_x100 / 100.0,
            "d_st": row.d_st,
            "p_st": row.p_st,
            "alpha": 1000.0
        },
        "series": {}
    })
}
