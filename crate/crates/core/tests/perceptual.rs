mod common;

use common::*;
use stpd::error::Error;
use stpd::imgproc::Plane;
use stpd::perceptual::{self, PerceptualModelParams};
use stpd::video_io::{FrameSequence, ValueRange};

fn displacements(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect())
        .collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[test]
fn limiting_case_approaches_intensity_trajectory() {
    let planes: Vec<Plane> = (0..6).map(|i| noise_plane(64, 64, 100 + i)).collect();
    let seq = gray_byte_seq(&planes, "noise");
    let params = PerceptualModelParams {
        crop: (64, 64),
        downscale: 1,
        gamma: 1.0,
        dog_sigma_center: 1e-3,
        dog_sigma_surround: 20.0,
        gain_window: 1,
        gain_epsilon: 1e6,
        v1_enabled: false,
        ..Default::default()
    };
    let p = perceptual::to_perceptual_trajectory(&seq, &params).unwrap();
    let i = perceptual::to_intensity_trajectory(&seq, (64, 64), 1).unwrap();
    for (a, b) in displacements(p.points()).iter().zip(displacements(i.points()).iter()) {
        let c = cosine(a, b);
        assert!(c > 0.99, "cosine {c}");
    }
}

#[test]
fn stage_one_is_translation_covariant() {
    // Texture surrounded by a constant margin wider than every filter, so
    // boundary handling cannot distinguish wrap from reflection.
    let tex = smooth_texture(32, 32, 1.5, 8);
    let plane = Plane::from_fn(96, 96, |x, y| {
        if (32..64).contains(&x) && (32..64).contains(&y) {
            tex.get(x - 32, y - 32)
        } else {
            0.5
        }
    });
    let params = PerceptualModelParams::default();
    let a = perceptual::stage1(&plane, &params);
    let b = perceptual::stage1(&plane.wrap_shift(5, -3), &params);
    let norm = |p: &Plane| p.data().iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((norm(&a) - norm(&b)).abs() < 1e-6 * norm(&a).max(1.0));
    let shifted = a.wrap_shift(5, -3);
    let worst = shifted
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-9, "max deviation {worst}");
}

#[test]
fn deterministic_and_finite() {
    let seq = pan_clip("coffee.png", 4, 256, 2, 1);
    let params = PerceptualModelParams::default();
    let a = perceptual::to_perceptual_trajectory(&seq, &params).unwrap();
    let b = perceptual::to_perceptual_trajectory(&seq, &params).unwrap();
    assert_eq!(a, b);
    assert!(a.points().iter().flatten().all(|v| v.is_finite()));
}

#[test]
fn constant_sequence_maps_to_one_point() {
    let planes = vec![Plane::filled(64, 64, 0.4); 4];
    let seq = gray_byte_seq(&planes, "flat");
    let params = PerceptualModelParams {
        crop: (64, 64),
        downscale: 2,
        ..Default::default()
    };
    let t = perceptual::to_perceptual_trajectory(&seq, &params).unwrap();
    assert!(t.points().windows(2).all(|w| w[0] == w[1]));
    assert!(t.points()[0].iter().all(|v| v.is_finite()));
}

#[test]
fn dimension_arithmetic() {
    let planes: Vec<Plane> = (0..5).map(|i| smooth_texture(160, 140, 2.0, i)).collect();
    let seq = gray_byte_seq(&planes, "s");
    let t = perceptual::to_intensity_trajectory(&seq, (64, 64), 2).unwrap();
    assert_eq!((t.len(), t.dim()), (5, 1024));
    let params = PerceptualModelParams {
        crop: (128, 128),
        downscale: 2,
        v1_enabled: false,
        ..Default::default()
    };
    let t = perceptual::to_perceptual_trajectory(&seq.slice(0..4).unwrap(), &params).unwrap();
    assert_eq!(t.dim(), 4096);
    assert!(matches!(
        perceptual::to_intensity_trajectory(&seq, (200, 64), 1),
        Err(Error::CropTooLarge { .. })
    ));
}

#[test]
fn affine_ramp_is_collinear_in_intensity_space() {
    let f = smooth_texture(32, 32, 2.0, 4).map(|v| v * 0.5);
    let planes: Vec<Plane> = (0..3).map(|k| f.map(|v| v + 0.1 * k as f64)).collect();
    let seq = FrameSequence::from_planes(&planes, ValueRange::Unit, "ramp").unwrap();
    let t = perceptual::to_intensity_trajectory(&seq, (32, 32), 1).unwrap();
    let d = displacements(t.points());
    assert!((cosine(&d[0], &d[1]) - 1.0).abs() < 1e-12);
}
