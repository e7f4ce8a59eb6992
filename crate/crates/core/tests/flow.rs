mod common;

use common::*;
use stpd::flow::{self, FlowField, FlowParams, FlowSource};
use stpd::imgproc;

#[test]
fn identical_frames_give_zero_flow() {
    let a = smooth_texture(128, 128, 2.0, 7);
    let f = flow::estimate_flow(&a, &a, &FlowParams::default()).unwrap();
    assert!(f.mean_magnitude() < 1e-6, "{}", f.mean_magnitude());
}

#[test]
fn recovers_synthetic_translation() {
    let a = smooth_texture(256, 256, 2.0, 11);
    let b = a.wrap_shift(2, 0);
    let f = flow::estimate_flow(&a, &b, &FlowParams::default()).unwrap();
    let (mu, mv) = f.interior_mean(8);
    println!("mean flow ({mu}, {mv})");
    assert!((1.75..=2.25).contains(&mu), "mean u {mu}");
    assert!((-0.25..=0.25).contains(&mv), "mean v {mv}");
}

#[test]
fn forward_backward_consistency() {
    let a = smooth_texture(128, 128, 3.0, 5);
    let b = a.wrap_shift(1, 1);
    let p = FlowParams::default();
    let fwd = flow::estimate_flow(&a, &b, &p).unwrap();
    let bwd = flow::estimate_flow(&b, &a, &p).unwrap();
    let (bu, bv) = (bwd.u_plane(), bwd.v_plane());
    let (mut epe, mut n) = (0.0, 0);
    for y in 8..120 {
        for x in 8..120 {
            let i = y * 128 + x;
            let (u, v) = (fwd.u()[i] as f64, fwd.v()[i] as f64);
            let xb = x as f64 + u;
            let yb = y as f64 + v;
            let ub = imgproc::bilinear(&bu, xb, yb);
            let vb = imgproc::bilinear(&bv, xb, yb);
            epe += ((u + ub).powi(2) + (v + vb).powi(2)).sqrt();
            n += 1;
        }
    }
    let epe = epe / n as f64;
    assert!(epe < 0.5, "forward/backward EPE {epe}");
}

#[test]
fn estimation_is_deterministic() {
    let a = smooth_texture(64, 64, 2.0, 1);
    let b = a.wrap_shift(1, 0);
    let p = FlowParams { pyramid_levels: 3, ..Default::default() };
    assert_eq!(
        flow::estimate_flow(&a, &b, &p).unwrap(),
        flow::estimate_flow(&a, &b, &p).unwrap()
    );
}

fn brute_force(r: &[FlowField], t: &[FlowField]) -> (f64, f64) {
    let (mut mse, mut tof) = (0.0, 0.0);
    for (a, b) in r.iter().zip(t) {
        let n = a.u().len();
        let (mut s2, mut s1) = (0.0, 0.0);
        for k in 0..n {
            for (x, y) in [(a.u()[k], b.u()[k]), (a.v()[k], b.v()[k])] {
                let d = x as f64 - y as f64;
                s2 += d * d;
                s1 += d.abs();
            }
        }
        mse += s2 / (2 * n) as f64;
        tof += s1 / n as f64;
    }
    (mse / r.len() as f64, tof / r.len() as f64)
}

#[test]
fn constant_field_distortions_match_hand_arithmetic() {
    let r = vec![FlowField::constant(6, 5, 1.0, 0.0); 3];
    let t = vec![FlowField::constant(6, 5, 1.1, 0.0); 3];
    let d = flow::flow_distortion(&r, &t).unwrap();
    let (bm, bt) = brute_force(&r, &t);
    assert!((d.mse_of - 0.005).abs() < 1e-6);
    assert!((d.t_of - 0.1).abs() < 1e-6);
    assert!((d.mse_of - bm).abs() < 1e-15);
    assert!((d.t_of - bt).abs() < 1e-15);
}

#[test]
fn single_pixel_difference_tof() {
    let r = vec![FlowField::constant(10, 10, 0.0, 0.0)];
    let mut u = vec![0.0f32; 100];
    let mut v = vec![0.0f32; 100];
    u[37] = 3.0;
    v[37] = 4.0;
    let t = vec![FlowField::new(10, 10, u, v, flow::FlowOrigin::External).unwrap()];
    let d = flow::flow_distortion(&r, &t).unwrap();
    assert!((d.t_of - 0.07).abs() < 1e-15);
    assert!((d.t_of - brute_force(&r, &t).1).abs() < 1e-15);
}

#[test]
fn external_flows_drive_mse_of() {
    let dir = tempfile::tempdir().unwrap();
    for n in 1..4 {
        flow::write_flo(&FlowField::constant(8, 6, 1.0, 0.0), &dir.path().join(format!("ref_{n}.flo"))).unwrap();
        flow::write_flo(&FlowField::constant(8, 6, 1.1, 0.0), &dir.path().join(format!("test_{n}.flo"))).unwrap();
    }
    let planes: Vec<_> = (0..4).map(|i| noise_plane(8, 6, i)).collect();
    let seq = gray_byte_seq(&planes, "x");
    let src = FlowSource::directory(dir.path());
    let (m, per) = flow::mse_of(&seq, &seq, &src).unwrap();
    assert_eq!(per.len(), 3);
    assert!((m - 0.005).abs() < 1e-6);
    assert!((flow::t_of(&seq, &seq, &src).unwrap() - 0.1).abs() < 1e-6);

    std::fs::remove_file(dir.path().join("test_2.flo")).unwrap();
    match flow::mse_of(&seq, &seq, &src) {
        Err(stpd::Error::MissingFlowFile { pair, .. }) => assert_eq!(pair, 2),
        other => panic!("expected MissingFlowFile, got {other:?}"),
    }
}

#[test]
fn identical_sequences_have_zero_native_distortion() {
    let base = smooth_texture(64, 64, 2.0, 3);
    let planes: Vec<_> = (0..3).map(|t| base.wrap_shift(t, 0)).collect();
    let seq = gray_byte_seq(&planes, "x");
    let p = FlowParams { pyramid_levels: 3, iterations_per_level: 30, ..Default::default() };
    let d = flow::flow_distortion_for(&seq, &seq, &FlowSource::Native(p)).unwrap();
    assert_eq!(d.mse_of, 0.0);
    assert_eq!(d.t_of, 0.0);
}
