use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use stpd_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(stpd_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

/// Frames of a horizontally drifting sinusoid; `shift` pixels per frame.
fn drifting(width: usize, height: usize, frames: usize, shift: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(width * height * frames);
    for t in 0..frames {
        for y in 0..height {
            for x in 0..width {
                let xf = x as f64 - shift * t as f64;
                let v = 128.0 + 60.0 * (xf * 0.3).sin() + 40.0 * (y as f64 * 0.21 + xf * 0.05).cos();
                out.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    out
}

fn sequence(data: &[u8], w: usize, h: usize, n: usize) -> *mut StpdSequence {
    let mut seq = ptr::null_mut();
    let st = unsafe { stpd_sequence_from_gray_u8(data.as_ptr(), w, h, n, &mut seq) };
    assert_eq!(st, StpdStatus::Ok, "{}", last_error());
    seq
}

#[test]
fn sequence_handles_and_fidelity() {
    let (w, h, n) = (64, 64, 4);
    let a = drifting(w, h, n, 1.0);
    let mut b = a.clone();
    for v in b.iter_mut().step_by(2) {
        *v = v.saturating_add(2);
    }
    let (ra, rb) = (sequence(&a, w, h, n), sequence(&b, w, h, n));
    let (mut frames, mut width, mut height, mut channels) = (0, 0, 0, 0);
    unsafe {
        assert_eq!(
            stpd_sequence_dims(ra, &mut frames, &mut width, &mut height, &mut channels),
            StpdStatus::Ok
        );
    }
    assert_eq!((frames, width, height, channels), (n, w, h, 1));

    let mut mse = -1.0;
    assert_eq!(unsafe { stpd_mse_pix(ra, ra, &mut mse) }, StpdStatus::Ok);
    assert_eq!(mse, 0.0);
    assert_eq!(unsafe { stpd_mse_pix(ra, rb, &mut mse) }, StpdStatus::Ok);
    assert!(mse > 0.0 && mse <= 4.0, "{mse}");

    let (mut mse_of, mut t_of) = (-1.0, -1.0);
    assert_eq!(unsafe { stpd_mse_of_native(ra, ra, &mut mse_of, &mut t_of) }, StpdStatus::Ok);
    assert_eq!((mse_of, t_of), (0.0, 0.0));

    unsafe {
        stpd_sequence_free(ra);
        stpd_sequence_free(rb);
        stpd_sequence_free(ptr::null_mut());
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let a = drifting(16, 16, 3, 1.0);
    let b = drifting(16, 16, 4, 1.0);
    let (ra, rb) = (sequence(&a, 16, 16, 3), sequence(&b, 16, 16, 4));
    let mut out = 0.0;
    assert_eq!(unsafe { stpd_mse_pix(ra, rb, &mut out) }, StpdStatus::Input);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { stpd_mse_pix(ptr::null(), rb, &mut out) }, StpdStatus::NullPointer);
    assert!(last_error().contains("reference"));
    assert_eq!(unsafe { stpd_p_st(0.1, 0.0, &mut out) }, StpdStatus::Metric);
    assert_eq!(unsafe { stpd_p_st(0.1982, 0.2942, &mut out) }, StpdStatus::Ok);
    assert!(last_error().is_empty());
    assert!((out - 0.6737).abs() < 5e-4);
    assert!((stpd_d_st(65.28, 0.010268, 1000.0) - 75.548).abs() < 1e-9);

    let missing = CString::new("/nonexistent/stpd-frames").unwrap();
    let mut seq = ptr::null_mut();
    assert_eq!(unsafe { stpd_sequence_load(missing.as_ptr(), &mut seq) }, StpdStatus::Input);
    assert!(seq.is_null());
    unsafe {
        stpd_sequence_free(ra);
        stpd_sequence_free(rb);
    }
}

#[test]
fn straightness_of_raw_points() {
    // Collinear then a right angle.
    let pts = [0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 2.0, 1.0];
    let mut s = [0.0; 2];
    let mut mean = 0.0;
    let st = unsafe { stpd_straightness(pts.as_ptr(), 4, 2, s.as_mut_ptr(), &mut mean) };
    assert_eq!(st, StpdStatus::Ok);
    assert!((s[0] - std::f64::consts::PI).abs() < 1e-12);
    assert!((s[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    assert!((mean - 0.75 * std::f64::consts::PI).abs() < 1e-12);
    let st = unsafe { stpd_straightness(pts.as_ptr(), 2, 2, s.as_mut_ptr(), &mut mean) };
    assert_eq!(st, StpdStatus::Metric);
    let still = [1.0, 1.0, 1.0, 1.0, 2.0, 2.0];
    let st = unsafe { stpd_straightness(still.as_ptr(), 3, 2, s.as_mut_ptr(), &mut mean) };
    assert_eq!(st, StpdStatus::Metric);
}

#[test]
fn flo_round_trip_through_handles() {
    let dir = tempfile::tempdir().unwrap();
    let (w, h) = (5usize, 3usize);
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"PIEH");
    bytes.extend_from_slice(&(w as i32).to_le_bytes());
    bytes.extend_from_slice(&(h as i32).to_le_bytes());
    for i in 0..w * h {
        bytes.extend_from_slice(&(i as f32 * 0.25).to_le_bytes());
        bytes.extend_from_slice(&(-(i as f32) * 1.5e-3).to_le_bytes());
    }
    let src = dir.path().join("a.flo");
    std::fs::write(&src, &bytes).unwrap();

    let c_src = CString::new(src.to_str().unwrap()).unwrap();
    let mut flow = ptr::null_mut();
    assert_eq!(unsafe { stpd_flow_read(c_src.as_ptr(), &mut flow) }, StpdStatus::Ok);
    let (mut fw, mut fh) = (0, 0);
    assert_eq!(unsafe { stpd_flow_dims(flow, &mut fw, &mut fh) }, StpdStatus::Ok);
    assert_eq!((fw, fh), (w, h));
    let (mut u, mut v) = (vec![0f32; w * h], vec![0f32; w * h]);
    assert_eq!(
        unsafe { stpd_flow_copy(flow, u.as_mut_ptr(), v.as_mut_ptr(), w * h) },
        StpdStatus::Ok
    );
    assert_eq!(u[6], 1.5);
    assert_eq!(v[2], -3e-3);
    assert_eq!(
        unsafe { stpd_flow_copy(flow, u.as_mut_ptr(), v.as_mut_ptr(), 3) },
        StpdStatus::Input
    );

    let dst = dir.path().join("b.flo");
    let c_dst = CString::new(dst.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { stpd_flow_write(flow, c_dst.as_ptr()) }, StpdStatus::Ok);
    assert_eq!(std::fs::read(&dst).unwrap(), bytes);
    unsafe { stpd_flow_free(flow) };

    std::fs::write(&src, b"NOPE").unwrap();
    let mut flow = ptr::null_mut();
    assert_eq!(unsafe { stpd_flow_read(c_src.as_ptr(), &mut flow) }, StpdStatus::Input);
}

#[test]
fn report_json_with_partial_and_missing_scores() {
    let (w, h, n) = (64, 64, 5);
    let a = drifting(w, h, n, 1.0);
    let b: Vec<u8> = a.iter().map(|v| v.saturating_add(3)).collect();
    let (ra, rb) = (sequence(&a, w, h, n), sequence(&b, w, h, n));
    let mut json = ptr::null_mut();

    // LPIPS(Alex) is the default spatial metric; without scores this fails.
    let st = unsafe { stpd_report_json(ra, rb, ptr::null(), ptr::null(), 0, &mut json) };
    assert_eq!(st, StpdStatus::MissingScores, "{}", last_error());
    assert!(json.is_null());

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("lpips.csv");
    let mut text = String::from("frame,metric,score\n");
    for i in 0..n {
        text.push_str(&format!("{i},lpips_alex,0.{}\n", 10 + i));
    }
    std::fs::write(&csv, text).unwrap();
    let c_csv = CString::new(csv.to_str().unwrap()).unwrap();
    let st = unsafe { stpd_report_json(ra, rb, c_csv.as_ptr(), ptr::null(), 1, &mut json) };
    assert_eq!(st, StpdStatus::Ok, "{}", last_error());
    let body = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { stpd_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["meta"]["schema"], "stpd-report/1");
    assert!((v["scalars"]["lpips_alex_mean"].as_f64().unwrap() - 0.12).abs() < 1e-12);
    assert!((v["scalars"]["mse_pix"].as_f64().unwrap() - 9.0).abs() < 1.0);
    unsafe {
        stpd_sequence_free(ra);
        stpd_sequence_free(rb);
    }
}

#[test]
fn header_is_generated_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/stpd.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "typedef struct StpdSequence StpdSequence;",
        "typedef struct StpdFlow StpdFlow;",
        "STPD_STATUS_MISSING_SCORES = 4",
        "stpd_sequence_load",
        "stpd_sequence_from_gray_u8",
        "stpd_straightness",
        "stpd_pq_temporal",
        "stpd_mse_pix",
        "stpd_mse_of_native",
        "stpd_d_st",
        "stpd_p_st",
        "stpd_flow_read",
        "stpd_flow_copy",
        "stpd_report_json",
        "stpd_string_free",
        "stpd_last_error_message",
    ] {
        assert!(text.contains(sym), "header lacks {sym}");
    }

    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping header compile check");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let probe = dir.path().join("probe.c");
    std::fs::write(
        &probe,
        "#include \"stpd.h\"\n\
         int probe(void) {\n\
           StpdSequence *s = 0;\n\
           double out;\n\
           StpdStatus st = stpd_p_st(0.1, 0.2, &out);\n\
           stpd_sequence_free(s);\n\
           return st == STPD_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&probe)
        .status()
        .unwrap();
    assert!(status.success(), "header does not compile as C99");
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
