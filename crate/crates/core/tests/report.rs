mod common;

use std::path::PathBuf;

use common::*;
use stpd::error::{Error, ErrorCategory};
use stpd::flow::FlowSource;
use stpd::imgproc::Plane;
use stpd::report::{build_report, PairScores, ReportOptions, REPORT_SCHEMA};
use stpd::spatial::{lpips, niqe, SpatialMetric};
use stpd::tradeoff::TradeoffConfig;
use stpd::video_io::{FrameSequence, SequencePair, ValueRange};

fn lpips_fixture(name: &str) -> PathBuf {
    data_dir().join("lpips").join(name)
}

fn gray(seq: &FrameSequence) -> Vec<Plane> {
    seq.luma_planes(ValueRange::Byte)
}

/// Eight-frame pan and a blurred copy, both gray.
fn blurred_pair(frames: usize) -> SequencePair {
    let clip = pan_clip("astronaut.png", frames, 256, 2, 1);
    let reference = gray(&clip);
    let test: Vec<Plane> = reference.iter().map(|p| blurred(p, 1.5)).collect();
    SequencePair::new(
        FrameSequence::from_planes(&reference, ValueRange::Byte, "gt").unwrap(),
        FrameSequence::from_planes(&test, ValueRange::Byte, "sr").unwrap(),
    )
    .unwrap()
}

fn with_lpips() -> ReportOptions {
    let path = lpips_fixture("test_8frames.csv");
    ReportOptions {
        lpips: lpips::read_lpips(&path).unwrap(),
        lpips_source: Some("test_8frames.csv".into()),
        pair_lpips: Some(PairScores {
            metric: SpatialMetric::LpipsAlex,
            reference: lpips::read_pair_lpips(&lpips_fixture("ref_pairs_8frames.csv"), SpatialMetric::LpipsAlex)
                .unwrap(),
            test: lpips::read_pair_lpips(&lpips_fixture("test_pairs_8frames.csv"), SpatialMetric::LpipsAlex)
                .unwrap(),
        }),
        ..Default::default()
    }
}

#[test]
fn full_report_is_internally_consistent() {
    let pair = blurred_pair(8);
    let opts = with_lpips();
    let r = build_report(&pair, &opts).unwrap();
    let s = &r.scalars;
    assert_eq!(r.meta.schema, REPORT_SCHEMA);
    assert_eq!(r.meta.frames, 8);
    let mse_pix = s.mse_pix.unwrap();
    let mse_of = s.mse_of.unwrap();
    assert!(mse_pix > 0.0 && mse_of > 0.0);
    assert_eq!(s.d_st.unwrap(), mse_pix + 1000.0 * mse_of);
    let pq_t = s.pq_temporal.unwrap();
    assert!(pq_t > 0.0);
    assert_eq!(s.pq_spatial, s.lpips_alex_mean);
    assert!((s.lpips_alex_mean.unwrap() - 0.135).abs() < 1e-12);
    assert!((s.lpips_vgg_mean.unwrap() - 0.2175).abs() < 1e-12);
    assert_eq!(s.p_st.unwrap(), s.pq_spatial.unwrap() / pq_t);
    let brute_tlp = (1..8)
        .map(|i| ((0.06 + 0.001 * i as f64) - (0.05 + 0.002 * i as f64)).abs())
        .sum::<f64>()
        / 7.0;
    assert!((s.t_lp.unwrap() - brute_tlp).abs() < 1e-9);
    assert!(s.psnr_mean.unwrap() > 20.0);
    assert!(s.ssim_mean.unwrap() < 1.0);
    assert_eq!(s.niqe_mean, None);
    assert!(r.meta.unavailable.contains_key("niqe_mean"));
    assert_eq!(r.meta.unavailable.len(), 1, "{:?}", r.meta.unavailable);
    assert_eq!(r.series["mse_pix"].len(), 8);
    assert_eq!(r.series["mse_of"].len(), 7);
    assert_eq!(r.series["straightness_perceptual"].len(), 6);
}

#[test]
fn missing_lpips_names_the_input() {
    let pair = blurred_pair(4);
    let e = build_report(&pair, &ReportOptions::default()).unwrap_err();
    assert!(matches!(e, Error::MissingExternalScores(_)));
    assert_eq!(e.category(), ErrorCategory::MissingScores);
    assert!(e.to_string().contains("--lpips"), "{e}");
}

#[test]
fn niqe_can_drive_p_st() {
    let pair = blurred_pair(4);
    let model = niqe::niqe_fit(&pristine_corpus(), 32, 0.5).unwrap();
    let opts = ReportOptions {
        tradeoff: TradeoffConfig {
            spatial_metric: SpatialMetric::Niqe,
            ..Default::default()
        },
        niqe_model: Some(model.clone()),
        ..Default::default()
    };
    let r = build_report(&pair, &opts).unwrap();
    assert_eq!(r.scalars.pq_spatial, r.scalars.niqe_mean);
    assert!(!r.meta.p_st_comparable);
    assert_eq!(r.meta.niqe_model_sha256.as_deref(), Some(model.fingerprint().as_str()));
    assert!(r.meta.unavailable.contains_key("lpips_alex_mean"));
}

#[test]
fn score_count_must_match_frames() {
    let pair = blurred_pair(10);
    let mut opts = with_lpips();
    opts.pair_lpips = None;
    let e = build_report(&pair, &opts).unwrap_err();
    assert!(matches!(e, Error::MissingFrame { frame: 8, .. }), "{e}");
    assert!(matches!(
        lpips::read_lpips(&lpips_fixture("gap_frame5.csv")),
        Err(Error::MissingFrame { frame: 5, .. })
    ));
}

#[test]
fn partial_mode_records_reasons() {
    let pair = blurred_pair(4);
    let opts = ReportOptions {
        flow: FlowSource::directory("/nonexistent/flows"),
        partial: true,
        ..Default::default()
    };
    let r = build_report(&pair, &opts).unwrap();
    assert!(r.scalars.mse_pix.is_some());
    assert_eq!(r.scalars.mse_of, None);
    assert_eq!(r.scalars.d_st, None);
    assert!(r.meta.unavailable["mse_of"].contains("ref_1.flo"), "{:?}", r.meta.unavailable);
    assert!(r.meta.unavailable.contains_key("pq_spatial"));
    assert!(r.meta.unavailable.contains_key("p_st"));

    let strict = ReportOptions { partial: false, ..opts };
    let mut strict = strict;
    strict.lpips = with_lpips().lpips;
    let pair8 = blurred_pair(8);
    assert!(matches!(
        build_report(&pair8, &strict),
        Err(Error::MissingFlowFile { pair: 1, .. })
    ));
}

#[test]
fn report_bytes_do_not_depend_on_thread_count() {
    let pair = blurred_pair(8);
    let opts = with_lpips();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| build_report(&pair, &opts).unwrap().to_json())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(3));
}

#[test]
fn swapping_reference_and_test_keeps_flow_distortion() {
    let pair = blurred_pair(4);
    let swapped = SequencePair::new(pair.test().clone(), pair.reference().clone()).unwrap();
    let opts = ReportOptions { partial: true, ..Default::default() };
    let a = build_report(&pair, &opts).unwrap();
    let b = build_report(&swapped, &opts).unwrap();
    assert_eq!(a.scalars.mse_of, b.scalars.mse_of);
    assert_eq!(a.scalars.t_of, b.scalars.t_of);
    assert_eq!(a.scalars.mse_pix, b.scalars.mse_pix);
}
