//! End-to-end metric report for one reference/test pair.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::flow::{self, FlowSource};
use crate::perceptual::{self, PerceptualModelParams};
use crate::spatial::{self, lpips, niqe::NiqeModel, SpatialMetric, SpatialScoreSeries};
use crate::straightness::{self, StraightnessSeries};
use crate::tradeoff::{self, TradeoffConfig};
use crate::video_io::{FrameSequence, SequencePair};

pub const REPORT_SCHEMA: &str = "stpd-report/1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Consecutive-pair LPIPS of the reference and the test sequence, for tLP.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScores {
    pub metric: SpatialMetric,
    pub reference: Vec<f64>,
    pub test: Vec<f64>,
}

/// Everything `build_report` needs besides the frames.
#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub tradeoff: TradeoffConfig,
    pub flow: FlowSource,
    pub perceptual: PerceptualModelParams,
    /// Externally computed per-frame LPIPS series.
    pub lpips: Vec<SpatialScoreSeries>,
    /// Where the LPIPS scores came from, for provenance.
    pub lpips_source: Option<String>,
    pub pair_lpips: Option<PairScores>,
    pub niqe_model: Option<NiqeModel>,
    pub ssim: bool,
    pub skip_degenerate: bool,
    /// Record failing sub-measures as unavailable instead of failing.
    pub partial: bool,
    pub name: Option<String>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            tradeoff: TradeoffConfig::default(),
            flow: FlowSource::Native(Default::default()),
            perceptual: PerceptualModelParams::default(),
            lpips: Vec::new(),
            lpips_source: None,
            pair_lpips: None,
            niqe_model: None,
            ssim: true,
            skip_degenerate: false,
            partial: false,
            name: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub schema: String,
    pub name: String,
    pub reference: String,
    pub test: String,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub alpha: f64,
    pub pixel_range: crate::video_io::ValueRange,
    pub spatial_metric: SpatialMetric,
    /// False when P_ST uses a metric other than LPIPS(Alex).
    pub p_st_comparable: bool,
    pub flow_source: String,
    pub perceptual_params: PerceptualModelParams,
    pub perceptual_params_sha256: String,
    pub niqe_model_sha256: Option<String>,
    pub lpips_source: Option<String>,
    pub skip_degenerate: bool,
    pub psnr_infinite_frames: Vec<usize>,
    /// Field name → reason it could not be computed.
    pub unavailable: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Scalars {
    pub mse_pix: Option<f64>,
    pub psnr_mean: Option<f64>,
    pub ssim_mean: Option<f64>,
    pub mse_of: Option<f64>,
    pub t_of: Option<f64>,
    pub niqe_mean: Option<f64>,
    pub lpips_alex_mean: Option<f64>,
    pub lpips_vgg_mean: Option<f64>,
    pub t_lp: Option<f64>,
    pub pq_spatial: Option<f64>,
    pub pq_temporal: Option<f64>,
    pub straightness_perceptual_mean: Option<f64>,
    pub straightness_intensity_mean: Option<f64>,
    pub d_st: Option<f64>,
    pub p_st: Option<f64>,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub meta: ReportMeta,
    pub scalars: Scalars,
    /// Per-frame (or per-pair / per-node) values keyed by measure.
    pub series: BTreeMap<String, Vec<Option<f64>>>,
}

impl MetricReport {
    /// Pretty JSON with a trailing newline; byte-identical for identical
    /// reports.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

struct Collector {
    partial: bool,
    unavailable: BTreeMap<String, String>,
}

impl Collector {
    fn take<T>(&mut self, field: &str, r: Result<T>) -> Result<Option<T>> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(e) if self.partial => {
                self.unavailable.insert(field.to_string(), e.to_string());
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    fn missing(&mut self, field: &str, reason: &str) {
        self.unavailable.insert(field.to_string(), reason.to_string());
    }
}

fn some(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().copied().map(Some).collect()
}

struct Temporal {
    perceptual: StraightnessSeries,
    intensity: StraightnessSeries,
    pq_temporal: f64,
}

/// Straightness of `seq` in both domains and their PQ_Temporal.
fn temporal(seq: &FrameSequence, params: &PerceptualModelParams, skip: bool) -> Result<Temporal> {
    let (p, i) = rayon::join(
        || perceptual::to_perceptual_trajectory(seq, params),
        || perceptual::to_intensity_trajectory(seq, params.crop, params.downscale),
    );
    let perceptual = straightness::curvature_series_with(&p?, skip)?;
    let intensity = straightness::curvature_series_with(&i?, skip)?;
    let pq_temporal = straightness::pq_temporal_aligned(&perceptual, &intensity)?;
    Ok(Temporal {
        perceptual,
        intensity,
        pq_temporal,
    })
}

fn check_series_len(series: &SpatialScoreSeries, frames: usize, source: &Option<String>) -> Result<()> {
    let path = std::path::PathBuf::from(source.clone().unwrap_or_else(|| "<lpips>".into()));
    lpips::check_count(&path, series.len(), frames, 0)
}

/// Fail before any computation when P_ST's spatial input is absent.
fn check_spatial_input(opts: &ReportOptions) -> Result<()> {
    let metric = opts.tradeoff.spatial_metric;
    let ok = match metric {
        SpatialMetric::Niqe => opts.niqe_model.is_some(),
        m => opts.lpips.iter().any(|s| s.metric() == m),
    };
    if ok {
        return Ok(());
    }
    Err(Error::MissingExternalScores(match metric {
        SpatialMetric::Niqe => "spatial metric niqe needs a NIQE model (--niqe-model)".to_string(),
        m => format!(
            "no {m} scores: pass a per-frame LPIPS file with --lpips, or use --spatial niqe with --niqe-model"
        ),
    }))
}

/// Compute every measure for `pair` and assemble the report.
///
/// Deterministic: sub-measures may run concurrently but results are joined
/// in a fixed order, and with `partial` unset the first failure in that
/// order is returned.
pub fn build_report(pair: &SequencePair, opts: &ReportOptions) -> Result<MetricReport> {
    opts.tradeoff.validate()?;
    if !opts.partial {
        check_spatial_input(opts)?;
    }
    let (reference, test) = (pair.reference(), pair.test());
    let n = pair.len();
    let mut c = Collector {
        partial: opts.partial,
        unavailable: BTreeMap::new(),
    };
    let mut scalars = Scalars {
        alpha: opts.tradeoff.alpha,
        ..Default::default()
    };
    let mut series: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();

    let ((fidelity, ssim), (flow_res, (temporal_res, niqe_res))) = rayon::join(
        || {
            rayon::join(
                || tradeoff::mse_pix(pair, opts.tradeoff.pixel_range),
                || opts.ssim.then(|| tradeoff::ssim(pair)),
            )
        },
        || {
            rayon::join(
                || flow::flow_distortion_for(reference, test, &opts.flow),
                || {
                    rayon::join(
                        || temporal(test, &opts.perceptual, opts.skip_degenerate),
                        || opts.niqe_model.as_ref().map(|m| spatial::niqe::niqe_series(test, m)),
                    )
                },
            )
        },
    );

    // fidelity
    let mut psnr_infinite = Vec::new();
    if let Some((mse, per_frame)) = c.take("mse_pix", fidelity)? {
        scalars.mse_pix = Some(mse);
        let byte_mse: Vec<f64> = match opts.tradeoff.pixel_range {
            crate::video_io::ValueRange::Byte => per_frame.clone(),
            crate::video_io::ValueRange::Unit => per_frame.iter().map(|m| m * 65025.0).collect(),
        };
        let psnr = tradeoff::psnr_from_frame_mse(&byte_mse);
        scalars.psnr_mean = psnr.mean;
        if psnr.mean.is_none() {
            c.missing("psnr_mean", "every frame is identical to its reference (infinite PSNR)");
        }
        psnr_infinite = psnr.infinite_frames;
        series.insert("mse_pix".into(), some(&per_frame));
        series.insert("psnr".into(), psnr.per_frame);
    }
    match ssim {
        Some(r) => {
            if let Some((mean, per_frame)) = c.take("ssim_mean", r)? {
                scalars.ssim_mean = Some(mean);
                series.insert("ssim".into(), some(&per_frame));
            }
        }
        None => c.missing("ssim_mean", "disabled"),
    }

    // flow
    if let Some(d) = c.take("mse_of", flow_res)? {
        scalars.mse_of = Some(d.mse_of);
        scalars.t_of = Some(d.t_of);
        series.insert("mse_of".into(), some(&d.mse_of_per_pair));
        series.insert("t_of".into(), some(&d.t_of_per_pair));
    } else {
        c.missing("t_of", "flow unavailable");
    }

    // temporal naturalness
    if let Some(t) = c.take("pq_temporal", temporal_res)? {
        scalars.pq_temporal = Some(t.pq_temporal);
        scalars.straightness_perceptual_mean = Some(t.perceptual.mean_straightness);
        scalars.straightness_intensity_mean = Some(t.intensity.mean_straightness);
        let idx = |s: &StraightnessSeries| s.frame_index.iter().map(|&i| Some(i as f64)).collect();
        series.insert("straightness_perceptual_frame".into(), idx(&t.perceptual));
        series.insert("straightness_perceptual".into(), some(&t.perceptual.straightness));
        series.insert("straightness_intensity_frame".into(), idx(&t.intensity));
        series.insert("straightness_intensity".into(), some(&t.intensity.straightness));
    }

    // spatial
    let mut spatial_series: BTreeMap<SpatialMetric, SpatialScoreSeries> = BTreeMap::new();
    match niqe_res {
        Some(r) => {
            if let Some(s) = c.take("niqe_mean", r)? {
                scalars.niqe_mean = Some(s.mean());
                series.insert("niqe".into(), some(s.per_frame()));
                spatial_series.insert(SpatialMetric::Niqe, s);
            }
        }
        None => c.missing("niqe_mean", "no NIQE model supplied"),
    }
    for s in &opts.lpips {
        let checked = check_series_len(s, n, &opts.lpips_source).map(|_| s.clone());
        let field = format!("{}_mean", s.metric().tag());
        if let Some(s) = c.take(&field, checked)? {
            match s.metric() {
                SpatialMetric::LpipsAlex => scalars.lpips_alex_mean = Some(s.mean()),
                SpatialMetric::LpipsVgg => scalars.lpips_vgg_mean = Some(s.mean()),
                SpatialMetric::Niqe => {}
            }
            series.insert(s.metric().tag().into(), some(s.per_frame()));
            spatial_series.insert(s.metric(), s);
        }
    }
    for m in [SpatialMetric::LpipsAlex, SpatialMetric::LpipsVgg] {
        let field = format!("{}_mean", m.tag());
        if !spatial_series.contains_key(&m) && !c.unavailable.contains_key(&field) {
            c.missing(&field, "no LPIPS scores supplied");
        }
    }

    match &opts.pair_lpips {
        Some(p) => {
            let expect = |v: &[f64], which: &str| {
                let path = std::path::PathBuf::from(format!("<{which} pair scores>"));
                lpips::check_count(&path, v.len(), n.saturating_sub(1), 1)
            };
            let r = expect(&p.reference, "reference")
                .and_then(|_| expect(&p.test, "test"))
                .and_then(|_| spatial::t_lp(&p.reference, &p.test));
            if let Some(v) = c.take("t_lp", r)? {
                scalars.t_lp = Some(v);
            }
        }
        None => c.missing("t_lp", "no consecutive-pair LPIPS scores supplied"),
    }

    // headline scores
    let metric = opts.tradeoff.spatial_metric;
    let pq_spatial = match spatial_series.get(&metric) {
        Some(s) => Some(spatial::pq_spatial(s)),
        None => {
            let reason = if metric == SpatialMetric::Niqe {
                "pq_spatial uses NIQE but no NIQE score is available (pass --niqe-model)".to_string()
            } else {
                format!(
                    "pq_spatial uses {metric} but no {metric} scores are available \
                     (pass --lpips <file>, or --spatial niqe with --niqe-model)"
                )
            };
            c.take("pq_spatial", Err::<f64, _>(Error::MissingExternalScores(reason)))?
        }
    };
    scalars.pq_spatial = pq_spatial;

    scalars.d_st = match (scalars.mse_pix, scalars.mse_of) {
        (Some(p), Some(o)) => Some(tradeoff::d_st(p, o, &opts.tradeoff)),
        _ => {
            c.missing("d_st", "requires mse_pix and mse_of");
            None
        }
    };
    scalars.p_st = match (scalars.pq_spatial, scalars.pq_temporal) {
        (Some(s), Some(t)) => c.take("p_st", tradeoff::p_st(s, t))?,
        _ => {
            c.missing("p_st", "requires pq_spatial and pq_temporal");
            None
        }
    };

    let meta = ReportMeta {
        schema: REPORT_SCHEMA.into(),
        name: opts.name.clone().unwrap_or_else(|| test.name().to_string()),
        reference: reference.name().to_string(),
        test: test.name().to_string(),
        frames: n,
        width: reference.width(),
        height: reference.height(),
        channels: reference.channels(),
        alpha: opts.tradeoff.alpha,
        pixel_range: opts.tradeoff.pixel_range,
        spatial_metric: metric,
        p_st_comparable: metric == SpatialMetric::LpipsAlex,
        flow_source: opts.flow.describe(),
        perceptual_params: opts.perceptual,
        perceptual_params_sha256: opts.perceptual.fingerprint(),
        niqe_model_sha256: opts.niqe_model.as_ref().map(NiqeModel::fingerprint),
        lpips_source: opts.lpips_source.clone(),
        skip_degenerate: opts.skip_degenerate,
        psnr_infinite_frames: psnr_infinite,
        unavailable: c.unavailable,
    };
    Ok(MetricReport {
        meta,
        scalars,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
