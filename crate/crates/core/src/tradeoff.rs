//! Fidelity measures and the combined scores: MSE_Pix, PSNR, SSIM, the
//! spatio-temporal distortion D_ST and the perceptual score P_ST.

use crate::error::{Error, Result};
use crate::imgproc::{self, Plane};
use crate::spatial::SpatialMetric;
use crate::video_io::{Frame, SequencePair, ValueRange};

/// Weight on MSE_OF in D_ST.
pub const DEFAULT_ALPHA: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TradeoffConfig {
    pub alpha: f64,
    /// Range MSE_Pix is expressed in.
    pub pixel_range: ValueRange,
    /// Spatial metric feeding P_ST.
    pub spatial_metric: SpatialMetric,
}

impl Default for TradeoffConfig {
    fn default() -> Self {
        TradeoffConfig {
            alpha: DEFAULT_ALPHA,
            pixel_range: ValueRange::Byte,
            spatial_metric: SpatialMetric::LpipsAlex,
        }
    }
}

impl TradeoffConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha {} must be positive", self.alpha)));
        }
        Ok(())
    }
}

fn frame_mse(a: &Frame, b: &Frame, scale: f64) -> f64 {
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = (x - y) * scale;
            d * d
        })
        .sum();
    sum / a.data().len() as f64
}

/// Per-frame MSE over all pixels and channels in `range`, and its mean.
pub fn mse_pix(pair: &SequencePair, range: ValueRange) -> Result<(f64, Vec<f64>)> {
    let (r, t) = (pair.reference(), pair.test());
    if (r.width(), r.height(), r.channels()) != (t.width(), t.height(), t.channels()) {
        return Err(Error::DimensionMismatch("reference and test frames differ".into()));
    }
    let scale = range.max() / r.value_range().max();
    let per_frame: Vec<f64> = r
        .frames()
        .iter()
        .zip(t.frames())
        .map(|(a, b)| frame_mse(a, b, scale))
        .collect();
    let mean = per_frame.iter().sum::<f64>() / per_frame.len() as f64;
    Ok((mean, per_frame))
}

/// Per-frame PSNR; frames identical to their reference are flagged and
/// left out of the mean.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PsnrSummary {
    pub mean: Option<f64>,
    /// `None` where the frame is identical to its reference.
    pub per_frame: Vec<Option<f64>>,
    pub infinite_frames: Vec<usize>,
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    10.0 * (255.0f64 * 255.0 / mse).log10()
}

/// Mean over frames of 10·log10(255² / MSE_frame), on the 8-bit scale.
pub fn psnr_mean(pair: &SequencePair) -> Result<PsnrSummary> {
    let (_, mse) = mse_pix(pair, ValueRange::Byte)?;
    Ok(psnr_from_frame_mse(&mse))
}

pub fn psnr_from_frame_mse(mse: &[f64]) -> PsnrSummary {
    let per_frame: Vec<Option<f64>> = mse
        .iter()
        .map(|&m| (m > 0.0).then(|| psnr_from_mse(m)))
        .collect();
    let infinite_frames: Vec<usize> = per_frame
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.is_none().then_some(i))
        .collect();
    if !infinite_frames.is_empty() {
        log::warn!(
            "{} frame(s) identical to the reference have infinite PSNR and are excluded from the mean",
            infinite_frames.len()
        );
    }
    let finite: Vec<f64> = per_frame.iter().flatten().copied().collect();
    let mean = (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64);
    PsnrSummary {
        mean,
        per_frame,
        infinite_frames,
    }
}

/// Single-scale SSIM of two planes on the 8-bit scale: 11×11 Gaussian
/// window (σ = 1.5), K1 = 0.01, K2 = 0.03, averaged over positions whose
/// window lies inside the frame.
pub fn ssim_plane(a: &Plane, b: &Plane) -> f64 {
    let k = imgproc::gaussian_kernel(1.5);
    let blur = |p: &Plane| imgproc::separable(p, &k, &k);
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let mu_a = blur(a);
    let mu_b = blur(b);
    let saa = blur(&a.map(|v| v * v));
    let sbb = blur(&b.map(|v| v * v));
    let sab = blur(&a.zip_map(b, |x, y| x * y));
    let r = k.len() / 2;
    let (w, h) = (a.width(), a.height());
    let (x0, x1) = if w > 2 * r { (r, w - r) } else { (0, w) };
    let (y0, y1) = if h > 2 * r { (r, h - r) } else { (0, h) };
    let mut sum = 0.0;
    for y in y0..y1 {
        for x in x0..x1 {
            let (ma, mb) = (mu_a.get(x, y), mu_b.get(x, y));
            let va = saa.get(x, y) - ma * ma;
            let vb = sbb.get(x, y) - mb * mb;
            let cov = sab.get(x, y) - ma * mb;
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    }
    sum / ((x1 - x0) * (y1 - y0)) as f64
}

fn channel_plane(f: &Frame, c: usize, scale: f64) -> Plane {
    Plane::from_fn(f.width(), f.height(), |x, y| f.sample(x, y, c) * scale)
}

/// Per-frame SSIM (mean over channels) and its mean.
pub fn ssim(pair: &SequencePair) -> Result<(f64, Vec<f64>)> {
    use rayon::prelude::*;
    let r = pair.reference();
    let scale = 255.0 / r.value_range().max();
    let per_frame: Vec<f64> = r
        .frames()
        .par_iter()
        .zip(pair.test().frames().par_iter())
        .map(|(a, b)| {
            let c = a.channels();
            (0..c)
                .map(|ch| ssim_plane(&channel_plane(a, ch, scale), &channel_plane(b, ch, scale)))
                .sum::<f64>()
                / c as f64
        })
        .collect();
    let mean = per_frame.iter().sum::<f64>() / per_frame.len() as f64;
    Ok((mean, per_frame))
}

/// D_ST = MSE_Pix + α·MSE_OF.
pub fn d_st(mse_pix: f64, mse_of: f64, config: &TradeoffConfig) -> f64 {
    mse_pix + config.alpha * mse_of
}

/// P_ST = PQ_Spatial / PQ_Temporal; a non-positive temporal score is an
/// error.
pub fn p_st(pq_spatial: f64, pq_temporal: f64) -> Result<f64> {
    if pq_temporal.is_nan() || pq_temporal <= 0.0 {
        return Err(Error::NonPositiveTemporal {
            pq_spatial,
            pq_temporal,
        });
    }
    Ok(pq_spatial / pq_temporal)
}
