//! Per-frame spatial naturalness: NIQE (native), LPIPS (ingested from score
//! files), PQ_Spatial, and the tLP coherence measure.

pub mod lpips;
pub mod niqe;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialMetric {
    LpipsAlex,
    LpipsVgg,
    Niqe,
}

impl SpatialMetric {
    pub fn tag(self) -> &'static str {
        match self {
            SpatialMetric::LpipsAlex => "lpips_alex",
            SpatialMetric::LpipsVgg => "lpips_vgg",
            SpatialMetric::Niqe => "niqe",
        }
    }

    pub fn is_lpips(self) -> bool {
        matches!(self, SpatialMetric::LpipsAlex | SpatialMetric::LpipsVgg)
    }
}

impl fmt::Display for SpatialMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SpatialMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lpips_alex" => Ok(SpatialMetric::LpipsAlex),
            "lpips_vgg" => Ok(SpatialMetric::LpipsVgg),
            "niqe" => Ok(SpatialMetric::Niqe),
            other => Err(Error::InvalidParameter(format!(
                "unknown spatial metric {other:?} (lpips_alex, lpips_vgg, niqe)"
            ))),
        }
    }
}

/// One score per frame for a single spatial metric.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SpatialScoreSeries {
    per_frame: Vec<f64>,
    metric: SpatialMetric,
    mean: f64,
}

impl SpatialScoreSeries {
    pub fn new(per_frame: Vec<f64>, metric: SpatialMetric) -> Result<Self> {
        if per_frame.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(v) = per_frame.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite {metric} score {v}")));
        }
        if metric.is_lpips() {
            if let Some(v) = per_frame.iter().find(|v| **v < 0.0) {
                return Err(Error::InvalidParameter(format!("negative {metric} score {v}")));
            }
        }
        let mean = per_frame.iter().sum::<f64>() / per_frame.len() as f64;
        Ok(SpatialScoreSeries {
            per_frame,
            metric,
            mean,
        })
    }

    pub fn per_frame(&self) -> &[f64] {
        &self.per_frame
    }

    pub fn metric(&self) -> SpatialMetric {
        self.metric
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn len(&self) -> usize {
        self.per_frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_frame.is_empty()
    }
}

/// PQ_Spatial: the frame average of the series' metric.
pub fn pq_spatial(series: &SpatialScoreSeries) -> f64 {
    series.mean()
}

/// tLP: mean absolute difference between the test and reference
/// consecutive-pair scores.
pub fn t_lp(reference_pairs: &[f64], test_pairs: &[f64]) -> Result<f64> {
    if reference_pairs.len() != test_pairs.len() {
        return Err(Error::LengthMismatch(format!(
            "{} reference pair scores vs {} test pair scores",
            reference_pairs.len(),
            test_pairs.len()
        )));
    }
    if reference_pairs.is_empty() {
        return Err(Error::EmptySeries);
    }
    let sum: f64 = reference_pairs
        .iter()
        .zip(test_pairs)
        .map(|(r, t)| (t - r).abs())
        .sum();
    Ok(sum / reference_pairs.len() as f64)
}
