//! Discrete trajectory curvature, per-node straightness, and the temporal
//! naturalness score PQ_Temporal.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::perceptual::{PerceptualTrajectory, TrajectoryDomain};

/// Displacements shorter than this make the node angle undefined.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StraightnessSeries {
    /// Frame index (0-based) of each interior node.
    pub frame_index: Vec<usize>,
    /// Angle between successive displacements, radians in [0, π].
    pub curvature: Vec<f64>,
    /// π − curvature.
    pub straightness: Vec<f64>,
    pub mean_straightness: f64,
    pub domain: TrajectoryDomain,
}

impl StraightnessSeries {
    fn from_nodes(nodes: Vec<(usize, f64)>, domain: TrajectoryDomain) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptySeries);
        }
        let frame_index = nodes.iter().map(|n| n.0).collect();
        let curvature: Vec<f64> = nodes.iter().map(|n| n.1).collect();
        let straightness: Vec<f64> = curvature.iter().map(|c| PI - c).collect();
        let mean_straightness = straightness.iter().sum::<f64>() / straightness.len() as f64;
        Ok(StraightnessSeries {
            frame_index,
            curvature,
            straightness,
            mean_straightness,
            domain,
        })
    }

    pub fn len(&self) -> usize {
        self.curvature.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curvature.is_empty()
    }

    /// Keep only the nodes at the given frame indices (which must be present).
    pub fn restricted_to(&self, frames: &[usize]) -> Result<Self> {
        let nodes = frames
            .iter()
            .map(|f| {
                self.frame_index
                    .iter()
                    .position(|g| g == f)
                    .map(|i| (*f, self.curvature[i]))
                    .ok_or_else(|| Error::LengthMismatch(format!("node {f} missing")))
            })
            .collect::<Result<Vec<_>>>()?;
        StraightnessSeries::from_nodes(nodes, self.domain)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn node_angle(prev: &[f64], mid: &[f64], next: &[f64]) -> (f64, f64, f64) {
    let v1: Vec<f64> = mid.iter().zip(prev).map(|(a, b)| a - b).collect();
    let v2: Vec<f64> = next.iter().zip(mid).map(|(a, b)| a - b).collect();
    let n1 = dot(&v1, &v1).sqrt();
    let n2 = dot(&v2, &v2).sqrt();
    // Half-angle form on unit vectors; acos of the cosine loses ~1e-8 near 0 and π.
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in v1.iter().zip(&v2) {
        let (a, b) = (a / n1, b / n2);
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    (2.0 * diff.sqrt().atan2(sum.sqrt()), n1, n2)
}

/// Curvature at every interior node (frames 1..N−2, 0-based).
///
/// A displacement with norm below [`DEGENERACY_THRESHOLD`] raises
/// `DegenerateDisplacement(n)`, `n` being the later frame of the pair, unless
/// `skip_degenerate` is set, in which case nodes touching it are dropped.
pub fn curvature_series_with(
    traj: &PerceptualTrajectory,
    skip_degenerate: bool,
) -> Result<StraightnessSeries> {
    let pts = traj.points();
    if pts.len() < 3 {
        return Err(Error::TooFewFrames {
            what: "trajectory curvature",
            needed: 3,
            got: pts.len(),
        });
    }
    let mut nodes = Vec::with_capacity(pts.len() - 2);
    for n in 1..pts.len() - 1 {
        let (angle, n1, n2) = node_angle(&pts[n - 1], &pts[n], &pts[n + 1]);
        let degenerate = [(n1, n), (n2, n + 1)]
            .into_iter()
            .find(|(norm, _)| *norm < DEGENERACY_THRESHOLD);
        match degenerate {
            Some(_) if skip_degenerate => continue,
            Some((_, frame)) => return Err(Error::DegenerateDisplacement(frame)),
            None => nodes.push((n, angle)),
        }
    }
    StraightnessSeries::from_nodes(nodes, traj.domain())
}

pub fn curvature_series(traj: &PerceptualTrajectory) -> Result<StraightnessSeries> {
    curvature_series_with(traj, false)
}

/// Mean over interior nodes of perceptual minus intensity straightness,
/// radians. Both series must cover the same nodes.
pub fn pq_temporal(perceptual: &StraightnessSeries, intensity: &StraightnessSeries) -> Result<f64> {
    if perceptual.frame_index != intensity.frame_index {
        return Err(Error::LengthMismatch(format!(
            "perceptual series covers {} nodes, intensity series {}",
            perceptual.len(),
            intensity.len()
        )));
    }
    if perceptual.is_empty() {
        return Err(Error::EmptySeries);
    }
    let sum: f64 = perceptual
        .straightness
        .iter()
        .zip(&intensity.straightness)
        .map(|(p, i)| p - i)
        .sum();
    Ok(sum / perceptual.len() as f64)
}

/// Restrict two series to their common nodes and compute PQ_Temporal.
pub fn pq_temporal_aligned(
    perceptual: &StraightnessSeries,
    intensity: &StraightnessSeries,
) -> Result<f64> {
    if perceptual.frame_index == intensity.frame_index {
        return pq_temporal(perceptual, intensity);
    }
    let common: Vec<usize> = perceptual
        .frame_index
        .iter()
        .copied()
        .filter(|f| intensity.frame_index.contains(f))
        .collect();
    pq_temporal(
        &perceptual.restricted_to(&common)?,
        &intensity.restricted_to(&common)?,
    )
}

/// CSV with columns `frame_index,curvature_rad,straightness_rad,domain`.
pub fn write_csv<W: Write>(out: &mut W, series: &[&StraightnessSeries]) -> std::io::Result<()> {
    writeln!(out, "frame_index,curvature_rad,straightness_rad,domain")?;
    for s in series {
        for i in 0..s.len() {
            writeln!(
                out,
                "{},{},{},{}",
                s.frame_index[i],
                s.curvature[i],
                s.straightness[i],
                s.domain.as_str()
            )?;
        }
    }
    Ok(())
}
