//! Frame sequences as trajectories: raw intensity vectors, and responses of
//! a two-stage early-vision model (retina/LGN band-pass with local gain
//! control, then an oriented V1-like filter bank with pooling and divisive
//! normalization).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgproc::{self, Plane};
use crate::video_io::{center_offset, FrameSequence, ValueRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryDomain {
    Perceptual,
    Intensity,
}

impl TrajectoryDomain {
    pub fn as_str(self) -> &'static str {
        match self {
            TrajectoryDomain::Perceptual => "perceptual",
            TrajectoryDomain::Intensity => "intensity",
        }
    }
}

/// One representation vector per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptualTrajectory {
    points: Vec<Vec<f64>>,
    domain: TrajectoryDomain,
}

impl PerceptualTrajectory {
    pub fn new(points: Vec<Vec<f64>>, domain: TrajectoryDomain) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch(
                "trajectory points differ in dimension".into(),
            ));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::DegenerateFrame(i));
        }
        Ok(PerceptualTrajectory { points, domain })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn domain(&self) -> TrajectoryDomain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map(Vec::len).unwrap_or(0)
    }
}

/// Front-end model parameters. Lengths are in working-resolution pixels
/// (after crop and downscale).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PerceptualModelParams {
    pub crop: (usize, usize),
    pub downscale: usize,
    pub gamma: f64,
    pub dog_sigma_center: f64,
    pub dog_sigma_surround: f64,
    pub gain_window: usize,
    pub gain_epsilon: f64,
    pub v1_enabled: bool,
    pub v1_orientations: usize,
    pub v1_scales: usize,
    pub v1_pool: usize,
}

impl Default for PerceptualModelParams {
    fn default() -> Self {
        PerceptualModelParams {
            crop: (256, 256),
            downscale: 4,
            gamma: 1.0 / 2.2,
            dog_sigma_center: 0.5,
            dog_sigma_surround: 1.5,
            gain_window: 7,
            gain_epsilon: 0.1,
            v1_enabled: true,
            v1_orientations: 4,
            v1_scales: 2,
            v1_pool: 4,
        }
    }
}

impl PerceptualModelParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.crop.0 > 0
            && self.crop.1 > 0
            && self.downscale >= 1
            && self.gamma > 0.0
            && self.dog_sigma_center > 0.0
            && self.dog_sigma_surround > self.dog_sigma_center
            && self.gain_window >= 1
            && self.gain_epsilon > 0.0
            && (!self.v1_enabled || (self.v1_orientations >= 2 && self.v1_pool >= 1 && self.v1_scales >= 1));
        if !ok {
            return Err(Error::InvalidParameter(format!("perceptual params {self:?}")));
        }
        let (h, w) = self.working_size();
        if h == 0 || w == 0 {
            return Err(Error::InvalidParameter(format!(
                "crop {:?} vanishes after downscale {}",
                self.crop, self.downscale
            )));
        }
        if self.v1_enabled && (h / self.v1_pool == 0 || w / self.v1_pool == 0) {
            return Err(Error::InvalidParameter(format!(
                "pool {} larger than working size {h}x{w}",
                self.v1_pool
            )));
        }
        Ok(())
    }

    /// (height, width) after crop and downscale.
    pub fn working_size(&self) -> (usize, usize) {
        (self.crop.0 / self.downscale, self.crop.1 / self.downscale)
    }

    /// Dimension of every trajectory point.
    pub fn output_dim(&self) -> usize {
        let (h, w) = self.working_size();
        if self.v1_enabled {
            (h / self.v1_pool) * (w / self.v1_pool) * self.v1_channels()
        } else {
            h * w
        }
    }

    fn v1_channels(&self) -> usize {
        2 * self.v1_orientations * self.v1_scales
    }

    /// SHA-256 of the parameter set, for report provenance.
    pub fn fingerprint(&self) -> String {
        crate::report::sha256_hex(format!("{self:?}").as_bytes())
    }
}

/// Gray, unit-range, center-cropped and block-downscaled planes.
fn working_planes(seq: &FrameSequence, crop: (usize, usize), downscale: usize) -> Result<Vec<Plane>> {
    if downscale == 0 {
        return Err(Error::InvalidParameter("downscale must be at least 1".into()));
    }
    let (top, left) = center_offset(seq.height(), seq.width(), crop.0, crop.1)?;
    Ok(seq
        .luma_planes(ValueRange::Unit)
        .into_par_iter()
        .map(|p| imgproc::block_downscale(&p.window(top, left, crop.0, crop.1), downscale))
        .collect())
}

fn require_frames(seq: &FrameSequence) -> Result<()> {
    if seq.len() < 3 {
        return Err(Error::TooFewFrames {
            what: "trajectory curvature",
            needed: 3,
            got: seq.len(),
        });
    }
    Ok(())
}

/// Flattened gray intensities of the working window.
pub fn to_intensity_trajectory(
    seq: &FrameSequence,
    crop: (usize, usize),
    downscale: usize,
) -> Result<PerceptualTrajectory> {
    require_frames(seq)?;
    let points = working_planes(seq, crop, downscale)?
        .into_iter()
        .map(Plane::into_data)
        .collect();
    PerceptualTrajectory::new(points, TrajectoryDomain::Intensity)
}

/// Two-stage model responses of the working window.
pub fn to_perceptual_trajectory(
    seq: &FrameSequence,
    params: &PerceptualModelParams,
) -> Result<PerceptualTrajectory> {
    require_frames(seq)?;
    params.validate()?;
    let points: Vec<Vec<f64>> = working_planes(seq, params.crop, params.downscale)?
        .par_iter()
        .map(|p| frame_response(p, params))
        .collect();
    PerceptualTrajectory::new(points, TrajectoryDomain::Perceptual)
}

/// Full model response of one working-resolution unit-range plane.
pub fn frame_response(plane: &Plane, params: &PerceptualModelParams) -> Vec<f64> {
    let z = stage1(plane, params);
    if params.v1_enabled {
        stage2(&z, params)
    } else {
        z.into_data()
    }
}

/// Retina/LGN stage: luminance compression, difference-of-Gaussians
/// band-pass, divisive local gain control.
pub fn stage1(plane: &Plane, params: &PerceptualModelParams) -> Plane {
    let compressed = plane.map(|v| v.max(0.0).powf(params.gamma));
    let center = imgproc::gaussian_blur(&compressed, params.dog_sigma_center);
    let surround = imgproc::gaussian_blur(&compressed, params.dog_sigma_surround);
    let dog = center.zip_map(&surround, |c, s| c - s);
    let local = imgproc::box_mean(&dog.map(f64::abs), params.gain_window);
    dog.zip_map(&local, |d, m| d / (params.gain_epsilon + m))
}

/// V1 stage: oriented first-derivative-of-Gaussian filters at octave-spaced
/// scales (σ = 1, 2, 4, ... px), half-wave rectified into two polarities,
/// block-pooled, then normalized by the channel energy at each location.
pub fn stage2(z: &Plane, params: &PerceptualModelParams) -> Vec<f64> {
    let pool = params.v1_pool;
    let (pw, ph) = (z.width() / pool, z.height() / pool);
    let channels = params.v1_channels();
    // pooled[channel][location]
    let mut pooled: Vec<Vec<f64>> = Vec::with_capacity(channels);
    for s in 0..params.v1_scales {
        let sigma = f64::from(1u32 << s);
        let g = imgproc::gaussian_kernel(sigma);
        let dg = imgproc::gaussian_derivative_kernel(sigma);
        let dx = imgproc::separable(z, &dg, &g);
        let dy = imgproc::separable(z, &g, &dg);
        for k in 0..params.v1_orientations {
            let theta = std::f64::consts::PI * k as f64 / params.v1_orientations as f64;
            let (sin, cos) = theta.sin_cos();
            let r = dx.zip_map(&dy, |a, b| cos * a + sin * b);
            let pos = imgproc::block_downscale(&r.map(|v| v.max(0.0)), pool);
            let neg = imgproc::block_downscale(&r.map(|v| (-v).max(0.0)), pool);
            pooled.push(pos.into_data());
            pooled.push(neg.into_data());
        }
    }
    let eps2 = params.gain_epsilon * params.gain_epsilon;
    let mut out = vec![0.0; channels * pw * ph];
    for loc in 0..pw * ph {
        let energy: f64 = pooled.iter().map(|c| c[loc] * c[loc]).sum();
        let norm = (eps2 + energy).sqrt();
        for (c, ch) in pooled.iter().enumerate() {
            out[loc * channels + c] = ch[loc] / norm;
        }
    }
    out
}
