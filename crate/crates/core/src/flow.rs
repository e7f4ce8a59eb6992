//! Dense optical flow: a native coarse-to-fine Horn–Schunck estimator,
//! Middlebury `.flo` I/O, and the flow-difference distortions MSE_OF and tOF.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgproc::{self, Plane};
use crate::video_io::{FrameSequence, ValueRange};

/// Little-endian float whose bytes read "PIEH".
pub const FLO_MAGIC: f32 = 202021.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowOrigin {
    Native,
    External,
}

/// Per-pixel displacement from one frame to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f32>,
    v: Vec<f32>,
    origin: FlowOrigin,
}

impl FlowField {
    pub fn new(
        width: usize,
        height: usize,
        u: Vec<f32>,
        v: Vec<f32>,
        origin: FlowOrigin,
    ) -> Result<Self> {
        if u.len() != width * height || v.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "flow components hold {} and {} values for a {height}x{width} field",
                u.len(),
                v.len()
            )));
        }
        if !u.iter().chain(&v).all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("flow contains non-finite values".into()));
        }
        Ok(FlowField {
            width,
            height,
            u,
            v,
            origin,
        })
    }

    pub fn constant(width: usize, height: usize, u: f32, v: f32) -> Self {
        FlowField {
            width,
            height,
            u: vec![u; width * height],
            v: vec![v; width * height],
            origin: FlowOrigin::External,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    pub fn origin(&self) -> FlowOrigin {
        self.origin
    }

    pub fn u_plane(&self) -> Plane {
        Plane::new(
            self.width,
            self.height,
            self.u.iter().map(|&x| f64::from(x)).collect(),
        )
    }

    pub fn v_plane(&self) -> Plane {
        Plane::new(
            self.width,
            self.height,
            self.v.iter().map(|&x| f64::from(x)).collect(),
        )
    }

    /// Mean (u, v) over pixels at least `margin` px from every border.
    pub fn interior_mean(&self, margin: usize) -> (f64, f64) {
        let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
        for y in margin..self.height.saturating_sub(margin) {
            for x in margin..self.width.saturating_sub(margin) {
                let i = y * self.width + x;
                su += f64::from(self.u[i]);
                sv += f64::from(self.v[i]);
                n += 1;
            }
        }
        (su / n as f64, sv / n as f64)
    }

    pub fn mean_magnitude(&self) -> f64 {
        let sum: f64 = self
            .u
            .iter()
            .zip(&self.v)
            .map(|(&u, &v)| f64::from(u).hypot(f64::from(v)))
            .sum();
        sum / self.u.len() as f64
    }
}

/// Native estimator settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FlowParams {
    pub pyramid_levels: usize,
    pub pyramid_scale: f64,
    /// Horn–Schunck α², with intensities on the 8-bit scale.
    pub smoothness: f64,
    pub iterations_per_level: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            pyramid_levels: 4,
            pyramid_scale: 0.5,
            smoothness: 15.0,
            iterations_per_level: 100,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if self.pyramid_levels < 1
            || !(self.pyramid_scale > 0.0 && self.pyramid_scale < 1.0)
            || self.smoothness.is_nan() || self.smoothness <= 0.0
            || self.iterations_per_level < 1
        {
            return Err(Error::InvalidParameter(format!("flow params {self:?}")));
        }
        Ok(())
    }
}

fn pyramid(base: &Plane, sizes: &[(usize, usize)], scale: f64) -> Vec<Plane> {
    let sigma = 1.0 / (2.0 * scale).sqrt();
    let mut levels = vec![base.clone()];
    for &(w, h) in &sizes[1..] {
        let prev = levels.last().unwrap();
        let smoothed = imgproc::gaussian_blur(prev, sigma);
        levels.push(imgproc::resize_bilinear(&smoothed, w, h));
    }
    levels
}

/// Horn–Schunck weighted neighbourhood average (4-neighbours 1/6,
/// diagonals 1/12).
fn hs_average(p: &Plane) -> Plane {
    const W: [[f64; 3]; 3] = [
        [1.0 / 12.0, 1.0 / 6.0, 1.0 / 12.0],
        [1.0 / 6.0, 0.0, 1.0 / 6.0],
        [1.0 / 12.0, 1.0 / 6.0, 1.0 / 12.0],
    ];
    let (w, h) = (p.width(), p.height());
    let d = p.data();
    let border = |x: usize, y: usize| {
        let mut acc = 0.0;
        for (dy, row) in W.iter().enumerate() {
            for (dx, &k) in row.iter().enumerate() {
                if k != 0.0 {
                    acc += k * p.get_reflect(x as isize + dx as isize - 1, y as isize + dy as isize - 1);
                }
            }
        }
        acc
    };
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                border(x, y)
            } else {
                // same accumulation order as the border path
                let (a, b, c) = ((y - 1) * w + x, y * w + x, (y + 1) * w + x);
                let mut acc = 0.0;
                acc += W[0][0] * d[a - 1];
                acc += W[0][1] * d[a];
                acc += W[0][2] * d[a + 1];
                acc += W[1][0] * d[b - 1];
                acc += W[1][2] * d[b + 1];
                acc += W[2][0] * d[c - 1];
                acc += W[2][1] * d[c];
                acc += W[2][2] * d[c + 1];
                acc
            };
        }
    }
    Plane::new(w, h, out)
}

/// Estimate the flow carrying `prev` onto `next` (`next(x + w(x)) ≈ prev(x)`).
///
/// Frames are single-channel, unit range. Output is deterministic.
pub fn estimate_flow(prev: &Plane, next: &Plane, params: &FlowParams) -> Result<FlowField> {
    params.validate()?;
    if (prev.width(), prev.height()) != (next.width(), next.height()) {
        return Err(Error::DimensionMismatch(format!(
            "prev is {}x{}, next is {}x{}",
            prev.height(),
            prev.width(),
            next.height(),
            next.width()
        )));
    }
    let (w0, h0) = (prev.width(), prev.height());
    let coarsest = w0.min(h0) as f64 * params.pyramid_scale.powi(params.pyramid_levels as i32 - 1);
    if coarsest < 8.0 {
        return Err(Error::TooManyPyramidLevels {
            levels: params.pyramid_levels,
            scale: params.pyramid_scale,
            height: h0,
            width: w0,
        });
    }

    let mut sizes = vec![(w0, h0)];
    for _ in 1..params.pyramid_levels {
        let &(w, h) = sizes.last().unwrap();
        sizes.push((
            ((w as f64 * params.pyramid_scale).round() as usize).max(1),
            ((h as f64 * params.pyramid_scale).round() as usize).max(1),
        ));
    }
    let to_byte = |p: &Plane| p.map(|v| v * 255.0);
    let pyr0 = pyramid(&to_byte(prev), &sizes, params.pyramid_scale);
    let pyr1 = pyramid(&to_byte(next), &sizes, params.pyramid_scale);

    let (cw, ch) = *sizes.last().unwrap();
    let mut u = Plane::zeros(cw, ch);
    let mut v = Plane::zeros(cw, ch);
    for level in (0..params.pyramid_levels).rev() {
        let (w, h) = sizes[level];
        if (u.width(), u.height()) != (w, h) {
            let sx = w as f64 / u.width() as f64;
            let sy = h as f64 / u.height() as f64;
            u = imgproc::resize_bilinear(&u, w, h).map(|x| x * sx);
            v = imgproc::resize_bilinear(&v, w, h).map(|x| x * sy);
        }
        let (du, dv) = refine(&pyr0[level], &pyr1[level], &u, &v, params);
        u = u.zip_map(&du, |a, b| a + b);
        v = v.zip_map(&dv, |a, b| a + b);
    }

    FlowField::new(
        w0,
        h0,
        u.data().iter().map(|&x| x as f32).collect(),
        v.data().iter().map(|&x| x as f32).collect(),
        FlowOrigin::Native,
    )
}

/// One warping step: linearize around (u, v) and solve for the increment
/// with Jacobi iterations, smoothing the total flow.
fn refine(i0: &Plane, i1: &Plane, u: &Plane, v: &Plane, params: &FlowParams) -> (Plane, Plane) {
    let i1w = imgproc::warp(i1, u, v);
    let (gx0, gy0) = imgproc::gradients(i0);
    let (gx1, gy1) = imgproc::gradients(&i1w);
    let ix = gx0.zip_map(&gx1, |a, b| 0.5 * (a + b));
    let iy = gy0.zip_map(&gy1, |a, b| 0.5 * (a + b));
    let it = i1w.zip_map(i0, |a, b| a - b);
    let alpha2 = params.smoothness;

    let (w, h) = (u.width(), u.height());
    let mut du = Plane::zeros(w, h);
    let mut dv = Plane::zeros(w, h);
    for _ in 0..params.iterations_per_level {
        let ut = u.zip_map(&du, |a, b| a + b);
        let vt = v.zip_map(&dv, |a, b| a + b);
        let ubar = hs_average(&ut);
        let vbar = hs_average(&vt);
        let mut ndu = Vec::with_capacity(w * h);
        let mut ndv = Vec::with_capacity(w * h);
        for i in 0..w * h {
            let uu = ubar.data()[i] - u.data()[i];
            let vv = vbar.data()[i] - v.data()[i];
            let gx = ix.data()[i];
            let gy = iy.data()[i];
            let t = (gx * uu + gy * vv + it.data()[i]) / (alpha2 + gx * gx + gy * gy);
            ndu.push(uu - gx * t);
            ndv.push(vv - gy * t);
        }
        du = Plane::new(w, h, ndu);
        dv = Plane::new(w, h, ndv);
    }
    (du, dv)
}

/// Native flows for every consecutive pair: element `n - 1` carries frame
/// `n - 1` onto frame `n`.
pub fn sequence_flows(seq: &FrameSequence, params: &FlowParams) -> Result<Vec<FlowField>> {
    if seq.len() < 2 {
        return Err(Error::TooFewFrames {
            what: "optical flow",
            needed: 2,
            got: seq.len(),
        });
    }
    let planes = seq.luma_planes(ValueRange::Unit);
    let results: Vec<Result<FlowField>> = planes
        .par_windows(2)
        .map(|w| estimate_flow(&w[0], &w[1], params))
        .collect();
    results.into_iter().collect()
}

pub fn write_flo(field: &FlowField, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(12 + 8 * field.u.len());
    buf.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    buf.extend_from_slice(&(field.width as i32).to_le_bytes());
    buf.extend_from_slice(&(field.height as i32).to_le_bytes());
    for (u, v) in field.u.iter().zip(&field.v) {
        buf.extend_from_slice(&u.to_le_bytes());
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_flo(path: &Path) -> Result<FlowField> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_flo(&bytes, path)
}

fn parse_flo(bytes: &[u8], path: &Path) -> Result<FlowField> {
    let word = |i: usize| -> Option<[u8; 4]> { bytes.get(4 * i..4 * i + 4)?.try_into().ok() };
    let truncated = || Error::TruncatedFile(path.to_path_buf());
    let magic = f32::from_le_bytes(word(0).ok_or_else(truncated)?);
    if magic != FLO_MAGIC {
        return Err(Error::BadMagic(path.to_path_buf()));
    }
    let width = i32::from_le_bytes(word(1).ok_or_else(truncated)?);
    let height = i32::from_le_bytes(word(2).ok_or_else(truncated)?);
    if width <= 0 || height <= 0 {
        return Err(Error::DecodeError {
            file: path.to_path_buf(),
            reason: format!("invalid flow size {width}x{height}"),
        });
    }
    let (width, height) = (width as usize, height as usize);
    let n = width * height;
    if bytes.len() < 12 + 8 * n {
        return Err(truncated());
    }
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        u.push(f32::from_le_bytes(word(3 + 2 * i).unwrap()));
        v.push(f32::from_le_bytes(word(4 + 2 * i).unwrap()));
    }
    FlowField::new(width, height, u, v, FlowOrigin::External).map_err(|_| Error::DecodeError {
        file: path.to_path_buf(),
        reason: "non-finite flow values".into(),
    })
}

/// Where the flows feeding MSE_OF and tOF come from.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowSource {
    Native(FlowParams),
    /// `<dir>/<ref_prefix>_<n>.flo` and `<dir>/<test_prefix>_<n>.flo` hold the
    /// flow from frame `n - 1` to frame `n`, `n` starting at 1.
    Directory {
        dir: PathBuf,
        ref_prefix: String,
        test_prefix: String,
    },
}

impl FlowSource {
    pub fn directory(dir: impl Into<PathBuf>) -> Self {
        FlowSource::Directory {
            dir: dir.into(),
            ref_prefix: "ref".into(),
            test_prefix: "test".into(),
        }
    }

    /// Parse `native` or `dir=<path>`.
    pub fn parse(spec: &str, params: FlowParams) -> Result<Self> {
        if spec == "native" {
            Ok(FlowSource::Native(params))
        } else if let Some(dir) = spec.strip_prefix("dir=") {
            Ok(FlowSource::directory(dir))
        } else {
            Err(Error::InvalidParameter(format!(
                "flow source {spec:?}: expected native or dir=<path>"
            )))
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FlowSource::Native(p) => format!(
                "native horn-schunck (levels={}, scale={}, lambda={}, iters={})",
                p.pyramid_levels, p.pyramid_scale, p.smoothness, p.iterations_per_level
            ),
            FlowSource::Directory { dir, .. } => format!("external .flo from {}", dir.display()),
        }
    }
}

pub fn flo_name(prefix: &str, n: usize) -> String {
    format!("{prefix}_{n}.flo")
}

fn read_flo_series(
    dir: &Path,
    prefix: &str,
    seq: &FrameSequence,
) -> Result<Vec<FlowField>> {
    (1..seq.len())
        .map(|n| {
            let path = dir.join(flo_name(prefix, n));
            if !path.is_file() {
                return Err(Error::MissingFlowFile { pair: n, path });
            }
            let f = read_flo(&path)?;
            if (f.width, f.height) != (seq.width(), seq.height()) {
                return Err(Error::DimensionMismatch(format!(
                    "{} is {}x{}, frames are {}x{}",
                    path.display(),
                    f.height,
                    f.width,
                    seq.height(),
                    seq.width()
                )));
            }
            Ok(f)
        })
        .collect()
}

/// Flows for the reference and the test sequence.
pub fn pair_flows(
    reference: &FrameSequence,
    test: &FrameSequence,
    source: &FlowSource,
) -> Result<(Vec<FlowField>, Vec<FlowField>)> {
    check_flow_pair(reference, test)?;
    match source {
        FlowSource::Native(params) => {
            let (r, t) = rayon::join(
                || sequence_flows(reference, params),
                || sequence_flows(test, params),
            );
            Ok((r?, t?))
        }
        FlowSource::Directory {
            dir,
            ref_prefix,
            test_prefix,
        } => Ok((
            read_flo_series(dir, ref_prefix, reference)?,
            read_flo_series(dir, test_prefix, test)?,
        )),
    }
}

fn check_flow_pair(reference: &FrameSequence, test: &FrameSequence) -> Result<()> {
    if reference.len() != test.len()
        || reference.width() != test.width()
        || reference.height() != test.height()
    {
        return Err(Error::SequenceMismatch(format!(
            "{} vs {} frames of {}x{} vs {}x{}",
            reference.len(),
            test.len(),
            reference.height(),
            reference.width(),
            test.height(),
            test.width()
        )));
    }
    if reference.len() < 2 {
        return Err(Error::TooFewFrames {
            what: "flow distortion",
            needed: 2,
            got: reference.len(),
        });
    }
    Ok(())
}

/// Per-pair flow distortions and their means.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FlowDistortion {
    /// MSE_OF, pixels².
    pub mse_of: f64,
    /// tOF, pixels.
    pub t_of: f64,
    pub mse_of_per_pair: Vec<f64>,
    pub t_of_per_pair: Vec<f64>,
}

/// Compare two flow series element-wise.
///
/// MSE per pair averages the squared difference over pixels and both
/// components (divides by 2·H·W); tOF per pair averages |Δu| + |Δv| over
/// pixels. Sequence values are means over pairs.
pub fn flow_distortion(reference: &[FlowField], test: &[FlowField]) -> Result<FlowDistortion> {
    if reference.len() != test.len() {
        return Err(Error::LengthMismatch(format!(
            "{} reference flows vs {} test flows",
            reference.len(),
            test.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut mse = Vec::with_capacity(reference.len());
    let mut tof = Vec::with_capacity(reference.len());
    for (i, (a, b)) in reference.iter().zip(test).enumerate() {
        if (a.width, a.height) != (b.width, b.height) {
            return Err(Error::DimensionMismatch(format!("flow pair {}", i + 1)));
        }
        let (mut sq, mut abs) = (0.0, 0.0);
        for k in 0..a.u.len() {
            let du = f64::from(a.u[k]) - f64::from(b.u[k]);
            let dv = f64::from(a.v[k]) - f64::from(b.v[k]);
            sq += du * du + dv * dv;
            abs += du.abs() + dv.abs();
        }
        let n = a.u.len() as f64;
        mse.push(sq / (2.0 * n));
        tof.push(abs / n);
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Ok(FlowDistortion {
        mse_of: mean(&mse),
        t_of: mean(&tof),
        mse_of_per_pair: mse,
        t_of_per_pair: tof,
    })
}

pub fn flow_distortion_for(
    reference: &FrameSequence,
    test: &FrameSequence,
    source: &FlowSource,
) -> Result<FlowDistortion> {
    let (r, t) = pair_flows(reference, test, source)?;
    flow_distortion(&r, &t)
}

/// MSE_OF and its per-pair series.
pub fn mse_of(
    reference: &FrameSequence,
    test: &FrameSequence,
    source: &FlowSource,
) -> Result<(f64, Vec<f64>)> {
    let d = flow_distortion_for(reference, test, source)?;
    Ok((d.mse_of, d.mse_of_per_pair))
}

/// tOF: mean l1 flow difference.
pub fn t_of(reference: &FrameSequence, test: &FrameSequence, source: &FlowSource) -> Result<f64> {
    Ok(flow_distortion_for(reference, test, source)?.t_of)
}
