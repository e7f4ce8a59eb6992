//! Natural Image Quality Evaluator.
//!
//! Features per patch and scale: the GGD fit (shape, variance) of the MSCN
//! coefficients, then an AGGD fit (shape, mean, left variance, right
//! variance) of the products of horizontally, vertically and diagonally
//! adjacent coefficients. Two scales give 36 features. A pristine model is
//! the mean and covariance of those features over the sharpest patches of a
//! corpus; a frame is scored by the Mahalanobis-like distance between the
//! pristine Gaussian and the Gaussian fit to its own patches.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::imgproc::{self, Plane};
use crate::spatial::{SpatialMetric, SpatialScoreSeries};
use crate::video_io::{FrameSequence, ValueRange};

pub const NIQE_FEATURES: usize = 36;
pub const MIN_FIT_PATCHES: usize = 100;
pub const MODEL_MAGIC: &str = "NIQEMODEL1";

/// Shape search interval for GGD/AGGD moment matching.
pub const SHAPE_MIN: f64 = 0.05;
pub const SHAPE_MAX: f64 = 10.0;

const MSCN_C: f64 = 1.0;

/// Pristine natural-scene-statistics model.
#[derive(Debug, Clone, PartialEq)]
pub struct NiqeModel {
    feature_mean: Vec<f64>,
    /// Row-major 36×36.
    feature_cov: Vec<f64>,
    patch_size: usize,
    sharpness_fraction: f64,
}

impl NiqeModel {
    pub fn new(
        feature_mean: Vec<f64>,
        feature_cov: Vec<f64>,
        patch_size: usize,
        sharpness_fraction: f64,
    ) -> Result<Self> {
        check_patch_params(patch_size, sharpness_fraction)?;
        if feature_mean.len() != NIQE_FEATURES || feature_cov.len() != NIQE_FEATURES * NIQE_FEATURES {
            return Err(Error::InvalidParameter("NIQE model must hold 36 features".into()));
        }
        if !feature_mean.iter().chain(&feature_cov).all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("NIQE model has non-finite entries".into()));
        }
        let n = NIQE_FEATURES;
        for i in 0..n {
            for j in 0..i {
                if (feature_cov[i * n + j] - feature_cov[j * n + i]).abs() > 1e-10 {
                    return Err(Error::InvalidParameter("NIQE covariance not symmetric".into()));
                }
            }
        }
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, &feature_cov));
        if eig.eigenvalues.iter().any(|&l| l < -1e-10) {
            return Err(Error::InvalidParameter(
                "NIQE covariance not positive semi-definite".into(),
            ));
        }
        Ok(NiqeModel {
            feature_mean,
            feature_cov,
            patch_size,
            sharpness_fraction,
        })
    }

    pub fn feature_mean(&self) -> &[f64] {
        &self.feature_mean
    }

    pub fn feature_cov(&self) -> &[f64] {
        &self.feature_cov
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn sharpness_fraction(&self) -> f64 {
        self.sharpness_fraction
    }

    pub fn fingerprint(&self) -> String {
        crate::report::sha256_hex(self.to_text().as_bytes())
    }

    /// Plain-text form: magic line, `patch_size sharpness_fraction`, the
    /// mean vector, then the covariance row by row.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let row = |s: &mut String, vals: &[f64]| {
            let line: Vec<String> = vals.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        };
        let _ = writeln!(s, "{MODEL_MAGIC}");
        let _ = writeln!(s, "{} {}", self.patch_size, self.sharpness_fraction);
        row(&mut s, &self.feature_mean);
        for r in self.feature_cov.chunks(NIQE_FEATURES) {
            row(&mut s, r);
        }
        s
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::MalformedModel {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(MODEL_MAGIC) {
            return Err(bad("missing NIQEMODEL1 magic"));
        }
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("missing patch size"))?
            .split_whitespace()
            .collect();
        let patch_size: usize = header
            .first()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad patch size"))?;
        let sharpness_fraction: f64 = match header.get(1) {
            Some(v) => v.parse().map_err(|_| bad("bad sharpness fraction"))?,
            None => 0.75,
        };
        let mut nums = |expect: usize| -> Result<Vec<f64>> {
            let line = lines.next().ok_or_else(|| bad("truncated model"))?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("bad number"))?;
            if vals.len() != expect {
                return Err(bad("wrong number of values on a line"));
            }
            Ok(vals)
        };
        let mean = nums(NIQE_FEATURES)?;
        let mut cov = Vec::with_capacity(NIQE_FEATURES * NIQE_FEATURES);
        for _ in 0..NIQE_FEATURES {
            cov.extend(nums(NIQE_FEATURES)?);
        }
        NiqeModel::new(mean, cov, patch_size, sharpness_fraction)
            .map_err(|e| bad(&e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        NiqeModel::from_text(&text, path)
    }
}

fn check_patch_params(patch_size: usize, sharpness_fraction: f64) -> Result<()> {
    if patch_size < 8 || !patch_size.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "patch size {patch_size} must be even and at least 8"
        )));
    }
    if !(sharpness_fraction > 0.0 && sharpness_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sharpness fraction {sharpness_fraction} outside (0, 1]"
        )));
    }
    Ok(())
}

/// (Γ(2/a))² / (Γ(1/a) Γ(3/a)): the ratio (E|x|)² / E[x²] of a GGD with
/// shape `a`. Increasing in `a`, from 0 toward 3/4.
pub fn ggd_moment_ratio(shape: f64) -> f64 {
    (2.0 * ln_gamma(2.0 / shape) - ln_gamma(1.0 / shape) - ln_gamma(3.0 / shape)).exp()
}

/// Invert [`ggd_moment_ratio`] by bisection on [`SHAPE_MIN`, `SHAPE_MAX`].
pub fn solve_shape(ratio: f64) -> f64 {
    let (mut lo, mut hi) = (SHAPE_MIN, SHAPE_MAX);
    if ratio <= ggd_moment_ratio(lo) {
        return lo;
    }
    if ratio >= ggd_moment_ratio(hi) {
        return hi;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if ggd_moment_ratio(mid) < ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Zero-mean GGD fit: (shape, variance). All-zero input fits
/// (`SHAPE_MAX`, 0).
pub fn ggd_fit(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let var = values.iter().map(|v| v * v).sum::<f64>() / n;
    if var == 0.0 {
        return (SHAPE_MAX, 0.0);
    }
    let abs_mean = values.iter().map(|v| v.abs()).sum::<f64>() / n;
    (solve_shape(abs_mean * abs_mean / var), var)
}

/// AGGD fit: (shape, mean, left variance, right variance).
pub fn aggd_fit(values: &[f64]) -> [f64; 4] {
    let (mut lsum, mut lcount, mut rsum, mut rcount) = (0.0, 0usize, 0.0, 0usize);
    let (mut abs_sum, mut sq_sum) = (0.0, 0.0);
    for &v in values {
        if v < 0.0 {
            lsum += v * v;
            lcount += 1;
        } else if v > 0.0 {
            rsum += v * v;
            rcount += 1;
        }
        abs_sum += v.abs();
        sq_sum += v * v;
    }
    if sq_sum == 0.0 {
        return [SHAPE_MAX, 0.0, 0.0, 0.0];
    }
    let left_std = if lcount > 0 { (lsum / lcount as f64).sqrt() } else { 0.0 };
    let right_std = if rcount > 0 { (rsum / rcount as f64).sqrt() } else { 0.0 };
    let n = values.len() as f64;
    let r_hat = (abs_sum / n).powi(2) / (sq_sum / n);
    let r_norm = if left_std > 0.0 && right_std > 0.0 {
        let g = left_std / right_std;
        r_hat * (g.powi(3) + 1.0) * (g + 1.0) / (g * g + 1.0).powi(2)
    } else {
        r_hat
    };
    let shape = solve_shape(r_norm);
    let scale = (ln_gamma(1.0 / shape) - ln_gamma(3.0 / shape)).exp().sqrt();
    let ratio = (ln_gamma(2.0 / shape) - ln_gamma(1.0 / shape)).exp();
    let mean = (right_std - left_std) * ratio * scale;
    [shape, mean, left_std * left_std, right_std * right_std]
}

fn mscn_window() -> Vec<f64> {
    let sigma: f64 = 7.0 / 6.0;
    let mut k: Vec<f64> = (-3i32..=3)
        .map(|i| (-f64::from(i * i) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Mean-subtracted contrast-normalized coefficients and the local standard
/// deviation field. Input is on the 8-bit scale.
pub fn mscn(plane: &Plane) -> (Plane, Plane) {
    // global centering leaves the local statistics unchanged and keeps the
    // variance subtraction well conditioned
    let m = plane.mean();
    let centered = plane.map(|v| v - m);
    let k = mscn_window();
    let mu = imgproc::separable(&centered, &k, &k);
    let sq = imgproc::separable(&centered.map(|v| v * v), &k, &k);
    let sigma = sq.zip_map(&mu, |s, m| (s - m * m).abs().sqrt());
    let num = centered.zip_map(&mu, |c, m| c - m);
    (num.zip_map(&sigma, |n, s| n / (s + MSCN_C)), sigma)
}

fn patch_features(mscn: &Plane, top: usize, left: usize, size: usize, out: &mut Vec<f64>) {
    let patch = mscn.window(top, left, size, size);
    let (a, var) = ggd_fit(patch.data());
    out.push(a);
    out.push(var);
    // (dy, dx) neighbour offsets: horizontal, vertical, main and anti diagonal
    for (dy, dx) in [(0isize, 1isize), (1, 0), (1, 1), (1, -1)] {
        let mut prods = Vec::with_capacity(size * size);
        for y in 0..size as isize {
            for x in 0..size as isize {
                let (ny, nx) = (y + dy, x + dx);
                if ny < 0 || nx < 0 || ny >= size as isize || nx >= size as isize {
                    continue;
                }
                prods.push(patch.get(x as usize, y as usize) * patch.get(nx as usize, ny as usize));
            }
        }
        out.extend_from_slice(&aggd_fit(&prods));
    }
}

/// Per-patch features of a byte-scale gray plane, with each patch's
/// sharpness (mean local deviation at the finest scale). Patches tile the
/// frame from the top-left; leftovers are ignored.
pub fn frame_features(plane: &Plane, patch_size: usize) -> Vec<(Vec<f64>, f64)> {
    let (rows, cols) = (plane.height() / patch_size, plane.width() / patch_size);
    let (m1, s1) = mscn(plane);
    let (m2, _) = mscn(&imgproc::block_downscale(plane, 2));
    let half = patch_size / 2;
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let mut feats = Vec::with_capacity(NIQE_FEATURES);
            patch_features(&m1, r * patch_size, c * patch_size, patch_size, &mut feats);
            patch_features(&m2, r * half, c * half, half, &mut feats);
            let sharp = s1.window(r * patch_size, c * patch_size, patch_size, patch_size).mean();
            out.push((feats, sharp));
        }
    }
    out
}

fn mean_and_cov(features: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = features.len();
    let d = NIQE_FEATURES;
    let mut mean = vec![0.0; d];
    for f in features {
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![0.0; d * d];
    if n > 1 {
        for i in 0..d {
            for j in i..d {
                let s: f64 = features
                    .iter()
                    .map(|f| (f[i] - mean[i]) * (f[j] - mean[j]))
                    .sum();
                let c = s / (n - 1) as f64;
                cov[i * d + j] = c;
                cov[j * d + i] = c;
            }
        }
    }
    (mean, cov)
}

/// Fit a pristine model to byte-scale gray frames. A patch is kept when its
/// sharpness reaches `sharpness_fraction` of the sharpest patch in its frame.
pub fn niqe_fit(corpus: &[Plane], patch_size: usize, sharpness_fraction: f64) -> Result<NiqeModel> {
    check_patch_params(patch_size, sharpness_fraction)?;
    let per_frame: Vec<Vec<Vec<f64>>> = corpus
        .par_iter()
        .map(|p| {
            let feats = frame_features(p, patch_size);
            let max = feats.iter().map(|f| f.1).fold(0.0, f64::max);
            feats
                .into_iter()
                .filter(|f| max > 0.0 && f.1 >= sharpness_fraction * max)
                .map(|f| f.0)
                .collect()
        })
        .collect();
    let selected: Vec<Vec<f64>> = per_frame.into_iter().flatten().collect();
    if selected.len() < MIN_FIT_PATCHES {
        return Err(Error::InsufficientPatches {
            found: selected.len(),
            needed: MIN_FIT_PATCHES,
        });
    }
    let (mean, cov) = mean_and_cov(&selected);
    if let Some(i) = (0..NIQE_FEATURES).find(|&i| cov[i * NIQE_FEATURES + i] <= 0.0) {
        return Err(Error::SingularFeatures(i));
    }
    NiqeModel::new(mean, cov, patch_size, sharpness_fraction)
}

/// Fit from sequences (converted to gray, byte scale).
pub fn niqe_fit_sequences(
    corpus: &[FrameSequence],
    patch_size: usize,
    sharpness_fraction: f64,
) -> Result<NiqeModel> {
    let planes: Vec<Plane> = corpus
        .iter()
        .flat_map(|s| s.luma_planes(ValueRange::Byte))
        .collect();
    niqe_fit(&planes, patch_size, sharpness_fraction)
}

fn pinv_symmetric(m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let tol = max * n as f64 * f64::EPSILON;
    let inv = eig
        .eigenvalues
        .map(|l| if l.abs() > tol { 1.0 / l } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

/// NIQE score of one byte-scale gray frame; lower is more natural.
pub fn niqe_score(plane: &Plane, model: &NiqeModel) -> Result<f64> {
    let p = model.patch_size;
    if (plane.height() / p) * (plane.width() / p) < 4 {
        return Err(Error::FrameTooSmall {
            height: plane.height(),
            width: plane.width(),
            patch: p,
        });
    }
    let feats: Vec<Vec<f64>> = frame_features(plane, p).into_iter().map(|f| f.0).collect();
    let (mean, cov) = mean_and_cov(&feats);
    let d = NIQE_FEATURES;
    let pooled = (DMatrix::from_row_slice(d, d, &model.feature_cov)
        + DMatrix::from_row_slice(d, d, &cov))
        / 2.0;
    let diff = DVector::from_iterator(d, model.feature_mean.iter().zip(&mean).map(|(a, b)| a - b));
    let dist = (diff.transpose() * pinv_symmetric(pooled) * &diff)[(0, 0)];
    Ok(dist.max(0.0).sqrt())
}

/// Per-frame NIQE of a sequence.
pub fn niqe_series(seq: &FrameSequence, model: &NiqeModel) -> Result<SpatialScoreSeries> {
    let scores: Vec<Result<f64>> = seq
        .luma_planes(ValueRange::Byte)
        .par_iter()
        .map(|p| niqe_score(p, model))
        .collect();
    SpatialScoreSeries::new(scores.into_iter().collect::<Result<_>>()?, SpatialMetric::Niqe)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_ratio_known_values() {
        // Gaussian: 2/π; Laplacian: 1/2
        assert!((ggd_moment_ratio(2.0) - 2.0 / std::f64::consts::PI).abs() < 1e-12);
        assert!((ggd_moment_ratio(1.0) - 0.5).abs() < 1e-12);
        assert!((solve_shape(0.5) - 1.0).abs() < 1e-9);
        assert!((solve_shape(2.0 / std::f64::consts::PI) - 2.0).abs() < 1e-9);
        assert_eq!(solve_shape(1e-9), SHAPE_MIN);
        assert_eq!(solve_shape(0.9), SHAPE_MAX);
    }

    #[test]
    fn degenerate_fits_are_finite() {
        assert_eq!(ggd_fit(&[0.0; 10]), (SHAPE_MAX, 0.0));
        assert_eq!(aggd_fit(&[0.0; 10]), [SHAPE_MAX, 0.0, 0.0, 0.0]);
        let a = aggd_fit(&[1.0, 2.0, 0.5]);
        assert!(a.iter().all(|v| v.is_finite()));
        assert_eq!(a[2], 0.0);
    }

    #[test]
    fn symmetric_aggd_has_zero_mean() {
        let vals: Vec<f64> = (-50..=50).map(|i| f64::from(i) / 10.0).collect();
        let a = aggd_fit(&vals);
        assert!(a[1].abs() < 1e-12);
        assert!((a[2] - a[3]).abs() < 1e-12);
    }

    #[test]
    fn model_text_round_trip_and_rejects() {
        let mean: Vec<f64> = (0..36).map(|i| i as f64 * 0.1).collect();
        let mut cov = vec![0.0; 36 * 36];
        for i in 0..36 {
            cov[i * 36 + i] = 1.0 + i as f64;
        }
        cov[1] = 0.25;
        cov[36] = 0.25;
        let m = NiqeModel::new(mean, cov, 96, 0.75).unwrap();
        let path = Path::new("m.niqe");
        assert_eq!(NiqeModel::from_text(&m.to_text(), path).unwrap(), m);
        assert!(NiqeModel::from_text("NIQEMODEL2\n96\n", path).is_err());
        let truncated: String = m.to_text().lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(NiqeModel::from_text(&truncated, path).is_err());
    }

    #[test]
    fn model_rejects_asymmetric_or_indefinite_cov() {
        let mean = vec![0.0; 36];
        let mut cov = vec![0.0; 36 * 36];
        cov[1] = 1.0;
        assert!(NiqeModel::new(mean.clone(), cov, 96, 0.75).is_err());
        let mut cov = vec![0.0; 36 * 36];
        cov[0] = -1.0;
        assert!(NiqeModel::new(mean.clone(), cov.clone(), 96, 0.75).is_err());
        cov[0] = 1.0;
        assert!(NiqeModel::new(mean.clone(), cov.clone(), 96, 0.0).is_err());
        assert!(NiqeModel::new(mean, cov, 95, 0.75).is_err());
    }

    #[test]
    fn too_small_frame() {
        let model = NiqeModel::new(vec![0.0; 36], vec![0.0; 36 * 36], 32, 0.75).unwrap();
        let p = Plane::zeros(63, 63);
        assert!(matches!(niqe_score(&p, &model), Err(Error::FrameTooSmall { .. })));
    }

    #[test]
    fn insufficient_patches() {
        let planes = vec![Plane::from_fn(64, 64, |x, y| ((x * 7 + y * 13) % 255) as f64)];
        assert!(matches!(
            niqe_fit(&planes, 32, 0.75),
            Err(Error::InsufficientPatches { .. })
        ));
    }
}
