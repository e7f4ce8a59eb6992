//! Single-channel image plane and the separable filtering, resampling and
//! warping primitives shared by the flow estimator, the perceptual front end
//! and NIQE.
//!
//! Every filter uses symmetric (edge-repeating) reflection at the borders, so
//! results are deterministic and defined for any kernel radius.

/// A single-channel image of `f64` samples, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "plane buffer size");
        Plane {
            width,
            height,
            data,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Plane::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Plane::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    /// Sample with symmetric reflection for out-of-range coordinates.
    #[inline]
    pub fn get_reflect(&self, x: isize, y: isize) -> f64 {
        self.get(reflect(x, self.width), reflect(y, self.height))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane::new(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Plane {
        assert_eq!((self.width, self.height), (other.width, other.height));
        Plane::new(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Copy of the `h`×`w` window whose top-left corner is (`top`, `left`).
    pub fn window(&self, top: usize, left: usize, h: usize, w: usize) -> Plane {
        assert!(top + h <= self.height && left + w <= self.width);
        let mut data = Vec::with_capacity(h * w);
        for y in top..top + h {
            data.extend_from_slice(&self.data[y * self.width + left..y * self.width + left + w]);
        }
        Plane::new(w, h, data)
    }

    /// Shift content by (`dx`, `dy`) with periodic wrap.
    pub fn wrap_shift(&self, dx: isize, dy: isize) -> Plane {
        let (w, h) = (self.width as isize, self.height as isize);
        Plane::from_fn(self.width, self.height, |x, y| {
            let sx = (x as isize - dx).rem_euclid(w) as usize;
            let sy = (y as isize - dy).rem_euclid(h) as usize;
            self.get(sx, sy)
        })
    }
}

/// Symmetric reflection: `... c b a | a b c ... x y z | z y x ...`.
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

/// Normalized Gaussian kernel truncated at 3σ.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "gaussian sigma must be positive");
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// First derivative of the Gaussian, truncated at 3σ, scaled so that a unit
/// ramp produces a unit response. Applied as a correlation, so increasing
/// intensity along the axis gives a positive output.
pub fn gaussian_derivative_kernel(sigma: f64) -> Vec<f64> {
    let g = gaussian_kernel(sigma);
    let radius = (g.len() / 2) as isize;
    let mut k: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(j, &v)| (j as isize - radius) as f64 * v)
        .collect();
    // normalize: sum_j j * k_j == 1
    let moment: f64 = k
        .iter()
        .enumerate()
        .map(|(j, &v)| (j as isize - radius) as f64 * v)
        .sum();
    k.iter_mut().for_each(|v| *v /= moment);
    k
}

/// Correlate every row with `kernel` (odd length, centered).
pub fn filter_rows(src: &Plane, kernel: &[f64]) -> Plane {
    debug_assert!(kernel.len() % 2 == 1);
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (src.width, src.height);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = &src.data[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (j, &k) in kernel.iter().enumerate() {
                let xi = x as isize + j as isize - r;
                let xi = if xi >= 0 && (xi as usize) < w {
                    xi as usize
                } else {
                    reflect(xi, w)
                };
                acc += k * row[xi];
            }
            out.push(acc);
        }
    }
    Plane::new(w, h, out)
}

/// Correlate every column with `kernel` (odd length, centered).
pub fn filter_cols(src: &Plane, kernel: &[f64]) -> Plane {
    debug_assert!(kernel.len() % 2 == 1);
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (src.width, src.height);
    let mut out = vec![0.0; w * h];
    for (j, &k) in kernel.iter().enumerate() {
        for y in 0..h {
            let yi = reflect(y as isize + j as isize - r, h);
            let src_row = &src.data[yi * w..(yi + 1) * w];
            let dst_row = &mut out[y * w..(y + 1) * w];
            for (d, &s) in dst_row.iter_mut().zip(src_row) {
                *d += k * s;
            }
        }
    }
    Plane::new(w, h, out)
}

pub fn separable(src: &Plane, row_kernel: &[f64], col_kernel: &[f64]) -> Plane {
    filter_cols(&filter_rows(src, row_kernel), col_kernel)
}

pub fn gaussian_blur(src: &Plane, sigma: f64) -> Plane {
    let k = gaussian_kernel(sigma);
    separable(src, &k, &k)
}

/// Mean over the `size`×`size` window centered on each pixel. Even sizes
/// extend one extra sample toward the bottom-right.
pub fn box_mean(src: &Plane, size: usize) -> Plane {
    assert!(size >= 1);
    if size == 1 {
        return src.clone();
    }
    let k = if size % 2 == 1 {
        vec![1.0 / size as f64; size]
    } else {
        // odd kernel of size+1 with a zero-weighted leading tap
        let mut k = vec![1.0 / size as f64; size + 1];
        k[0] = 0.0;
        k
    };
    separable(src, &k, &k)
}

/// Average non-overlapping `factor`×`factor` blocks; trailing rows/columns
/// that do not fill a block are dropped.
pub fn block_downscale(src: &Plane, factor: usize) -> Plane {
    assert!(factor >= 1);
    if factor == 1 {
        return src.clone();
    }
    let (w, h) = (src.width / factor, src.height / factor);
    let norm = 1.0 / (factor * factor) as f64;
    Plane::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for yy in y * factor..(y + 1) * factor {
            for xx in x * factor..(x + 1) * factor {
                acc += src.get(xx, yy);
            }
        }
        acc * norm
    })
}

/// Bilinear sample at fractional coordinates, reflecting outside the frame.
#[inline]
pub fn bilinear(src: &Plane, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (x0, y0) = (x0 as isize, y0 as isize);
    let a = src.get_reflect(x0, y0);
    let b = src.get_reflect(x0 + 1, y0);
    let c = src.get_reflect(x0, y0 + 1);
    let d = src.get_reflect(x0 + 1, y0 + 1);
    (a * (1.0 - fx) + b * fx) * (1.0 - fy) + (c * (1.0 - fx) + d * fx) * fy
}

/// Bilinear resize to `width`×`height`, pixel centers aligned.
pub fn resize_bilinear(src: &Plane, width: usize, height: usize) -> Plane {
    let sx = src.width as f64 / width as f64;
    let sy = src.height as f64 / height as f64;
    Plane::from_fn(width, height, |x, y| {
        let fx = (x as f64 + 0.5) * sx - 0.5;
        let fy = (y as f64 + 0.5) * sy - 0.5;
        bilinear(src, fx, fy)
    })
}

/// Backward warp: `out(x, y) = src(x + u(x, y), y + v(x, y))`.
pub fn warp(src: &Plane, u: &Plane, v: &Plane) -> Plane {
    Plane::from_fn(src.width, src.height, |x, y| {
        bilinear(src, x as f64 + u.get(x, y), y as f64 + v.get(x, y))
    })
}

/// Central-difference gradients with reflective borders.
pub fn gradients(src: &Plane) -> (Plane, Plane) {
    let k = [-0.5, 0.0, 0.5];
    (filter_rows(src, &k), filter_cols(src, &k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_is_symmetric_and_periodic() {
        let n = 4;
        let got: Vec<usize> = (-5..10).map(|i| reflect(i, n)).collect();
        assert_eq!(got, vec![3, 3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0, 0, 1]);
        assert_eq!(reflect(0, 1), 0);
        assert_eq!(reflect(-7, 1), 0);
    }

    #[test]
    fn gaussian_kernel_is_normalized_and_truncated() {
        let k = gaussian_kernel(0.5);
        assert_eq!(k.len(), 5);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let k = gaussian_kernel(1.5);
        assert_eq!(k.len(), 11);
    }

    #[test]
    fn derivative_kernel_recovers_ramp_slope() {
        let p = Plane::from_fn(32, 8, |x, _| 3.0 * x as f64);
        let d = filter_rows(&p, &gaussian_derivative_kernel(2.0));
        for x in 8..24 {
            assert!((d.get(x, 4) - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn blur_preserves_constant() {
        let p = Plane::filled(9, 7, 4.25);
        let b = gaussian_blur(&p, 20.0);
        assert!(b.data().iter().all(|&v| (v - 4.25).abs() < 1e-12));
    }

    #[test]
    fn box_mean_even_and_odd() {
        let p = Plane::from_fn(6, 6, |x, y| (x + 10 * y) as f64);
        let m3 = box_mean(&p, 3);
        assert!((m3.get(2, 2) - p.get(2, 2)).abs() < 1e-12);
        let m2 = box_mean(&p, 2);
        // window covers (2..=3, 2..=3)
        let expect = (p.get(2, 2) + p.get(3, 2) + p.get(2, 3) + p.get(3, 3)) / 4.0;
        assert!((m2.get(2, 2) - expect).abs() < 1e-12);
    }

    #[test]
    fn block_downscale_averages() {
        let p = Plane::from_fn(5, 4, |x, y| (x + y) as f64);
        let d = block_downscale(&p, 2);
        assert_eq!((d.width(), d.height()), (2, 2));
        assert_eq!(d.get(0, 0), 1.0);
        assert_eq!(d.get(1, 1), 5.0);
    }

    #[test]
    fn warp_by_integer_shift() {
        let p = Plane::from_fn(8, 8, |x, y| (x * 8 + y) as f64);
        let u = Plane::filled(8, 8, 1.0);
        let v = Plane::zeros(8, 8);
        let w = warp(&p, &u, &v);
        assert_eq!(w.get(3, 2), p.get(4, 2));
    }
}
