//! Band-limited (periodic) upsampling by zero-padding the discrete spectrum.
//!
//! For even lengths the Nyquist bin is split evenly between the positive and
//! negative frequencies so the interpolant stays real; every original sample
//! is reproduced exactly at output index `factor * j`.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Upsamples a length-`n` sequence by `factor`, returning `factor * n` samples.
pub fn interpolate_1d(x: &[f64], factor: usize) -> Vec<f64> {
    let n = x.len();
    if factor <= 1 || n == 0 {
        return x.to_vec();
    }
    let m = n * factor;
    let mut planner = FftPlanner::<f64>::new();
    let mut spec: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut padded = vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    for k in 0..n {
        if n.is_multiple_of(2) && k == half {
            padded[half] += spec[k] * 0.5;
            padded[m - half] += spec[k] * 0.5;
        } else if k < half || (n % 2 == 1 && k == half) {
            padded[k] = spec[k];
        } else {
            padded[m - (n - k)] = spec[k];
        }
    }
    planner.plan_fft_inverse(m).process(&mut padded);
    let scale = 1.0 / n as f64;
    padded.iter().map(|c| c.re * scale).collect()
}

/// Separable 2-D upsampling of a row-major `width x height` array.
pub fn interpolate_2d(values: &[f64], width: usize, height: usize, factor: usize) -> Vec<f64> {
    if factor <= 1 {
        return values.to_vec();
    }
    let (ow, oh) = (width * factor, height * factor);
    let mut rows = Vec::with_capacity(ow * height);
    for r in values.chunks_exact(width) {
        rows.extend(interpolate_1d(r, factor));
    }
    let mut out = vec![0.0; ow * oh];
    let mut col = vec![0.0; height];
    for x in 0..ow {
        for y in 0..height {
            col[y] = rows[y * ow + x];
        }
        for (y, v) in interpolate_1d(&col, factor).into_iter().enumerate() {
            out[y * ow + x] = v;
        }
    }
    out
}

/// Interpolation weights: output `k` equals `sum_j w[k][j] * x[j]`, returned
/// as a dense `(factor * n) x n` row-major matrix.
pub fn weight_matrix(n: usize, factor: usize) -> Vec<f64> {
    let m = n * factor.max(1);
    let mut impulse = vec![0.0; n];
    if n == 0 {
        return Vec::new();
    }
    impulse[0] = 1.0;
    let kernel = interpolate_1d(&impulse, factor);
    // The interpolator is shift-equivariant: a unit sample at j produces the
    // kernel rotated by factor * j.
    let mut w = vec![0.0; m * n];
    for k in 0..m {
        for j in 0..n {
            w[k * n + j] = kernel[(k + m - j * factor.max(1)) % m];
        }
    }
    w
}

/// Propagates per-sample variances of independent inputs through
/// [`interpolate_2d`].
pub fn interpolate_variance_2d(
    var: &[f64],
    width: usize,
    height: usize,
    factor: usize,
) -> Vec<f64> {
    if factor <= 1 {
        return var.to_vec();
    }
    let wx: Vec<f64> = weight_matrix(width, factor).iter().map(|w| w * w).collect();
    let wy: Vec<f64> = weight_matrix(height, factor)
        .iter()
        .map(|w| w * w)
        .collect();
    let (ow, oh) = (width * factor, height * factor);
    // rows: height x ow
    let mut rows = vec![0.0; height * ow];
    for y in 0..height {
        let src = &var[y * width..(y + 1) * width];
        for k in 0..ow {
            let wrow = &wx[k * width..(k + 1) * width];
            rows[y * ow + k] = wrow.iter().zip(src).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for k in 0..oh {
        let wrow = &wy[k * height..(k + 1) * height];
        for (y, &w) in wrow.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let src = &rows[y * ow..(y + 1) * ow];
            let dst = &mut out[k * ow..(k + 1) * ow];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    out
}
