//! Peak width by least-squares fit of an axis-aligned 2-D Gaussian on a
//! constant baseline.

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::correlator::CorrelationMap;
use crate::error::{Error, Result};
use crate::optics::FWHM_PER_SIGMA;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FwhmFit {
    /// `2 sqrt(2 ln 2) sqrt(sigma_x sigma_y)`.
    pub fwhm_nm: f64,
    /// Half-width of the 95% confidence interval on `fwhm_nm`, from the
    /// residual-scaled covariance of the fit.
    pub ci_half_width_nm: f64,
    pub peak_nm: [f64; 2],
    pub sigma_nm: [f64; 2],
    pub amplitude: f64,
    pub baseline: f64,
    /// RMS fit residual divided by the fitted amplitude.
    pub residual: f64,
    pub iterations: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Fit window half-width in multiples of the initial sigma estimate.
    pub window_sigmas: f64,
    /// Required peak height above the median, in robust noise units.
    pub min_significance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            window_sigmas: 3.0,
            min_significance: 5.0,
        }
    }
}

pub fn fwhm(map: &CorrelationMap, peak_hint: Option<[f64; 2]>) -> Result<FwhmFit> {
    fwhm_with(map, peak_hint, &FitOptions::default())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn locate_peak(map: &CorrelationMap, hint: Option<[f64; 2]>) -> Result<(usize, usize)> {
    let (w, h) = (map.width, map.height);
    let (x0, x1, y0, y1) = match hint {
        None => (0, w - 1, 0, h - 1),
        Some(p) => {
            let fx = ((p[0] - map.origin_nm[0]) / map.pitch_nm).round();
            let fy = ((p[1] - map.origin_nm[1]) / map.pitch_nm).round();
            if !(fx >= 0.0 && fy >= 0.0 && fx <= (w - 1) as f64 && fy <= (h - 1) as f64) {
                return Err(Error::InvalidArgument(format!(
                    "peak hint ({}, {}) nm is outside the map",
                    p[0], p[1]
                )));
            }
            let (cx, cy) = (fx as usize, fy as usize);
            const SEARCH: usize = 3;
            (
                cx.saturating_sub(SEARCH),
                (cx + SEARCH).min(w - 1),
                cy.saturating_sub(SEARCH),
                (cy + SEARCH).min(h - 1),
            )
        }
    };
    let mut best = (x0, y0);
    for y in y0..=y1 {
        for x in x0..=x1 {
            if map.get(x, y) > map.get(best.0, best.1) {
                best = (x, y);
            }
        }
    }
    Ok(best)
}

/// Full width at half maximum along one axis, walking outwards from the peak.
fn walk_width(map: &CorrelationMap, px: usize, py: usize, half: f64, axis: usize) -> f64 {
    let n = if axis == 0 { map.width } else { map.height };
    let at = |i: usize| {
        if axis == 0 {
            map.get(i, py)
        } else {
            map.get(px, i)
        }
    };
    let c = if axis == 0 { px } else { py };
    let mut hi = c;
    while hi + 1 < n && at(hi + 1) > half {
        hi += 1;
    }
    let mut lo = c;
    while lo > 0 && at(lo - 1) > half {
        lo -= 1;
    }
    (hi - lo + 1) as f64
}

struct Sample {
    dx: f64,
    dy: f64,
    v: f64,
}

fn model(p: &Vector6<f64>, s: &Sample) -> (f64, Vector6<f64>) {
    let [a, x0, y0, sx, sy, b] = [p[0], p[1], p[2], p[3], p[4], p[5]];
    let u = s.dx - x0;
    let w = s.dy - y0;
    let e = (-(u * u / (2.0 * sx * sx) + w * w / (2.0 * sy * sy))).exp();
    let ae = a * e;
    let grad = Vector6::new(
        e,
        ae * u / (sx * sx),
        ae * w / (sy * sy),
        ae * u * u / (sx * sx * sx),
        ae * w * w / (sy * sy * sy),
        1.0,
    );
    (ae + b, grad)
}

fn cost(p: &Vector6<f64>, samples: &[Sample]) -> f64 {
    samples
        .iter()
        .map(|s| {
            let r = model(p, s).0 - s.v;
            r * r
        })
        .sum()
}

fn normal_equations(p: &Vector6<f64>, samples: &[Sample]) -> (Matrix6<f64>, Vector6<f64>) {
    let mut jtj = Matrix6::zeros();
    let mut jtr = Vector6::zeros();
    for s in samples {
        let (f, g) = model(p, s);
        jtj += g * g.transpose();
        jtr += g * (f - s.v);
    }
    (jtj, jtr)
}

/// Fits the dominant peak of `map`, or the local maximum nearest
/// `peak_hint` (nm). The map is normalized to its peak value before fitting,
/// and fit coordinates are relative to the peak site, so the result does not
/// depend on the map's scale or on integer-site translations.
pub fn fwhm_with(
    map: &CorrelationMap,
    peak_hint: Option<[f64; 2]>,
    opts: &FitOptions,
) -> Result<FwhmFit> {
    if map.width < 3 || map.height < 3 {
        return Err(Error::InvalidArgument(format!(
            "a {}x{} map is too small to fit",
            map.width, map.height
        )));
    }
    if map.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "map contains non-finite values".into(),
        ));
    }
    let (px, py) = locate_peak(map, peak_hint)?;
    let peak = map.get(px, py);
    let mut sorted = map.values.clone();
    let med = median(&mut sorted);
    let mut dev: Vec<f64> = map.values.iter().map(|v| (v - med).abs()).collect();
    let noise = 1.4826 * median(&mut dev);
    let excess = peak - med;
    if excess.is_nan() || excess <= opts.min_significance * noise || peak <= med {
        return Err(Error::Statistical(format!(
            "no significant peak: peak {peak:e} is within {} robust noise units ({noise:e}) of the median {med:e}",
            opts.min_significance
        )));
    }
    if peak <= 0.0 {
        return Err(Error::Statistical(
            "no significant peak: maximum is not positive".into(),
        ));
    }

    let pitch = map.pitch_nm;
    let half = med + 0.5 * (peak - med);
    let wx = walk_width(map, px, py, half, 0);
    let wy = walk_width(map, px, py, half, 1);
    let sigma0 = (wx * wy).sqrt() * pitch / FWHM_PER_SIGMA;
    let radius = ((opts.window_sigmas * sigma0 / pitch).ceil() as usize).clamp(2, 256);
    let (xa, xb) = (px.saturating_sub(radius), (px + radius).min(map.width - 1));
    let (ya, yb) = (py.saturating_sub(radius), (py + radius).min(map.height - 1));
    let mut samples = Vec::with_capacity((xb - xa + 1) * (yb - ya + 1));
    for y in ya..=yb {
        for x in xa..=xb {
            samples.push(Sample {
                dx: (x as f64 - px as f64) * pitch,
                dy: (y as f64 - py as f64) * pitch,
                v: map.get(x, y) / peak,
            });
        }
    }
    if samples.len() <= 6 {
        return Err(Error::Statistical(
            "fit window holds too few samples".into(),
        ));
    }

    let b0 = med / peak;
    let mut p = Vector6::new(1.0 - b0, 0.0, 0.0, sigma0, sigma0, b0);
    let scale = Vector6::new(1.0, pitch, pitch, pitch, pitch, 1.0);
    let mut c = cost(&p, &samples);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&p, &samples);
        let mut step = None;
        while lambda < 1e16 {
            let mut a = jtj;
            for i in 0..6 {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = -chol.solve(&jtr);
            let trial = p + delta;
            if trial[3] > 0.0 && trial[4] > 0.0 {
                let tc = cost(&trial, &samples);
                if tc <= c {
                    step = Some((delta, trial, tc));
                    break;
                }
            }
            lambda *= 10.0;
        }
        let Some((delta, trial, tc)) = step else {
            // No downhill step exists at any damping: a stationary point.
            converged = true;
            break;
        };
        let rel = (0..6)
            .map(|i| delta[i].abs() / (p[i].abs() + scale[i]))
            .fold(0.0, f64::max);
        let improvement = c - tc;
        p = trial;
        c = tc;
        lambda = (lambda / 10.0).max(1e-12);
        if rel < 1e-12 || improvement <= 1e-15 * c || c < 1e-30 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::FitDidNotConverge { iterations });
    }

    let (sx, sy) = (p[3], p[4]);
    let fwhm_nm = FWHM_PER_SIGMA * (sx * sy).sqrt();
    let n = samples.len() as f64;
    let dof = n - 6.0;
    let s2 = c / dof;
    let (jtj, _) = normal_equations(&p, &samples);
    let ci = jtj
        .try_inverse()
        .map(|cov| {
            let g = Vector6::new(
                0.0,
                0.0,
                0.0,
                fwhm_nm / (2.0 * sx),
                fwhm_nm / (2.0 * sy),
                0.0,
            );
            let var = (g.transpose() * cov * g)[0] * s2;
            1.96 * var.max(0.0).sqrt()
        })
        .unwrap_or(f64::INFINITY);
    let centre = map.site_nm(px, py);
    Ok(FwhmFit {
        fwhm_nm,
        ci_half_width_nm: ci,
        peak_nm: [centre[0] + p[1], centre[1] + p[2]],
        sigma_nm: [sx, sy],
        amplitude: p[0] * peak,
        baseline: p[5] * peak,
        residual: (c / n).sqrt() / p[0].abs(),
        iterations,
        samples: samples.len(),
    })
}
