//! Profiles along a straight segment through a map.

use serde::{Deserialize, Serialize};

use crate::correlator::CorrelationMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineScan {
    /// Distance of each sample from the first endpoint (nm).
    pub distance_nm: Vec<f64>,
    pub points_nm: Vec<[f64; 2]>,
    pub values: Vec<f64>,
}

impl LineScan {
    /// Same profile divided by its maximum.
    pub fn normalized(&self) -> LineScan {
        let peak = self
            .values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let k = if peak != 0.0 && peak.is_finite() {
            1.0 / peak
        } else {
            1.0
        };
        LineScan {
            values: self.values.iter().map(|v| v * k).collect(),
            ..self.clone()
        }
    }

    /// Largest `|v[i] - v[n-1-i]|` relative to the peak magnitude.
    pub fn asymmetry(&self) -> f64 {
        let n = self.values.len();
        let peak = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            return 0.0;
        }
        (0..n / 2)
            .map(|i| (self.values[i] - self.values[n - 1 - i]).abs())
            .fold(0.0, f64::max)
            / peak
    }

    /// Depth of the dip between the two highest local maxima: the minimum
    /// between them divided by the lower of the two. `None` when the profile
    /// has fewer than two local maxima.
    pub fn valley_to_peak(&self) -> Option<f64> {
        let v = &self.values;
        let n = v.len();
        let mut maxima: Vec<usize> = (1..n.saturating_sub(1))
            .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1])
            .collect();
        if maxima.len() < 2 {
            return None;
        }
        maxima.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
        let (a, b) = (maxima[0].min(maxima[1]), maxima[0].max(maxima[1]));
        let valley = v[a..=b].iter().copied().fold(f64::INFINITY, f64::min);
        Some(valley / v[a].min(v[b]))
    }
}

fn to_fractional(map: &CorrelationMap, p: [f64; 2]) -> Option<(f64, f64)> {
    const TOL: f64 = 1e-9;
    let fx = (p[0] - map.origin_nm[0]) / map.pitch_nm;
    let fy = (p[1] - map.origin_nm[1]) / map.pitch_nm;
    let inside = |f: f64, n: usize| f >= -TOL && f <= (n - 1) as f64 + TOL;
    (inside(fx, map.width) && inside(fy, map.height)).then(|| {
        (
            fx.clamp(0.0, (map.width - 1) as f64),
            fy.clamp(0.0, (map.height - 1) as f64),
        )
    })
}

fn bilinear(map: &CorrelationMap, fx: f64, fy: f64) -> f64 {
    let x0 = (fx.floor() as usize).min(map.width.saturating_sub(2));
    let y0 = (fy.floor() as usize).min(map.height.saturating_sub(2));
    let x1 = (x0 + 1).min(map.width - 1);
    let y1 = (y0 + 1).min(map.height - 1);
    let tx = fx - x0 as f64;
    let ty = fy - y0 as f64;
    let top = map.get(x0, y0) * (1.0 - tx) + map.get(x1, y0) * tx;
    let bottom = map.get(x0, y1) * (1.0 - tx) + map.get(x1, y1) * tx;
    top * (1.0 - ty) + bottom * ty
}

/// Samples `samples` uniformly spaced points from `p0` to `p1` (inclusive,
/// nm) by bilinear interpolation between map sites.
pub fn line_scan(
    map: &CorrelationMap,
    p0: [f64; 2],
    p1: [f64; 2],
    samples: usize,
) -> Result<LineScan> {
    if samples < 2 {
        return Err(Error::InvalidArgument(
            "a line scan needs at least 2 samples".into(),
        ));
    }
    if map.is_empty() {
        return Err(Error::InvalidArgument("cannot scan an empty map".into()));
    }
    for p in [p0, p1] {
        if to_fractional(map, p).is_none() {
            return Err(Error::InvalidArgument(format!(
                "endpoint ({}, {}) nm lies outside the map",
                p[0], p[1]
            )));
        }
    }
    let len = ((p1[0] - p0[0]).powi(2) + (p1[1] - p0[1]).powi(2)).sqrt();
    let mut out = LineScan {
        distance_nm: Vec::with_capacity(samples),
        points_nm: Vec::with_capacity(samples),
        values: Vec::with_capacity(samples),
    };
    for i in 0..samples {
        let t = i as f64 / (samples - 1) as f64;
        let p = [p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])];
        // Endpoints are inside and the map is convex, so every sample is too.
        let (fx, fy) = to_fractional(map, p).unwrap_or((0.0, 0.0));
        out.distance_nm.push(t * len);
        out.points_nm.push(p);
        out.values.push(bilinear(map, fx, fy));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_from(w: usize, h: usize, f: impl Fn(f64, f64) -> f64) -> CorrelationMap {
        let mut values = Vec::new();
        for y in 0..h {
            for x in 0..w {
                values.push(f(x as f64 * 10.0 + 5.0, y as f64 * 10.0 + 5.0));
            }
        }
        CorrelationMap {
            order: 1,
            width: w,
            height: h,
            pitch_nm: 10.0,
            origin_nm: [5.0, 5.0],
            offset_applied: 0.0,
            configs: vec![],
            n_frames: 0,
            seed: 0,
            digest: [0; 32],
            values,
            stderr: None,
        }
    }

    #[test]
    fn constant_map_gives_constant_profile() {
        let m = map_from(8, 8, |_, _| 3.5);
        let s = line_scan(&m, [5.0, 5.0], [75.0, 61.0], 33).unwrap();
        assert!(s.values.iter().all(|&v| (v - 3.5).abs() < 1e-12));
        assert_eq!(s.values.len(), 33);
        assert!((s.distance_nm[32] - (70f64.powi(2) + 56f64.powi(2)).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn bilinear_reproduces_planes() {
        let m = map_from(6, 5, |x, y| 2.0 * x - 0.5 * y + 1.0);
        let s = line_scan(&m, [5.0, 45.0], [55.0, 5.0], 17).unwrap();
        for (p, v) in s.points_nm.iter().zip(&s.values) {
            assert!((v - (2.0 * p[0] - 0.5 * p[1] + 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetric_peak_gives_symmetric_profile() {
        let m = map_from(41, 41, |x, y| {
            (-((x - 205.0).powi(2) + (y - 205.0).powi(2)) / 3000.0).exp()
        });
        let s = line_scan(&m, [5.0, 205.0], [405.0, 205.0], 101).unwrap();
        assert!(s.asymmetry() < 1e-9);
        let d = line_scan(&m, [5.0, 5.0], [405.0, 405.0], 64).unwrap();
        assert!(d.asymmetry() < 1e-9);
        assert!((s.normalized().values[50] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_outside_endpoints_and_tiny_sample_counts() {
        let m = map_from(4, 4, |_, _| 1.0);
        assert!(line_scan(&m, [0.0, 5.0], [35.0, 5.0], 10).is_err());
        assert!(line_scan(&m, [5.0, 5.0], [35.0, 35.1], 10).is_err());
        assert!(line_scan(&m, [5.0, 5.0], [35.0, 35.0], 1).is_err());
        assert!(line_scan(&m, [5.0, 5.0], [35.0, 35.0], 2).is_ok());
    }

    #[test]
    fn valley_ratio_of_two_bumps() {
        let m = map_from(60, 3, |x, _| {
            (-(x - 205.0).powi(2) / 2000.0).exp() + (-(x - 405.0).powi(2) / 2000.0).exp()
        });
        let s = line_scan(&m, [5.0, 15.0], [595.0, 15.0], 60).unwrap();
        let r = s.valley_to_peak().unwrap();
        let expect =
            2.0 * (-(100f64).powi(2) / 2000.0).exp() / (1.0 + (-(200f64).powi(2) / 2000.0).exp());
        assert!((r - expect).abs() < 1e-12, "{r} vs {expect}");
    }
}
