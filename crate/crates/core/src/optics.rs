//! Defocus-dependent Gaussian PSF and its exact integration over pixels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `FWHM = FWHM_PER_SIGMA * sigma` for a Gaussian.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

/// Gaussian point spread function with a beam-like defocus law
/// `sigma(z) = sigma0 * sqrt(1 + (z / z_r)^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsfModel {
    pub sigma0_nm: f64,
    pub z_r_nm: f64,
    #[serde(default = "one")]
    pub collection_eff: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for PsfModel {
    /// In-focus FWHM of 272 nm, doubling of sigma at 880 nm defocus.
    fn default() -> Self {
        PsfModel {
            sigma0_nm: 272.0 / FWHM_PER_SIGMA,
            z_r_nm: 880.0 / 3f64.sqrt(),
            collection_eff: 1.0,
        }
    }
}

impl PsfModel {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.sigma0_nm.is_finite() && self.sigma0_nm > 0.0) {
            return Err(Error::validation(
                format!("{prefix}sigma0_nm"),
                "must be > 0",
            ));
        }
        if !(self.z_r_nm.is_finite() && self.z_r_nm > 0.0) {
            return Err(Error::validation(format!("{prefix}z_r_nm"), "must be > 0"));
        }
        if !(self.collection_eff > 0.0 && self.collection_eff <= 1.0) {
            return Err(Error::validation(
                format!("{prefix}collection_eff"),
                "must lie in (0, 1]",
            ));
        }
        Ok(())
    }

    /// PSF standard deviation at axial offset `z_nm`.
    pub fn defocus_sigma(&self, z_nm: f64) -> f64 {
        let r = z_nm / self.z_r_nm;
        self.sigma0_nm * (1.0 + r * r).sqrt()
    }

    /// Per-pixel detection probability mass of a photon emitted at
    /// `(x_nm, y_nm, z_nm)`, row-major over `grid`. Mass that falls off the
    /// grid or is not collected is simply absent, so the total is at most
    /// `collection_eff`.
    pub fn pixelated_psf(&self, grid: &PixelGrid, x_nm: f64, y_nm: f64, z_nm: f64) -> Vec<f64> {
        let sigma = self.defocus_sigma(z_nm);
        let col = axis_masses(grid.width, grid.pitch_nm, grid.origin_nm[0], x_nm, sigma);
        let row = axis_masses(grid.height, grid.pitch_nm, grid.origin_nm[1], y_nm, sigma);
        let mut out = Vec::with_capacity(grid.len());
        for &ry in &row {
            out.extend(col.iter().map(|&cx| self.collection_eff * ry * cx));
        }
        out
    }
}

/// Detector geometry projected onto the sample plane. Pixel `(i, j)` (column,
/// row) is centered at `origin + (i, j) * pitch`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelGrid {
    pub width: usize,
    pub height: usize,
    pub pitch_nm: f64,
    /// Sample-plane coordinate of the center of pixel (0, 0).
    pub origin_nm: [f64; 2],
}

impl PixelGrid {
    /// Grid whose pixel edges start at the sample-plane origin.
    pub fn new(width: usize, height: usize, pitch_nm: f64) -> Self {
        PixelGrid {
            width,
            height,
            pitch_nm,
            origin_nm: [pitch_nm / 2.0; 2],
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.width == 0 {
            return Err(Error::validation(format!("{prefix}width"), "must be >= 1"));
        }
        if self.height == 0 {
            return Err(Error::validation(format!("{prefix}height"), "must be >= 1"));
        }
        if !(self.pitch_nm.is_finite() && self.pitch_nm > 0.0) {
            return Err(Error::validation(
                format!("{prefix}pitch_nm"),
                "must be > 0",
            ));
        }
        if !self.origin_nm.iter().all(|v| v.is_finite()) {
            return Err(Error::validation(
                format!("{prefix}origin_nm"),
                "must be finite",
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sample-plane extent covered by the pixels, `[width, height]` in nm.
    pub fn extent_nm(&self) -> [f64; 2] {
        [
            self.width as f64 * self.pitch_nm,
            self.height as f64 * self.pitch_nm,
        ]
    }

    pub fn pixel_center(&self, x: usize, y: usize) -> [f64; 2] {
        [
            self.origin_nm[0] + x as f64 * self.pitch_nm,
            self.origin_nm[1] + y as f64 * self.pitch_nm,
        ]
    }
}

/// Standard-normal probability of the interval `[a, b]`, accurate in both
/// tails.
pub fn normal_interval(a: f64, b: f64) -> f64 {
    use std::f64::consts::FRAC_1_SQRT_2;
    if a >= 0.0 {
        0.5 * (libm::erfc(a * FRAC_1_SQRT_2) - libm::erfc(b * FRAC_1_SQRT_2))
    } else if b <= 0.0 {
        0.5 * (libm::erfc(-b * FRAC_1_SQRT_2) - libm::erfc(-a * FRAC_1_SQRT_2))
    } else {
        0.5 * (libm::erf(b * FRAC_1_SQRT_2) - libm::erf(a * FRAC_1_SQRT_2))
    }
}

fn axis_masses(n: usize, pitch: f64, origin: f64, pos: f64, sigma: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let center = origin + i as f64 * pitch;
            let lo = (center - 0.5 * pitch - pos) / sigma;
            let hi = (center + 0.5 * pitch - pos) / sigma;
            normal_interval(lo, hi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn psf(sigma0: f64, z_r: f64, ce: f64) -> PsfModel {
        PsfModel {
            sigma0_nm: sigma0,
            z_r_nm: z_r,
            collection_eff: ce,
        }
    }

    #[test]
    fn defocus_law_points() {
        let p = psf(100.0, 440.0, 1.0);
        assert_eq!(p.defocus_sigma(0.0), 100.0);
        assert!((p.defocus_sigma(440.0) - 100.0 * 2f64.sqrt()).abs() < 1e-12);
        let plus = p.defocus_sigma(880.0);
        let minus = p.defocus_sigma(-880.0);
        assert_eq!(plus, minus);
        assert!((plus - 100.0 * 5f64.sqrt()).abs() < 1e-12);
        assert!((plus - 223.6).abs() < 0.05);
    }

    #[test]
    fn delta_like_psf_concentrates_in_one_pixel() {
        let grid = PixelGrid::new(9, 9, 80.0);
        let p = psf(0.8, 100.0, 0.7);
        let [cx, cy] = grid.pixel_center(4, 4);
        let m = p.pixelated_psf(&grid, cx, cy, 0.0);
        assert!(m[4 * 9 + 4] >= 0.999 * 0.7);
    }

    #[test]
    fn boundary_emitter_is_mirror_symmetric() {
        let grid = PixelGrid::new(10, 7, 80.0);
        let p = psf(137.0, 100.0, 1.0);
        // Boundary between columns 4 and 5.
        let x = grid.pixel_center(4, 0)[0] + 40.0;
        let y = grid.pixel_center(0, 3)[1];
        let m = p.pixelated_psf(&grid, x, y, 0.0);
        for row in 0..7 {
            for k in 0..5 {
                let a = m[row * 10 + (4 - k)];
                let b = m[row * 10 + (5 + k)];
                assert!((a - b).abs() < 1e-12, "row {row} k {k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn central_pixel_mass_for_sigma_equal_pitch() {
        let grid = PixelGrid::new(11, 11, 50.0);
        let p = psf(50.0, 100.0, 1.0);
        let [cx, cy] = grid.pixel_center(5, 5);
        let m = p.pixelated_psf(&grid, cx, cy, 0.0);
        // [Phi(0.5) - Phi(-0.5)]^2 from the tabulated normal CDF.
        let phi_half = 0.691_462_461_274_013_1;
        let expected = (2.0 * phi_half - 1.0f64).powi(2);
        assert!((m[5 * 11 + 5] - expected).abs() < 1e-12);
        assert!((m[5 * 11 + 5] - 0.1466).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn mass_is_nonnegative_and_bounded(
            x in 0.0f64..800.0, y in 0.0f64..800.0, z in -2000.0f64..2000.0,
            sigma in 5.0f64..300.0, ce in 0.05f64..1.0,
        ) {
            let grid = PixelGrid::new(10, 10, 80.0);
            let p = psf(sigma, 400.0, ce);
            let m = p.pixelated_psf(&grid, x, y, z);
            prop_assert!(m.iter().all(|&v| v >= 0.0));
            prop_assert!(m.iter().sum::<f64>() <= ce * (1.0 + 1e-12));
        }

        #[test]
        fn translation_by_one_pitch_shifts_mass(
            fx in 0.0f64..1.0, fy in 0.0f64..1.0, sigma in 20.0f64..150.0,
        ) {
            let grid = PixelGrid::new(16, 16, 80.0);
            let p = psf(sigma, 400.0, 1.0);
            let x = 600.0 + 80.0 * fx;
            let y = 600.0 + 80.0 * fy;
            let a = p.pixelated_psf(&grid, x, y, 0.0);
            let b = p.pixelated_psf(&grid, x + 80.0, y, 0.0);
            for row in 1..15 {
                for col in 1..14 {
                    prop_assert!((a[row * 16 + col] - b[row * 16 + col + 1]).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn peak_mass_nonincreasing_in_defocus(z1 in 0.0f64..2000.0, dz in 0.0f64..2000.0) {
            let grid = PixelGrid::new(12, 12, 80.0);
            let p = psf(110.0, 500.0, 1.0);
            let peak = |z: f64| p
                .pixelated_psf(&grid, 500.0, 470.0, z)
                .into_iter()
                .fold(0.0f64, f64::max);
            prop_assert!(peak(z1 + dz) <= peak(z1) + 1e-15);
            prop_assert!((peak(-z1) - peak(z1)).abs() < 1e-15);
        }
    }
}
