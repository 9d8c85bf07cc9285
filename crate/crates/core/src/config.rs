//! Run configuration shared by every pipeline stage, and its digest.
//!
//! ```toml
//! [scene]
//! extent_nm = [2560.0, 2560.0]
//! mode = "quantum"            # or "classical-poisson", "classical-blinking"
//! [[scene.emitters]]
//! x_nm = 1280.0
//! y_nm = 1280.0
//! p_emit = 1.0
//!
//! [psf]                       # optional, defaults shown
//! sigma0_nm = 115.51
//! z_r_nm = 508.07
//! collection_eff = 1.0
//!
//! [grid]
//! width = 32
//! height = 32
//! pitch_nm = 80.0             # origin_nm defaults to pitch / 2
//!
//! [camera]                    # optional
//! qe = 1.0
//! dark_rate = 0.0
//! gain_fluct_sd = 0.0
//! seed = 0
//!
//! [acquisition]
//! n_frames = 200000
//! pulse_rate_hz = 1000.0
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::camera::{Acquisition, CameraModel};
use crate::error::{Error, Result};
use crate::optics::{PixelGrid, PsfModel};
use crate::scene::EmitterScene;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GridSpec {
    width: usize,
    height: usize,
    #[serde(default = "default_pitch")]
    pitch_nm: f64,
    #[serde(default)]
    origin_nm: Option<[f64; 2]>,
}

fn default_pitch() -> f64 {
    80.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct RunConfigText {
    scene: EmitterScene,
    #[serde(default)]
    psf: PsfModel,
    grid: GridSpec,
    #[serde(default)]
    camera: CameraModel,
    acquisition: Acquisition,
}

/// Complete description of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scene: EmitterScene,
    pub psf: PsfModel,
    pub grid: PixelGrid,
    pub camera: CameraModel,
    pub acquisition: Acquisition,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RunConfigText = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let grid = PixelGrid {
            width: raw.grid.width,
            height: raw.grid.height,
            pitch_nm: raw.grid.pitch_nm,
            origin_nm: raw.grid.origin_nm.unwrap_or([raw.grid.pitch_nm / 2.0; 2]),
        };
        let cfg = RunConfig {
            scene: raw.scene,
            psf: raw.psf,
            grid,
            camera: raw.camera,
            acquisition: raw.acquisition,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            scene: &'a EmitterScene,
            psf: &'a PsfModel,
            grid: GridSpec,
            camera: &'a CameraModel,
            acquisition: &'a Acquisition,
        }
        let out = Out {
            scene: &self.scene,
            psf: &self.psf,
            grid: GridSpec {
                width: self.grid.width,
                height: self.grid.height,
                pitch_nm: self.grid.pitch_nm,
                origin_nm: Some(self.grid.origin_nm),
            },
            camera: &self.camera,
            acquisition: &self.acquisition,
        };
        toml::to_string(&out).expect("run config is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate("scene.")?;
        self.psf.validate("psf.")?;
        self.grid.validate("grid.")?;
        self.camera.validate("camera.")?;
        self.acquisition.validate("acquisition.")
    }

    /// SHA-256 over the canonical JSON form of every field that affects the
    /// simulated frames. The memory budget is excluded.
    pub fn digest(&self) -> [u8; 32] {
        config_digest(
            &self.scene,
            &self.psf,
            &self.grid,
            &self.camera,
            self.acquisition.n_frames,
            self.acquisition.pulse_rate_hz,
        )
    }
}

pub fn config_digest(
    scene: &EmitterScene,
    psf: &PsfModel,
    grid: &PixelGrid,
    camera: &CameraModel,
    n_frames: u64,
    pulse_rate_hz: f64,
) -> [u8; 32] {
    let canonical = serde_json::to_vec(&(scene, psf, grid, camera, n_frames, pulse_rate_hz))
        .expect("config serializes");
    Sha256::digest(&canonical).into()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [scene]
        extent_nm = [1280.0, 1280.0]
        [[scene.emitters]]
        x_nm = 640.0
        y_nm = 640.0
        p_emit = 1.0
        [grid]
        width = 16
        height = 16
        [acquisition]
        n_frames = 100
    "#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.grid.origin_nm, [40.0, 40.0]);
        assert_eq!(cfg.acquisition.pulse_rate_hz, 1000.0);
        assert!((cfg.psf.sigma0_nm * crate::optics::FWHM_PER_SIGMA - 272.0).abs() < 1e-9);
    }

    #[test]
    fn validation_paths_are_prefixed() {
        let text = MINIMAL.replace("p_emit = 1.0", "p_emit = -0.1");
        match RunConfig::from_toml(&text) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "scene.emitters[0].p_emit"),
            other => panic!("{other:?}"),
        }
        let text = MINIMAL.replace("n_frames = 100", "n_frames = 0");
        match RunConfig::from_toml(&text) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "acquisition.n_frames"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn toml_round_trip_preserves_digest() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.digest(), back.digest());
        let mut other = cfg.clone();
        other.camera.seed = 1;
        assert_ne!(cfg.digest(), other.digest());
    }
}
