//! Ground-truth emitters and their per-pulse photophysics.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

/// Photon statistics of the light source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SourceMode {
    /// Single-photon emitters: at most one photon per pulse, plus an optional
    /// second photon with conditional probability `p_double`.
    #[default]
    Quantum,
    /// Poisson photon numbers with mean `p_emit` per pulse.
    ClassicalPoisson,
    /// Poisson emission gated by a two-state on/off telegraph process.
    ClassicalBlinking,
}

/// A point emitter. Coordinates are in nm in the sample plane; `z_nm` is the
/// axial offset from the focal plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Emitter {
    pub x_nm: f64,
    pub y_nm: f64,
    #[serde(default)]
    pub z_nm: f64,
    pub p_emit: f64,
    #[serde(default)]
    pub p_double: f64,
    #[serde(default = "default_on_fraction")]
    pub on_fraction: f64,
    #[serde(default)]
    pub switch_rate: f64,
}

fn default_on_fraction() -> f64 {
    1.0
}

impl Emitter {
    /// A perfect single-photon emitter in the focal plane.
    pub fn perfect(x_nm: f64, y_nm: f64, p_emit: f64) -> Self {
        Emitter {
            x_nm,
            y_nm,
            z_nm: 0.0,
            p_emit,
            p_double: 0.0,
            on_fraction: 1.0,
            switch_rate: 0.0,
        }
    }

    /// Transition probabilities `(on -> off, off -> on)` per frame of the
    /// telegraph chain with stationary on-probability `on_fraction` and
    /// `switch_rate` expected toggles per frame.
    pub fn blink_transitions(&self) -> (f64, f64) {
        let f = self.on_fraction;
        let r = self.switch_rate;
        let off = if f > 0.0 { r / (2.0 * f) } else { 0.0 };
        let on = if f < 1.0 { r / (2.0 * (1.0 - f)) } else { 0.0 };
        (off, on)
    }
}

/// Validated emitter distribution inside a rectangular field of view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterScene {
    /// Field-of-view width and height in nm.
    pub extent_nm: [f64; 2],
    #[serde(default)]
    pub mode: SourceMode,
    #[serde(default)]
    pub emitters: Vec<Emitter>,
}

/// Photons emitted in one excitation pulse. Only emitters that produced at
/// least one photon are listed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmissionBatch {
    pub events: Vec<Emission>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emission {
    pub emitter: usize,
    pub photons: u32,
}

impl EmissionBatch {
    pub fn total_photons(&self) -> u32 {
        self.events.iter().map(|e| e.photons).sum()
    }

    pub fn photons_of(&self, emitter: usize) -> u32 {
        self.events
            .iter()
            .filter(|e| e.emitter == emitter)
            .map(|e| e.photons)
            .sum()
    }
}

fn check_unit(path: &str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::validation(
            path,
            format!("{value} is outside [0, 1]"),
        ))
    }
}

/// Parses and validates a scene document, e.g.
///
/// ```toml
/// extent_nm = [10000.0, 10000.0]
/// mode = "quantum"
///
/// [[emitters]]
/// x_nm = 5000.0
/// y_nm = 5000.0
/// p_emit = 0.5
/// ```
pub fn load_scene(config_text: &str) -> Result<EmitterScene> {
    let scene: EmitterScene =
        toml::from_str(config_text).map_err(|e| Error::Parse(e.to_string()))?;
    scene.validate("")?;
    Ok(scene)
}

impl EmitterScene {
    pub fn new(extent_nm: [f64; 2], mode: SourceMode, emitters: Vec<Emitter>) -> Result<Self> {
        let scene = EmitterScene {
            extent_nm,
            mode,
            emitters,
        };
        scene.validate("")?;
        Ok(scene)
    }

    /// Validates every field. `prefix` is prepended to reported field paths
    /// (`"scene."` when the scene is embedded in a run config).
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let [w, h] = self.extent_nm;
        for (i, v) in [w, h].into_iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(
                    format!("{prefix}extent_nm[{i}]"),
                    format!("{v} must be a positive length"),
                ));
            }
        }
        for (i, e) in self.emitters.iter().enumerate() {
            let path = |field: &str| format!("{prefix}emitters[{i}].{field}");
            check_unit(&path("p_emit"), e.p_emit)?;
            check_unit(&path("p_double"), e.p_double)?;
            check_unit(&path("on_fraction"), e.on_fraction)?;
            if !(e.switch_rate.is_finite() && e.switch_rate >= 0.0) {
                return Err(Error::validation(
                    path("switch_rate"),
                    format!("{} must be >= 0", e.switch_rate),
                ));
            }
            if !(e.x_nm.is_finite() && (0.0..=w).contains(&e.x_nm)) {
                return Err(Error::validation(
                    path("x_nm"),
                    format!("{} lies outside the extent [0, {w}]", e.x_nm),
                ));
            }
            if !(e.y_nm.is_finite() && (0.0..=h).contains(&e.y_nm)) {
                return Err(Error::validation(
                    path("y_nm"),
                    format!("{} lies outside the extent [0, {h}]", e.y_nm),
                ));
            }
            if !e.z_nm.is_finite() {
                return Err(Error::validation(path("z_nm"), "must be finite"));
            }
            if self.mode == SourceMode::ClassicalBlinking {
                let (off, on) = e.blink_transitions();
                let pinned = e.on_fraction == 0.0 || e.on_fraction == 1.0;
                if off > 1.0 || on > 1.0 || (pinned && e.switch_rate > 0.0) {
                    return Err(Error::validation(
                        path("switch_rate"),
                        format!(
                            "{} toggles/frame is not reachable with on_fraction {}",
                            e.switch_rate, e.on_fraction
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Copy of the scene with every emitter moved axially by `dz_nm`.
    pub fn defocused(&self, dz_nm: f64) -> EmitterScene {
        let mut out = self.clone();
        for e in &mut out.emitters {
            e.z_nm += dz_nm;
        }
        out
    }

    /// Scene containing only emitter `index`.
    pub fn only(&self, index: usize) -> EmitterScene {
        EmitterScene {
            extent_nm: self.extent_nm,
            mode: self.mode,
            emitters: vec![self.emitters[index]],
        }
    }

    /// Samples the photons emitted by one excitation pulse. `on_states`
    /// gates emission per emitter in blinking mode; `None` means all on.
    pub fn sample_emission<R: Rng + ?Sized>(
        &self,
        on_states: Option<&[bool]>,
        rng: &mut R,
    ) -> EmissionBatch {
        let mut batch = EmissionBatch::default();
        self.sample_emission_into(on_states, rng, &mut batch);
        batch
    }

    /// Allocation-free form of [`sample_emission`](Self::sample_emission).
    pub fn sample_emission_into<R: Rng + ?Sized>(
        &self,
        on_states: Option<&[bool]>,
        rng: &mut R,
        batch: &mut EmissionBatch,
    ) {
        batch.events.clear();
        for (i, e) in self.emitters.iter().enumerate() {
            let photons = match self.mode {
                SourceMode::Quantum => {
                    if e.p_emit > 0.0 && rng.random::<f64>() < e.p_emit {
                        if e.p_double > 0.0 && rng.random::<f64>() < e.p_double {
                            2
                        } else {
                            1
                        }
                    } else {
                        0
                    }
                }
                SourceMode::ClassicalPoisson => poisson(e.p_emit, rng),
                SourceMode::ClassicalBlinking => {
                    let on = on_states.is_none_or(|s| s[i]);
                    if on {
                        poisson(e.p_emit, rng)
                    } else {
                        0
                    }
                }
            };
            if photons > 0 {
                batch.events.push(Emission {
                    emitter: i,
                    photons,
                });
            }
        }
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means.
    let dist = Poisson::new(mean).expect("validated mean");
    dist.sample(rng) as u32
}

/// On/off history of every emitter over a run, one bit per frame.
#[derive(Debug, Clone)]
pub struct BlinkTrajectory {
    n_frames: usize,
    words_per_emitter: usize,
    bits: Vec<u64>,
}

impl BlinkTrajectory {
    /// Runs each emitter's telegraph chain over `n_frames` frames, starting
    /// from its stationary distribution. Each emitter has its own stream.
    pub fn generate(scene: &EmitterScene, seed: u64, n_frames: usize) -> Self {
        let words = n_frames.div_ceil(64);
        let mut bits = vec![0u64; words * scene.emitters.len()];
        for (i, e) in scene.emitters.iter().enumerate() {
            let mut rng = rng::stream(seed, Domain::Blinking, i as u64);
            let (to_off, to_on) = e.blink_transitions();
            let mut on = rng.random::<f64>() < e.on_fraction;
            let row = &mut bits[i * words..(i + 1) * words];
            for t in 0..n_frames {
                if on {
                    row[t / 64] |= 1 << (t % 64);
                }
                let u = rng.random::<f64>();
                on = if on { u >= to_off } else { u < to_on };
            }
        }
        BlinkTrajectory {
            n_frames,
            words_per_emitter: words,
            bits,
        }
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn is_on(&self, emitter: usize, frame: usize) -> bool {
        let w = self.bits[emitter * self.words_per_emitter + frame / 64];
        (w >> (frame % 64)) & 1 == 1
    }

    /// Writes the on/off state of every emitter at `frame` into `out`.
    pub fn states_at(&self, frame: usize, out: &mut Vec<bool>) {
        let n = self
            .bits
            .len()
            .checked_div(self.words_per_emitter)
            .unwrap_or(0);
        out.clear();
        out.extend((0..n).map(|e| self.is_on(e, frame)));
    }
}
