//! Photon-counting detector: exposure of single frames, common-mode gain
//! fluctuation, dark events, thresholding, and frame-stack assembly.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{PixelGrid, PsfModel};
use crate::par;
use crate::rng::{self, Domain};
use crate::scene::{BlinkTrajectory, EmissionBatch, EmitterScene, SourceMode};

/// Post-threshold detector statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Detection probability of a photon that reaches a pixel.
    pub qe: f64,
    /// Expected dark events per pixel per frame.
    #[serde(default)]
    pub dark_rate: f64,
    /// Standard deviation of the per-frame multiplicative gain `g_t`.
    #[serde(default)]
    pub gain_fluct_sd: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel {
            qe: 1.0,
            dark_rate: 0.0,
            gain_fluct_sd: 0.0,
            seed: 0,
        }
    }
}

impl CameraModel {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(0.0..=1.0).contains(&self.qe) {
            return Err(Error::validation(
                format!("{prefix}qe"),
                "must lie in [0, 1]",
            ));
        }
        if !(self.dark_rate.is_finite() && self.dark_rate >= 0.0) {
            return Err(Error::validation(
                format!("{prefix}dark_rate"),
                "must be >= 0",
            ));
        }
        if !(0.0..=0.5).contains(&self.gain_fluct_sd) {
            return Err(Error::validation(
                format!("{prefix}gain_fluct_sd"),
                "must lie in [0, 0.5]",
            ));
        }
        Ok(())
    }
}

/// Row-major bit layout of one thresholded frame: `ceil(width / 8)` bytes per
/// row, pixel `x` in bit `x % 8` (LSB first) of byte `x / 8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub width: usize,
    pub height: usize,
    pub row_bytes: usize,
}

impl FrameLayout {
    pub fn new(width: usize, height: usize) -> Self {
        FrameLayout {
            width,
            height,
            row_bytes: width.div_ceil(8),
        }
    }

    pub fn frame_bytes(&self) -> usize {
        self.row_bytes * self.height
    }

    #[inline]
    pub fn set(&self, frame: &mut [u8], pixel: usize) {
        let (x, y) = (pixel % self.width, pixel / self.width);
        frame[y * self.row_bytes + x / 8] |= 1 << (x % 8);
    }

    #[inline]
    pub fn get(&self, frame: &[u8], x: usize, y: usize) -> bool {
        (frame[y * self.row_bytes + x / 8] >> (x % 8)) & 1 == 1
    }

    /// Appends the row-major index of every set pixel to `out`.
    pub fn active_pixels(&self, frame: &[u8], out: &mut Vec<u32>) {
        out.clear();
        for y in 0..self.height {
            let row = &frame[y * self.row_bytes..(y + 1) * self.row_bytes];
            for (b, &byte) in row.iter().enumerate() {
                let mut bits = byte;
                while bits != 0 {
                    let k = bits.trailing_zeros() as usize;
                    out.push((y * self.width + b * 8 + k) as u32);
                    bits &= bits - 1;
                }
            }
        }
    }

    pub fn count(&self, frame: &[u8]) -> u32 {
        frame.iter().map(|b| b.count_ones()).sum()
    }
}

/// Acquisition metadata carried by every stack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackMeta {
    pub seed: u64,
    pub pulse_rate_hz: f64,
    /// SHA-256 of the canonical run configuration.
    pub digest: [u8; 32],
}

/// Ordered thresholded frames in acquisition order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack {
    pub grid: PixelGrid,
    pub meta: StackMeta,
    layout: FrameLayout,
    n_frames: usize,
    data: Vec<u8>,
}

impl FrameStack {
    /// Wraps packed frame bytes. `data.len()` must be a whole number of frames.
    pub fn from_packed(grid: PixelGrid, meta: StackMeta, data: Vec<u8>) -> Result<Self> {
        let layout = FrameLayout::new(grid.width, grid.height);
        let fb = layout.frame_bytes();
        if fb == 0 || !data.len().is_multiple_of(fb) {
            return Err(Error::Format(format!(
                "{} bytes is not a whole number of {fb}-byte frames",
                data.len()
            )));
        }
        Ok(FrameStack {
            grid,
            meta,
            layout,
            n_frames: data.len() / fb,
            data,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn layout(&self) -> FrameLayout {
        self.layout
    }

    pub fn frame(&self, t: usize) -> &[u8] {
        let fb = self.layout.frame_bytes();
        &self.data[t * fb..(t + 1) * fb]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[u8]> {
        self.data.chunks_exact(self.layout.frame_bytes())
    }

    pub fn packed(&self) -> &[u8] {
        &self.data
    }

    pub fn is_set(&self, t: usize, x: usize, y: usize) -> bool {
        self.layout.get(self.frame(t), x, y)
    }

    /// Sub-stack of frames `range`, sharing metadata.
    pub fn slice(&self, range: std::ops::Range<usize>) -> FrameStack {
        let fb = self.layout.frame_bytes();
        FrameStack {
            grid: self.grid,
            meta: self.meta,
            layout: self.layout,
            n_frames: range.len(),
            data: self.data[range.start * fb..range.end * fb].to_vec(),
        }
    }

    pub fn mean_events_per_frame(&self) -> f64 {
        let total: u64 = self.data.iter().map(|b| b.count_ones() as u64).sum();
        total as f64 / self.n_frames as f64
    }
}

/// Precomputed photon routing for one emitter: cumulative per-pixel mass.
#[derive(Debug, Clone)]
struct Route {
    cdf: Vec<f64>,
}

impl Route {
    fn sample(&self, u: f64) -> Option<usize> {
        let total = *self.cdf.last()?;
        if u >= total {
            return None;
        }
        Some(
            self.cdf
                .partition_point(|&c| c <= u)
                .min(self.cdf.len() - 1),
        )
    }
}

/// Everything needed to expose any frame of a run independently.
pub struct Exposure<'a> {
    scene: &'a EmitterScene,
    camera: CameraModel,
    layout: FrameLayout,
    n_pixels: usize,
    routes: Vec<Route>,
    blink: Option<BlinkTrajectory>,
}

/// Per-worker scratch buffers.
#[derive(Default)]
pub struct ExposureScratch {
    batch: EmissionBatch,
    states: Vec<bool>,
}

impl<'a> Exposure<'a> {
    /// Prepares exposure of `n_frames` frames. The blinking trajectory, if the
    /// scene blinks, is generated here so frames can be exposed in any order.
    pub fn new(
        scene: &'a EmitterScene,
        psf: &PsfModel,
        grid: &PixelGrid,
        camera: &CameraModel,
        n_frames: usize,
    ) -> Self {
        let routes = scene
            .emitters
            .iter()
            .map(|e| {
                let mut acc = 0.0;
                let cdf = psf
                    .pixelated_psf(grid, e.x_nm, e.y_nm, e.z_nm)
                    .into_iter()
                    .map(|m| {
                        acc += m;
                        acc
                    })
                    .collect();
                Route { cdf }
            })
            .collect();
        let blink = (scene.mode == SourceMode::ClassicalBlinking)
            .then(|| BlinkTrajectory::generate(scene, camera.seed, n_frames));
        Exposure {
            scene,
            camera: *camera,
            layout: FrameLayout::new(grid.width, grid.height),
            n_pixels: grid.len(),
            routes,
            blink,
        }
    }

    pub fn layout(&self) -> FrameLayout {
        self.layout
    }

    /// Exposes frame `frame_index` into `out` (which must be zeroed and
    /// `layout().frame_bytes()` long).
    pub fn expose_into(&self, frame_index: usize, scratch: &mut ExposureScratch, out: &mut [u8]) {
        let mut rng = rng::stream(self.camera.seed, Domain::Frame, frame_index as u64);
        let gain = self.draw_gain(&mut rng);
        let on = match &self.blink {
            Some(traj) => {
                traj.states_at(frame_index, &mut scratch.states);
                Some(scratch.states.as_slice())
            }
            None => None,
        };
        self.scene
            .sample_emission_into(on, &mut rng, &mut scratch.batch);
        let p_detect = (self.camera.qe * gain).clamp(0.0, 1.0);
        for ev in &scratch.batch.events {
            let route = &self.routes[ev.emitter];
            for _ in 0..ev.photons {
                let landing = route.sample(rng.random::<f64>());
                let detected = rng.random::<f64>() < p_detect;
                if let (Some(px), true) = (landing, detected) {
                    self.layout.set(out, px);
                }
            }
        }
        let p_dark = (self.camera.dark_rate * gain).min(1.0);
        self.add_darks(p_dark, &mut rng, out);
    }

    fn draw_gain(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.camera.gain_fluct_sd > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            (1.0 + self.camera.gain_fluct_sd * z).clamp(0.0, 2.0)
        } else {
            1.0
        }
    }

    /// Bernoulli(p) per pixel via geometric gap sampling.
    fn add_darks(&self, p: f64, rng: &mut ChaCha8Rng, out: &mut [u8]) {
        if p <= 0.0 {
            return;
        }
        if p >= 1.0 {
            for px in 0..self.n_pixels {
                self.layout.set(out, px);
            }
            return;
        }
        let log_q = (-p).ln_1p();
        let mut px: usize = 0;
        loop {
            let u: f64 = rng.random();
            let gap = ((-u).ln_1p() / log_q).floor();
            if gap >= (self.n_pixels - px) as f64 {
                break;
            }
            px += gap as usize;
            self.layout.set(out, px);
            px += 1;
            if px >= self.n_pixels {
                break;
            }
        }
    }
}

/// Exposes a single frame as a packed bitmap.
pub fn expose_frame(
    scene: &EmitterScene,
    psf: &PsfModel,
    grid: &PixelGrid,
    camera: &CameraModel,
    frame_index: usize,
) -> Vec<u8> {
    let exposure = Exposure::new(scene, psf, grid, camera, frame_index + 1);
    let mut out = vec![0u8; exposure.layout().frame_bytes()];
    exposure.expose_into(frame_index, &mut ExposureScratch::default(), &mut out);
    out
}

/// Acquisition settings for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Acquisition {
    pub n_frames: u64,
    #[serde(default = "default_pulse_rate")]
    pub pulse_rate_hz: f64,
    /// Largest in-memory stack `simulate_stack` will allocate.
    #[serde(default = "default_budget")]
    pub memory_budget_bytes: u64,
}

fn default_pulse_rate() -> f64 {
    1000.0
}

fn default_budget() -> u64 {
    4 << 30
}

impl Acquisition {
    pub fn new(n_frames: u64) -> Self {
        Acquisition {
            n_frames,
            pulse_rate_hz: default_pulse_rate(),
            memory_budget_bytes: default_budget(),
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.n_frames == 0 {
            return Err(Error::validation(
                format!("{prefix}n_frames"),
                "must be >= 1",
            ));
        }
        if !(self.pulse_rate_hz.is_finite() && self.pulse_rate_hz > 0.0) {
            return Err(Error::validation(
                format!("{prefix}pulse_rate_hz"),
                "must be > 0",
            ));
        }
        Ok(())
    }
}

const CHUNK_FRAMES: usize = 4096;

/// Simulates a full frame stack. Frame `t` depends only on the run
/// configuration and `t`, so the result is independent of worker count.
pub fn simulate_stack(
    scene: &EmitterScene,
    psf: &PsfModel,
    grid: &PixelGrid,
    camera: &CameraModel,
    acquisition: &Acquisition,
    digest: [u8; 32],
) -> Result<FrameStack> {
    acquisition.validate("acquisition.")?;
    let layout = FrameLayout::new(grid.width, grid.height);
    let required = (layout.frame_bytes() as u64).saturating_mul(acquisition.n_frames);
    if required > acquisition.memory_budget_bytes {
        return Err(Error::ResourceExhausted {
            required,
            budget: acquisition.memory_budget_bytes,
        });
    }
    let n_frames = acquisition.n_frames as usize;
    let exposure = Exposure::new(scene, psf, grid, camera, n_frames);
    let fb = layout.frame_bytes();
    let mut data = vec![0u8; fb * n_frames];
    par::for_each_chunk_mut(&mut data, fb * CHUNK_FRAMES, |chunk_index, chunk| {
        let mut scratch = ExposureScratch::default();
        for (k, frame) in chunk.chunks_exact_mut(fb).enumerate() {
            exposure.expose_into(chunk_index * CHUNK_FRAMES + k, &mut scratch, frame);
        }
    });
    FrameStack::from_packed(
        *grid,
        StackMeta {
            seed: camera.seed,
            pulse_rate_hz: acquisition.pulse_rate_hz,
            digest,
        },
        data,
    )
}

/// Simulates `n_frames` frames without storing them, folding each frame into
/// a per-chunk accumulator. Chunk accumulators are merged in frame order.
pub fn simulate_fold<A, I, F, M>(
    exposure: &Exposure<'_>,
    n_frames: usize,
    init: I,
    fold: F,
    merge: M,
) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, &[u8]) + Sync + Send,
    M: Fn(A, A) -> A,
{
    let fb = exposure.layout().frame_bytes();
    let ranges = par::ranges(n_frames, CHUNK_FRAMES);
    let parts = par::map_indexed(ranges.len(), |i| {
        let mut acc = init();
        let mut scratch = ExposureScratch::default();
        let mut frame = vec![0u8; fb];
        for t in ranges[i].clone() {
            frame.fill(0);
            exposure.expose_into(t, &mut scratch, &mut frame);
            fold(&mut acc, &frame);
        }
        acc
    });
    let mut parts = parts.into_iter();
    let first = parts.next().unwrap_or_else(&init);
    parts.fold(first, merge)
}
