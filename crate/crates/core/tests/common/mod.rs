#![allow(dead_code)]

use antibunch::camera::{simulate_stack, Acquisition, CameraModel, FrameStack};
use antibunch::correlator::CorrelationMap;
use antibunch::optics::{PixelGrid, PsfModel};
use antibunch::scene::{Emitter, EmitterScene, SourceMode};

pub fn scene(grid: &PixelGrid, mode: SourceMode, emitters: Vec<Emitter>) -> EmitterScene {
    EmitterScene::new(grid.extent_nm(), mode, emitters).expect("valid scene")
}

pub fn run(
    scene: &EmitterScene,
    psf: &PsfModel,
    grid: &PixelGrid,
    camera: &CameraModel,
    n_frames: u64,
) -> FrameStack {
    simulate_stack(
        scene,
        psf,
        grid,
        camera,
        &Acquisition::new(n_frames),
        [7; 32],
    )
    .expect("simulation")
}

pub fn psf_sigma(sigma_nm: f64) -> PsfModel {
    PsfModel {
        sigma0_nm: sigma_nm,
        ..PsfModel::default()
    }
}

/// Sample mean and its standard error.
pub fn mean_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Analytic map `f(x, y)` sampled on a regular grid.
pub fn analytic_map(
    order: u8,
    width: usize,
    height: usize,
    pitch: f64,
    f: impl Fn(f64, f64) -> f64,
) -> CorrelationMap {
    let mut values = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            values.push(f(x as f64 * pitch, y as f64 * pitch));
        }
    }
    CorrelationMap {
        order,
        width,
        height,
        pitch_nm: pitch,
        origin_nm: [0.0, 0.0],
        offset_applied: 0.0,
        configs: vec![],
        n_frames: 0,
        seed: 0,
        digest: [0; 32],
        values,
        stderr: None,
    }
}
