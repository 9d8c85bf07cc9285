//! Integrated order-1 and order-2 signal as the focal plane moves.

use serde::{Deserialize, Serialize};

use crate::camera::{simulate_fold, CameraModel, Exposure, FrameLayout, StackMeta};
use crate::correlator::{
    mean_image_map, offset_from_moments, second_order_from_moments, MapOptions, MomentAccumulator,
    MomentPlan, PairConfig, DEFAULT_MIN_SEPARATION,
};
use crate::error::{Error, Result};
use crate::optics::{PixelGrid, PsfModel};
use crate::par;
use crate::rng::{derive_seed, Domain};
use crate::scene::EmitterScene;

/// Focal offsets of the reference experiment (nm).
pub const REFERENCE_DEFOCUS_NM: [f64; 5] = [-880.0, -440.0, 0.0, 440.0, 740.0];

#[derive(Debug, Clone, PartialEq)]
pub struct DefocusOptions {
    pub pairs: Vec<PairConfig>,
    /// Offset applied to every order-2 map; `None` estimates it per focal
    /// position from pixel pairs [`DEFAULT_MIN_SEPARATION`] apart.
    pub offset: Option<f64>,
    pub map: MapOptions,
}

impl Default for DefocusOptions {
    fn default() -> Self {
        DefocusOptions {
            pairs: PairConfig::defaults(),
            offset: Some(0.0),
            map: MapOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefocusSeries {
    pub z_nm: Vec<f64>,
    /// Integrated order-1 signal, divided by its value at z = 0.
    pub order1: Vec<f64>,
    /// Integrated order-2 signal, divided by its value at z = 0.
    pub order2: Vec<f64>,
    /// Un-normalized integrals (events x nm^2 per frame).
    pub order1_raw: Vec<f64>,
    pub order2_raw: Vec<f64>,
    pub offsets: Vec<f64>,
    pub seeds: Vec<u64>,
}

pub fn defocus_series(
    scene: &EmitterScene,
    psf: &PsfModel,
    grid: &PixelGrid,
    camera: &CameraModel,
    z_list: &[f64],
    n_frames: u64,
) -> Result<DefocusSeries> {
    defocus_series_with(
        scene,
        psf,
        grid,
        camera,
        z_list,
        n_frames,
        &DefocusOptions::default(),
    )
}

/// Simulates `n_frames` frames at each focal offset, streaming them into
/// moment accumulators without storing the stacks. The run at index `i`
/// uses camera seed `derive_seed(camera.seed, Defocus, i)`.
pub fn defocus_series_with(
    scene: &EmitterScene,
    psf: &PsfModel,
    grid: &PixelGrid,
    camera: &CameraModel,
    z_list: &[f64],
    n_frames: u64,
    opts: &DefocusOptions,
) -> Result<DefocusSeries> {
    if z_list.is_empty() {
        return Err(Error::InvalidArgument("z_list is empty".into()));
    }
    if z_list.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidArgument(
            "z_list contains a non-finite value".into(),
        ));
    }
    let focus = z_list.iter().position(|&z| z == 0.0).ok_or_else(|| {
        Error::InvalidArgument("z_list must contain the in-focus position 0".into())
    })?;
    scene.validate("scene.")?;
    psf.validate("psf.")?;
    grid.validate("grid.")?;
    camera.validate("camera.")?;

    let layout = FrameLayout::new(grid.width, grid.height);
    let mut configs = opts.pairs.clone();
    if opts.offset.is_none() {
        let s = DEFAULT_MIN_SEPARATION as i32;
        configs.extend([PairConfig { offset: [s, 0] }, PairConfig { offset: [0, s] }]);
    }
    let plan = MomentPlan::new(layout, &configs, &[]);

    let runs = par::map_indexed(z_list.len(), |i| -> Result<(f64, f64, f64, u64)> {
        let shifted = scene.defocused(z_list[i]);
        let seed = derive_seed(camera.seed, Domain::Defocus, i as u64);
        let cam = CameraModel { seed, ..*camera };
        let exposure = Exposure::new(&shifted, psf, grid, &cam, n_frames as usize);
        let acc = simulate_fold(
            &exposure,
            n_frames as usize,
            || MomentAccumulator::new(plan.clone()),
            |a, f| a.accumulate(f),
            MomentAccumulator::merge,
        );
        let meta = StackMeta {
            seed,
            pulse_rate_hz: 0.0,
            digest: [0; 32],
        };
        let offset = match opts.offset {
            Some(o) => o,
            None => offset_from_moments(&acc, DEFAULT_MIN_SEPARATION)?.value,
        };
        let m1 = mean_image_map(&acc, grid, &meta, &opts.map)?;
        let m2 = second_order_from_moments(&acc, grid, &meta, &opts.pairs, offset, &opts.map)?;
        Ok((m1.integral(), m2.integral(), offset, seed))
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let (r1, r2) = (runs[focus].0, runs[focus].1);
    if r1 == 0.0 || r2 == 0.0 {
        return Err(Error::Statistical(
            "in-focus integrated signal is zero; cannot normalize the series".into(),
        ));
    }
    Ok(DefocusSeries {
        z_nm: z_list.to_vec(),
        order1: runs.iter().map(|r| r.0 / r1).collect(),
        order2: runs.iter().map(|r| r.1 / r2).collect(),
        order1_raw: runs.iter().map(|r| r.0).collect(),
        order2_raw: runs.iter().map(|r| r.1).collect(),
        offsets: runs.iter().map(|r| r.2).collect(),
        seeds: runs.iter().map(|r| r.3).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Emitter, SourceMode};

    fn setup() -> (EmitterScene, PsfModel, PixelGrid, CameraModel) {
        let grid = PixelGrid::new(16, 16, 80.0);
        let scene = EmitterScene::new(
            grid.extent_nm(),
            SourceMode::Quantum,
            vec![Emitter::perfect(640.0, 640.0, 1.0)],
        )
        .unwrap();
        let camera = CameraModel {
            qe: 1.0,
            ..CameraModel::default()
        };
        (scene, PsfModel::default(), grid, camera)
    }

    #[test]
    fn focus_only_series_is_unity() {
        let (scene, psf, grid, camera) = setup();
        let s = defocus_series(&scene, &psf, &grid, &camera, &[0.0], 2000).unwrap();
        assert_eq!(s.order1, vec![1.0]);
        assert_eq!(s.order2, vec![1.0]);
        assert!(s.order2_raw[0] > 0.0);
    }

    #[test]
    fn requires_focus_and_nonempty_list() {
        let (scene, psf, grid, camera) = setup();
        assert!(defocus_series(&scene, &psf, &grid, &camera, &[], 200).is_err());
        assert!(defocus_series(&scene, &psf, &grid, &camera, &[100.0], 200).is_err());
    }

    #[test]
    fn per_position_seeds_are_distinct_and_reproducible() {
        let (scene, psf, grid, camera) = setup();
        let a = defocus_series(&scene, &psf, &grid, &camera, &[0.0, 300.0], 500).unwrap();
        let b = defocus_series(&scene, &psf, &grid, &camera, &[0.0, 300.0], 500).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.seeds[0], a.seeds[1]);
    }
}
