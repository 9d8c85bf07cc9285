mod common;

use antibunch::analysis::fwhm;
use antibunch::camera::CameraModel;
use antibunch::correlator::{
    fourier_interpolate, mean_image, merge_maps, readout_offset_estimate, second_order_map,
    temporal_g2, temporal_g2_blocks, temporal_g3, temporal_g3_blocks, third_order_map,
    CorrelationMap, PairConfig, Roi, TripleConfig, DEFAULT_MIN_SEPARATION,
};
use antibunch::optics::{PixelGrid, PsfModel};
use antibunch::scene::{Emitter, SourceMode};
use common::{psf_sigma, run, scene};

fn single_emitter_grid() -> (PixelGrid, [f64; 2]) {
    let grid = PixelGrid::new(24, 24, 80.0);
    let c = grid.pixel_center(12, 12);
    (grid, c)
}

#[test]
fn g2_single_emitter_has_exact_zero() {
    let (grid, c) = single_emitter_grid();
    let s = run(
        &scene(
            &grid,
            SourceMode::Quantum,
            vec![Emitter::perfect(c[0], c[1], 0.8)],
        ),
        &PsfModel::default(),
        &grid,
        &CameraModel::default(),
        20_000,
    );
    let g = temporal_g2(&s, &Roi::rect(0, 0, 24, 24), 5).unwrap();
    assert_eq!(g.zero_lag(), 0.0);
    assert!((1..=5).all(|t| g.at(t) > 0.0 && g.at(t) == g.at(-t)));
    let g3 = temporal_g3(&s, &Roi::rect(8, 8, 8, 8), 3).unwrap();
    assert_eq!(g3.center(), 0.0);
    assert_eq!(g3.ridge(), 0.0);
    assert!(g3.plateau() > 0.0);
}

#[test]
fn g2_three_colocated_emitters() {
    let grid = PixelGrid::new(48, 48, 80.0);
    let c = grid.pixel_center(24, 24);
    let camera = CameraModel {
        qe: 0.2,
        seed: 21,
        ..CameraModel::default()
    };
    let s = run(
        &scene(
            &grid,
            SourceMode::Quantum,
            vec![Emitter::perfect(c[0], c[1], 1.0); 3],
        ),
        &psf_sigma(6.0 * 80.0),
        &grid,
        &camera,
        300_000,
    );
    let b = temporal_g2_blocks(&s, &Roi::rect(0, 0, 48, 48), 4, 20).unwrap();
    let d = b.jackknife(|g| g.dip_ratio());
    assert!(d.within(2.0 / 3.0, 3.0), "{d:?}");
}

#[test]
fn g2_blinking_poisson_bunches() {
    let (grid, c) = single_emitter_grid();
    let e = Emitter {
        on_fraction: 0.5,
        switch_rate: 0.2,
        ..Emitter::perfect(c[0], c[1], 0.5)
    };
    let s = run(
        &scene(&grid, SourceMode::ClassicalBlinking, vec![e]),
        &PsfModel::default(),
        &grid,
        &CameraModel {
            seed: 22,
            ..CameraModel::default()
        },
        100_000,
    );
    let b = temporal_g2_blocks(&s, &Roi::rect(0, 0, 24, 24), 30, 20).unwrap();
    let d = b.jackknife(|g| g.dip_ratio());
    assert!(d.value - 1.0 > 3.0 * d.stderr, "{d:?}");
}

#[test]
fn g3_two_emitters_and_blinking_reversal() {
    let grid = PixelGrid::new(40, 40, 80.0);
    let c = grid.pixel_center(20, 20);
    let roi = Roi::rect(0, 0, 40, 40);
    let camera = CameraModel {
        qe: 0.3,
        seed: 23,
        ..CameraModel::default()
    };
    let psf = psf_sigma(5.0 * 80.0);
    let s = run(
        &scene(
            &grid,
            SourceMode::Quantum,
            vec![Emitter::perfect(c[0], c[1], 1.0); 2],
        ),
        &psf,
        &grid,
        &camera,
        200_000,
    );
    let b = temporal_g3_blocks(&s, &roi, 2, 20).unwrap();
    let ridge = b.jackknife(|g| g.ridge() / g.plateau());
    let centre = b.jackknife(|g| g.center() / g.plateau());
    assert!(ridge.within(0.5, 3.0), "{ridge:?}");
    assert!(centre.within(0.0, 3.0), "{centre:?}");

    let blink = Emitter {
        on_fraction: 0.3,
        switch_rate: 0.3,
        ..Emitter::perfect(c[0], c[1], 1.0)
    };
    let cs = run(
        &scene(&grid, SourceMode::ClassicalBlinking, vec![blink]),
        &psf,
        &grid,
        &camera,
        100_000,
    );
    let g = temporal_g3_blocks(&cs, &roi, 4, 10).unwrap().combined();
    assert!(
        g.center() > g.ridge() && g.ridge() > g.plateau(),
        "{} {} {}",
        g.center(),
        g.ridge(),
        g.plateau()
    );
}

/// One noise-free emitter with a 3-pixel PSF: order-N width ratios.
#[test]
fn psf_power_law_at_three_pixel_sigma() {
    let grid = PixelGrid::new(28, 28, 80.0);
    let c = grid.pixel_center(14, 14);
    let s = run(
        &scene(
            &grid,
            SourceMode::Quantum,
            vec![Emitter::perfect(c[0], c[1], 1.0)],
        ),
        &psf_sigma(3.0 * 80.0),
        &grid,
        &CameraModel::default(),
        200_000,
    );
    let f1 = fwhm(&mean_image(&s, &Default::default()).unwrap(), None).unwrap();
    let m2 = second_order_map(&s, &PairConfig::defaults(), 0.0).unwrap();
    let m3 = third_order_map(&s, &TripleConfig::defaults(), 0.0).unwrap();
    assert!(m2.values.iter().copied().fold(f64::MIN, f64::max) > 0.0);
    let f2 = fwhm(&m2, Some(c)).unwrap();
    let f3 = fwhm(&m3, Some(c)).unwrap();
    assert!((f2.peak_nm[0] - c[0]).abs() < 10.0 && (f2.peak_nm[1] - c[1]).abs() < 10.0);
    let r2 = f2.fwhm_nm / f1.fwhm_nm * 2f64.sqrt();
    let r3 = f3.fwhm_nm / f1.fwhm_nm * 3f64.sqrt();
    assert!((r2 - 1.0).abs() < 0.05, "{r2}");
    assert!((r3 - 1.0).abs() < 0.07, "{r3}");
}

#[test]
fn dark_maps_and_offsets() {
    let grid = PixelGrid::new(32, 32, 80.0);
    let dark = scene(&grid, SourceMode::Quantum, vec![]);
    let plain = CameraModel {
        dark_rate: 0.2,
        seed: 24,
        ..CameraModel::default()
    };
    let s = run(&dark, &PsfModel::default(), &grid, &plain, 100_000);
    let m = second_order_map(&s, &PairConfig::defaults(), 0.0).unwrap();
    assert!(m.fraction_beyond(3.0, 0.0).unwrap() <= 0.01);
    let est = readout_offset_estimate(&s, DEFAULT_MIN_SEPARATION).unwrap();
    assert!(est.value.abs() < 3.0 * est.stderr, "{est:?}");

    let noisy = CameraModel {
        gain_fluct_sd: 0.1,
        ..plain
    };
    let s = run(&dark, &PsfModel::default(), &grid, &noisy, 200_000);
    let est = readout_offset_estimate(&s, DEFAULT_MIN_SEPARATION).unwrap();
    assert!((est.value - 0.01).abs() < 0.001, "{est:?}");
    let m = second_order_map(&s, &PairConfig::defaults(), est.value).unwrap();
    assert!(m.fraction_beyond(3.0, 0.0).unwrap() <= 0.01);
    let m3 = third_order_map(&s, &TripleConfig::defaults(), est.value).unwrap();
    assert!(m3.fraction_beyond(3.0, 0.0).unwrap() <= 0.01);
}

#[test]
fn offset_estimate_ignores_an_emitter() {
    let grid = PixelGrid::new(40, 40, 80.0);
    let c = grid.pixel_center(20, 20);
    let camera = CameraModel {
        dark_rate: 0.2,
        gain_fluct_sd: 0.05,
        seed: 25,
        ..CameraModel::default()
    };
    let with = run(
        &scene(
            &grid,
            SourceMode::Quantum,
            vec![Emitter::perfect(c[0], c[1], 1.0)],
        ),
        &PsfModel::default(),
        &grid,
        &camera,
        300_000,
    );
    let without = run(
        &scene(&grid, SourceMode::Quantum, vec![]),
        &PsfModel::default(),
        &grid,
        &camera,
        300_000,
    );
    let a = readout_offset_estimate(&with, DEFAULT_MIN_SEPARATION).unwrap();
    let b = readout_offset_estimate(&without, DEFAULT_MIN_SEPARATION).unwrap();
    assert!((a.value - 0.0025).abs() < 0.15 * 0.0025, "{a:?}");
    assert!((b.value - 0.0025).abs() < 0.15 * 0.0025, "{b:?}");
    assert!((a.value - b.value).abs() < 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt() + 2e-4);
}

fn sum_with_errors(a: &CorrelationMap, b: &CorrelationMap) -> CorrelationMap {
    let mut out = a.clone();
    out.values
        .iter_mut()
        .zip(&b.values)
        .for_each(|(x, y)| *x += y);
    out.stderr = Some(
        a.stderr
            .as_ref()
            .unwrap()
            .iter()
            .zip(b.stderr.as_ref().unwrap())
            .map(|(x, y)| x.hypot(*y))
            .collect(),
    );
    out
}

#[test]
fn third_order_additivity_two_emitters() {
    let grid = PixelGrid::new(24, 24, 80.0);
    let (a, b) = (grid.pixel_center(7, 12), grid.pixel_center(17, 12));
    let camera = CameraModel {
        dark_rate: 0.1,
        ..CameraModel::default()
    };
    let e = |p: [f64; 2]| Emitter::perfect(p[0], p[1], 0.9);
    let psf = PsfModel::default();
    let frames = 200_000;
    let both = run(
        &scene(&grid, SourceMode::Quantum, vec![e(a), e(b)]),
        &psf,
        &grid,
        &CameraModel { seed: 30, ..camera },
        frames,
    );
    let only_a = run(
        &scene(&grid, SourceMode::Quantum, vec![e(a)]),
        &psf,
        &grid,
        &CameraModel { seed: 31, ..camera },
        frames,
    );
    let only_b = run(
        &scene(&grid, SourceMode::Quantum, vec![e(b)]),
        &psf,
        &grid,
        &CameraModel { seed: 32, ..camera },
        frames,
    );
    let map = |s| third_order_map(s, &TripleConfig::defaults(), 0.0).unwrap();
    let total = map(&both);
    let sum = sum_with_errors(&map(&only_a), &map(&only_b));
    let mut diff = sum_with_errors(&total, &sum);
    diff.values = total
        .values
        .iter()
        .zip(&sum.values)
        .map(|(x, y)| x - y)
        .collect();
    assert!(diff.fraction_beyond(3.0, 0.0).unwrap() <= 0.01);
}

#[test]
fn merged_pair_maps_keep_fourfold_symmetry() {
    let (grid, c) = single_emitter_grid();
    let s = run(
        &scene(
            &grid,
            SourceMode::Quantum,
            vec![Emitter::perfect(c[0], c[1], 1.0)],
        ),
        &PsfModel::default(),
        &grid,
        &CameraModel {
            seed: 26,
            ..CameraModel::default()
        },
        100_000,
    );
    let h = second_order_map(&s, &[PairConfig::new(1, 0).unwrap()], 0.0).unwrap();
    let v = second_order_map(&s, &[PairConfig::new(0, 1).unwrap()], 0.0).unwrap();
    let merged = merge_maps(&[h, v], &[[0.0, 0.0], [0.0, 0.0]]).unwrap();
    // Emitter site on the half-pitch lattice.
    let ex = ((c[0] - merged.origin_nm[0]) / merged.pitch_nm).round() as i64;
    let ey = ((c[1] - merged.origin_nm[1]) / merged.pitch_nm).round() as i64;
    let se = merged.stderr.as_ref().unwrap();
    let at = |x: i64, y: i64| {
        let i = y as usize * merged.width + x as usize;
        (merged.values[i], se[i])
    };
    let mut checked = 0;
    for dy in -6i64..=6 {
        for dx in -6i64..=6 {
            let (v0, s0) = at(ex + dx, ey + dy);
            for (qx, qy) in [(-dy, dx), (-dx, -dy), (dy, -dx)] {
                let (v1, s1) = at(ex + qx, ey + qy);
                assert!((v0 - v1).abs() <= 3.0 * s0.hypot(s1) + 1e-15, "({dx},{dy})");
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn interpolation_examples() {
    let mut impulse = common::analytic_map(2, 8, 6, 80.0, |_, _| 0.0);
    impulse.values[2 * 8 + 3] = 1.0;
    let up = fourier_interpolate(&impulse, 2).unwrap();
    assert_eq!((up.width, up.height), (16, 12));
    assert!((up.pitch_nm - 40.0).abs() < 1e-12);
    assert!((up.values[4 * 16 + 6] - 1.0).abs() < 1e-12);
    let mean = |m: &CorrelationMap| m.values.iter().sum::<f64>() / m.len() as f64;
    assert!((mean(&up) - mean(&impulse)).abs() < 1e-9);
    assert_eq!(fourier_interpolate(&impulse, 1).unwrap(), impulse);
    let flat = common::analytic_map(2, 5, 7, 80.0, |_, _| 2.5);
    assert!(fourier_interpolate(&flat, 3)
        .unwrap()
        .values
        .iter()
        .all(|v| (v - 2.5).abs() < 1e-12));
}
