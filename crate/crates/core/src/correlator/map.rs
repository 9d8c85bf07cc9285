//! Spatial antibunching maps: per-configuration cumulant maps, Fourier
//! interpolation, anchor-aligned merging, and the order-1/2/3 pipelines.

use serde::{Deserialize, Serialize};

use crate::camera::{FrameStack, StackMeta};
use crate::error::{Error, Result};
use crate::optics::PixelGrid;

use super::configs::{anchor_denominator, lcm, PairConfig, TripleConfig};
use super::interp::{interpolate_2d, interpolate_variance_2d};
use super::moments::{
    delta_variance, pair_cumulant, triple_cumulant, MomentAccumulator, MomentPlan,
};

/// A real-valued map on a regular lattice in the sample plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMap {
    /// 1 for the mean-intensity image, 2 or 3 for antibunching maps.
    pub order: u8,
    pub width: usize,
    pub height: usize,
    /// Site spacing in nm.
    pub pitch_nm: f64,
    /// Sample-plane position of site (0, 0) in nm.
    pub origin_nm: [f64; 2],
    pub offset_applied: f64,
    pub configs: Vec<String>,
    pub n_frames: u64,
    pub seed: u64,
    #[serde(with = "hex_digest")]
    pub digest: [u8; 32],
    #[serde(skip)]
    pub values: Vec<f64>,
    /// Per-site standard error, when known.
    #[serde(skip)]
    pub stderr: Option<Vec<f64>>,
}

mod hex_digest {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(d))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let text = String::deserialize(d)?;
        let bytes = hex::decode(&text).map_err(serde::de::Error::custom)?;
        bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("digest must be 32 bytes"))
    }
}

impl CorrelationMap {
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Sample-plane position of site `(x, y)`.
    pub fn site_nm(&self, x: usize, y: usize) -> [f64; 2] {
        [
            self.origin_nm[0] + x as f64 * self.pitch_nm,
            self.origin_nm[1] + y as f64 * self.pitch_nm,
        ]
    }

    /// Sum of values weighted by site area (nm^2).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.pitch_nm * self.pitch_nm
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Fraction of sites whose value lies more than `k` standard errors from
    /// `reference` (sites with zero error count only if the value differs).
    pub fn fraction_beyond(&self, k: f64, reference: f64) -> Option<f64> {
        let se = self.stderr.as_ref()?;
        let n = self
            .values
            .iter()
            .zip(se)
            .filter(|(v, s)| (*v - reference).abs() > k * **s)
            .count();
        Some(n as f64 / self.len() as f64)
    }

    /// Rectangular sub-map starting at site `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> CorrelationMap {
        let take = |src: &[f64]| {
            let mut out = Vec::with_capacity(width * height);
            for y in y0..y0 + height {
                out.extend_from_slice(&src[y * self.width + x0..y * self.width + x0 + width]);
            }
            out
        };
        CorrelationMap {
            width,
            height,
            origin_nm: self.site_nm(x0, y0),
            values: take(&self.values),
            stderr: self.stderr.as_deref().map(take),
            configs: self.configs.clone(),
            ..self.clone_header()
        }
    }

    fn clone_header(&self) -> CorrelationMap {
        CorrelationMap {
            order: self.order,
            width: self.width,
            height: self.height,
            pitch_nm: self.pitch_nm,
            origin_nm: self.origin_nm,
            offset_applied: self.offset_applied,
            configs: Vec::new(),
            n_frames: self.n_frames,
            seed: self.seed,
            digest: self.digest,
            values: Vec::new(),
            stderr: None,
        }
    }

    /// Multiplies values (and errors) by a positive constant.
    pub fn scaled(&self, factor: f64) -> CorrelationMap {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        if let Some(se) = out.stderr.as_mut() {
            se.iter_mut().for_each(|v| *v *= factor.abs());
        }
        out
    }
}

/// Upsamples a map by `factor` per axis by zero-padding its spectrum. The
/// result has `factor * width x factor * height` sites at pitch
/// `pitch / factor`; site (0, 0) stays in place. `factor == 1` returns the
/// map unchanged.
pub fn fourier_interpolate(map: &CorrelationMap, factor: usize) -> Result<CorrelationMap> {
    if factor == 0 {
        return Err(Error::InvalidArgument(
            "interpolation factor must be >= 1".into(),
        ));
    }
    if !map.values.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument(
            "map contains non-finite values".into(),
        ));
    }
    if factor == 1 {
        return Ok(map.clone());
    }
    let values = interpolate_2d(&map.values, map.width, map.height, factor);
    let stderr = map.stderr.as_ref().map(|se| {
        let var: Vec<f64> = se.iter().map(|s| s * s).collect();
        interpolate_variance_2d(&var, map.width, map.height, factor)
            .into_iter()
            .map(|v| v.max(0.0).sqrt())
            .collect()
    });
    Ok(CorrelationMap {
        width: map.width * factor,
        height: map.height * factor,
        pitch_nm: map.pitch_nm / factor as f64,
        values,
        stderr,
        configs: map.configs.clone(),
        ..map.clone_header()
    })
}

/// Drops the periodic wrap-around margin of an interpolated map, keeping the
/// sites between the first and last original samples.
fn crop_wrap(map: CorrelationMap, factor: usize, src_w: usize, src_h: usize) -> CorrelationMap {
    let w = (src_w - 1) * factor + 1;
    let h = (src_h - 1) * factor + 1;
    map.crop(0, 0, w, h)
}

fn lattice_index(delta_nm: f64, pitch: f64) -> Option<i64> {
    let k = delta_nm / pitch;
    let r = k.round();
    ((k - r).abs() < 1e-6).then_some(r as i64)
}

/// Shifts each map by its anchor (nm) and sums them over the region covered
/// by all of them. Maps must share order and pitch, and the shifted origins
/// must lie on one lattice.
pub fn merge_maps(maps: &[CorrelationMap], anchors_nm: &[[f64; 2]]) -> Result<CorrelationMap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::InvalidArgument("no maps to merge".into()))?;
    if anchors_nm.len() != maps.len() {
        return Err(Error::InvalidArgument(
            "one anchor is required per map".into(),
        ));
    }
    let pitch = first.pitch_nm;
    let origin = |i: usize| {
        [
            maps[i].origin_nm[0] + anchors_nm[i][0],
            maps[i].origin_nm[1] + anchors_nm[i][1],
        ]
    };
    let base = origin(0);
    let mut lo = [i64::MIN; 2];
    let mut hi = [i64::MAX; 2];
    let mut shifts = Vec::with_capacity(maps.len());
    for (i, m) in maps.iter().enumerate() {
        if m.order != first.order || (m.pitch_nm - pitch).abs() > 1e-9 * pitch {
            return Err(Error::InvalidArgument(format!(
                "grid mismatch: map {i} has order {} and pitch {} nm, expected order {} and pitch {} nm",
                m.order, m.pitch_nm, first.order, pitch
            )));
        }
        let o = origin(i);
        let mut shift = [0i64; 2];
        for a in 0..2 {
            shift[a] = lattice_index(o[a] - base[a], pitch).ok_or_else(|| {
                Error::InvalidArgument(format!("grid mismatch: map {i} is off the common lattice"))
            })?;
            let size = if a == 0 { m.width } else { m.height } as i64;
            lo[a] = lo[a].max(shift[a]);
            hi[a] = hi[a].min(shift[a] + size - 1);
        }
        shifts.push(shift);
    }
    if lo[0] > hi[0] || lo[1] > hi[1] {
        return Err(Error::InvalidArgument(
            "grid mismatch: maps do not overlap".into(),
        ));
    }
    let (w, h) = ((hi[0] - lo[0] + 1) as usize, (hi[1] - lo[1] + 1) as usize);
    let mut values = vec![0.0; w * h];
    let with_err = maps.iter().all(|m| m.stderr.is_some());
    let mut var = vec![0.0; if with_err { w * h } else { 0 }];
    for (m, s) in maps.iter().zip(&shifts) {
        for y in 0..h {
            let sy = (lo[1] + y as i64 - s[1]) as usize;
            for x in 0..w {
                let sx = (lo[0] + x as i64 - s[0]) as usize;
                values[y * w + x] += m.values[sy * m.width + sx];
                if with_err {
                    let e = m.stderr.as_ref().unwrap()[sy * m.width + sx];
                    var[y * w + x] += e * e;
                }
            }
        }
    }
    let mut configs = Vec::new();
    for m in maps {
        configs.extend(m.configs.iter().cloned());
    }
    Ok(CorrelationMap {
        width: w,
        height: h,
        origin_nm: [
            base[0] + lo[0] as f64 * pitch,
            base[1] + lo[1] as f64 * pitch,
        ],
        values,
        stderr: with_err.then(|| var.into_iter().map(f64::sqrt).collect()),
        configs,
        ..first.clone_header()
    })
}

/// Keeps the sites of `map` that fall on the lattice `origin + k * pitch`.
fn resample_to_lattice(
    map: &CorrelationMap,
    origin_nm: [f64; 2],
    pitch: f64,
) -> Result<CorrelationMap> {
    let step = lattice_index(pitch, map.pitch_nm)
        .filter(|&s| s >= 1)
        .ok_or_else(|| {
            Error::InvalidArgument("target pitch is not a multiple of map pitch".into())
        })? as usize;
    let mut first = [0usize; 2];
    let mut count = [0usize; 2];
    for a in 0..2 {
        let n = if a == 0 { map.width } else { map.height };
        let start = (0..n.min(step)).find(|&k| {
            lattice_index(
                map.origin_nm[a] + k as f64 * map.pitch_nm - origin_nm[a],
                pitch,
            )
            .is_some()
        });
        let start = start.ok_or_else(|| {
            Error::InvalidArgument("map sites never meet the target lattice".into())
        })?;
        first[a] = start;
        count[a] = (n - start).div_ceil(step);
    }
    let pick = |src: &[f64]| {
        let mut out = Vec::with_capacity(count[0] * count[1]);
        for j in 0..count[1] {
            let y = first[1] + j * step;
            for i in 0..count[0] {
                out.push(src[y * map.width + first[0] + i * step]);
            }
        }
        out
    };
    Ok(CorrelationMap {
        width: count[0],
        height: count[1],
        pitch_nm: pitch,
        origin_nm: map.site_nm(first[0], first[1]),
        values: pick(&map.values),
        stderr: map.stderr.as_deref().map(pick),
        configs: map.configs.clone(),
        ..map.clone_header()
    })
}

/// Knobs of the map pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapOptions {
    /// Stacks shorter than this are rejected.
    pub min_frames: u64,
    /// Output lattice is `pitch / interpolation`.
    pub interpolation: usize,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            min_frames: 100,
            interpolation: 2,
        }
    }
}

struct Provenance {
    n_frames: u64,
    seed: u64,
    digest: [u8; 32],
}

impl Provenance {
    fn of(meta: &StackMeta, n_frames: u64) -> Self {
        Provenance {
            n_frames,
            seed: meta.seed,
            digest: meta.digest,
        }
    }
}

fn blank(order: u8, grid: &PixelGrid, offset: f64, prov: &Provenance) -> CorrelationMap {
    CorrelationMap {
        order,
        width: 0,
        height: 0,
        pitch_nm: grid.pitch_nm,
        origin_nm: grid.origin_nm,
        offset_applied: offset,
        configs: Vec::new(),
        n_frames: prov.n_frames,
        seed: prov.seed,
        digest: prov.digest,
        values: Vec::new(),
        stderr: None,
    }
}

/// Mean-intensity image upsampled to the analysis lattice.
pub fn mean_image_map(
    acc: &MomentAccumulator,
    grid: &PixelGrid,
    meta: &StackMeta,
    opts: &MapOptions,
) -> Result<CorrelationMap> {
    check_frames(acc.n_frames, opts)?;
    let n = acc.n_frames as f64;
    let values: Vec<f64> = acc.singles.iter().map(|&c| c as f64 / n).collect();
    let stderr = values
        .iter()
        .map(|a| (a * (1.0 - a) / n).max(0.0).sqrt())
        .collect();
    let raw = CorrelationMap {
        width: grid.width,
        height: grid.height,
        values,
        stderr: Some(stderr),
        configs: vec!["mean".into()],
        ..blank(1, grid, 0.0, &Provenance::of(meta, acc.n_frames))
    };
    let f = opts.interpolation.max(1);
    let up = fourier_interpolate(&raw, f)?;
    Ok(crop_wrap(up, f, grid.width, grid.height))
}

fn check_frames(n: u64, opts: &MapOptions) -> Result<()> {
    if n < opts.min_frames {
        return Err(Error::Statistical(format!(
            "{n} frames is below the {} frame floor for correlation maps",
            opts.min_frames
        )));
    }
    Ok(())
}

/// Interpolates per-configuration maps to a common fine lattice, merges
/// them, and samples the result on the analysis lattice.
fn assemble(
    raw: Vec<(CorrelationMap, usize)>,
    grid: &PixelGrid,
    opts: &MapOptions,
) -> Result<CorrelationMap> {
    let final_factor = opts.interpolation.max(1);
    let fine = raw
        .iter()
        .fold(final_factor, |f, (_, denom)| lcm(f, *denom));
    let mut up = Vec::with_capacity(raw.len());
    for (m, _) in &raw {
        if m.width == 0 || m.height == 0 {
            return Err(Error::InvalidArgument(format!(
                "configuration {} does not fit on a {}x{} grid",
                m.configs.join(","),
                grid.width,
                grid.height
            )));
        }
        let (w, h) = (m.width, m.height);
        up.push(crop_wrap(fourier_interpolate(m, fine)?, fine, w, h));
    }
    let anchors = vec![[0.0; 2]; up.len()];
    let merged = merge_maps(&up, &anchors)?;
    resample_to_lattice(&merged, grid.origin_nm, grid.pitch_nm / final_factor as f64)
}

#[allow(clippy::too_many_arguments)]
fn raw_config_map(
    order: u8,
    grid: &PixelGrid,
    offset: f64,
    prov: &Provenance,
    label: String,
    anchor: [f64; 2],
    base0: (i64, i64),
    width: usize,
    height: usize,
    values: Vec<f64>,
    stderr: Vec<f64>,
) -> CorrelationMap {
    let c = [
        grid.origin_nm[0] + (base0.0 as f64 + anchor[0]) * grid.pitch_nm,
        grid.origin_nm[1] + (base0.1 as f64 + anchor[1]) * grid.pitch_nm,
    ];
    CorrelationMap {
        width,
        height,
        origin_nm: c,
        values,
        stderr: Some(stderr),
        configs: vec![label],
        ..blank(order, grid, offset, prov)
    }
}

/// Order-2 map from accumulated moments. The reported signal is
/// `-(cov - offset * m_i * m_k)`, positive for antibunched light.
pub fn second_order_from_moments(
    acc: &MomentAccumulator,
    grid: &PixelGrid,
    meta: &StackMeta,
    configs: &[PairConfig],
    offset: f64,
    opts: &MapOptions,
) -> Result<CorrelationMap> {
    if configs.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one pair config is required".into(),
        ));
    }
    check_frames(acc.n_frames, opts)?;
    let prov = Provenance::of(meta, acc.n_frames);
    let n = acc.n_frames as f64;
    let mut raw = Vec::with_capacity(configs.len());
    for cfg in configs {
        let k = acc.plan.pair_index(cfg).ok_or_else(|| {
            Error::InvalidArgument(format!("{} was not accumulated", cfg.label()))
        })?;
        let dom = &acc.plan.pairs[k];
        // The plan stores canonical offsets; a flipped config covers the same
        // pixel pairs, so its deposit points coincide.
        let anchor = [
            dom.members[1][0] as f64 / 2.0,
            dom.members[1][1] as f64 / 2.0,
        ];
        let mut values = Vec::with_capacity(dom.len());
        let mut stderr = Vec::with_capacity(dom.len());
        for i in 0..dom.len() {
            let m = acc.pair_moments(k, i);
            let (kappa, grad) = pair_cumulant(&m, offset);
            values.push(-kappa);
            stderr.push(delta_variance(&m, &grad, n).sqrt());
        }
        raw.push((
            raw_config_map(
                2,
                grid,
                offset,
                &prov,
                cfg.label(),
                anchor,
                (dom.x0, dom.y0),
                dom.width,
                dom.height,
                values,
                stderr,
            ),
            anchor_denominator(&cfg.members()),
        ));
    }
    let mut map = assemble(raw, grid, opts)?;
    map.offset_applied = offset;
    Ok(map)
}

/// Order-3 map from accumulated moments: the gain-corrected third joint
/// cumulant of each triple, deposited at the triple centroid.
pub fn third_order_from_moments(
    acc: &MomentAccumulator,
    grid: &PixelGrid,
    meta: &StackMeta,
    configs: &[TripleConfig],
    offset: f64,
    opts: &MapOptions,
) -> Result<CorrelationMap> {
    if configs.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one triple config is required".into(),
        ));
    }
    check_frames(acc.n_frames, opts)?;
    let prov = Provenance::of(meta, acc.n_frames);
    let n = acc.n_frames as f64;
    let mut raw = Vec::with_capacity(configs.len());
    for cfg in configs {
        let k = acc
            .plan
            .triples
            .iter()
            .position(|d| d.members == cfg.members())
            .ok_or_else(|| {
                Error::InvalidArgument(format!("{} was not accumulated", cfg.label()))
            })?;
        let dom = &acc.plan.triples[k];
        let mut values = Vec::with_capacity(dom.len());
        let mut stderr = Vec::with_capacity(dom.len());
        for i in 0..dom.len() {
            let m = acc.triple_moments(k, i);
            let (kappa, grad) = triple_cumulant(&m, offset);
            values.push(kappa);
            stderr.push(delta_variance(&m, &grad, n).sqrt());
        }
        raw.push((
            raw_config_map(
                3,
                grid,
                offset,
                &prov,
                cfg.label(),
                cfg.anchor(),
                (dom.x0, dom.y0),
                dom.width,
                dom.height,
                values,
                stderr,
            ),
            anchor_denominator(&cfg.members()),
        ));
    }
    let mut map = assemble(raw, grid, opts)?;
    map.offset_applied = offset;
    Ok(map)
}

/// Order-2 antibunching map of a stack with default options.
pub fn second_order_map(
    stack: &FrameStack,
    configs: &[PairConfig],
    offset: f64,
) -> Result<CorrelationMap> {
    second_order_map_with(stack, configs, offset, &MapOptions::default())
}

pub fn second_order_map_with(
    stack: &FrameStack,
    configs: &[PairConfig],
    offset: f64,
    opts: &MapOptions,
) -> Result<CorrelationMap> {
    check_frames(stack.n_frames() as u64, opts)?;
    let plan = MomentPlan::new(stack.layout(), configs, &[]);
    let acc = MomentAccumulator::from_stack(stack, plan);
    second_order_from_moments(&acc, &stack.grid, &stack.meta, configs, offset, opts)
}

/// Order-3 antibunching map of a stack with default options.
pub fn third_order_map(
    stack: &FrameStack,
    configs: &[TripleConfig],
    offset: f64,
) -> Result<CorrelationMap> {
    third_order_map_with(stack, configs, offset, &MapOptions::default())
}

pub fn third_order_map_with(
    stack: &FrameStack,
    configs: &[TripleConfig],
    offset: f64,
    opts: &MapOptions,
) -> Result<CorrelationMap> {
    check_frames(stack.n_frames() as u64, opts)?;
    let plan = MomentPlan::new(stack.layout(), &[], configs);
    let acc = MomentAccumulator::from_stack(stack, plan);
    third_order_from_moments(&acc, &stack.grid, &stack.meta, configs, offset, opts)
}

/// Mean-intensity (order-1) map of a stack on the analysis lattice.
pub fn mean_image(stack: &FrameStack, opts: &MapOptions) -> Result<CorrelationMap> {
    check_frames(stack.n_frames() as u64, opts)?;
    let plan = MomentPlan::new(stack.layout(), &[], &[]);
    let acc = MomentAccumulator::from_stack(stack, plan);
    mean_image_map(&acc, &stack.grid, &stack.meta, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(values: Vec<f64>, w: usize, h: usize) -> CorrelationMap {
        CorrelationMap {
            order: 2,
            width: w,
            height: h,
            pitch_nm: 40.0,
            origin_nm: [0.0, 0.0],
            offset_applied: 0.0,
            configs: vec!["test".into()],
            n_frames: 1,
            seed: 0,
            digest: [0; 32],
            values,
            stderr: None,
        }
    }

    #[test]
    fn constant_map_stays_constant() {
        let m = map(vec![2.5; 35], 7, 5);
        for f in [2, 3, 4] {
            let up = fourier_interpolate(&m, f).unwrap();
            assert_eq!(up.width, 7 * f);
            assert_eq!(up.pitch_nm, 40.0 / f as f64);
            assert!(up.values.iter().all(|v| (v - 2.5).abs() < 1e-12));
        }
    }

    #[test]
    fn factor_one_is_identity() {
        let m = map((0..20).map(|i| (i as f64).sqrt()).collect(), 5, 4);
        assert_eq!(fourier_interpolate(&m, 1).unwrap(), m);
        assert!(fourier_interpolate(&m, 0).is_err());
    }

    #[test]
    fn interpolation_preserves_mean() {
        let m = map((0..48).map(|i| ((i * 13) % 7) as f64 - 1.0).collect(), 8, 6);
        let up = fourier_interpolate(&m, 3).unwrap();
        let mean_in = m.values.iter().sum::<f64>() / m.len() as f64;
        let mean_out = up.values.iter().sum::<f64>() / up.len() as f64;
        assert!((mean_in - mean_out).abs() < 1e-9);
    }

    #[test]
    fn merge_single_map_is_identity() {
        let m = map((0..12).map(|i| i as f64).collect(), 4, 3);
        let out = merge_maps(std::slice::from_ref(&m), &[[0.0, 0.0]]).unwrap();
        assert_eq!(out.values, m.values);
        assert_eq!(out.origin_nm, m.origin_nm);
        assert_eq!((out.width, out.height), (4, 3));
    }

    #[test]
    fn merge_identical_maps_doubles() {
        let m = map((0..12).map(|i| i as f64).collect(), 4, 3);
        let out = merge_maps(&[m.clone(), m.clone()], &[[0.0; 2]; 2]).unwrap();
        assert!(out.values.iter().zip(&m.values).all(|(a, b)| *a == 2.0 * b));
    }

    #[test]
    fn merge_shifts_by_anchor() {
        let a = map((0..12).map(|i| i as f64).collect(), 4, 3);
        let b = map(vec![100.0; 12], 4, 3);
        let out = merge_maps(&[a.clone(), b], &[[0.0; 2], [40.0, 0.0]]).unwrap();
        assert_eq!((out.width, out.height), (3, 3));
        assert_eq!(out.origin_nm, [40.0, 0.0]);
        assert_eq!(out.get(0, 0), a.get(1, 0) + 100.0);
    }

    #[test]
    fn merge_rejects_mismatched_grids() {
        let a = map(vec![0.0; 12], 4, 3);
        let mut b = a.clone();
        b.pitch_nm = 20.0;
        assert!(merge_maps(&[a.clone(), b], &[[0.0; 2]; 2]).is_err());
        let c = a.clone();
        assert!(merge_maps(&[a, c], &[[0.0; 2], [13.0, 0.0]]).is_err());
    }

    #[test]
    fn resample_picks_lattice_sites() {
        let m = CorrelationMap {
            pitch_nm: 10.0,
            origin_nm: [10.0, 0.0],
            ..map((0..60).map(|i| i as f64).collect(), 10, 6)
        };
        let r = resample_to_lattice(&m, [0.0, 0.0], 20.0).unwrap();
        assert_eq!(r.origin_nm, [20.0, 0.0]);
        assert_eq!(r.width, 5);
        assert_eq!(r.height, 3);
        assert_eq!(r.get(0, 0), m.get(1, 0));
        assert_eq!(r.get(1, 1), m.get(3, 2));
    }
}
