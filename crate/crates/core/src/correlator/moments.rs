//! Single-pass accumulation of same-frame joint moments.
//!
//! Counts are integers, so any partition of the frames across workers merges
//! to exactly the same accumulator.

use crate::camera::{FrameLayout, FrameStack};
use crate::par;

use super::configs::{base_range, PairConfig, TripleConfig};

/// Base-position domain of one configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigDomain {
    pub members: Vec<[i32; 2]>,
    pub x0: i64,
    pub y0: i64,
    pub width: usize,
    pub height: usize,
}

impl ConfigDomain {
    fn new(members: Vec<[i32; 2]>, grid_w: usize, grid_h: usize) -> Self {
        match (
            base_range(&members, 0, grid_w),
            base_range(&members, 1, grid_h),
        ) {
            (Some((x0, x1)), Some((y0, y1))) => ConfigDomain {
                members,
                x0,
                y0,
                width: (x1 - x0 + 1) as usize,
                height: (y1 - y0 + 1) as usize,
            },
            _ => ConfigDomain {
                members,
                x0: 0,
                y0: 0,
                width: 0,
                height: 0,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn index_of(&self, bx: i64, by: i64) -> Option<usize> {
        let u = bx - self.x0;
        let v = by - self.y0;
        (u >= 0 && v >= 0 && (u as usize) < self.width && (v as usize) < self.height)
            .then(|| v as usize * self.width + u as usize)
    }

    /// Base pixel of element `i`.
    pub fn base(&self, i: usize) -> (i64, i64) {
        (
            self.x0 + (i % self.width) as i64,
            self.y0 + (i / self.width) as i64,
        )
    }
}

fn canonical(d: [i32; 2]) -> [i32; 2] {
    if d[1] < 0 || (d[1] == 0 && d[0] < 0) {
        [-d[0], -d[1]]
    } else {
        d
    }
}

/// Which products to accumulate. Every pair inside a requested triple is
/// accumulated too, since the third-order cumulant needs it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentPlan {
    pub layout: FrameLayout,
    pair_offsets: Vec<[i32; 2]>,
    pub pairs: Vec<ConfigDomain>,
    pub triples: Vec<ConfigDomain>,
}

impl MomentPlan {
    pub fn new(layout: FrameLayout, pairs: &[PairConfig], triples: &[TripleConfig]) -> Self {
        let mut offsets: Vec<[i32; 2]> = Vec::new();
        let mut push = |d: [i32; 2]| {
            let d = canonical(d);
            if !offsets.contains(&d) {
                offsets.push(d);
            }
        };
        for p in pairs {
            push(p.offset);
        }
        for t in triples {
            let o = t.offsets;
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                push([o[b][0] - o[a][0], o[b][1] - o[a][1]]);
            }
        }
        let (w, h) = (layout.width, layout.height);
        MomentPlan {
            layout,
            pairs: offsets
                .iter()
                .map(|&d| ConfigDomain::new(vec![[0, 0], d], w, h))
                .collect(),
            pair_offsets: offsets,
            triples: triples
                .iter()
                .map(|t| ConfigDomain::new(t.members(), w, h))
                .collect(),
        }
    }

    /// Index of the accumulated pair joining pixels `p` and `q`, and the
    /// element within it.
    pub fn pair_slot(&self, p: (i64, i64), q: (i64, i64)) -> Option<(usize, usize)> {
        let d = [(q.0 - p.0) as i32, (q.1 - p.1) as i32];
        let c = canonical(d);
        let base = if c == d { p } else { q };
        let k = self.pair_offsets.iter().position(|&o| o == c)?;
        Some((k, self.pairs[k].index_of(base.0, base.1)?))
    }

    pub fn pair_index(&self, config: &PairConfig) -> Option<usize> {
        let c = canonical(config.offset);
        self.pair_offsets.iter().position(|&o| o == c)
    }
}

/// Frame count, per-pixel event counts, and per-configuration coincidence
/// counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentAccumulator {
    pub plan: MomentPlan,
    pub n_frames: u64,
    pub singles: Vec<u64>,
    pub pairs: Vec<Vec<u64>>,
    pub triples: Vec<Vec<u64>>,
    active: Vec<u32>,
}

impl MomentAccumulator {
    pub fn new(plan: MomentPlan) -> Self {
        let n = plan.layout.width * plan.layout.height;
        MomentAccumulator {
            singles: vec![0; n],
            pairs: plan.pairs.iter().map(|d| vec![0; d.len()]).collect(),
            triples: plan.triples.iter().map(|d| vec![0; d.len()]).collect(),
            n_frames: 0,
            plan,
            active: Vec::new(),
        }
    }

    /// Accumulates every frame of `stack`, in parallel where available.
    pub fn from_stack(stack: &FrameStack, plan: MomentPlan) -> Self {
        let ranges = par::ranges(stack.n_frames(), 4096);
        let parts = par::map_indexed(ranges.len(), |i| {
            let mut acc = MomentAccumulator::new(plan.clone());
            for t in ranges[i].clone() {
                acc.accumulate(stack.frame(t));
            }
            acc
        });
        parts
            .into_iter()
            .fold(MomentAccumulator::new(plan.clone()), |a, b| a.merge(b))
    }

    pub fn accumulate(&mut self, frame: &[u8]) {
        let layout = self.plan.layout;
        let (w, h) = (layout.width as i64, layout.height as i64);
        let on = |x: i64, y: i64| {
            x >= 0 && y >= 0 && x < w && y < h && layout.get(frame, x as usize, y as usize)
        };
        self.n_frames += 1;
        let mut active = std::mem::take(&mut self.active);
        layout.active_pixels(frame, &mut active);
        for &a in &active {
            self.singles[a as usize] += 1;
            let (x, y) = ((a as i64) % w, (a as i64) / w);
            for (k, dom) in self.plan.pairs.iter().enumerate() {
                let d = dom.members[1];
                if on(x + d[0] as i64, y + d[1] as i64) {
                    if let Some(i) = dom.index_of(x, y) {
                        self.pairs[k][i] += 1;
                    }
                }
            }
            for (k, dom) in self.plan.triples.iter().enumerate() {
                let m = &dom.members;
                let (bx, by) = (x - m[0][0] as i64, y - m[0][1] as i64);
                if let Some(i) = dom.index_of(bx, by) {
                    if on(bx + m[1][0] as i64, by + m[1][1] as i64)
                        && on(bx + m[2][0] as i64, by + m[2][1] as i64)
                    {
                        self.triples[k][i] += 1;
                    }
                }
            }
        }
        self.active = active;
    }

    pub fn merge(mut self, other: MomentAccumulator) -> MomentAccumulator {
        debug_assert_eq!(self.plan, other.plan);
        self.n_frames += other.n_frames;
        for (a, b) in self.singles.iter_mut().zip(&other.singles) {
            *a += b;
        }
        for (va, vb) in self.pairs.iter_mut().zip(&other.pairs) {
            for (a, b) in va.iter_mut().zip(vb) {
                *a += b;
            }
        }
        for (va, vb) in self.triples.iter_mut().zip(&other.triples) {
            for (a, b) in va.iter_mut().zip(vb) {
                *a += b;
            }
        }
        self
    }

    pub fn mean_single(&self, x: i64, y: i64) -> f64 {
        self.singles[(y as usize) * self.plan.layout.width + x as usize] as f64
            / self.n_frames as f64
    }

    /// Same-frame coincidence rate of two distinct pixels. Panics if the
    /// pair was not part of the plan.
    pub fn mean_pair(&self, p: (i64, i64), q: (i64, i64)) -> f64 {
        let (k, i) = self
            .plan
            .pair_slot(p, q)
            .expect("pair offset not accumulated");
        self.pairs[k][i] as f64 / self.n_frames as f64
    }

    /// Moment vector of the pair at element `i` of pair domain `k`, indexed
    /// by subset mask over the two pixels.
    pub fn pair_moments(&self, k: usize, i: usize) -> [f64; 8] {
        let dom = &self.plan.pairs[k];
        let (bx, by) = dom.base(i);
        let d = dom.members[1];
        let q = (bx + d[0] as i64, by + d[1] as i64);
        let mut m = [0.0; 8];
        m[0] = 1.0;
        m[1] = self.mean_single(bx, by);
        m[2] = self.mean_single(q.0, q.1);
        m[3] = self.pairs[k][i] as f64 / self.n_frames as f64;
        m
    }

    /// Moment vector of the triple at element `i` of triple domain `k`,
    /// indexed by subset mask over the three pixels.
    pub fn triple_moments(&self, k: usize, i: usize) -> [f64; 8] {
        let dom = &self.plan.triples[k];
        let (bx, by) = dom.base(i);
        let px: Vec<(i64, i64)> = dom
            .members
            .iter()
            .map(|o| (bx + o[0] as i64, by + o[1] as i64))
            .collect();
        let mut m = [0.0; 8];
        m[0] = 1.0;
        m[1] = self.mean_single(px[0].0, px[0].1);
        m[2] = self.mean_single(px[1].0, px[1].1);
        m[4] = self.mean_single(px[2].0, px[2].1);
        m[3] = self.mean_pair(px[0], px[1]);
        m[5] = self.mean_pair(px[0], px[2]);
        m[6] = self.mean_pair(px[1], px[2]);
        m[7] = self.triples[k][i] as f64 / self.n_frames as f64;
        m
    }
}

/// Pair cumulant `m_xy - (1 + offset) m_x m_y` and its gradient with respect
/// to the moment vector.
pub fn pair_cumulant(m: &[f64; 8], offset: f64) -> (f64, [f64; 8]) {
    let s = 1.0 + offset;
    let mut g = [0.0; 8];
    g[1] = -s * m[2];
    g[2] = -s * m[1];
    g[3] = 1.0;
    (m[3] - s * m[1] * m[2], g)
}

/// Coefficients `(c2, c3)` of the gain-corrected third cumulant
/// `m_xyz - c2 * sum m_x m_yz + 2 c3 m_x m_y m_z`. With a normal common-mode
/// gain of variance `offset`, `E[g^2] = 1 + offset` and `E[g^3] = 1 + 3 offset`.
pub fn triple_coefficients(offset: f64) -> (f64, f64) {
    let c3 = 1.0 + 3.0 * offset;
    (c3 / (1.0 + offset), c3)
}

/// Gain-corrected third joint cumulant and its gradient.
pub fn triple_cumulant(m: &[f64; 8], offset: f64) -> (f64, [f64; 8]) {
    let (c2, c3) = triple_coefficients(offset);
    let value =
        m[7] - c2 * (m[1] * m[6] + m[2] * m[5] + m[4] * m[3]) + 2.0 * c3 * m[1] * m[2] * m[4];
    let mut g = [0.0; 8];
    g[7] = 1.0;
    g[6] = -c2 * m[1];
    g[5] = -c2 * m[2];
    g[3] = -c2 * m[4];
    g[1] = -c2 * m[6] + 2.0 * c3 * m[2] * m[4];
    g[2] = -c2 * m[5] + 2.0 * c3 * m[1] * m[4];
    g[4] = -c2 * m[3] + 2.0 * c3 * m[1] * m[2];
    (value, g)
}

/// Delta-method variance of a smooth function of binary-variable moments
/// estimated from `n` frames.
///
/// The influence function `sum_S g_S (prod_{i in S} x_i - m_S)` is multilinear
/// in binary variables, so its square reduces (via `x^2 = x`) to another
/// multilinear polynomial whose expectation is a combination of the same
/// moments.
pub fn delta_variance(m: &[f64; 8], grad: &[f64; 8], n: f64) -> f64 {
    let mut c = [0.0; 8];
    c[0] = -(1..8).map(|s| grad[s] * m[s]).sum::<f64>();
    c[1..8].copy_from_slice(&grad[1..8]);
    let mut sq = [0.0; 8];
    for a in 0..8 {
        if c[a] == 0.0 {
            continue;
        }
        for b in 0..8 {
            sq[a | b] += c[a] * c[b];
        }
    }
    let e: f64 = (0..8).map(|s| sq[s] * m[s]).sum();
    (e / n).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_slot_is_symmetric() {
        let layout = FrameLayout::new(6, 5);
        let plan = MomentPlan::new(layout, &PairConfig::defaults(), &[]);
        let a = plan.pair_slot((2, 2), (3, 1)).unwrap();
        let b = plan.pair_slot((3, 1), (2, 2)).unwrap();
        assert_eq!(a, b);
        assert!(plan.pair_slot((0, 0), (5, 4)).is_none());
    }

    #[test]
    fn triples_pull_in_their_pairs() {
        let layout = FrameLayout::new(4, 4);
        let plan = MomentPlan::new(layout, &[], &TripleConfig::defaults());
        // All six pairs of a 2x2 block reduce to the four default offsets.
        assert_eq!(plan.pairs.len(), 4);
    }

    #[test]
    fn counts_match_brute_force() {
        let layout = FrameLayout::new(5, 4);
        let plan = MomentPlan::new(layout, &PairConfig::defaults(), &TripleConfig::defaults());
        let mut acc = MomentAccumulator::new(plan);
        let mut frames = Vec::new();
        let mut state = 12345u64;
        for _ in 0..50 {
            let mut f = vec![0u8; layout.frame_bytes()];
            for px in 0..20 {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                if state >> 62 == 0 {
                    layout.set(&mut f, px);
                }
            }
            acc.accumulate(&f);
            frames.push(f);
        }
        let on = |f: &Vec<u8>, x: i64, y: i64| layout.get(f, x as usize, y as usize);
        for (k, dom) in acc.plan.triples.iter().enumerate() {
            for i in 0..dom.len() {
                let (bx, by) = dom.base(i);
                let expected = frames
                    .iter()
                    .filter(|f| {
                        dom.members
                            .iter()
                            .all(|o| on(f, bx + o[0] as i64, by + o[1] as i64))
                    })
                    .count() as u64;
                assert_eq!(acc.triples[k][i], expected);
            }
        }
        for (k, dom) in acc.plan.pairs.iter().enumerate() {
            for i in 0..dom.len() {
                let (bx, by) = dom.base(i);
                let d = dom.members[1];
                let expected = frames
                    .iter()
                    .filter(|f| on(f, bx, by) && on(f, bx + d[0] as i64, by + d[1] as i64))
                    .count() as u64;
                assert_eq!(acc.pairs[k][i], expected);
            }
        }
    }

    #[test]
    fn delta_variance_of_independent_pair_covariance() {
        // Independent Bernoulli(a), Bernoulli(b): var of the covariance
        // estimator is a(1-a) b(1-b) / n to leading order.
        let (a, b) = (0.2, 0.35);
        let m = [1.0, a, b, a * b, 0.0, 0.0, 0.0, 0.0];
        let (_, g) = pair_cumulant(&m, 0.0);
        let v = delta_variance(&m, &g, 1000.0);
        let expected = a * (1.0 - a) * b * (1.0 - b) / 1000.0;
        assert!((v - expected).abs() < 1e-15, "{v} vs {expected}");
    }

    #[test]
    fn delta_variance_of_independent_triple_cumulant() {
        let (a, b, c) = (0.1f64, 0.3, 0.5);
        let m = [1.0, a, b, a * b, c, a * c, b * c, a * b * c];
        let (k, g) = triple_cumulant(&m, 0.0);
        assert!(k.abs() < 1e-15);
        let v = delta_variance(&m, &g, 1.0);
        let expected = a * (1.0 - a) * b * (1.0 - b) * c * (1.0 - c);
        assert!((v - expected).abs() < 1e-15, "{v} vs {expected}");
    }
}
