//! Temporal intensity correlations over a pixel region of interest, summed
//! over distinct pixels:
//!
//! ```text
//! g2(t)      = sum_{i != k}       < n_i(s) n_k(s + t) >
//! g3(t1, t2) = sum_{i, k, m dist} < n_i(s) n_k(s + t1) n_m(s + t2) >
//! ```
//!
//! Distinct-pixel sums are obtained from popcounts of per-frame ROI bitsets
//! by inclusion-exclusion, and accumulated as exact integers.

use crate::camera::FrameStack;
use crate::error::{Error, Result};
use crate::par;

/// Pixel set used by the temporal estimators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roi {
    pub pixels: Vec<(usize, usize)>,
}

impl Roi {
    pub fn new(pixels: Vec<(usize, usize)>) -> Self {
        Roi { pixels }
    }

    pub fn rect(x0: usize, y0: usize, width: usize, height: usize) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in y0..y0 + height {
            for x in x0..x0 + width {
                pixels.push((x, y));
            }
        }
        Roi { pixels }
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// Per-frame ROI bitsets and popcounts.
struct RoiTrace {
    words: usize,
    bits: Vec<u64>,
    pop: Vec<i64>,
}

impl RoiTrace {
    fn new(stack: &FrameStack, roi: &Roi) -> Result<Self> {
        let (w, h) = (stack.grid.width, stack.grid.height);
        if let Some(&(x, y)) = roi.pixels.iter().find(|&&(x, y)| x >= w || y >= h) {
            return Err(Error::InvalidArgument(format!(
                "ROI pixel ({x}, {y}) lies outside the {w}x{h} grid"
            )));
        }
        let mut sorted = roi.pixels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != roi.len() {
            return Err(Error::InvalidArgument("ROI pixels must be distinct".into()));
        }
        let words = roi.len().div_ceil(64);
        let n = stack.n_frames();
        let layout = stack.layout();
        let mut bits = vec![0u64; words * n];
        par::for_each_chunk_mut(&mut bits, words * 4096, |chunk, out| {
            for (k, row) in out.chunks_exact_mut(words).enumerate() {
                let frame = stack.frame(chunk * 4096 + k);
                for (r, &(x, y)) in roi.pixels.iter().enumerate() {
                    if layout.get(frame, x, y) {
                        row[r / 64] |= 1 << (r % 64);
                    }
                }
            }
        });
        let pop = bits
            .chunks_exact(words)
            .map(|r| r.iter().map(|w| w.count_ones() as i64).sum())
            .collect();
        Ok(RoiTrace { words, bits, pop })
    }

    #[inline]
    fn row(&self, t: usize) -> &[u64] {
        &self.bits[t * self.words..(t + 1) * self.words]
    }

    #[inline]
    fn and2(&self, a: usize, b: usize) -> i64 {
        self.row(a)
            .iter()
            .zip(self.row(b))
            .map(|(x, y)| (x & y).count_ones() as i64)
            .sum()
    }

    #[inline]
    fn and3(&self, a: usize, b: usize, c: usize) -> (i64, i64, i64, i64) {
        let (ra, rb, rc) = (self.row(a), self.row(b), self.row(c));
        let mut out = (0, 0, 0, 0);
        for i in 0..self.words {
            let (x, y, z) = (ra[i], rb[i], rc[i]);
            out.0 += (x & y).count_ones() as i64;
            out.1 += (x & z).count_ones() as i64;
            out.2 += (y & z).count_ones() as i64;
            out.3 += (x & y & z).count_ones() as i64;
        }
        out
    }
}

/// Point estimate with a standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// `|value - target| <= k * stderr` (exact equality when `stderr == 0`).
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}

/// Estimators whose partial sums over disjoint frame blocks can be combined.
pub trait Combine: Sized {
    fn combine(parts: &[&Self]) -> Self;
}

/// An estimator computed separately on contiguous frame blocks.
#[derive(Debug, Clone)]
pub struct Blocked<T> {
    pub blocks: Vec<T>,
}

impl<T: Combine> Blocked<T> {
    pub fn combined(&self) -> T {
        T::combine(&self.blocks.iter().collect::<Vec<_>>())
    }

    /// Delete-one-block jackknife of a statistic of the estimator.
    pub fn jackknife(&self, stat: impl Fn(&T) -> f64) -> Estimate {
        let b = self.blocks.len();
        let value = stat(&self.combined());
        if b < 2 {
            return Estimate {
                value,
                stderr: f64::NAN,
            };
        }
        let leave_out: Vec<f64> = (0..b)
            .map(|i| {
                let rest: Vec<&T> = self
                    .blocks
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, t)| t)
                    .collect();
                stat(&T::combine(&rest))
            })
            .collect();
        let mean = leave_out.iter().sum::<f64>() / b as f64;
        let ss: f64 = leave_out.iter().map(|v| (v - mean).powi(2)).sum();
        Estimate {
            value,
            stderr: ((b as f64 - 1.0) / b as f64 * ss).sqrt(),
        }
    }
}

/// Second-order temporal correlation for lags `-max_lag..=max_lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalG2 {
    pub max_lag: usize,
    pub roi: Roi,
    /// Distinct-pixel coincidence sums per lag, index `lag + max_lag`.
    pub sums: Vec<i64>,
    /// Number of frame pairs entering each lag.
    pub terms: Vec<u64>,
    pub values: Vec<f64>,
}

impl TemporalG2 {
    fn from_sums(max_lag: usize, roi: Roi, sums: Vec<i64>, terms: Vec<u64>) -> Self {
        let values = sums
            .iter()
            .zip(&terms)
            .map(|(&s, &n)| if n > 0 { s as f64 / n as f64 } else { f64::NAN })
            .collect();
        TemporalG2 {
            max_lag,
            roi,
            sums,
            terms,
            values,
        }
    }

    pub fn at(&self, lag: i64) -> f64 {
        self.values[(lag + self.max_lag as i64) as usize]
    }

    pub fn zero_lag(&self) -> f64 {
        self.at(0)
    }

    /// Mean over the outer half of the lag range (never including zero),
    /// where correlations have decayed.
    pub fn plateau(&self) -> f64 {
        let l = self.max_lag as i64;
        let start = ((l + 1) / 2).max(1);
        let lags: Vec<i64> = (start..=l).flat_map(|t| [-t, t]).collect();
        lags.iter().map(|&t| self.at(t)).sum::<f64>() / lags.len() as f64
    }

    /// `g2(0) / plateau`.
    pub fn dip_ratio(&self) -> f64 {
        self.zero_lag() / self.plateau()
    }
}

impl Combine for TemporalG2 {
    fn combine(parts: &[&Self]) -> Self {
        let first = parts[0];
        let mut sums = vec![0; first.sums.len()];
        let mut terms = vec![0; first.terms.len()];
        for p in parts {
            sums.iter_mut().zip(&p.sums).for_each(|(a, b)| *a += b);
            terms.iter_mut().zip(&p.terms).for_each(|(a, b)| *a += b);
        }
        TemporalG2::from_sums(first.max_lag, first.roi.clone(), sums, terms)
    }
}

/// Third-order temporal correlation on the lag grid `[-max_lag, max_lag]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalG3 {
    pub max_lag: usize,
    pub roi: Roi,
    /// Row-major over `(t1 + max_lag, t2 + max_lag)`.
    pub sums: Vec<i64>,
    pub terms: Vec<u64>,
    pub values: Vec<f64>,
}

impl TemporalG3 {
    fn side(&self) -> usize {
        2 * self.max_lag + 1
    }

    fn from_sums(max_lag: usize, roi: Roi, sums: Vec<i64>, terms: Vec<u64>) -> Self {
        let values = sums
            .iter()
            .zip(&terms)
            .map(|(&s, &n)| if n > 0 { s as f64 / n as f64 } else { f64::NAN })
            .collect();
        TemporalG3 {
            max_lag,
            roi,
            sums,
            terms,
            values,
        }
    }

    pub fn at(&self, t1: i64, t2: i64) -> f64 {
        let l = self.max_lag as i64;
        self.values[((t1 + l) * self.side() as i64 + t2 + l) as usize]
    }

    fn lags(&self) -> impl Iterator<Item = (i64, i64)> {
        let l = self.max_lag as i64;
        (-l..=l).flat_map(move |a| (-l..=l).map(move |b| (a, b)))
    }

    fn mean_where(&self, keep: impl Fn(i64, i64) -> bool) -> f64 {
        let (s, n) = self
            .lags()
            .filter(|&(a, b)| keep(a, b))
            .fold((0.0, 0usize), |(s, n), (a, b)| (s + self.at(a, b), n + 1));
        s / n as f64
    }

    /// Triple zero-lag point `g3(0, 0)`.
    pub fn center(&self) -> f64 {
        self.at(0, 0)
    }

    /// Mean over the lines `t1 = 0`, `t2 = 0`, `t1 = t2`, excluding the center.
    pub fn ridge(&self) -> f64 {
        self.mean_where(|a, b| (a == 0 || b == 0 || a == b) && !(a == 0 && b == 0))
    }

    /// Mean over all lags off the three lines.
    pub fn plateau(&self) -> f64 {
        self.mean_where(|a, b| a != 0 && b != 0 && a != b)
    }
}

impl Combine for TemporalG3 {
    fn combine(parts: &[&Self]) -> Self {
        let first = parts[0];
        let mut sums = vec![0; first.sums.len()];
        let mut terms = vec![0; first.terms.len()];
        for p in parts {
            sums.iter_mut().zip(&p.sums).for_each(|(a, b)| *a += b);
            terms.iter_mut().zip(&p.terms).for_each(|(a, b)| *a += b);
        }
        TemporalG3::from_sums(first.max_lag, first.roi.clone(), sums, terms)
    }
}

fn check_lags(
    stack: &FrameStack,
    roi: &Roi,
    span: usize,
    min_roi: usize,
    blocks: usize,
) -> Result<()> {
    if roi.is_empty() {
        return Err(Error::InvalidArgument("ROI is empty".into()));
    }
    if roi.len() < min_roi {
        return Err(Error::InvalidArgument(format!(
            "ROI has {} pixels, at least {min_roi} are required",
            roi.len()
        )));
    }
    if blocks == 0 {
        return Err(Error::InvalidArgument("block count must be >= 1".into()));
    }
    let block_len = stack.n_frames() / blocks;
    if span >= block_len {
        return Err(Error::InvalidArgument(format!(
            "lags spanning {span} frames need more than the {block_len} frames per block"
        )));
    }
    Ok(())
}

fn block_bounds(n: usize, blocks: usize) -> Vec<(usize, usize)> {
    (0..blocks)
        .map(|b| (b * n / blocks, (b + 1) * n / blocks))
        .collect()
}

/// `g2` over the whole stack.
pub fn temporal_g2(stack: &FrameStack, roi: &Roi, max_lag: usize) -> Result<TemporalG2> {
    Ok(temporal_g2_blocks(stack, roi, max_lag, 1)?.blocks.remove(0))
}

/// `g2` computed independently on `n_blocks` contiguous blocks of frames.
pub fn temporal_g2_blocks(
    stack: &FrameStack,
    roi: &Roi,
    max_lag: usize,
    n_blocks: usize,
) -> Result<Blocked<TemporalG2>> {
    check_lags(stack, roi, max_lag, 1, n_blocks)?;
    let trace = RoiTrace::new(stack, roi)?;
    let bounds = block_bounds(stack.n_frames(), n_blocks);
    let lags = max_lag + 1;
    let cells = par::map_indexed(n_blocks * lags, |task| {
        let (s, e) = bounds[task / lags];
        let tau = task % lags;
        let mut sum = 0i64;
        for t in s..e - tau {
            sum += trace.pop[t] * trace.pop[t + tau] - trace.and2(t, t + tau);
        }
        (sum, (e - s - tau) as u64)
    });
    let side = 2 * max_lag + 1;
    let blocks = (0..n_blocks)
        .map(|b| {
            let mut sums = vec![0; side];
            let mut terms = vec![0; side];
            for tau in 0..lags {
                let (s, n) = cells[b * lags + tau];
                for idx in [max_lag + tau, max_lag - tau] {
                    sums[idx] = s;
                    terms[idx] = n;
                }
            }
            TemporalG2::from_sums(max_lag, roi.clone(), sums, terms)
        })
        .collect();
    Ok(Blocked { blocks })
}

/// `g3` over the whole stack.
pub fn temporal_g3(stack: &FrameStack, roi: &Roi, max_lag: usize) -> Result<TemporalG3> {
    Ok(temporal_g3_blocks(stack, roi, max_lag, 1)?.blocks.remove(0))
}

/// `g3` computed independently on `n_blocks` contiguous blocks of frames.
pub fn temporal_g3_blocks(
    stack: &FrameStack,
    roi: &Roi,
    max_lag: usize,
    n_blocks: usize,
) -> Result<Blocked<TemporalG3>> {
    // (-max_lag, max_lag) spans twice the lag.
    check_lags(stack, roi, 2 * max_lag, 3, n_blocks)?;
    let trace = RoiTrace::new(stack, roi)?;
    let bounds = block_bounds(stack.n_frames(), n_blocks);
    let l = max_lag as i64;
    // (t1, t2) with t1 <= t2; the swap is filled in by symmetry.
    let pairs: Vec<(i64, i64)> = (-l..=l)
        .flat_map(|a| (a..=l).map(move |b| (a, b)))
        .collect();
    let cells = par::map_indexed(n_blocks * pairs.len(), |task| {
        let (s, e) = bounds[task / pairs.len()];
        let (t1, t2) = pairs[task % pairs.len()];
        let lo = -(0.min(t1).min(t2));
        let hi = 0.max(t1).max(t2);
        let mut sum = 0i64;
        let start = s as i64 + lo;
        let end = e as i64 - hi;
        for t in start..end {
            let (a, b, c) = (t as usize, (t + t1) as usize, (t + t2) as usize);
            let (sa, sb, sc) = (trace.pop[a], trace.pop[b], trace.pop[c]);
            let (ab, ac, bc, abc) = trace.and3(a, b, c);
            sum += sa * sb * sc - sc * ab - sb * ac - sa * bc + 2 * abc;
        }
        (sum, (end - start).max(0) as u64)
    });
    let side = 2 * max_lag + 1;
    let blocks = (0..n_blocks)
        .map(|blk| {
            let mut sums = vec![0; side * side];
            let mut terms = vec![0; side * side];
            for (k, &(t1, t2)) in pairs.iter().enumerate() {
                let (s, n) = cells[blk * pairs.len() + k];
                let (i, j) = ((t1 + l) as usize, (t2 + l) as usize);
                for idx in [i * side + j, j * side + i] {
                    sums[idx] = s;
                    terms[idx] = n;
                }
            }
            TemporalG3::from_sums(max_lag, roi.clone(), sums, terms)
        })
        .collect();
    Ok(Blocked { blocks })
}
