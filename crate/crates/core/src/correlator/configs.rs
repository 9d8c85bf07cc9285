//! Pixel configurations whose same-frame joint cumulants form the spatial
//! antibunching maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two pixels `base` and `base + offset`; the result is deposited at their
/// midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairConfig {
    pub offset: [i32; 2],
}

/// Three pixels `base + offsets[i]`; the result is deposited at their
/// centroid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TripleConfig {
    pub offsets: [[i32; 2]; 3],
}

impl PairConfig {
    pub fn new(dx: i32, dy: i32) -> Result<Self> {
        if dx == 0 && dy == 0 {
            return Err(Error::InvalidArgument(
                "pair offset must join two distinct pixels".into(),
            ));
        }
        Ok(PairConfig { offset: [dx, dy] })
    }

    /// Nearest neighbours along both axes and both diagonals.
    pub fn defaults() -> Vec<PairConfig> {
        [[1, 0], [0, 1], [1, 1], [1, -1]]
            .into_iter()
            .map(|offset| PairConfig { offset })
            .collect()
    }

    pub fn members(&self) -> Vec<[i32; 2]> {
        vec![[0, 0], self.offset]
    }

    /// Deposit point in pixel units relative to the base pixel.
    pub fn anchor(&self) -> [f64; 2] {
        [self.offset[0] as f64 / 2.0, self.offset[1] as f64 / 2.0]
    }

    pub fn label(&self) -> String {
        format!("pair({},{})", self.offset[0], self.offset[1])
    }
}

impl TripleConfig {
    pub fn new(offsets: [[i32; 2]; 3]) -> Result<Self> {
        let [a, b, c] = offsets;
        if a == b || a == c || b == c {
            return Err(Error::InvalidArgument(
                "triple offsets must name three distinct pixels".into(),
            ));
        }
        Ok(TripleConfig { offsets })
    }

    /// The four L-shaped triples inside a 2x2 block.
    pub fn defaults() -> Vec<TripleConfig> {
        let (o, x, y, d) = ([0, 0], [1, 0], [0, 1], [1, 1]);
        [[o, x, y], [o, x, d], [o, y, d], [x, y, d]]
            .into_iter()
            .map(|offsets| TripleConfig { offsets })
            .collect()
    }

    pub fn members(&self) -> Vec<[i32; 2]> {
        self.offsets.to_vec()
    }

    pub fn anchor(&self) -> [f64; 2] {
        let sx: i32 = self.offsets.iter().map(|o| o[0]).sum();
        let sy: i32 = self.offsets.iter().map(|o| o[1]).sum();
        [sx as f64 / 3.0, sy as f64 / 3.0]
    }

    pub fn label(&self) -> String {
        let [a, b, c] = self.offsets;
        format!(
            "triple({},{};{},{};{},{})",
            a[0], a[1], b[0], b[1], c[0], c[1]
        )
    }
}

/// Smallest denominator `q` such that `anchor * q` is integral on both axes.
pub(crate) fn anchor_denominator(members: &[[i32; 2]]) -> usize {
    let n = members.len() as i64;
    let mut q = 1usize;
    for axis in 0..2 {
        let s: i64 = members.iter().map(|m| m[axis] as i64).sum();
        let g = gcd(s.unsigned_abs(), n as u64).max(1);
        q = lcm(q, (n as u64 / g) as usize);
    }
    q
}

pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a as u64, b as u64) as usize * b
}

/// Range of base positions along one axis for which every member of a
/// configuration lies on an axis of length `n`: `lo..=hi`, or `None`.
pub(crate) fn base_range(members: &[[i32; 2]], axis: usize, n: usize) -> Option<(i64, i64)> {
    let min = members.iter().map(|m| m[axis] as i64).min()?;
    let max = members.iter().map(|m| m[axis] as i64).max()?;
    let lo = -min;
    let hi = n as i64 - 1 - max;
    (lo <= hi).then_some((lo, hi))
}
