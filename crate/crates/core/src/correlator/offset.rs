//! Estimate of the spurious common-mode covariance factor from pixel pairs
//! too far apart to share optical signal.

use crate::camera::FrameStack;
use crate::error::{Error, Result};

use super::configs::PairConfig;
use super::moments::{MomentAccumulator, MomentPlan};

pub const DEFAULT_MIN_SEPARATION: usize = 10;
const MIN_PAIRS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetEstimate {
    /// Mean of `cov(n_i, n_k) / (<n_i> <n_k>)` over the sampled pairs.
    pub value: f64,
    /// Standard error of that mean, treating pairs as independent.
    pub stderr: f64,
    pub pairs: usize,
}

fn distant_configs(sep: usize) -> Vec<PairConfig> {
    let s = sep as i32;
    vec![PairConfig { offset: [s, 0] }, PairConfig { offset: [0, s] }]
}

/// Moment plan covering the distant pairs used by the estimator, so the
/// estimate can be folded into a single pass with other accumulators.
pub fn offset_plan(layout: crate::camera::FrameLayout, min_separation: usize) -> MomentPlan {
    MomentPlan::new(layout, &distant_configs(min_separation.max(1)), &[])
}

/// Samples all pixel pairs separated by exactly `min_separation` pixels
/// along either axis. Pixels that never fired are excluded.
pub fn readout_offset_estimate(
    stack: &FrameStack,
    min_separation: usize,
) -> Result<OffsetEstimate> {
    let plan = offset_plan(stack.layout(), min_separation);
    let acc = MomentAccumulator::from_stack(stack, plan);
    offset_from_moments(&acc, min_separation)
}

pub fn offset_from_moments(
    acc: &MomentAccumulator,
    min_separation: usize,
) -> Result<OffsetEstimate> {
    if min_separation == 0 {
        return Err(Error::InvalidArgument("min_separation must be >= 1".into()));
    }
    let mut ratios = Vec::new();
    for cfg in distant_configs(min_separation) {
        let Some(k) = acc.plan.pair_index(&cfg) else {
            continue;
        };
        for i in 0..acc.plan.pairs[k].len() {
            let m = acc.pair_moments(k, i);
            let prod = m[1] * m[2];
            if prod > 0.0 {
                ratios.push((m[3] - prod) / prod);
            }
        }
    }
    if ratios.len() < MIN_PAIRS {
        return Err(Error::Statistical(format!(
            "only {} usable pixel pairs at separation {min_separation}; need {MIN_PAIRS}",
            ratios.len()
        )));
    }
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(OffsetEstimate {
        value: mean,
        stderr: (var / n).sqrt(),
        pairs: ratios.len(),
    })
}
