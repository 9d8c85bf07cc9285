mod common;

use antibunch::camera::{FrameStack, StackMeta};
use antibunch::correlator::{
    fourier_interpolate, temporal_g2, temporal_g3, MomentAccumulator, MomentPlan, PairConfig, Roi,
    TripleConfig,
};
use antibunch::io::{decode_stack, encode_stack};
use antibunch::optics::PixelGrid;
use proptest::prelude::*;

const W: usize = 16;
const H: usize = 5;

fn stack_from(bytes: Vec<u8>) -> FrameStack {
    let meta = StackMeta {
        seed: 1,
        pulse_rate_hz: 1e6,
        digest: [3; 32],
    };
    FrameStack::from_packed(PixelGrid::new(W, H, 80.0), meta, bytes).unwrap()
}

/// Random sparse frames: each byte keeps only bits that survive a mask.
fn frames(min_frames: usize, max_frames: usize) -> impl Strategy<Value = FrameStack> {
    let fb = W / 8 * H;
    (min_frames..=max_frames)
        .prop_flat_map(move |n| prop::collection::vec((any::<u8>(), any::<u8>()), n * fb))
        .prop_map(|v| stack_from(v.into_iter().map(|(a, b)| a & b & 0x55).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn accumulation_is_independent_of_partition(s in frames(1, 40), cut in 0.0f64..1.0) {
        let plan = MomentPlan::new(s.layout(), &PairConfig::defaults(), &TripleConfig::defaults());
        let n = s.n_frames();
        let k = ((n as f64) * cut) as usize;
        let whole = MomentAccumulator::from_stack(&s, plan.clone());
        let a = MomentAccumulator::from_stack(&s.slice(0..k), plan.clone());
        let b = MomentAccumulator::from_stack(&s.slice(k..n), plan);
        prop_assert_eq!(a.merge(b), whole);
    }

    #[test]
    fn g2_is_even_in_lag(s in frames(6, 30), lag in 1usize..5) {
        let g = temporal_g2(&s, &Roi::rect(0, 0, W, H), lag).unwrap();
        for t in 1..=lag as i64 {
            prop_assert_eq!(g.at(t), g.at(-t));
        }
    }

    #[test]
    fn g3_is_symmetric_under_lag_swap(s in frames(5, 25)) {
        let g = temporal_g3(&s, &Roi::rect(0, 0, W, H), 2).unwrap();
        for t1 in -2..=2i64 {
            for t2 in -2..=2i64 {
                prop_assert_eq!(g.at(t1, t2), g.at(t2, t1));
            }
        }
    }

    #[test]
    fn stack_codec_round_trips(s in frames(1, 20)) {
        let mut buf = Vec::new();
        encode_stack(&s, &mut buf).unwrap();
        let back = decode_stack(buf.as_slice(), Some(s.grid)).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn interpolation_preserves_mean_and_sites(
        w in 2usize..9,
        h in 2usize..9,
        factor in 1usize..4,
        seed in any::<u64>(),
    ) {
        let map = common::analytic_map(2, w, h, 80.0, |x, y| {
            let k = (x * 7.0 + y * 13.0 + seed as f64 % 1000.0) * 0.0137;
            k.sin() + 0.3 * (3.1 * k).cos()
        });
        let up = fourier_interpolate(&map, factor).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        prop_assert!((mean(&up.values) - mean(&map.values)).abs() < 1e-9);
        for y in 0..h {
            for x in 0..w {
                let got = up.values[y * factor * up.width + x * factor];
                prop_assert!((got - map.values[y * w + x]).abs() < 1e-9);
            }
        }
    }
}
