//! Temporal autocorrelations and spatial antibunching maps.

mod configs;
mod interp;
mod map;
mod moments;
mod offset;
mod temporal;

pub use configs::{PairConfig, TripleConfig};
pub use interp::{interpolate_1d, interpolate_2d, interpolate_variance_2d, weight_matrix};
pub use map::{
    fourier_interpolate, mean_image, mean_image_map, merge_maps, second_order_from_moments,
    second_order_map, second_order_map_with, third_order_from_moments, third_order_map,
    third_order_map_with, CorrelationMap, MapOptions,
};
pub use moments::{
    delta_variance, pair_cumulant, triple_coefficients, triple_cumulant, ConfigDomain,
    MomentAccumulator, MomentPlan,
};
pub use offset::{
    offset_from_moments, offset_plan, readout_offset_estimate, OffsetEstimate,
    DEFAULT_MIN_SEPARATION,
};
pub use temporal::{
    temporal_g2, temporal_g2_blocks, temporal_g3, temporal_g3_blocks, Blocked, Combine, Estimate,
    Roi, TemporalG2, TemporalG3,
};
