//! Simulation of antibunching emitters imaged onto a photon-counting camera,
//! and reconstruction of superresolved images from intensity correlations.
//!
//! The pipeline runs `scene` → `optics` → `camera` → `correlator` → `analysis`.
//! Every random draw comes from a stream keyed by the run seed and the frame
//! index, so results do not depend on thread count.

pub mod analysis;
pub mod camera;
pub mod config;
pub mod correlator;
pub mod error;
pub mod io;
pub mod optics;
pub mod par;
pub mod rng;
pub mod scene;

pub use error::{Error, Result};
