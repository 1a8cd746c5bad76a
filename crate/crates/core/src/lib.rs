//! Near-field downlink channel estimation that combines a virtual object map
//! of the static environment with monostatic sensing of dynamic targets.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod scene;
pub mod sensing;
pub mod vom;

pub use error::{Error, Result};
pub use geometry::{make_ula, ArrayGeometry, Point2D};
