//! Simulator for a closed-loop, patch-addressable sensing pipeline.
//!
//! A synthetic scene is sensed through a per-frame activation mask, a
//! detection oracle and a Kalman/Hungarian tracker consume the sensed data,
//! and an anticipatory scheduler picks the patches to digitize next frame.
//! The metrics module scores tracking quality, saliency prediction,
//! bandwidth and energy-delay product.

pub mod detector;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod image;
pub mod metrics;
pub mod rng;
pub mod scene;
pub mod scheduler;
pub mod sensor;
pub mod tracker;

pub use error::{Error, Result};
pub use geometry::BBox;
