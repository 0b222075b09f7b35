//! Representational geometry of labeled point clouds.
//!
//! Reads layerwise embedding tensors (EMBX files), groups points into class
//! manifolds under a label scheme, and measures manifold capacity,
//! participation-ratio dimension, radius and correlation structure.

pub mod capacity;
pub mod embx;
pub mod error;
pub mod manifold;
pub mod pipeline;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
