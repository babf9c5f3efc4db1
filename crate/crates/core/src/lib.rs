//! Embedded zerotree coding of hexagonally sampled grayscale images.

pub mod coder;
pub mod error;
pub mod formats;
pub mod grid;
pub mod lattice;
pub mod metrics;
pub mod pipeline;
pub mod resample;
pub mod sot;
pub mod wavelet;

pub use error::{Error, Result};
pub use grid::Grid;
pub use lattice::IndexMap;
