//! Blind MIMO detection with low-resolution ADCs.

pub mod analysis;
pub mod channel;
pub mod design;
pub mod detect;
pub mod error;
pub mod framing;
pub mod harness;
pub mod labels;
pub mod rng;
pub mod stats;
pub mod training;

pub use error::{Error, Result};
