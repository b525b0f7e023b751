//! Interference-alignment simulation toolkit for K-user MIMO interference
//! networks: channel training, iterative alignment, joint beamforming and
//! power control, compressed CSI feedback, and a scheme comparison harness.

pub mod alignment;
pub mod channel;
pub mod csifb;
pub mod error;
pub mod experiment;
pub mod numerics;
pub mod powerctl;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
