//! Block-fading MIMO interference channels, pilot-based estimation, and the
//! closed-form training/DoF helpers.

mod config;
mod set;
mod training;

pub use config::{NetworkConfig, TrainingConfig};
pub use set::{sample_channels, ChannelSet, Narrowband};
pub(crate) use set::random_matrix;
pub use training::{
    approx_power_split, dof_limits, estimate_channels, optimal_power_split, ChannelEstimate,
    DofLimits, PowerSplit,
};
