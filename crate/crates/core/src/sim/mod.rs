//! Scheme-level evaluation: frame layout, MCS probing, BER model, the
//! compared transmission schemes, and metric aggregation.

mod ber;
mod frame;
mod mcs;
mod metrics;
mod schemes;

pub use ber::ber_for_sinr;
pub use frame::{alpha_scale, build_frame, FrameLayout, ALPHA_STEP_DB, PAYLOAD_SYMBOLS};
pub use mcs::{probe_throughput, McsEntry, McsTable};
pub use metrics::{
    compute_metrics, empirical_cdf, power_saving_gain_db, Metrics, SchemeSummary, ThroughputPoint,
};
pub use schemes::{
    simulate_scheme, stream_sinrs, subcarrier_seed, ConvergenceTrace, FeedbackPath, Scheme,
    SchemeKnobs, SchemeResult, UserResult,
};
