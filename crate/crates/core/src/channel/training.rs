use serde::Serialize;

use super::{ChannelSet, NetworkConfig, TrainingConfig};
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, C64};
use crate::rng::{complex_gaussian, stream_rng, STREAM_ESTIMATION};

/// Output of pilot-based MMSE channel estimation.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub estimates: ChannelSet,
    /// Per-coefficient MMSE `N0 / (P_tau L + N0)`.
    pub error_variance: f64,
    /// Pilot observations per coefficient.
    pub observations: usize,
}

/// Simulate orthogonal pilot training and per-coefficient MMSE estimation.
///
/// Each source owns `L = floor(alpha T / K)` pilot slots. In each slot the
/// destination observes `y_t = sqrt(P_tau) h x_t + n_t` with `x_t = 1` and
/// `n_t ~ CN(0, N0)`, and forms `h_hat = sqrt(P_tau) sum(y_t) / (P_tau L + N0)`.
pub fn estimate_channels(
    truth: &ChannelSet,
    train: &TrainingConfig,
    noise_power: f64,
    pilot_power: f64,
    seed: u64,
) -> Result<ChannelEstimate> {
    let per_source = train.pilots_per_source(truth.k_users());
    if !(per_source >= 1.0) {
        return Err(Error::InfeasibleTraining {
            pilots_per_source: per_source,
        });
    }
    if !(noise_power >= 0.0) || !(pilot_power >= 0.0) {
        return Err(Error::Contract(
            "noise and pilot power must be nonnegative".into(),
        ));
    }
    let l = per_source.floor() as usize;
    let denom = pilot_power * l as f64 + noise_power;
    let error_variance = if denom > 0.0 { noise_power / denom } else { 1.0 };
    let amp = pilot_power.sqrt();
    let noise_std = noise_power.sqrt();
    let mut rng = stream_rng(seed, STREAM_ESTIMATION);

    let m = truth.m_antennas();
    let estimates = ChannelSet::from_fn(
        truth.k_users(),
        m,
        truth.subcarriers(),
        truth.seed(),
        |s, dst, src| {
            let h = truth.h(dst, src, s);
            ComplexMatrix::from_fn(m, m, |r, c| {
                let mut acc = C64::new(0.0, 0.0);
                for _ in 0..l {
                    acc += h[(r, c)] * amp + complex_gaussian(&mut rng) * noise_std;
                }
                if denom > 0.0 {
                    acc * amp / denom
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        },
    )?;
    Ok(ChannelEstimate {
        estimates,
        error_variance,
        observations: l,
    })
}

/// Data/pilot power allocation that maximizes the achievable rate under
/// noisy-CSI interference alignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerSplit {
    pub beta: f64,
    pub p_data: f64,
    pub p_pilot: f64,
}

fn check_sharing_factor(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DegenerateSharingFactor { alpha });
    }
    Ok(())
}

/// Exact optimal split:
/// `beta = 1/(1-a) * 1/(1 + sqrt((1 + K P/(1-a)) / (1 + P T/N0)))`,
/// `P_d = beta P`, `P_tau = K (1 - (1-a) beta) / a * P`.
pub fn optimal_power_split(train: &TrainingConfig, cfg: &NetworkConfig) -> Result<PowerSplit> {
    let a = train.sharing_factor;
    check_sharing_factor(a)?;
    let k = cfg.k_users as f64;
    let p = train.avg_power;
    let t = train.coherence_time;
    let n0 = cfg.noise_power;
    let ratio = (1.0 + k * p / (1.0 - a)) / (1.0 + p * t / n0);
    let beta = 1.0 / (1.0 - a) / (1.0 + ratio.sqrt());
    Ok(PowerSplit {
        beta,
        p_data: beta * p,
        p_pilot: k * ((1.0 - (1.0 - a) * beta) / a) * p,
    })
}

/// High-power approximation `beta ~ (1/(1-a)) / (1 + sqrt(K N0 / (T (1-a))))`.
pub fn approx_power_split(train: &TrainingConfig, cfg: &NetworkConfig) -> f64 {
    let a = train.sharing_factor;
    let k = cfg.k_users as f64;
    let t = train.coherence_time;
    (1.0 / (1.0 - a)) / (1.0 + (k * cfg.noise_power / (t * (1.0 - a))).sqrt())
}

/// Sum-DoF achievable with analog feedback and the matching number of active users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DofLimits {
    pub d_sum: f64,
    pub k_opt: usize,
}

/// `d_sum = min{K (1 - K/T) / 2, T/8}` and `K_opt = min{K, floor(T/2)}`.
///
/// `K` is used as given; substituting `K_opt` is left to the caller.
pub fn dof_limits(k_users: usize, coherence_time: usize) -> Result<DofLimits> {
    if coherence_time < 2 {
        return Err(Error::Contract(format!(
            "coherence time must be at least 2, got {coherence_time}"
        )));
    }
    let k = k_users as f64;
    let t = coherence_time as f64;
    Ok(DofLimits {
        d_sum: (k * (1.0 - k / t) / 2.0).min(t / 8.0),
        k_opt: k_users.min(coherence_time / 2),
    })
}
