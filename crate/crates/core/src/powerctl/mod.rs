//! Single-stream SINR, the standard-interference-function power update, and
//! the joint transceiver design + power control loop.

use serde::{Deserialize, Serialize};

use crate::alignment::{
    beamformer_change, interference_covariance, update_receive_filters, AlignmentVariant,
    TransceiverState,
};
use crate::channel::{Narrowband, NetworkConfig};
use crate::error::{config_err, Error, Result};
use crate::numerics::inner;

/// Targets and limits of the power-controlled scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerControlConfig {
    /// Per-user target rate R_tar in bits/symbol; the SINR target is `2^R - 1`.
    pub target_rates: Vec<f64>,
    pub p_max: f64,
    /// Reverse-direction probe power P_F; `None` means `p_max`.
    #[serde(default)]
    pub p_forward_probe: Option<f64>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_max_iters() -> usize {
    5000
}

fn default_tol() -> f64 {
    1e-6
}

impl PowerControlConfig {
    /// Common SINR target (in dB) for all `k_users`.
    pub fn with_target_sinr_db(k_users: usize, sinr_db: f64, p_max: f64) -> Self {
        let gamma = 10f64.powf(sinr_db / 10.0);
        PowerControlConfig {
            target_rates: vec![(1.0 + gamma).log2(); k_users],
            p_max,
            p_forward_probe: None,
            max_iters: default_max_iters(),
            tol: default_tol(),
        }
    }

    pub fn gamma(&self) -> Vec<f64> {
        self.target_rates.iter().map(|r| 2f64.powf(*r) - 1.0).collect()
    }

    pub fn probe_power(&self) -> f64 {
        self.p_forward_probe.unwrap_or(self.p_max)
    }

    pub fn validate(&self, prefix: &str, k_users: usize) -> Result<()> {
        let f = |name: &str| format!("{prefix}{name}");
        if self.target_rates.len() != k_users {
            return Err(config_err(
                &f("target_rates"),
                format!("expected {k_users} entries, got {}", self.target_rates.len()),
            ));
        }
        if self.target_rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(config_err(&f("target_rates"), "rates must be positive"));
        }
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return Err(config_err(&f("p_max"), "must be positive and finite"));
        }
        if let Some(pf) = self.p_forward_probe {
            if !(pf > 0.0 && pf.is_finite()) {
                return Err(config_err(&f("p_forward_probe"), "must be positive and finite"));
            }
        }
        if self.max_iters < 1 {
            return Err(config_err(&f("max_iters"), "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(config_err(&f("tol"), "must be positive"));
        }
        Ok(())
    }
}

/// `|u_k^* H_kk v_k|^2` for the first stream.
pub fn effective_gain(state: &TransceiverState, ch: &Narrowband, k: usize) -> f64 {
    let hv = ch.h(k, k).mul_vec(&state.v[k].col(0));
    inner(&state.u[k].col(0), &hv).norm_sqr()
}

/// Interference power after the receive filter of user `k` (first stream).
fn filtered_interference(state: &TransceiverState, ch: &Narrowband, k: usize, cfg: &NetworkConfig) -> f64 {
    let q = interference_covariance(state, ch, k, cfg);
    let u = state.u[k].col(0);
    inner(&u, &q.mul_vec(&u)).re.max(0.0)
}

fn noise_after_filter(state: &TransceiverState, k: usize, cfg: &NetworkConfig) -> f64 {
    cfg.noise_power * crate::numerics::norm(&state.u[k].col(0)).powi(2)
}

/// `SINR_k = P_k |u^* H_kk v|^2 / (IF_k + N0)`; zero when the desired term vanishes.
pub fn compute_sinr(state: &TransceiverState, ch: &Narrowband, k: usize, cfg: &NetworkConfig) -> f64 {
    let g = effective_gain(state, ch, k);
    if g == 0.0 {
        return 0.0;
    }
    state.p[k] * g / (filtered_interference(state, ch, k, cfg) + noise_after_filter(state, k, cfg))
}

/// Minimum power meeting `gamma`: `gamma (IF_k + N0) / |u^* H_kk v|^2`.
pub fn required_power(
    state: &TransceiverState,
    ch: &Narrowband,
    k: usize,
    gamma: f64,
    cfg: &NetworkConfig,
) -> Result<f64> {
    let g = effective_gain(state, ch, k);
    if g == 0.0 {
        return Err(Error::InfeasibleLink { user: k });
    }
    Ok(gamma * (filtered_interference(state, ch, k, cfg) + noise_after_filter(state, k, cfg)) / g)
}

/// The uncapped power map `P -> beta(P)` at frozen filters.
pub fn interference_function(
    state: &TransceiverState,
    ch: &Narrowband,
    cfg: &NetworkConfig,
    gamma: &[f64],
    powers: &[f64],
) -> Result<Vec<f64>> {
    let probe = TransceiverState {
        p: powers.to_vec(),
        ..state.clone()
    };
    (0..ch.k_users())
        .map(|k| required_power(&probe, ch, k, gamma[k], cfg))
        .collect()
}

/// Iterate `P_k <- min{beta_k(P), p_max}` with frozen filters, starting from
/// `state.p`. Returns the power vector after every iteration.
pub fn fixed_power_iteration(
    state: &TransceiverState,
    ch: &Narrowband,
    cfg: &NetworkConfig,
    gamma: &[f64],
    p_max: f64,
    iters: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut p = state.p.clone();
    let mut trace = Vec::with_capacity(iters);
    for _ in 0..iters {
        p = interference_function(state, ch, cfg, gamma, &p)?
            .into_iter()
            .map(|b| b.min(p_max))
            .collect();
        trace.push(p.clone());
    }
    Ok(trace)
}

/// One row of the joint-loop trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub user: usize,
    pub power_dbm: f64,
    pub sinr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointTrace {
    pub rows: Vec<TraceRow>,
    pub iterations: usize,
    /// Powers and beamformers stopped changing (relative change below `tol`).
    pub stable: bool,
    /// Every user reaches its SINR target within 0.1 dB.
    pub targets_met: bool,
    /// `stable && targets_met`.
    pub converged: bool,
    pub final_sinr_db: Vec<f64>,
}

pub(crate) fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Tolerance (dB) used to call a target met.
pub const TARGET_TOLERANCE_DB: f64 = 0.1;

/// Joint Max-SINR transceiver design and power control.
///
/// Per iteration: MMSE receive filters at fixed `v, P`; powers set to
/// `min{beta_k, p_max}`; reverse sweep with `V^r = U`, all reverse powers at
/// the probe power; `V <- U^r`. Starts from random beamformers and `P = p_max`.
pub fn run_joint_ia_pc(
    ch: &Narrowband,
    cfg: &NetworkConfig,
    pc: &PowerControlConfig,
    seed: u64,
) -> Result<(TransceiverState, JointTrace)> {
    let state = TransceiverState::random(cfg, pc.p_max, seed);
    run_joint_ia_pc_from(state, ch, cfg, pc)
}

pub fn run_joint_ia_pc_from(
    mut state: TransceiverState,
    ch: &Narrowband,
    cfg: &NetworkConfig,
    pc: &PowerControlConfig,
) -> Result<(TransceiverState, JointTrace)> {
    if cfg.streams != 1 {
        return Err(Error::Contract("joint power control is single-stream only".into()));
    }
    let k_users = ch.k_users();
    let gamma = pc.gamma();
    if gamma.len() != k_users {
        return Err(Error::Contract(format!(
            "{} SINR targets for {k_users} users",
            gamma.len()
        )));
    }
    let reverse = ch.reversed();
    let probe = vec![pc.probe_power(); k_users];
    let mut rows = Vec::new();
    let mut stable = false;
    let mut iterations = 0;

    for n in 1..=pc.max_iters {
        iterations = n;
        update_receive_filters(&mut state, ch, cfg, AlignmentVariant::MaxSinr)?;

        let new_p: Vec<f64> = (0..k_users)
            .map(|k| match required_power(&state, ch, k, gamma[k], cfg) {
                Ok(b) => b.min(pc.p_max),
                Err(_) => pc.p_max,
            })
            .collect();

        let mut rev = state.reversed(probe.clone());
        update_receive_filters(&mut rev, &reverse, cfg, AlignmentVariant::MaxSinr)?;

        let power_change = state
            .p
            .iter()
            .zip(&new_p)
            .map(|(old, new)| (new - old).abs() / old)
            .fold(0.0, f64::max);
        let filter_change = beamformer_change(&state.v, &rev.u);
        state.p = new_p;
        state.v = rev.u;

        for k in 0..k_users {
            rows.push(TraceRow {
                iter: n,
                user: k,
                power_dbm: to_db(state.p[k]),
                sinr_db: to_db(compute_sinr(&state, ch, k, cfg)),
            });
        }
        if power_change < pc.tol && filter_change < pc.tol {
            stable = true;
            break;
        }
    }

    let final_sinr_db: Vec<f64> = (0..k_users)
        .map(|k| to_db(compute_sinr(&state, ch, k, cfg)))
        .collect();
    let targets_met = final_sinr_db
        .iter()
        .zip(&gamma)
        .all(|(s, g)| (s - to_db(*g)).abs() <= TARGET_TOLERANCE_DB);
    Ok((
        state,
        JointTrace {
            rows,
            iterations,
            stable,
            targets_met,
            converged: stable && targets_met,
            final_sinr_db,
        },
    ))
}
