//! Iterative interference alignment with forward/reverse reciprocity sweeps.
//!
//! Two receive-filter rules are provided: leakage minimization (the `d`
//! eigenvectors of the interference covariance with the smallest
//! eigenvalues) and Max-SINR (a per-stream MMSE filter). In both cases the
//! transmit beamformers are learned by running the same rule on the reverse
//! network `H^r_kl = (H_lk)^*` with the roles of `U` and `V` swapped.

use serde::{Deserialize, Serialize};

use crate::channel::{random_matrix, Narrowband, NetworkConfig};
use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, inner, normalized, svd, ComplexMatrix, C64};
use crate::rng::{stream_rng, STREAM_BEAMFORMER_INIT};

/// Beamformers, receive filters and transmit powers of all users.
#[derive(Debug, Clone, PartialEq)]
pub struct TransceiverState {
    /// Per-user `M x d` transmit beamformer.
    pub v: Vec<ComplexMatrix>,
    /// Per-user `M x d` receive filter.
    pub u: Vec<ComplexMatrix>,
    /// Per-user total transmit power (linear).
    pub p: Vec<f64>,
}

impl TransceiverState {
    /// Random orthonormal beamformers and filters, every user at `power`.
    pub fn random(cfg: &NetworkConfig, power: f64, seed: u64) -> Self {
        let mut rng = stream_rng(seed, STREAM_BEAMFORMER_INIT);
        let (m, d) = (cfg.m_antennas, cfg.streams);
        let mut draw = || random_matrix(&mut rng, m, d).orthonormalize_columns();
        let v = (0..cfg.k_users).map(|_| draw()).collect();
        let u = (0..cfg.k_users).map(|_| draw()).collect();
        TransceiverState {
            v,
            u,
            p: vec![power; cfg.k_users],
        }
    }

    pub fn k_users(&self) -> usize {
        self.v.len()
    }

    /// The reverse-direction state: `V^r = U`, `U^r = V`, powers `p_reverse`.
    pub fn reversed(&self, p_reverse: Vec<f64>) -> Self {
        TransceiverState {
            v: self.u.clone(),
            u: self.v.clone(),
            p: p_reverse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentVariant {
    LeakageMin,
    MaxSinr,
}

/// Convergence record of one alignment run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentReport {
    pub iterations: usize,
    /// Total leakage `sum_k IF_k` after each iteration.
    pub leakage_trace: Vec<f64>,
    /// Final `max_k IF_k / P_k`.
    pub residual: f64,
    pub converged: bool,
}

/// `Q_k = sum_{j != k} p_j^s H_kj V_j V_j^* H_kj^*` with per-stream power `p_j^s`.
pub fn interference_covariance(
    state: &TransceiverState,
    ch: &Narrowband,
    k: usize,
    cfg: &NetworkConfig,
) -> ComplexMatrix {
    let m = ch.m_antennas();
    let mut q = ComplexMatrix::zeros(m, m);
    for j in (0..ch.k_users()).filter(|&j| j != k) {
        let hv = ch.h(k, j) * &state.v[j];
        let ps = cfg.stream_power(state.p[j]);
        for col in 0..hv.cols() {
            q.add_outer(&hv.col(col), ps);
        }
    }
    q.hermitian_part()
}

/// `IF_k = tr(U_k^* Q_k U_k)`.
pub fn leakage(state: &TransceiverState, ch: &Narrowband, k: usize, cfg: &NetworkConfig) -> f64 {
    let q = interference_covariance(state, ch, k, cfg);
    let t = (&(&state.u[k].adjoint() * &q) * &state.u[k]).trace();
    debug_assert!(t.im.abs() <= 1e-10 * t.re.abs().max(1.0));
    t.re.max(0.0)
}

/// Eigenvectors of the `d` smallest eigenvalues of `q`, as an `M x d` matrix.
pub fn leakage_filter_update(q: &ComplexMatrix, d: usize) -> Result<ComplexMatrix> {
    if d == 0 || d > q.rows() {
        return Err(Error::Contract(format!(
            "stream count {d} out of range for a {}x{} covariance",
            q.rows(),
            q.cols()
        )));
    }
    let eig = hermitian_eig(q)?;
    Ok(eig.vectors.col_block(0, d))
}

/// Interference-plus-noise covariance seen by stream `d_index` of user `k`:
/// every stream of every user, minus the desired stream, plus `N0 I`.
pub fn stream_interference_covariance(
    state: &TransceiverState,
    ch: &Narrowband,
    k: usize,
    d_index: usize,
    cfg: &NetworkConfig,
) -> ComplexMatrix {
    let m = ch.m_antennas();
    let mut q = ComplexMatrix::identity(m).scale_real(cfg.noise_power);
    for j in 0..ch.k_users() {
        let hv = ch.h(k, j) * &state.v[j];
        let ps = cfg.stream_power(state.p[j]);
        for l in 0..hv.cols() {
            if j == k && l == d_index {
                continue;
            }
            q.add_outer(&hv.col(l), ps);
        }
    }
    q
}

/// Max-SINR (MMSE) receive filter for stream `d_index` of user `k`,
/// `Q^{-1} H_kk v / ||Q^{-1} H_kk v||`.
///
/// A singular covariance is regularized by `1e-12 tr(Q)/M` on the diagonal.
pub fn max_sinr_filter_update(
    state: &TransceiverState,
    ch: &Narrowband,
    k: usize,
    d_index: usize,
    cfg: &NetworkConfig,
) -> Vec<C64> {
    let q = stream_interference_covariance(state, ch, k, d_index, cfg);
    let target = ch.h(k, k).mul_vec(&state.v[k].col(d_index));
    mmse_direction(&q, &target)
}

pub(crate) fn mmse_direction(q: &ComplexMatrix, target: &[C64]) -> Vec<C64> {
    let m = q.rows();
    let x = q.solve(target).or_else(|| {
        let ridge = 1e-12 * q.trace().re / m as f64;
        if ridge > 0.0 {
            q.add(&ComplexMatrix::identity(m).scale_real(ridge)).solve(target)
        } else {
            None
        }
    });
    match x {
        Some(x) if crate::numerics::norm(&x) > 0.0 => normalized(&x),
        // nothing to invert against: fall back to the matched filter
        _ => normalized(target),
    }
}

fn leakage_update_all(state: &mut TransceiverState, ch: &Narrowband, cfg: &NetworkConfig) -> Result<()> {
    let d = state.v[0].cols();
    for k in 0..ch.k_users() {
        let q = interference_covariance(state, ch, k, cfg);
        state.u[k] = leakage_filter_update(&q, d)?;
    }
    Ok(())
}

fn max_sinr_update_all(state: &mut TransceiverState, ch: &Narrowband, cfg: &NetworkConfig) {
    let d = state.v[0].cols();
    let m = ch.m_antennas();
    let new_u: Vec<ComplexMatrix> = (0..ch.k_users())
        .map(|k| {
            let mut u = ComplexMatrix::zeros(m, d);
            for l in 0..d {
                u.set_col(l, &max_sinr_filter_update(state, ch, k, l, cfg));
            }
            u
        })
        .collect();
    state.u = new_u;
}

/// Update the receive filters of `state` with `variant` on network `ch`.
pub fn update_receive_filters(
    state: &mut TransceiverState,
    ch: &Narrowband,
    cfg: &NetworkConfig,
    variant: AlignmentVariant,
) -> Result<()> {
    match variant {
        AlignmentVariant::LeakageMin => leakage_update_all(state, ch, cfg),
        AlignmentVariant::MaxSinr => {
            max_sinr_update_all(state, ch, cfg);
            Ok(())
        }
    }
}

/// `max_k ||V_k - V_k' e^{j theta}||_F` after aligning each column's phase.
pub(crate) fn beamformer_change(old: &[ComplexMatrix], new: &[ComplexMatrix]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(a, b)| {
            let mut sq = 0.0;
            for c in 0..a.cols() {
                let (ca, cb) = (a.col(c), b.col(c));
                let ip = inner(&ca, &cb);
                let rot = if ip.norm() > 0.0 { ip / ip.norm() } else { C64::new(1.0, 0.0) };
                sq += ca
                    .iter()
                    .zip(&cb)
                    .map(|(x, y)| (x * rot - y).norm_sqr())
                    .sum::<f64>();
            }
            sq.sqrt()
        })
        .fold(0.0, f64::max)
}

fn leakage_stats(state: &TransceiverState, ch: &Narrowband, cfg: &NetworkConfig) -> (f64, f64) {
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..ch.k_users() {
        let lk = leakage(state, ch, k, cfg);
        total += lk;
        worst = worst.max(lk / state.p[k]);
    }
    (total, worst)
}

/// Run alignment from random beamformers, every user at `cfg.p_max`.
pub fn run_iterative_alignment(
    ch: &Narrowband,
    cfg: &NetworkConfig,
    variant: AlignmentVariant,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<(TransceiverState, AlignmentReport)> {
    let state = TransceiverState::random(cfg, cfg.p_max, seed);
    run_iterative_alignment_from(state, ch, cfg, variant, max_iters, tol)
}

/// Run alignment starting from `state`; reverse sweeps reuse the forward powers.
///
/// Each iteration updates the receive filters on the forward network, then
/// the reverse filters on `H^r` with `V^r = U`, and finally sets `V = U^r`.
pub fn run_iterative_alignment_from(
    mut state: TransceiverState,
    ch: &Narrowband,
    cfg: &NetworkConfig,
    variant: AlignmentVariant,
    max_iters: usize,
    tol: f64,
) -> Result<(TransceiverState, AlignmentReport)> {
    if max_iters < 1 || !(tol > 0.0) {
        return Err(Error::Contract("max_iters must be >= 1 and tol > 0".into()));
    }
    let reverse = ch.reversed();
    let mut trace = Vec::with_capacity(max_iters);
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..max_iters {
        update_receive_filters(&mut state, ch, cfg, variant)?;
        let mut rev = state.reversed(state.p.clone());
        update_receive_filters(&mut rev, &reverse, cfg, variant)?;
        let change = beamformer_change(&state.v, &rev.u);
        state.v = rev.u;

        let (total, worst) = leakage_stats(&state, ch, cfg);
        trace.push(total);
        residual = worst;
        converged = match variant {
            AlignmentVariant::LeakageMin => residual <= tol,
            AlignmentVariant::MaxSinr => change <= tol,
        };
        if converged {
            break;
        }
    }
    Ok((
        state,
        AlignmentReport {
            iterations: trace.len(),
            leakage_trace: trace,
            residual,
            converged,
        },
    ))
}

/// How far a state is from satisfying the alignment conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlignmentCheck {
    /// `max_{k, j != k} ||U_k^* H_kj V_j||_F`.
    pub cross_leakage: f64,
    /// `max_{k, j != k} ||U_k^* H_kj V_j||_F / ||U_k^* H_kk V_k||_F`.
    pub relative_cross_leakage: f64,
    /// Smallest singular value over all `U_k^* H_kk V_k`.
    pub min_desired_singular_value: f64,
    /// Every desired term has full rank `d` (smallest singular value above `rank_tol`).
    pub desired_rank_ok: bool,
}

pub fn alignment_residual(state: &TransceiverState, ch: &Narrowband, rank_tol: f64) -> Result<AlignmentCheck> {
    let k_users = ch.k_users();
    let mut cross: f64 = 0.0;
    let mut relative: f64 = 0.0;
    let mut min_sv = f64::INFINITY;
    for k in 0..k_users {
        let uh = state.u[k].adjoint();
        let desired = &(&uh * ch.h(k, k)) * &state.v[k];
        let dn = desired.frobenius_norm();
        let sv = svd(&desired)?;
        min_sv = min_sv.min(sv.lambda.last().copied().unwrap_or(0.0));
        for j in (0..k_users).filter(|&j| j != k) {
            let c = (&(&uh * ch.h(k, j)) * &state.v[j]).frobenius_norm();
            cross = cross.max(c);
            relative = relative.max(if dn > 0.0 { c / dn } else { f64::INFINITY });
        }
    }
    Ok(AlignmentCheck {
        cross_leakage: cross,
        relative_cross_leakage: relative,
        min_desired_singular_value: min_sv,
        desired_rank_ok: min_sv > rank_tol,
    })
}

#[cfg(test)]
mod tests;
