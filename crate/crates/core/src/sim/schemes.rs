use std::fmt;

use serde::{Deserialize, Serialize};

use super::ber::ber_for_sinr;
use super::mcs::{probe_throughput, McsTable};
use crate::alignment::{run_iterative_alignment, AlignmentReport, AlignmentVariant};
use crate::channel::{estimate_channels, ChannelSet, Narrowband, NetworkConfig, TrainingConfig};
use crate::csifb::{decode_csi, encode_csi, exact_csi, DecodedCsi, FeedbackConfig, SnrReference, HEADER_BITS};
use crate::error::{config_err, Error, Result};
use crate::numerics::{svd, ComplexMatrix, C64};
use crate::powerctl::{run_joint_ia_pc, JointTrace, PowerControlConfig};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Joint alignment and power control toward SINR targets.
    Pc,
    /// Max-SINR alignment, every user at `p_max`.
    Nopc,
    /// Max-SINR alignment on channels reconstructed from CSI feedback.
    IaFeedback,
    /// One user at a time with full single-user MIMO.
    TdmaMimo,
    /// All users, `M` uncoordinated eigen-streams each.
    FullreuseMimo,
    /// All users, one transmit antenna, MMSE reception.
    FullreuseSimo,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Pc,
        Scheme::Nopc,
        Scheme::IaFeedback,
        Scheme::TdmaMimo,
        Scheme::FullreuseMimo,
        Scheme::FullreuseSimo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Pc => "pc",
            Scheme::Nopc => "nopc",
            Scheme::IaFeedback => "ia_feedback",
            Scheme::TdmaMimo => "tdma_mimo",
            Scheme::FullreuseMimo => "fullreuse_mimo",
            Scheme::FullreuseSimo => "fullreuse_simo",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How `ia_feedback` reconstructs channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackPath {
    /// Unquantized angles and singular values.
    Exact,
    Quantized,
}

/// Scheme-specific parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeKnobs {
    pub power_control: PowerControlConfig,
    pub feedback: FeedbackConfig,
    pub feedback_path: FeedbackPath,
    /// Pilot training before feedback; `None` feeds back the true channels.
    pub training: Option<TrainingConfig>,
    pub alignment_iters: usize,
    pub alignment_tol: f64,
    pub mcs: McsTable,
}

impl SchemeKnobs {
    /// 18 dB targets, default codec, ideal estimation.
    pub fn new(cfg: &NetworkConfig) -> Self {
        SchemeKnobs {
            power_control: PowerControlConfig::with_target_sinr_db(cfg.k_users, 18.0, cfg.p_max),
            feedback: FeedbackConfig::default(),
            feedback_path: FeedbackPath::Quantized,
            training: None,
            alignment_iters: 200,
            alignment_tol: 1e-6,
            mcs: McsTable::default(),
        }
    }

    pub fn validate(&self, cfg: &NetworkConfig) -> Result<()> {
        self.power_control.validate("power_control.", cfg.k_users)?;
        self.feedback.validate("feedback.")?;
        if let Some(t) = &self.training {
            t.validate("training.", cfg.k_users)?;
        }
        if self.alignment_iters < 1 {
            return Err(config_err("alignment_iters", "must be at least 1"));
        }
        if !(self.alignment_tol > 0.0) {
            return Err(config_err("alignment_tol", "must be positive"));
        }
        Ok(())
    }
}

/// Outcome for one user, averaged over subcarriers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserResult {
    pub user: usize,
    /// Mean over subcarriers and streams of the stream SINR in dB.
    pub sinr_db: f64,
    /// Bits per symbol per subcarrier.
    pub rate: f64,
    pub ber: f64,
    /// Mean transmit power per subcarrier (linear).
    pub power: f64,
    /// Every stream SINR sample in dB, subcarrier-major.
    pub stream_sinr_db: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvergenceTrace {
    Joint(JointTrace),
    Alignment(AlignmentReport),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub drop: usize,
    /// Feedback granularity for `ia_feedback`.
    pub n_g: Option<usize>,
    pub users: Vec<UserResult>,
    pub sum_rate: f64,
    /// Feedback bits sent by all receivers, headers included.
    pub feedback_bits: usize,
    /// `pc`: every subcarrier met its targets. Other schemes: always true.
    pub feasible: bool,
    /// Iteration history on subcarrier 0, for iterative schemes.
    pub convergence: Option<ConvergenceTrace>,
}

impl SchemeResult {
    pub fn total_power(&self) -> f64 {
        self.users.iter().map(|u| u.power).sum()
    }
}

/// Per-user, per-stream SINR with MMSE receivers. Stream power is the user
/// power split evenly over the columns of its precoder; inactive users are
/// silent and get an empty list.
pub fn stream_sinrs(
    ch: &Narrowband,
    noise_power: f64,
    v: &[ComplexMatrix],
    p: &[f64],
    active: &[bool],
) -> Result<Vec<Vec<f64>>> {
    let k_users = ch.k_users();
    let m = ch.m_antennas();
    let mut out = vec![Vec::new(); k_users];
    for k in (0..k_users).filter(|&k| active[k]) {
        let mut r = ComplexMatrix::identity(m).scale_real(noise_power);
        let mut own = Vec::new();
        for j in (0..k_users).filter(|&j| active[j]) {
            let ps = p[j] / v[j].cols() as f64;
            for l in 0..v[j].cols() {
                let h = ch.h(k, j).mul_vec(&v[j].col(l));
                r.add_outer(&h, ps);
                if j == k {
                    own.push((h, ps));
                }
            }
        }
        for (h, ps) in own {
            let mut q = r.clone();
            q.add_outer(&h, -ps);
            let x = q
                .solve(&h)
                .ok_or_else(|| Error::Contract("singular interference-plus-noise covariance".into()))?;
            let quad: C64 = h.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
            out[k].push(ps * quad.re.max(0.0));
        }
    }
    Ok(out)
}

#[derive(Default)]
struct UserAccumulator {
    sinr: Vec<f64>,
    rate: f64,
    power: f64,
}

struct Evaluator<'a> {
    mcs: &'a McsTable,
    users: Vec<UserAccumulator>,
    subcarriers: usize,
}

impl<'a> Evaluator<'a> {
    fn new(mcs: &'a McsTable, k_users: usize) -> Self {
        Evaluator {
            mcs,
            users: (0..k_users).map(|_| UserAccumulator::default()).collect(),
            subcarriers: 0,
        }
    }

    /// Record one subcarrier; `share` scales the rate (time sharing).
    fn record(&mut self, k: usize, sinr: &[f64], power: f64, share: f64) {
        let acc = &mut self.users[k];
        acc.rate += share * probe_throughput(sinr, self.mcs);
        acc.power += power;
        acc.sinr.extend_from_slice(sinr);
    }

    fn finish(self) -> Result<Vec<UserResult>> {
        let n = self.subcarriers.max(1) as f64;
        let mcs = self.mcs;
        self.users
            .into_iter()
            .enumerate()
            .map(|(user, acc)| {
                let db: Vec<f64> = acc.sinr.iter().map(|&s| 10.0 * s.log10()).collect();
                let count = acc.sinr.len().max(1) as f64;
                let ber = acc
                    .sinr
                    .iter()
                    .map(|&s| ber_for_sinr(s, mcs.select(s).map_or(4, |e| e.order)))
                    .sum::<Result<f64>>()?
                    / count;
                Ok(UserResult {
                    user,
                    sinr_db: db.iter().sum::<f64>() / count,
                    rate: acc.rate / n,
                    ber,
                    power: acc.power / n,
                    stream_sinr_db: db,
                })
            })
            .collect()
    }
}

/// Seed for the per-subcarrier randomness of a drop.
pub fn subcarrier_seed(seed: u64, s: usize) -> u64 {
    derive_seed(seed, s as u64)
}

fn eigen_precoder(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(svd(h)?.f)
}

fn first_antenna(m: usize) -> ComplexMatrix {
    ComplexMatrix::eye(m, 1)
}

/// Reconstructed feedback of every receiver, plus the bits spent.
fn gather_feedback(
    channels: &ChannelSet,
    cfg: &NetworkConfig,
    knobs: &SchemeKnobs,
    seed: u64,
) -> Result<(Vec<DecodedCsi>, usize)> {
    let estimated;
    let source = match &knobs.training {
        Some(train) => {
            estimated = estimate_channels(channels, train, cfg.noise_power, cfg.p_max, seed)?.estimates;
            &estimated
        }
        None => channels,
    };
    let scale = SnrReference {
        noise_power: cfg.noise_power,
        reference_power: cfg.p_max,
    };
    let mut bits = 0;
    let mut decoded = Vec::with_capacity(cfg.k_users);
    for k in 0..cfg.k_users {
        decoded.push(match knobs.feedback_path {
            FeedbackPath::Exact => exact_csi(source, k, knobs.feedback.n_g, &scale)?,
            FeedbackPath::Quantized => {
                let code = encode_csi(source, k, &knobs.feedback, &scale)?;
                bits += HEADER_BITS + code.payload_bits();
                decode_csi(&code, &scale)?
            }
        });
    }
    Ok((decoded, bits))
}

/// Run one scheme on one drop and evaluate it on the true channels.
pub fn simulate_scheme(
    scheme: Scheme,
    channels: &ChannelSet,
    cfg: &NetworkConfig,
    knobs: &SchemeKnobs,
    drop: usize,
    seed: u64,
) -> Result<SchemeResult> {
    if channels.k_users() != cfg.k_users || channels.m_antennas() != cfg.m_antennas {
        return Err(Error::Contract("channel dimensions disagree with the configuration".into()));
    }
    let k_users = cfg.k_users;
    let all = vec![true; k_users];
    let full = vec![cfg.p_max; k_users];
    let mut eval = Evaluator::new(&knobs.mcs, k_users);
    let mut feasible = true;
    let mut convergence = None;
    let mut feedback_bits = 0;
    let mut n_g = None;

    let ia_precoders = if scheme == Scheme::IaFeedback {
        let (mut decoded, bits) = gather_feedback(channels, cfg, knobs, seed)?;
        feedback_bits = bits;
        n_g = Some(knobs.feedback.n_g);
        let reported = decoded[0].reported_subcarriers.clone();
        let blocks: Vec<Vec<Vec<ComplexMatrix>>> = decoded
            .iter()
            .map(|d| (0..reported.len()).map(|r| d.blocks(r)).collect())
            .collect();
        let mut per_report = Vec::with_capacity(reported.len());
        for (r, &s) in reported.iter().enumerate() {
            let nb = Narrowband::from_fn(k_users, cfg.m_antennas, |k, j| blocks[k][r][j].clone());
            let (state, report) = run_iterative_alignment(
                &nb,
                cfg,
                AlignmentVariant::MaxSinr,
                knobs.alignment_iters,
                knobs.alignment_tol,
                subcarrier_seed(seed, s),
            )?;
            if r == 0 {
                convergence = Some(ConvergenceTrace::Alignment(report));
            }
            per_report.push(state.v);
        }
        Some((decoded.swap_remove(0), per_report))
    } else {
        None
    };

    for s in 0..channels.subcarriers() {
        let nb = channels.narrowband(s);
        let sub_seed = subcarrier_seed(seed, s);
        eval.subcarriers += 1;
        match scheme {
            Scheme::Pc => {
                let (state, trace) = run_joint_ia_pc(&nb, cfg, &knobs.power_control, sub_seed)?;
                feasible &= trace.targets_met;
                let sinr = stream_sinrs(&nb, cfg.noise_power, &state.v, &state.p, &all)?;
                for k in 0..k_users {
                    eval.record(k, &sinr[k], state.p[k], 1.0);
                }
                if s == 0 {
                    convergence = Some(ConvergenceTrace::Joint(trace));
                }
            }
            Scheme::Nopc => {
                let (state, report) = run_iterative_alignment(
                    &nb,
                    cfg,
                    AlignmentVariant::MaxSinr,
                    knobs.alignment_iters,
                    knobs.alignment_tol,
                    sub_seed,
                )?;
                let sinr = stream_sinrs(&nb, cfg.noise_power, &state.v, &full, &all)?;
                for k in 0..k_users {
                    eval.record(k, &sinr[k], cfg.p_max, 1.0);
                }
                if s == 0 {
                    convergence = Some(ConvergenceTrace::Alignment(report));
                }
            }
            Scheme::IaFeedback => {
                let (dec, per_report) = ia_precoders.as_ref().expect("computed above");
                let v = &per_report[dec.nearest_reported(s)];
                let sinr = stream_sinrs(&nb, cfg.noise_power, v, &full, &all)?;
                for k in 0..k_users {
                    eval.record(k, &sinr[k], cfg.p_max, 1.0);
                }
            }
            Scheme::TdmaMimo => {
                let v = (0..k_users)
                    .map(|k| eigen_precoder(nb.h(k, k)))
                    .collect::<Result<Vec<_>>>()?;
                for k in 0..k_users {
                    let mut alone = vec![false; k_users];
                    alone[k] = true;
                    let sinr = stream_sinrs(&nb, cfg.noise_power, &v, &full, &alone)?;
                    eval.record(k, &sinr[k], cfg.p_max, 1.0 / k_users as f64);
                }
            }
            Scheme::FullreuseMimo => {
                let v = (0..k_users)
                    .map(|k| eigen_precoder(nb.h(k, k)))
                    .collect::<Result<Vec<_>>>()?;
                let sinr = stream_sinrs(&nb, cfg.noise_power, &v, &full, &all)?;
                for k in 0..k_users {
                    eval.record(k, &sinr[k], cfg.p_max, 1.0);
                }
            }
            Scheme::FullreuseSimo => {
                let v = vec![first_antenna(cfg.m_antennas); k_users];
                let sinr = stream_sinrs(&nb, cfg.noise_power, &v, &full, &all)?;
                for k in 0..k_users {
                    eval.record(k, &sinr[k], cfg.p_max, 1.0);
                }
            }
        }
    }

    let users = eval.finish()?;
    Ok(SchemeResult {
        scheme,
        drop,
        n_g,
        sum_rate: users.iter().map(|u| u.rate).sum(),
        users,
        feedback_bits,
        feasible,
        convergence,
    })
}
