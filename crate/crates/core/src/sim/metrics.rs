use std::collections::BTreeMap;

use serde::Serialize;

use super::schemes::{Scheme, SchemeResult};
use crate::error::{Error, Result};

/// Aggregates of one scheme (and granularity, for `ia_feedback`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub n_g: Option<usize>,
    pub drops: usize,
    pub mean_sum_rate: f64,
    pub mean_ber: f64,
    /// Fraction of users (over drops) with no supported MCS.
    pub outage_fraction: f64,
    /// Fraction of drops flagged feasible.
    pub feasible_fraction: f64,
    /// Sorted per-user SINR (dB), one sample per drop and user.
    pub sinr_db_samples: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThroughputPoint {
    pub n_g: usize,
    pub mean_sum_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub schemes: Vec<SchemeSummary>,
    /// Sorted per-drop `10 log10(P_nopc / P_pc)`; empty unless both ran.
    pub power_saving_gain_db: Vec<f64>,
    pub throughput_vs_ng: Vec<ThroughputPoint>,
}

/// `(x, F(x))` steps of the empirical CDF.
pub fn empirical_cdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.into_iter()
        .enumerate()
        .map(|(i, x)| (x, (i + 1) as f64 / n))
        .collect()
}

/// Power saving gain in dB of each drop.
pub fn power_saving_gain_db(nopc: &SchemeResult, pc: &SchemeResult) -> f64 {
    10.0 * (nopc.total_power() / pc.total_power()).log10()
}

/// Group results by scheme and granularity and aggregate them.
pub fn compute_metrics(results: &[SchemeResult]) -> Result<Metrics> {
    let mut groups: BTreeMap<(Scheme, Option<usize>), Vec<&SchemeResult>> = BTreeMap::new();
    for r in results {
        groups.entry((r.scheme, r.n_g)).or_default().push(r);
    }
    for g in groups.values_mut() {
        g.sort_by_key(|r| r.drop);
    }
    let mut reference: Option<(&(Scheme, Option<usize>), Vec<usize>)> = None;
    for (key, g) in &groups {
        let drops: Vec<usize> = g.iter().map(|r| r.drop).collect();
        match &reference {
            None => reference = Some((key, drops)),
            Some((rk, rd)) if *rd != drops => {
                return Err(Error::MismatchedDrops(format!(
                    "{} has drops {:?} but {} has {:?}",
                    rk.0, rd, key.0, drops
                )));
            }
            _ => {}
        }
    }

    let schemes = groups
        .iter()
        .map(|(&(scheme, n_g), g)| {
            let n = g.len() as f64;
            let user_count = g.iter().map(|r| r.users.len()).sum::<usize>().max(1) as f64;
            let mut sinr: Vec<f64> = g.iter().flat_map(|r| r.users.iter().map(|u| u.sinr_db)).collect();
            sinr.sort_by(f64::total_cmp);
            SchemeSummary {
                scheme,
                n_g,
                drops: g.len(),
                mean_sum_rate: g.iter().map(|r| r.sum_rate).sum::<f64>() / n,
                mean_ber: g.iter().flat_map(|r| r.users.iter().map(|u| u.ber)).sum::<f64>() / user_count,
                outage_fraction: g
                    .iter()
                    .flat_map(|r| r.users.iter())
                    .filter(|u| u.rate == 0.0)
                    .count() as f64
                    / user_count,
                feasible_fraction: g.iter().filter(|r| r.feasible).count() as f64 / n,
                sinr_db_samples: sinr,
            }
        })
        .collect();

    let mut gain = Vec::new();
    if let (Some(nopc), Some(pc)) = (groups.get(&(Scheme::Nopc, None)), groups.get(&(Scheme::Pc, None))) {
        gain = nopc
            .iter()
            .zip(pc)
            .map(|(a, b)| power_saving_gain_db(a, b))
            .collect();
        gain.sort_by(f64::total_cmp);
    }

    let throughput_vs_ng = groups
        .iter()
        .filter_map(|(&(scheme, n_g), g)| match (scheme, n_g) {
            (Scheme::IaFeedback, Some(n_g)) => Some(ThroughputPoint {
                n_g,
                mean_sum_rate: g.iter().map(|r| r.sum_rate).sum::<f64>() / g.len() as f64,
            }),
            _ => None,
        })
        .collect();

    Ok(Metrics {
        schemes,
        power_saving_gain_db: gain,
        throughput_vs_ng,
    })
}
