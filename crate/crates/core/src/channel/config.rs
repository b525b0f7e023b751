use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

/// Network dimensions and power budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub k_users: usize,
    pub m_antennas: usize,
    /// Streams per user.
    pub streams: usize,
    /// Noise power N0 (linear).
    pub noise_power: f64,
    /// Per-user transmit power cap (linear).
    pub p_max: f64,
    /// Active OFDM subcarriers.
    #[serde(default = "default_subcarriers")]
    pub subcarriers: usize,
}

fn default_subcarriers() -> usize {
    38
}

impl NetworkConfig {
    /// Canonical three-user 2x2 single-stream network.
    pub fn three_user_2x2(noise_power: f64, p_max: f64, subcarriers: usize) -> Self {
        NetworkConfig {
            k_users: 3,
            m_antennas: 2,
            streams: 1,
            noise_power,
            p_max,
            subcarriers,
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        let f = |name: &str| format!("{prefix}{name}");
        if self.k_users < 1 || self.k_users > 15 {
            return Err(config_err(&f("k_users"), "must be in 1..=15"));
        }
        if self.m_antennas < 1 || self.m_antennas > 7 {
            return Err(config_err(&f("m_antennas"), "must be in 1..=7"));
        }
        if self.streams < 1 || self.streams > self.m_antennas {
            return Err(config_err(
                &f("streams"),
                format!("must be in 1..={} (m_antennas)", self.m_antennas),
            ));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(config_err(&f("noise_power"), "must be positive and finite"));
        }
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return Err(config_err(&f("p_max"), "must be positive and finite"));
        }
        if self.subcarriers < 1 {
            return Err(config_err(&f("subcarriers"), "must be at least 1"));
        }
        Ok(())
    }

    /// Power carried by each stream of a user transmitting `p` in total.
    pub fn stream_power(&self, p: f64) -> f64 {
        p / self.streams as f64
    }
}

/// Pilot/data split of one coherence block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    /// Coherence time T in symbols.
    pub coherence_time: f64,
    /// Channel sharing factor alpha: fraction of T spent on pilots.
    pub sharing_factor: f64,
    /// Average transmit power P (linear).
    pub avg_power: f64,
}

impl TrainingConfig {
    pub fn pilot_symbols(&self) -> f64 {
        self.sharing_factor * self.coherence_time
    }

    pub fn data_symbols(&self) -> f64 {
        (1.0 - self.sharing_factor) * self.coherence_time
    }

    /// Orthogonal pilot observations available per source.
    pub fn pilots_per_source(&self, k_users: usize) -> f64 {
        self.pilot_symbols() / k_users as f64
    }

    pub fn validate(&self, prefix: &str, k_users: usize) -> Result<()> {
        let f = |name: &str| format!("{prefix}{name}");
        if !(self.coherence_time >= 1.0 && self.coherence_time.is_finite()) {
            return Err(config_err(&f("coherence_time"), "must be at least 1 symbol"));
        }
        let lo = k_users as f64 / self.coherence_time;
        let a = self.sharing_factor;
        if !(a >= lo && a < 1.0) {
            return Err(config_err(
                &f("sharing_factor"),
                format!("must lie in [K/T, 1) = [{lo}, 1), got {a}"),
            ));
        }
        if !(self.avg_power > 0.0 && self.avg_power.is_finite()) {
            return Err(config_err(&f("avg_power"), "must be positive and finite"));
        }
        Ok(())
    }
}
