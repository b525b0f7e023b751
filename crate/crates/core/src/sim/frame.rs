use serde::Serialize;

use crate::channel::NetworkConfig;
use crate::error::{Error, Result};

pub const PAYLOAD_SYMBOLS: usize = 20;
/// Step of the DM-RS scaling lattice, in dB of amplitude (`20 log10`).
pub const ALPHA_STEP_DB: f64 = 0.5;

/// OFDM symbol allocation of one frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameLayout {
    /// One precoded DM-RS symbol per stream, users in order.
    pub dm_rs_symbols: Vec<usize>,
    /// One full-power CSI-RS symbol per transmit antenna.
    pub csi_rs_symbols: Vec<usize>,
    /// Antenna-1 CSI-RS repeated with `alpha_scale`; power control only.
    pub p_rs_symbol: Option<usize>,
    pub payload_start: usize,
    pub payload_symbols: usize,
    /// `sqrt(p_max / max P)` floored onto the 0.5 dB lattice.
    pub alpha_scale: f64,
    pub alpha_db: f64,
}

impl FrameLayout {
    pub fn total_symbols(&self) -> usize {
        self.payload_start + self.payload_symbols
    }
}

/// Quantized DM-RS scaling factor for the given transmit powers.
pub fn alpha_scale(p_max: f64, powers: &[f64]) -> Result<(f64, f64)> {
    let max = powers.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) || powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Contract("powers must be finite, nonnegative and not all zero".into()));
    }
    let db = 10.0 * (p_max / max).log10();
    // floor so the scaled reference never exceeds p_max; the epsilon keeps exact lattice points
    let q = ((db + 1e-9) / ALPHA_STEP_DB).floor() * ALPHA_STEP_DB;
    Ok((10f64.powf(q / 20.0), q))
}

/// Lay out a frame: DM-RS, then CSI-RS, then the optional P-RS, then payload.
pub fn build_frame(cfg: &NetworkConfig, powers: &[f64], with_p_rs: bool) -> Result<FrameLayout> {
    let (alpha_scale, alpha_db) = alpha_scale(cfg.p_max, powers)?;
    let dm = cfg.k_users * cfg.streams;
    let antennas = cfg.k_users * cfg.m_antennas;
    let dm_rs_symbols: Vec<usize> = (0..dm).collect();
    let csi_rs_symbols: Vec<usize> = (dm..dm + antennas).collect();
    let mut next = dm + antennas;
    let p_rs_symbol = with_p_rs.then(|| {
        next += 1;
        next - 1
    });
    Ok(FrameLayout {
        dm_rs_symbols,
        csi_rs_symbols,
        p_rs_symbol,
        payload_start: next,
        payload_symbols: PAYLOAD_SYMBOLS,
        alpha_scale,
        alpha_db,
    })
}
