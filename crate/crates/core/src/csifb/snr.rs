//! Two-step (average + delta) quantizer for per-stream SNR profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SNR_AVG_BITS: u32 = 8;
pub const SNR_AVG_MIN_DB: f64 = 10.0;
pub const SNR_AVG_MAX_DB: f64 = 53.75;
pub const SNR_DELTA_BITS: u32 = 4;
pub const SNR_DELTA_MIN_DB: f64 = -8.0;
pub const SNR_DELTA_MAX_DB: f64 = 7.0;
pub const SNR_OFFSET_BITS: u32 = 8;
pub const SNR_OFFSET_STEP_DB: f64 = 0.25;

const AVG_LEVELS: u32 = 1 << SNR_AVG_BITS;
const OFFSET_MAX_CODE: u32 = (1 << SNR_OFFSET_BITS) - 1;

fn avg_step() -> f64 {
    (SNR_AVG_MAX_DB - SNR_AVG_MIN_DB) / (AVG_LEVELS - 1) as f64
}

/// Quantized SNR report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrCodes {
    /// One code per stream.
    pub avg_codes: Vec<u32>,
    /// `[reported subcarrier][stream]`.
    pub delta_codes: Vec<Vec<u32>>,
    /// Common overflow offset in 0.25 dB units.
    pub offset_code: u32,
}

impl SnrCodes {
    pub fn offset_db(&self) -> f64 {
        self.offset_code as f64 * SNR_OFFSET_STEP_DB
    }
}

pub(crate) fn dequantize_avg(code: u32) -> f64 {
    SNR_AVG_MIN_DB + code as f64 * avg_step()
}

/// Quantize `snr_db[subcarrier][stream]`. Every row must have the same length.
pub fn quantize_snr_profile(snr_db: &[Vec<f64>]) -> Result<SnrCodes> {
    let streams = snr_db.first().map_or(0, Vec::len);
    if snr_db.is_empty() || snr_db.iter().any(|r| r.len() != streams) {
        return Err(Error::Contract("SNR profile must be a nonempty rectangular array".into()));
    }
    if snr_db.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Contract("SNR profile must be finite".into()));
    }
    let n = snr_db.len() as f64;
    let avgs: Vec<f64> = (0..streams)
        .map(|s| snr_db.iter().map(|r| r[s]).sum::<f64>() / n)
        .collect();
    let max_avg = avgs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let offset_code = if max_avg > SNR_AVG_MAX_DB {
        (((max_avg - SNR_AVG_MAX_DB) / SNR_OFFSET_STEP_DB).ceil() as u32).min(OFFSET_MAX_CODE)
    } else {
        0
    };
    let offset = offset_code as f64 * SNR_OFFSET_STEP_DB;
    let avg_codes: Vec<u32> = avgs
        .iter()
        .map(|a| {
            ((a - offset - SNR_AVG_MIN_DB) / avg_step())
                .round()
                .clamp(0.0, (AVG_LEVELS - 1) as f64) as u32
        })
        .collect();
    let delta_codes = snr_db
        .iter()
        .map(|row| {
            row.iter()
                .zip(&avg_codes)
                .map(|(x, &c)| {
                    let d = x - offset - dequantize_avg(c);
                    (d - SNR_DELTA_MIN_DB)
                        .round()
                        .clamp(0.0, SNR_DELTA_MAX_DB - SNR_DELTA_MIN_DB) as u32
                })
                .collect()
        })
        .collect();
    Ok(SnrCodes {
        avg_codes,
        delta_codes,
        offset_code,
    })
}

/// Inverse of [`quantize_snr_profile`], offset added back.
pub fn dequantize_snr_profile(codes: &SnrCodes) -> Vec<Vec<f64>> {
    let offset = codes.offset_db();
    codes
        .delta_codes
        .iter()
        .map(|row| {
            row.iter()
                .zip(&codes.avg_codes)
                .map(|(&d, &a)| dequantize_avg(a) + SNR_DELTA_MIN_DB + d as f64 + offset)
                .collect()
        })
        .collect()
}
