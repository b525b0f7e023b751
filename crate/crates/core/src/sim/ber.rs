use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Bit error rate of Gray-coded square QAM in AWGN at symbol SNR `sinr`.
///
/// Exact per-bit expression for square Gray constellations;
/// for QPSK it reduces to `Q(sqrt(sinr))`.
pub fn ber_for_sinr(sinr: f64, order: u32) -> Result<f64> {
    if !matches!(order, 4 | 16 | 64 | 256) {
        return Err(Error::Contract(format!("unsupported QAM order {order}")));
    }
    if !(sinr >= 0.0) {
        return Err(Error::Contract(format!("SINR must be nonnegative, got {sinr}")));
    }
    let m = order as f64;
    let l = m.sqrt() as usize;
    let bits_per_dim = l.ilog2();
    let a = (1.5 * sinr / (m - 1.0)).sqrt();
    let mut total = 0.0;
    for k in 1..=bits_per_dim {
        let p = 1usize << (k - 1);
        let terms = l - l / (1 << k);
        let mut pk = 0.0;
        for i in 0..terms {
            let w = (i * p) as f64 / l as f64;
            let sign = if (w.floor() as i64) % 2 == 0 { 1.0 } else { -1.0 };
            let weight = p as f64 - (w + 0.5).floor();
            pk += sign * weight * erfc((2 * i + 1) as f64 * a);
        }
        total += pk / l as f64;
    }
    Ok((total / bits_per_dim as f64).clamp(0.0, 0.5))
}
