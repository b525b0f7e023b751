//! Compressed CSI feedback: each receiver reports the right singular
//! vectors of its concatenated channel as quantized phase/Givens angles plus
//! a per-stream SNR profile, on a subset of subcarriers.

mod angles;
mod bitstream;
mod snr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{config_err, Error, Result};
use crate::numerics::{svd, ComplexMatrix};

pub use angles::{
    angle_count, decompose, dequantize_phi, dequantize_psi, quantize_phi, quantize_psi, reconstruct,
    GivensAngles,
};
pub use snr::{dequantize_snr_profile, quantize_snr_profile, SnrCodes};
pub use snr::{
    SNR_AVG_BITS, SNR_AVG_MAX_DB, SNR_AVG_MIN_DB, SNR_DELTA_BITS, SNR_DELTA_MAX_DB, SNR_DELTA_MIN_DB,
    SNR_OFFSET_BITS, SNR_OFFSET_STEP_DB,
};

use bitstream::{BitReader, BitWriter};

/// Granularities a report may use.
pub const ALLOWED_GRANULARITY: [usize; 6] = [1, 2, 4, 8, 16, 38];

/// Header widths: k_users, m_antennas, n_g, b_phi, b_psi, offset.
const HEADER_WIDTHS: [u32; 6] = [4, 3, 6, 4, 4, SNR_OFFSET_BITS];
pub const HEADER_BITS: usize = 29;

/// dB floor used when a singular value is zero.
const SNR_FLOOR_DB: f64 = -300.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackConfig {
    #[serde(default = "default_b_phi")]
    pub b_phi: u8,
    #[serde(default = "default_b_psi")]
    pub b_psi: u8,
    #[serde(default = "default_n_g")]
    pub n_g: usize,
}

fn default_b_phi() -> u8 {
    7
}
fn default_b_psi() -> u8 {
    9
}
fn default_n_g() -> usize {
    1
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        FeedbackConfig {
            b_phi: default_b_phi(),
            b_psi: default_b_psi(),
            n_g: default_n_g(),
        }
    }
}

impl FeedbackConfig {
    pub fn new(b_phi: u8, b_psi: u8, n_g: usize) -> Self {
        FeedbackConfig { b_phi, b_psi, n_g }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(1..=15).contains(&self.b_phi) {
            return Err(config_err(&format!("{prefix}b_phi"), "must be in 1..=15"));
        }
        if !(1..=15).contains(&self.b_psi) {
            return Err(config_err(&format!("{prefix}b_psi"), "must be in 1..=15"));
        }
        if !ALLOWED_GRANULARITY.contains(&self.n_g) {
            return Err(config_err(
                &format!("{prefix}n_g"),
                format!("must be one of {ALLOWED_GRANULARITY:?}"),
            ));
        }
        Ok(())
    }
}

/// Power normalization that maps singular values to stream SNR:
/// `snr = lambda^2 * reference_power / noise_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrReference {
    pub noise_power: f64,
    pub reference_power: f64,
}

impl SnrReference {
    pub fn snr_db(&self, lambda: f64) -> f64 {
        let lin = lambda * lambda * self.reference_power / self.noise_power;
        (10.0 * lin.log10()).max(SNR_FLOOR_DB)
    }

    pub fn lambda(&self, snr_db: f64) -> f64 {
        (10f64.powf(snr_db / 10.0) * self.noise_power / self.reference_power).sqrt()
    }
}

/// `(n_b, n_b_reduced)` angle bits per reported subcarrier.
pub fn feedback_bit_count(k_users: usize, m_antennas: usize, fb: &FeedbackConfig) -> (usize, usize) {
    let pairs = angle_count(k_users * m_antennas, m_antennas);
    let n_b = pairs * (fb.b_phi as usize + fb.b_psi as usize);
    (n_b, n_b - k_users.saturating_sub(1) * fb.b_phi as usize)
}

/// Every `n_g`-th subcarrier, always including the last one.
pub fn apply_granularity(subcarriers: usize, n_g: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..subcarriers).step_by(n_g.max(1)).collect();
    if subcarriers > 0 && idx.last() != Some(&(subcarriers - 1)) {
        idx.push(subcarriers - 1);
    }
    idx
}

/// `[H_k1, ..., H_kK]` on subcarrier `s`.
pub fn concat_channels(channels: &ChannelSet, k: usize, s: usize) -> ComplexMatrix {
    let blocks: Vec<&ComplexMatrix> = (0..channels.k_users()).map(|j| channels.h(k, j, s)).collect();
    ComplexMatrix::hstack(&blocks).expect("blocks share the row count")
}

/// Split a concatenated channel into its `k_users` column blocks.
pub fn split_blocks(h: &ComplexMatrix, k_users: usize) -> Vec<ComplexMatrix> {
    let w = h.cols() / k_users;
    (0..k_users).map(|j| h.col_block(j * w, w)).collect()
}

/// Singular values and right singular vectors of `h`, last row real and
/// nonnegative. With `reduce_blocks`, each source block except the last is
/// rotated so its first entry in column 0 is real and nonnegative; this
/// changes only a per-link phase.
pub fn canonical_factor(h: &ComplexMatrix, k_users: usize, reduce_blocks: bool) -> Result<(Vec<f64>, ComplexMatrix)> {
    let dec = svd(h)?;
    let mut f = dec.f;
    if reduce_blocks {
        let m = h.rows();
        for b in 0..k_users.saturating_sub(1) {
            let z = f[(b * m, 0)];
            if z.norm() == 0.0 {
                continue;
            }
            let rot = z.conj() / z.norm();
            for r in b * m..(b + 1) * m {
                for c in 0..f.cols() {
                    f[(r, c)] *= rot;
                }
            }
        }
    }
    Ok((dec.lambda, f))
}

/// Positions in column 0 of the phase angles forced to zero by block reduction.
fn is_reduced_phi(col: usize, t: usize, k_users: usize, m: usize) -> bool {
    col == 0 && t % m == 0 && t / m + 1 < k_users
}

/// Quantized feedback report of one receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedCsi {
    pub k_users: usize,
    pub m_antennas: usize,
    pub n_g: usize,
    pub b_phi: u8,
    pub b_psi: u8,
    pub reported_subcarriers: Vec<usize>,
    /// `[reported subcarrier][angle]`, extraction order, reduced angles omitted.
    pub phi_codes: Vec<Vec<u32>>,
    pub psi_codes: Vec<Vec<u32>>,
    pub snr: SnrCodes,
}

impl CompressedCsi {
    pub fn streams(&self) -> usize {
        self.m_antennas
    }

    pub fn snr_offset_db(&self) -> f64 {
        self.snr.offset_db()
    }

    fn feedback_config(&self) -> FeedbackConfig {
        FeedbackConfig::new(self.b_phi, self.b_psi, self.n_g)
    }

    /// Payload length excluding the header.
    pub fn payload_bits(&self) -> usize {
        let (_, reduced) = feedback_bit_count(self.k_users, self.m_antennas, &self.feedback_config());
        let r = self.reported_subcarriers.len();
        let d = self.streams();
        reduced * r + d * SNR_AVG_BITS as usize + r * d * SNR_DELTA_BITS as usize
    }

    /// Check every field against the widths and counts implied by the header.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Decode(msg));
        if !(1..=15).contains(&self.k_users) || !(1..=7).contains(&self.m_antennas) {
            return bad(format!("dimensions {}x{} out of range", self.k_users, self.m_antennas));
        }
        self.feedback_config()
            .validate("")
            .map_err(|e| Error::Decode(e.to_string()))?;
        let n = self.k_users * self.m_antennas;
        let per = angle_count(n, self.m_antennas);
        let n_phi = per - (self.k_users - 1);
        let r = self.reported_subcarriers.len();
        if r == 0 {
            return bad("no reported subcarriers".into());
        }
        if self.phi_codes.len() != r || self.psi_codes.len() != r || self.snr.delta_codes.len() != r {
            return bad("per-subcarrier sections disagree with the reported set".into());
        }
        let fits = |codes: &[u32], bits: u32| codes.iter().all(|&c| u64::from(c) < 1u64 << bits);
        for (p, q) in self.phi_codes.iter().zip(&self.psi_codes) {
            if p.len() != n_phi || q.len() != per {
                return bad(format!("expected {n_phi} phi and {per} psi codes"));
            }
            if !fits(p, self.b_phi as u32) || !fits(q, self.b_psi as u32) {
                return bad("angle code exceeds its bit width".into());
            }
        }
        if self.snr.avg_codes.len() != self.streams() || !fits(&self.snr.avg_codes, SNR_AVG_BITS) {
            return bad("malformed SNR averages".into());
        }
        for row in &self.snr.delta_codes {
            if row.len() != self.streams() || !fits(row, SNR_DELTA_BITS) {
                return bad("malformed SNR deltas".into());
            }
        }
        if !fits(&[self.snr.offset_code], SNR_OFFSET_BITS) {
            return bad("SNR offset exceeds its bit width".into());
        }
        Ok(())
    }

    /// MSB-first bitstream; the final byte is zero padded.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut w = BitWriter::default();
        let header = [
            self.k_users as u32,
            self.m_antennas as u32,
            self.n_g as u32,
            self.b_phi as u32,
            self.b_psi as u32,
            self.snr.offset_code,
        ];
        for (v, width) in header.iter().zip(HEADER_WIDTHS) {
            w.put(*v, width)?;
        }
        for (p, q) in self.phi_codes.iter().zip(&self.psi_codes) {
            for &c in p {
                w.put(c, self.b_phi as u32)?;
            }
            for &c in q {
                w.put(c, self.b_psi as u32)?;
            }
        }
        for &c in &self.snr.avg_codes {
            w.put(c, SNR_AVG_BITS)?;
        }
        for row in &self.snr.delta_codes {
            for &c in row {
                w.put(c, SNR_DELTA_BITS)?;
            }
        }
        debug_assert_eq!(w.bit_len(), HEADER_BITS + self.payload_bits());
        Ok(w.into_bytes())
    }

    /// Parse a bitstream; the subcarrier count is shared out of band.
    pub fn from_bytes(bytes: &[u8], subcarriers: usize) -> Result<Self> {
        let mut r = BitReader::new(bytes);
        let mut header = [0u32; 6];
        for (h, width) in header.iter_mut().zip(HEADER_WIDTHS) {
            *h = r.get(width)?;
        }
        let [k, m, n_g, b_phi, b_psi, offset_code] = header;
        let (k, m, n_g) = (k as usize, m as usize, n_g as usize);
        if k == 0 || m == 0 {
            return Err(Error::Decode("zero dimension in header".into()));
        }
        if !ALLOWED_GRANULARITY.contains(&n_g) || b_phi == 0 || b_psi == 0 {
            return Err(Error::Decode("invalid feedback parameters in header".into()));
        }
        let reported = apply_granularity(subcarriers, n_g);
        let per = angle_count(k * m, m);
        let n_phi = per - (k - 1);
        let mut phi_codes = Vec::with_capacity(reported.len());
        let mut psi_codes = Vec::with_capacity(reported.len());
        for _ in &reported {
            phi_codes.push((0..n_phi).map(|_| r.get(b_phi)).collect::<Result<Vec<_>>>()?);
            psi_codes.push((0..per).map(|_| r.get(b_psi)).collect::<Result<Vec<_>>>()?);
        }
        let avg_codes = (0..m).map(|_| r.get(SNR_AVG_BITS)).collect::<Result<Vec<_>>>()?;
        let delta_codes = reported
            .iter()
            .map(|_| (0..m).map(|_| r.get(SNR_DELTA_BITS)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        r.finish()?;
        Ok(CompressedCsi {
            k_users: k,
            m_antennas: m,
            n_g,
            b_phi: b_phi as u8,
            b_psi: b_psi as u8,
            reported_subcarriers: reported,
            phi_codes,
            psi_codes,
            snr: SnrCodes {
                avg_codes,
                delta_codes,
                offset_code,
            },
        })
    }
}

/// Quantize the feedback of receiver `k`.
pub fn encode_csi(channels: &ChannelSet, k: usize, fb: &FeedbackConfig, scale: &SnrReference) -> Result<CompressedCsi> {
    fb.validate("")?;
    let (k_users, m) = (channels.k_users(), channels.m_antennas());
    if k >= k_users {
        return Err(Error::Contract(format!("receiver {k} out of range")));
    }
    let reported = apply_granularity(channels.subcarriers(), fb.n_g);
    let mut phi_codes = Vec::with_capacity(reported.len());
    let mut psi_codes = Vec::with_capacity(reported.len());
    let mut snr_db = Vec::with_capacity(reported.len());
    for &s in &reported {
        let (lambda, f) = canonical_factor(&concat_channels(channels, k, s), k_users, true)?;
        let ang = decompose(&f);
        let mut p = Vec::new();
        for (i, col) in ang.phi.iter().enumerate() {
            for (t, &phi) in col.iter().enumerate() {
                if !is_reduced_phi(i, t, k_users, m) {
                    p.push(quantize_phi(phi, fb.b_phi));
                }
            }
        }
        phi_codes.push(p);
        psi_codes.push(ang.psi.iter().flatten().map(|&x| quantize_psi(x, fb.b_psi)).collect());
        snr_db.push(lambda.iter().map(|&l| scale.snr_db(l)).collect());
    }
    Ok(CompressedCsi {
        k_users,
        m_antennas: m,
        n_g: fb.n_g,
        b_phi: fb.b_phi,
        b_psi: fb.b_psi,
        reported_subcarriers: reported,
        phi_codes,
        psi_codes,
        snr: quantize_snr_profile(&snr_db)?,
    })
}

/// Reconstructed feedback on the reported subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedCsi {
    pub k_users: usize,
    pub reported_subcarriers: Vec<usize>,
    /// Right factor `F^` per reported subcarrier.
    pub f_hat: Vec<ComplexMatrix>,
    /// Stream SNR in dB per reported subcarrier.
    pub snr_db: Vec<Vec<f64>>,
    /// `H~ = diag(lambda^) F^*` per reported subcarrier.
    pub channels: Vec<ComplexMatrix>,
}

fn effective_channel(lambda: &[f64], f: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(lambda.len(), f.rows(), |i, j| f[(j, i)].conj() * lambda[i])
}

impl DecodedCsi {
    /// Per-source blocks `H~_kj` of reported entry `idx`.
    pub fn blocks(&self, idx: usize) -> Vec<ComplexMatrix> {
        split_blocks(&self.channels[idx], self.k_users)
    }

    /// Position in the reported list nearest to subcarrier `s` (ties go low).
    pub fn nearest_reported(&self, s: usize) -> usize {
        let mut best = 0;
        for (i, &r) in self.reported_subcarriers.iter().enumerate() {
            if r.abs_diff(s) < self.reported_subcarriers[best].abs_diff(s) {
                best = i;
            }
        }
        best
    }

    /// Stream SNR at any subcarrier, linear in dB between reported ones.
    pub fn interpolated_snr_db(&self, s: usize) -> Vec<f64> {
        let rep = &self.reported_subcarriers;
        let hi = rep.partition_point(|&r| r < s);
        if hi == rep.len() {
            return self.snr_db[rep.len() - 1].clone();
        }
        if rep[hi] == s || hi == 0 {
            return self.snr_db[hi].clone();
        }
        let (a, b) = (rep[hi - 1] as f64, rep[hi] as f64);
        let t = (s as f64 - a) / (b - a);
        self.snr_db[hi - 1]
            .iter()
            .zip(&self.snr_db[hi])
            .map(|(x, y)| x + t * (y - x))
            .collect()
    }
}

/// Reconstruct channels from a quantized report.
pub fn decode_csi(code: &CompressedCsi, scale: &SnrReference) -> Result<DecodedCsi> {
    code.validate()?;
    let (k_users, m) = (code.k_users, code.m_antennas);
    let n = k_users * m;
    let cols = angles::angle_columns(n, m);
    let snr_db = dequantize_snr_profile(&code.snr);
    let mut f_hat = Vec::with_capacity(code.reported_subcarriers.len());
    let mut channels = Vec::with_capacity(code.reported_subcarriers.len());
    for (idx, (pc, qc)) in code.phi_codes.iter().zip(&code.psi_codes).enumerate() {
        let mut pi = pc.iter();
        let mut qi = qc.iter();
        let mut ang = GivensAngles {
            phi: Vec::with_capacity(cols),
            psi: Vec::with_capacity(cols),
        };
        for i in 0..cols {
            let len = n - 1 - i;
            ang.phi.push(
                (0..len)
                    .map(|t| {
                        if is_reduced_phi(i, t, k_users, m) {
                            0.0
                        } else {
                            dequantize_phi(*pi.next().expect("length validated"), code.b_phi)
                        }
                    })
                    .collect(),
            );
            ang.psi.push(
                (0..len)
                    .map(|_| dequantize_psi(*qi.next().expect("length validated"), code.b_psi))
                    .collect(),
            );
        }
        let f = reconstruct(&ang, n, m);
        let lambda: Vec<f64> = snr_db[idx].iter().map(|&x| scale.lambda(x)).collect();
        channels.push(effective_channel(&lambda, &f));
        f_hat.push(f);
    }
    Ok(DecodedCsi {
        k_users,
        reported_subcarriers: code.reported_subcarriers.clone(),
        f_hat,
        snr_db,
        channels,
    })
}

/// Unquantized feedback: exact angles and singular values, no block
/// reduction. Reproduces the Gram matrix of every concatenated channel.
pub fn exact_csi(channels: &ChannelSet, k: usize, n_g: usize, scale: &SnrReference) -> Result<DecodedCsi> {
    let (k_users, m) = (channels.k_users(), channels.m_antennas());
    if k >= k_users {
        return Err(Error::Contract(format!("receiver {k} out of range")));
    }
    let reported = apply_granularity(channels.subcarriers(), n_g);
    let mut out = DecodedCsi {
        k_users,
        reported_subcarriers: reported.clone(),
        f_hat: Vec::new(),
        snr_db: Vec::new(),
        channels: Vec::new(),
    };
    for &s in &reported {
        let (lambda, f) = canonical_factor(&concat_channels(channels, k, s), k_users, false)?;
        let f = reconstruct(&decompose(&f), k_users * m, m);
        out.channels.push(effective_channel(&lambda, &f));
        out.snr_db.push(lambda.iter().map(|&l| scale.snr_db(l)).collect());
        out.f_hat.push(f);
    }
    Ok(out)
}

/// Largest principal angle (radians) between the column spans of `a` and `b`.
pub fn subspace_angle(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let dec = svd(&(&a.adjoint() * b))?;
    let smin = dec.lambda.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(smin.clamp(-1.0, 1.0).acos())
}


#[cfg(test)]
mod tests;
