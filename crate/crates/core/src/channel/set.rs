use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::NetworkConfig;
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, C64};
use crate::rng::{complex_gaussian, stream_rng, STREAM_CHANNEL};

/// Forward channels `H_kl` (destination k, source l) for every subcarrier.
///
/// Reverse channels are never stored: `H^r_kl = (H_lk)^*`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    k: usize,
    m: usize,
    subcarriers: usize,
    seed: u64,
    h: Vec<ComplexMatrix>,
}

impl ChannelSet {
    /// Build from per-(subcarrier, destination, source) matrices.
    pub fn from_fn(
        k: usize,
        m: usize,
        subcarriers: usize,
        seed: u64,
        mut f: impl FnMut(usize, usize, usize) -> ComplexMatrix,
    ) -> Result<Self> {
        let mut h = Vec::with_capacity(subcarriers * k * k);
        for s in 0..subcarriers {
            for dst in 0..k {
                for src in 0..k {
                    let mat = f(s, dst, src);
                    if mat.rows() != m || mat.cols() != m {
                        return Err(Error::Contract(format!(
                            "channel ({dst},{src}) on subcarrier {s} is {}x{}, expected {m}x{m}",
                            mat.rows(),
                            mat.cols()
                        )));
                    }
                    h.push(mat);
                }
            }
        }
        Ok(ChannelSet {
            k,
            m,
            subcarriers,
            seed,
            h,
        })
    }

    pub fn k_users(&self) -> usize {
        self.k
    }

    pub fn m_antennas(&self) -> usize {
        self.m
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    fn idx(&self, dst: usize, src: usize, s: usize) -> usize {
        assert!(dst < self.k && src < self.k && s < self.subcarriers);
        (s * self.k + dst) * self.k + src
    }

    /// Forward channel from source `src` to destination `dst` on subcarrier `s`.
    pub fn h(&self, dst: usize, src: usize, s: usize) -> &ComplexMatrix {
        &self.h[self.idx(dst, src, s)]
    }

    /// Reverse channel from destination `src` to source `dst`: `(H_{src,dst})^*`.
    pub fn reverse(&self, dst: usize, src: usize, s: usize) -> ComplexMatrix {
        self.h(src, dst, s).adjoint()
    }

    /// All channels of one subcarrier.
    pub fn narrowband(&self, s: usize) -> Narrowband {
        let start = self.idx(0, 0, s);
        Narrowband {
            k: self.k,
            m: self.m,
            h: self.h[start..start + self.k * self.k].to_vec(),
        }
    }
}

/// Sample i.i.d. unit-variance Rayleigh block-fading channels.
pub fn sample_channels(cfg: &NetworkConfig, seed: u64) -> ChannelSet {
    let mut rng = stream_rng(seed, STREAM_CHANNEL);
    let m = cfg.m_antennas;
    ChannelSet::from_fn(cfg.k_users, m, cfg.subcarriers, seed, |_, _, _| {
        random_matrix(&mut rng, m, m)
    })
    .expect("dimensions fixed by construction")
}

pub(crate) fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Channels of a single subcarrier, indexed `(destination, source)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Narrowband {
    k: usize,
    m: usize,
    h: Vec<ComplexMatrix>,
}

impl Narrowband {
    pub fn from_fn(k: usize, m: usize, mut f: impl FnMut(usize, usize) -> ComplexMatrix) -> Self {
        let mut h = Vec::with_capacity(k * k);
        for dst in 0..k {
            for src in 0..k {
                let mat = f(dst, src);
                assert!(mat.rows() == m && mat.cols() == m, "channel must be {m}x{m}");
                h.push(mat);
            }
        }
        Narrowband { k, m, h }
    }

    pub fn k_users(&self) -> usize {
        self.k
    }

    pub fn m_antennas(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn h(&self, dst: usize, src: usize) -> &ComplexMatrix {
        &self.h[dst * self.k + src]
    }

    /// The reverse network: `H^r_kl = (H_lk)^*`.
    pub fn reversed(&self) -> Narrowband {
        Narrowband::from_fn(self.k, self.m, |dst, src| self.h(src, dst).adjoint())
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelSetDoc {
    k: usize,
    m: usize,
    subcarriers: usize,
    seed: u64,
    /// One entry per (subcarrier, destination, source), each a row-major list of `[re, im]`.
    h: Vec<Vec<[f64; 2]>>,
}

impl Serialize for ChannelSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelSetDoc {
            k: self.k,
            m: self.m,
            subcarriers: self.subcarriers,
            seed: self.seed,
            h: self
                .h
                .iter()
                .map(|mat| mat.as_slice().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChannelSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = ChannelSetDoc::deserialize(deserializer)?;
        if doc.k == 0 || doc.m == 0 || doc.subcarriers == 0 {
            return Err(D::Error::custom("k, m and subcarriers must be positive"));
        }
        let expected = doc.subcarriers * doc.k * doc.k;
        if doc.h.len() != expected {
            return Err(D::Error::custom(format!(
                "expected {expected} channel matrices, found {}",
                doc.h.len()
            )));
        }
        let mut mats = doc.h.into_iter();
        ChannelSet::from_fn(doc.k, doc.m, doc.subcarriers, doc.seed, |_, _, _| {
            let entries: Vec<C64> = mats
                .next()
                .unwrap()
                .into_iter()
                .map(|[re, im]| C64::new(re, im))
                .collect();
            ComplexMatrix::from_vec(doc.m, doc.m, entries).unwrap_or_else(|_| ComplexMatrix::zeros(1, 1))
        })
        .map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NetworkConfig {
        NetworkConfig::three_user_2x2(1.0, 100.0, 4)
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sample_channels(&cfg(), 7), sample_channels(&cfg(), 7));
        assert_ne!(sample_channels(&cfg(), 7), sample_channels(&cfg(), 8));
    }

    #[test]
    fn entries_are_unit_variance() {
        let big = NetworkConfig {
            k_users: 5,
            m_antennas: 4,
            streams: 1,
            noise_power: 1.0,
            p_max: 1.0,
            subcarriers: 250,
        };
        // 5*5*16*250 = 100_000 scalar draws
        let set = sample_channels(&big, 3);
        let draws: Vec<C64> = set.h.iter().flat_map(|m| m.as_slice().to_vec()).collect();
        assert_eq!(draws.len(), 100_000);
        let n = draws.len() as f64;
        let mean: C64 = draws.iter().sum::<C64>() / n;
        let var = draws.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / n;
        assert!(mean.norm() < 0.02, "mean {mean}");
        assert!((0.98..=1.02).contains(&var), "var {var}");
    }

    #[test]
    fn reverse_is_conjugate_transpose() {
        let set = sample_channels(&cfg(), 11);
        for s in 0..set.subcarriers() {
            for k in 0..3 {
                for l in 0..3 {
                    assert_eq!(set.reverse(k, l, s), set.h(l, k, s).adjoint());
                }
            }
            let nb = set.narrowband(s);
            assert_eq!(nb.reversed().reversed(), nb);
            assert_eq!(nb.reversed().h(0, 2), &set.reverse(0, 2, s));
        }
    }

    #[test]
    fn json_round_trip() {
        let set = sample_channels(&cfg(), 5);
        let text = serde_json::to_string(&set).unwrap();
        let back: ChannelSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, set);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["h"].as_array().unwrap().len(), 4 * 9);
        assert_eq!(v["h"][0].as_array().unwrap().len(), 4);
    }

    #[test]
    fn json_rejects_wrong_count() {
        let bad = r#"{"k":1,"m":1,"subcarriers":2,"seed":0,"h":[[[1.0,0.0]]]}"#;
        assert!(serde_json::from_str::<ChannelSet>(bad).is_err());
    }
}
