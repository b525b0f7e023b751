use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::*;
use crate::channel::{sample_channels, NetworkConfig};
use crate::numerics::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const UNIT: SnrReference = SnrReference {
    noise_power: 1.0,
    reference_power: 1.0,
};

fn net(k: usize, m: usize, subcarriers: usize) -> NetworkConfig {
    NetworkConfig {
        k_users: k,
        m_antennas: m,
        streams: 1,
        noise_power: 1.0,
        p_max: 1.0,
        subcarriers,
    }
}

fn single(k: usize, m: usize, f: impl Fn(usize, usize) -> ComplexMatrix) -> ChannelSet {
    ChannelSet::from_fn(k, m, 1, 0, |_, dst, src| f(dst, src)).unwrap()
}

fn gram(h: &ComplexMatrix) -> ComplexMatrix {
    &h.adjoint() * h
}

fn gram_error(h: &ComplexMatrix, g: &ComplexMatrix) -> f64 {
    let a = gram(h);
    a.sub(&gram(g)).frobenius_norm() / a.frobenius_norm()
}

#[test]
fn concatenation_places_blocks_in_source_order() {
    let ch = sample_channels(&net(3, 2, 2), 1);
    let h = concat_channels(&ch, 1, 1);
    assert_eq!((h.rows(), h.cols()), (2, 6));
    assert_eq!(h.col_block(2, 2), *ch.h(1, 1, 1));
    let blocks = split_blocks(&h, 3);
    for (j, b) in blocks.iter().enumerate() {
        assert_eq!(b, ch.h(1, j, 1));
    }
    let one = sample_channels(&net(1, 2, 1), 4);
    assert_eq!(concat_channels(&one, 0, 0), *one.h(0, 0, 0));
}

#[test]
fn bit_counts() {
    let fb = FeedbackConfig::new(7, 9, 1);
    assert_eq!(feedback_bit_count(3, 2, &fb), (144, 130));
    assert_eq!(feedback_bit_count(1, 2, &fb), (16, 16));
    assert_eq!(feedback_bit_count(1, 1, &fb), (0, 0));
}

#[test]
fn granularity_sets() {
    assert_eq!(apply_granularity(38, 38), vec![0, 37]);
    assert_eq!(apply_granularity(38, 1), (0..38).collect::<Vec<_>>());
    let two = apply_granularity(38, 2);
    assert_eq!(two.len(), 20);
    assert_eq!(&two[17..], &[34, 36, 37]);
    assert_eq!(apply_granularity(1, 8), vec![0]);
}

#[test]
fn snr_quantizer_examples() {
    let c = quantize_snr_profile(&vec![vec![10.0, 10.0]; 5]).unwrap();
    assert_eq!(c.avg_codes, vec![0, 0]);
    assert!(c.delta_codes.iter().flatten().all(|&d| d == 8));
    assert_eq!(c.offset_code, 0);

    let c = quantize_snr_profile(&vec![vec![53.75]; 3]).unwrap();
    assert_eq!((c.avg_codes[0], c.offset_db()), (255, 0.0));

    let c = quantize_snr_profile(&vec![vec![60.0]; 3]).unwrap();
    assert_eq!((c.avg_codes[0], c.offset_db()), (255, 6.25));
    assert_eq!(dequantize_snr_profile(&c), vec![vec![60.0]; 3]);
}

#[test]
fn snr_quantizer_error_bounded_inside_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let step = 43.75 / 255.0;
    for _ in 0..200 {
        let base = rng.random_range(15.0..45.0);
        let prof: Vec<Vec<f64>> = (0..10).map(|_| vec![base + rng.random_range(-5.0..5.0)]).collect();
        let back = dequantize_snr_profile(&quantize_snr_profile(&prof).unwrap());
        for (a, b) in prof.iter().zip(&back) {
            assert!((a[0] - b[0]).abs() <= 0.5 + step / 2.0 + 1e-9);
        }
    }
}

#[test]
fn angle_quantizers() {
    for b in 1..=10u8 {
        for code in 0..(1u32 << b) {
            assert_eq!(quantize_phi(dequantize_phi(code, b), b), code);
            assert_eq!(quantize_psi(dequantize_psi(code, b), b), code);
        }
    }
    assert_eq!(quantize_phi(TAU - 1e-12, 7), 0);
    assert_eq!(quantize_psi(FRAC_PI_2, 9), 511);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let phi = rng.random_range(0.0..TAU);
        let e = (dequantize_phi(quantize_phi(phi, 7), 7) - phi).rem_euclid(TAU);
        assert!(e.min(TAU - e) <= PI / 128.0 + 1e-12);
        let psi = rng.random_range(0.0..FRAC_PI_2);
        assert!((dequantize_psi(quantize_psi(psi, 9), 9) - psi).abs() <= FRAC_PI_2 / 511.0 / 2.0 + 1e-12);
    }
}

#[test]
fn angles_reconstruct_exactly() {
    for (k, m, seed) in [(3, 2, 1), (2, 3, 2), (1, 2, 3), (4, 1, 4), (1, 4, 5)] {
        let ch = sample_channels(&net(k, m, 1), seed);
        let (_, f) = canonical_factor(&concat_channels(&ch, 0, 0), k, false).unwrap();
        let ang = decompose(&f);
        assert_eq!(ang.phi.iter().flatten().count(), angle_count(k * m, m));
        assert!(ang.psi.iter().flatten().all(|&p| (0.0..=FRAC_PI_2).contains(&p)));
        let back = reconstruct(&ang, k * m, m);
        assert!(back.sub(&f).frobenius_norm() < 1e-12, "k={k} m={m}");
    }
}

#[test]
fn scalar_channel() {
    let ch = single(1, 1, |_, _| ComplexMatrix::from_real_diag(&[2.0]));
    let code = encode_csi(&ch, 0, &FeedbackConfig::default(), &UNIT).unwrap();
    assert!(code.phi_codes[0].is_empty() && code.psi_codes[0].is_empty());
    assert_eq!(code.snr.avg_codes, vec![0]);
    let dec = decode_csi(&code, &UNIT).unwrap();
    assert_eq!(dec.f_hat[0], ComplexMatrix::identity(1));
    assert!((UNIT.snr_db(2.0) - 10.0 * 4f64.log10()).abs() < 1e-12);
}

#[test]
fn canonical_form_is_a_fixed_point() {
    let diag = ComplexMatrix::from_real_diag(&[3.0, 1.0]);
    let ch = single(3, 2, |_, src| if src == 0 { diag.clone() } else { ComplexMatrix::zeros(2, 2) });
    let code = encode_csi(&ch, 0, &FeedbackConfig::default(), &UNIT).unwrap();
    assert!(code.phi_codes[0].iter().all(|&c| c == 0));
    assert!(code.psi_codes[0].iter().all(|&c| c == 0));
    let dec = decode_csi(&code, &UNIT).unwrap();
    assert_eq!(dec.f_hat[0], ComplexMatrix::eye(6, 2));

    // ascending diagonal swaps the columns: psi lands on the upper endpoint
    let swapped = ComplexMatrix::from_real_diag(&[1.0, 3.0]);
    let ch = single(1, 2, |_, _| swapped.clone());
    let code = encode_csi(&ch, 0, &FeedbackConfig::default(), &UNIT).unwrap();
    assert_eq!(code.phi_codes[0], vec![0]);
    assert_eq!(code.psi_codes[0], vec![511]);
    let f = &decode_csi(&code, &UNIT).unwrap().f_hat[0];
    // column 1 has a zero last row, so its phase is fixed by the chain itself
    let expect = ComplexMatrix::from_fn(2, 2, |r, c| C64::new([[0.0, -1.0], [1.0, 0.0]][r][c], 0.0));
    assert!(f.sub(&expect).max_abs() < 1e-15);
}

#[test]
fn exact_path_preserves_gram() {
    for seed in 0..200 {
        let (k, m) = [(3, 2), (2, 2), (4, 3), (1, 2), (2, 1)][seed as usize % 5];
        let ch = sample_channels(&net(k, m, 2), seed);
        let dec = exact_csi(&ch, seed as usize % k, 1, &UNIT).unwrap();
        for (i, &s) in dec.reported_subcarriers.iter().enumerate() {
            let h = concat_channels(&ch, seed as usize % k, s);
            assert!(gram_error(&h, &dec.channels[i]) < 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn quantized_precoder_is_orthonormal_and_close() {
    let fb = FeedbackConfig::default();
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let ch = sample_channels(&net(3, 2, 1), seed);
        let code = encode_csi(&ch, 1, &fb, &UNIT).unwrap();
        let f_hat = &decode_csi(&code, &UNIT).unwrap().f_hat[0];
        let defect = gram(f_hat).sub(&ComplexMatrix::identity(2)).max_abs();
        assert!(defect < 1e-9);
        let (_, f) = canonical_factor(&concat_channels(&ch, 1, 0), 3, true).unwrap();
        worst = worst.max(subspace_angle(&f, f_hat).unwrap().to_degrees());
        assert!(f_hat.row_block(5, 1).as_slice().iter().all(|z| z.im.abs() < 1e-15 && z.re >= 0.0));
    }
    assert!(worst < 2.0, "worst subspace angle {worst} deg");
}

#[test]
fn block_reduction_changes_only_link_phases() {
    let ch = sample_channels(&net(3, 2, 1), 21);
    let h = concat_channels(&ch, 0, 0);
    let (l, f) = canonical_factor(&h, 3, true).unwrap();
    let recon = effective_channel(&l, &f);
    for (orig, got) in split_blocks(&h, 3).iter().zip(split_blocks(&recon, 3)) {
        // per-block Gram matrices are invariant to both the receive unitary and the phase
        assert!(gram(orig).sub(&gram(&got)).frobenius_norm() < 1e-12);
    }
}

#[test]
fn fidelity_improves_with_bits() {
    let channels: Vec<_> = (0..100).map(|s| sample_channels(&net(3, 2, 1), 500 + s)).collect();
    let mut prev = f64::INFINITY;
    for (bp, bs) in [(3, 5), (5, 7), (7, 9)] {
        let fb = FeedbackConfig::new(bp, bs, 1);
        let mut total = 0.0;
        for ch in &channels {
            let code = encode_csi(ch, 0, &fb, &UNIT).unwrap();
            let f_hat = &decode_csi(&code, &UNIT).unwrap().f_hat[0];
            let (_, f) = canonical_factor(&concat_channels(ch, 0, 0), 3, true).unwrap();
            total += subspace_angle(&f, f_hat).unwrap();
        }
        assert!(total <= prev, "({bp},{bs}): {total} > {prev}");
        prev = total;
    }
}

#[test]
fn decoded_codes_are_fixed_points() {
    let fb = FeedbackConfig::default();
    let scale = SnrReference {
        noise_power: 0.01,
        reference_power: 1.0,
    };
    let mut checked = 0;
    for seed in 0..30 {
        let ch = sample_channels(&net(3, 2, 1), seed);
        let code = encode_csi(&ch, 2, &fb, &scale).unwrap();
        if code.snr.avg_codes[0] == code.snr.avg_codes[1] {
            continue;
        }
        let dec = decode_csi(&code, &scale).unwrap();
        let blocks = dec.blocks(0);
        let again = single(3, 2, |dst, src| if dst == 2 { blocks[src].clone() } else { ComplexMatrix::zeros(2, 2) });
        let code2 = encode_csi(&again, 2, &fb, &scale).unwrap();
        assert_eq!(code, code2, "seed {seed}");
        assert_eq!(decode_csi(&code2, &scale).unwrap().f_hat, dec.f_hat);
        checked += 1;
    }
    assert!(checked > 20);
}

#[test]
fn bitstream_accounting_and_round_trip() {
    let ch = sample_channels(&net(3, 2, 38), 77);
    let fb = FeedbackConfig::default();
    let code = encode_csi(&ch, 0, &fb, &UNIT).unwrap();
    assert_eq!(code.payload_bits(), 130 * 38 + 2 * 8 + 38 * 2 * 4);
    let bytes = code.to_bytes().unwrap();
    assert_eq!(bytes.len(), (HEADER_BITS + code.payload_bits()).div_ceil(8));
    assert_eq!(CompressedCsi::from_bytes(&bytes, 38).unwrap(), code);

    let coarse = encode_csi(&ch, 1, &FeedbackConfig::new(4, 6, 8), &UNIT).unwrap();
    assert_eq!(coarse.reported_subcarriers.len(), 6);
    let bytes = coarse.to_bytes().unwrap();
    assert_eq!(CompressedCsi::from_bytes(&bytes, 38).unwrap(), coarse);
    assert!(CompressedCsi::from_bytes(&bytes[..bytes.len() - 1], 38).is_err());
    let mut longer = bytes.clone();
    longer.push(0);
    assert!(CompressedCsi::from_bytes(&longer, 38).is_err());
}

#[test]
fn malformed_codes_rejected() {
    let ch = sample_channels(&net(2, 2, 1), 3);
    let code = encode_csi(&ch, 0, &FeedbackConfig::new(3, 3, 1), &UNIT).unwrap();
    let mut wide = code.clone();
    wide.phi_codes[0][0] = 8;
    assert!(matches!(decode_csi(&wide, &UNIT), Err(Error::Decode(_))));
    assert!(wide.to_bytes().is_err());
    let mut short = code.clone();
    short.psi_codes[0].pop();
    assert!(decode_csi(&short, &UNIT).is_err());
    let mut ng = code;
    ng.n_g = 3;
    assert!(ng.validate().is_err());
}

#[test]
fn nearest_and_interpolation() {
    let dec = DecodedCsi {
        k_users: 1,
        reported_subcarriers: vec![0, 4, 7],
        f_hat: vec![],
        snr_db: vec![vec![10.0], vec![18.0], vec![12.0]],
        channels: vec![],
    };
    assert_eq!(dec.nearest_reported(1), 0);
    assert_eq!(dec.nearest_reported(2), 0);
    assert_eq!(dec.nearest_reported(3), 1);
    assert_eq!(dec.nearest_reported(6), 2);
    assert_eq!(dec.interpolated_snr_db(1), vec![12.0]);
    assert_eq!(dec.interpolated_snr_db(4), vec![18.0]);
    assert_eq!(dec.interpolated_snr_db(6), vec![14.0]);
}

#[test]
fn feedback_config_validation() {
    assert!(FeedbackConfig::default().validate("feedback.").is_ok());
    let err = FeedbackConfig::new(7, 9, 5).validate("feedback.").unwrap_err();
    assert!(err.to_string().starts_with("feedback.n_g"));
    assert!(FeedbackConfig::new(0, 9, 1).validate("").is_err());
    let parsed: FeedbackConfig = serde_json::from_str(r#"{"n_g": 8}"#).unwrap();
    assert_eq!(parsed, FeedbackConfig::new(7, 9, 8));
}
