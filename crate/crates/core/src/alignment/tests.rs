use super::*;
use crate::channel::{sample_channels, NetworkConfig};
use crate::numerics::C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn e(i: usize, m: usize) -> ComplexMatrix {
    let mut v = ComplexMatrix::zeros(m, 1);
    v[(i, 0)] = c(1.0);
    v
}

fn cfg(k: usize, m: usize, d: usize, n0: f64) -> NetworkConfig {
    NetworkConfig {
        k_users: k,
        m_antennas: m,
        streams: d,
        noise_power: n0,
        p_max: 1.0,
        subcarriers: 1,
    }
}

fn random_unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<C64> {
    normalized(&(0..m).map(|_| crate::rng::complex_gaussian(rng)).collect::<Vec<_>>())
}

fn quad(q: &ComplexMatrix, x: &[C64]) -> f64 {
    inner(x, &q.mul_vec(x)).re
}

#[test]
fn covariance_empty_for_single_user() {
    let cfg = cfg(1, 2, 1, 1.0);
    let ch = sample_channels(&cfg, 1).narrowband(0);
    let st = TransceiverState::random(&cfg, 1.0, 2);
    assert_eq!(interference_covariance(&st, &ch, 0, &cfg), ComplexMatrix::zeros(2, 2));
}

#[test]
fn covariance_single_interferer() {
    let cfg = cfg(2, 2, 1, 1.0);
    let ch = Narrowband::from_fn(2, 2, |_, _| ComplexMatrix::identity(2));
    let st = TransceiverState {
        v: vec![e(0, 2), e(0, 2)],
        u: vec![e(1, 2), e(1, 2)],
        p: vec![2.0, 2.0],
    };
    let q = interference_covariance(&st, &ch, 0, &cfg);
    assert_eq!(q, ComplexMatrix::from_real_diag(&[2.0, 0.0]));
    assert_eq!(leakage(&st, &ch, 0, &cfg), 0.0);
    let st1 = TransceiverState { u: vec![e(0, 2), e(0, 2)], ..st };
    assert_eq!(leakage(&st1, &ch, 0, &cfg), 2.0);
}

#[test]
fn covariance_and_leakage_match_brute_force() {
    let cfg = NetworkConfig { p_max: 3.0, ..cfg(3, 4, 2, 0.5) };
    let ch = sample_channels(&cfg, 21).narrowband(0);
    let mut st = TransceiverState::random(&cfg, 1.0, 5);
    st.p = vec![0.7, 1.3, 2.9];
    for k in 0..3 {
        let q = interference_covariance(&st, &ch, k, &cfg);
        // entrywise re-summation straight from the definition
        for r in 0..4 {
            for cc in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for j in (0..3).filter(|&j| j != k) {
                    for l in 0..2 {
                        let mut hv_r = C64::new(0.0, 0.0);
                        let mut hv_c = C64::new(0.0, 0.0);
                        for a in 0..4 {
                            hv_r += ch.h(k, j)[(r, a)] * st.v[j][(a, l)];
                            hv_c += ch.h(k, j)[(cc, a)] * st.v[j][(a, l)];
                        }
                        acc += hv_r * hv_c.conj() * (st.p[j] / 2.0);
                    }
                }
                assert!((q[(r, cc)] - acc).norm() < 1e-12);
            }
        }
        assert!(q.hermitian_defect() < 1e-10);
        let eig = hermitian_eig(&q).unwrap();
        assert!(eig.values[0] > -1e-10);
        let by_columns: f64 = (0..2).map(|i| quad(&q, &st.u[k].col(i))).sum();
        assert!((leakage(&st, &ch, k, &cfg) - by_columns).abs() < 1e-12);
    }
}

#[test]
fn leakage_filter_examples() {
    let u = leakage_filter_update(&ComplexMatrix::from_real_diag(&[2.0, 0.0]), 1).unwrap();
    assert_eq!(u, e(1, 2));
    let u = leakage_filter_update(&ComplexMatrix::identity(2), 1).unwrap();
    assert!((quad(&ComplexMatrix::identity(2), &u.col(0)) - 1.0).abs() < 1e-15);
    assert!(leakage_filter_update(&ComplexMatrix::identity(2), 3).is_err());
}

#[test]
fn leakage_filter_beats_random_candidates() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..5 {
        let b = random_matrix(&mut rng, 3, 3);
        let q = &b * &b.adjoint();
        let u = leakage_filter_update(&q, 1).unwrap().col(0);
        let best = quad(&q, &u);
        for _ in 0..1000 {
            let w = random_unit(&mut rng, 3);
            assert!(best <= quad(&q, &w) + 1e-12);
        }
    }
}

#[test]
fn max_sinr_isotropic_case_is_matched_filter() {
    let cfg = cfg(1, 2, 1, 1.0);
    let ch = Narrowband::from_fn(1, 2, |_, _| ComplexMatrix::identity(2));
    let st = TransceiverState {
        v: vec![e(0, 2)],
        u: vec![e(1, 2)],
        p: vec![1.0],
    };
    assert_eq!(
        stream_interference_covariance(&st, &ch, 0, 0, &cfg),
        ComplexMatrix::identity(2)
    );
    assert_eq!(max_sinr_filter_update(&st, &ch, 0, 0, &cfg), e(0, 2).col(0));
}

fn stream_sinr(st: &TransceiverState, ch: &Narrowband, k: usize, d: usize, cfg: &NetworkConfig, u: &[C64]) -> f64 {
    let q = stream_interference_covariance(st, ch, k, d, cfg);
    let hv = ch.h(k, k).mul_vec(&st.v[k].col(d));
    cfg.stream_power(st.p[k]) * inner(u, &hv).norm_sqr() / quad(&q, u)
}

#[test]
fn max_sinr_dominates_random_filters() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (k_users, m, d) in [(1, 3, 2), (3, 2, 1), (3, 4, 2)] {
        let cfg = cfg(k_users, m, d, 0.3);
        let ch = sample_channels(&cfg, 40 + m as u64).narrowband(0);
        let st = TransceiverState::random(&cfg, 2.0, 3);
        for k in 0..k_users {
            for s in 0..d {
                let u = max_sinr_filter_update(&st, &ch, k, s, &cfg);
                assert!((crate::numerics::norm(&u) - 1.0).abs() < 1e-12);
                let best = stream_sinr(&st, &ch, k, s, &cfg, &u);
                for _ in 0..1000 {
                    let w = random_unit(&mut rng, m);
                    assert!(best >= stream_sinr(&st, &ch, k, s, &cfg, &w) * (1.0 - 1e-12));
                }
            }
        }
    }
}

#[test]
fn max_sinr_nulls_strong_interferer_without_noise() {
    let cfg = cfg(2, 2, 1, 0.0);
    let ch = sample_channels(&NetworkConfig { noise_power: 1.0, ..cfg.clone() }, 3).narrowband(0);
    let mut st = TransceiverState::random(&cfg, 1.0, 4);
    st.p = vec![1.0, 1e4];
    let u = max_sinr_filter_update(&st, &ch, 0, 0, &cfg);
    let signal = inner(&u, &ch.h(0, 0).mul_vec(&st.v[0].col(0))).norm_sqr();
    let interference = inner(&u, &ch.h(0, 1).mul_vec(&st.v[1].col(0))).norm_sqr();
    assert!(interference < 1e-6 * signal, "{interference} vs {signal}");
}

#[test]
fn single_user_converges_immediately() {
    let cfg = cfg(1, 2, 1, 1.0);
    let ch = sample_channels(&cfg, 1).narrowband(0);
    let (_, rep) = run_iterative_alignment(&ch, &cfg, AlignmentVariant::LeakageMin, 10, 1e-6, 0).unwrap();
    assert_eq!(rep.iterations, 1);
    assert_eq!(rep.residual, 0.0);
    assert!(rep.converged);
}

#[test]
fn three_user_2x2_reaches_alignment() {
    let cfg = NetworkConfig::three_user_2x2(1.0, 1.0, 1);
    let ch = sample_channels(&cfg, 2024).narrowband(0);
    let (st, rep) = run_iterative_alignment(&ch, &cfg, AlignmentVariant::LeakageMin, 500, 1e-6, 1).unwrap();
    assert!(rep.converged, "residual {}", rep.residual);
    assert!(rep.residual < 1e-6);
    let check = alignment_residual(&st, &ch, 1e-6).unwrap();
    assert!(check.cross_leakage <= 1e-3);
    assert!(check.desired_rank_ok);
    for k in 0..3 {
        let g = &st.v[k].adjoint() * &st.v[k];
        assert!((g[(0, 0)].re - 1.0).abs() < 1e-8);
    }
}

#[test]
fn rejects_bad_iteration_budget() {
    let cfg = cfg(2, 2, 1, 1.0);
    let ch = sample_channels(&cfg, 1).narrowband(0);
    assert!(run_iterative_alignment(&ch, &cfg, AlignmentVariant::MaxSinr, 0, 1e-6, 0).is_err());
    assert!(run_iterative_alignment(&ch, &cfg, AlignmentVariant::MaxSinr, 5, 0.0, 0).is_err());
}

#[test]
fn max_sinr_run_reports_unit_columns() {
    let cfg = NetworkConfig::three_user_2x2(0.01, 1.0, 1);
    let ch = sample_channels(&cfg, 9).narrowband(0);
    let (st, rep) = run_iterative_alignment(&ch, &cfg, AlignmentVariant::MaxSinr, 300, 1e-9, 3).unwrap();
    assert_eq!(rep.leakage_trace.len(), rep.iterations);
    for k in 0..3 {
        assert!((crate::numerics::norm(&st.v[k].col(0)) - 1.0).abs() < 1e-12);
        assert!((crate::numerics::norm(&st.u[k].col(0)) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn aligned_toy_has_zero_residual() {
    let ch = Narrowband::from_fn(2, 2, |_, _| ComplexMatrix::identity(2));
    let st = TransceiverState {
        v: vec![e(0, 2), e(1, 2)],
        u: vec![e(0, 2), e(1, 2)],
        p: vec![1.0, 1.0],
    };
    let chk = alignment_residual(&st, &ch, 1e-9).unwrap();
    assert_eq!(chk.cross_leakage, 0.0);
    assert!(chk.desired_rank_ok);

    let cfg = cfg(2, 2, 1, 1.0);
    let rnd = sample_channels(&cfg, 5).narrowband(0);
    let st = TransceiverState::random(&cfg, 1.0, 6);
    assert!(alignment_residual(&st, &rnd, 1e-9).unwrap().cross_leakage > 0.0);
}

#[test]
fn reverse_leakage_equals_forward_leakage() {
    let cfg = cfg(3, 4, 2, 1.0);
    for seed in 0..10 {
        let ch = sample_channels(&cfg, seed).narrowband(0);
        let st = TransceiverState::random(&cfg, 1.5, seed + 100);
        let fwd: f64 = (0..3).map(|k| leakage(&st, &ch, k, &cfg)).sum();
        let rev_state = st.reversed(st.p.clone());
        let rev_ch = ch.reversed();
        let rev: f64 = (0..3).map(|k| leakage(&rev_state, &rev_ch, k, &cfg)).sum();
        assert!((fwd - rev).abs() <= 1e-12 * fwd.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn leakage_trace_is_monotone(seed in 0u64..10_000, m in 2usize..=4) {
        let cfg = cfg(3, m, m / 2, 1.0);
        let ch = sample_channels(&cfg, seed).narrowband(0);
        let (_, rep) = run_iterative_alignment(&ch, &cfg, AlignmentVariant::LeakageMin, 60, 1e-12, seed).unwrap();
        for w in rep.leakage_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
    }
}
