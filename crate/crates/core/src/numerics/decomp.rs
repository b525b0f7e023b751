use super::matrix::{inner, norm, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;

/// Eigen-decomposition of a Hermitian matrix.
///
/// `values` are ascending; column `i` of `vectors` belongs to `values[i]` and
/// has its largest-magnitude component real and positive.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Singular value decomposition `a = w * diag(lambda) * f^*`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Left singular vectors, `rows x rows`.
    pub w: ComplexMatrix,
    /// Singular values, descending.
    pub lambda: Vec<f64>,
    /// Right singular vectors, `cols x min(rows, cols)`, last row real and nonnegative.
    pub f: ComplexMatrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    /// `w[:, :rank] * diag(lambda) * f^*`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let r = self.rank();
        let mut wl = self.w.col_block(0, r);
        for j in 0..r {
            for i in 0..wl.rows() {
                wl[(i, j)] *= self.lambda[j];
            }
        }
        &wl * &self.f.adjoint()
    }
}

/// Jacobi rotation (c, s, phase) that annihilates the off-diagonal of the
/// Hermitian 2x2 block `[[app, apq], [conj(apq), aqq]]`.
#[inline]
fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> (f64, f64, C64) {
    let mag = apq.norm();
    let phase = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, t * c, phase)
}

/// Post-multiply columns `p`, `q` of `m` by the rotation
/// `[[c, s*phase], [-s*conj(phase), c]]`.
#[inline]
fn rotate_columns(m: &mut ComplexMatrix, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    for k in 0..m.rows() {
        let xp = m[(k, p)];
        let xq = m[(k, q)];
        m[(k, p)] = xp * c - xq * phase.conj() * s;
        m[(k, q)] = xp * phase * s + xq * c;
    }
}

/// Hermitian eigen-decomposition by cyclic complex Jacobi sweeps.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig> {
    if !a.is_square() {
        return Err(Error::Contract(format!(
            "hermitian_eig needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::Contract("hermitian_eig input has non-finite entries".into()));
    }
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOL * a.max_abs().max(1.0) {
        return Err(Error::Contract(format!(
            "hermitian_eig input is not Hermitian (defect {defect:.3e})"
        )));
    }
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| m[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= OFF_DIAGONAL_TOL * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                let (c, s, phase) = jacobi_rotation(m[(p, p)].re, m[(q, q)].re, apq);
                rotate_columns(&mut m, p, q, c, s, phase);
                // rows: R^* applied from the left
                for k in 0..n {
                    let xp = m[(p, k)];
                    let xq = m[(q, k)];
                    m[(p, k)] = xp * c - xq * phase * s;
                    m[(q, k)] = xp * phase.conj() * s + xq * c;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                rotate_columns(&mut v, p, q, c, s, phase);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.col(src);
        normalize_phase_by_largest(&mut col);
        vectors.set_col(dst, &col);
    }
    Ok(HermitianEig { values, vectors })
}

/// Rotate `v` so its first largest-magnitude component is real and positive.
fn normalize_phase_by_largest(v: &mut [C64]) {
    let (idx, mag) = v
        .iter()
        .enumerate()
        .map(|(i, x)| (i, x.norm()))
        .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if mag <= 0.0 {
        return;
    }
    let rot = v[idx].conj() / mag;
    for x in v.iter_mut() {
        *x *= rot;
    }
    v[idx] = C64::new(mag, 0.0);
}

/// Rotate `v` (and `partner`, if given) so the last component of `v` is real and nonnegative.
fn normalize_phase_by_last(v: &mut [C64], partner: Option<&mut [C64]>) {
    let last = *v.last().expect("non-empty vector");
    let mag = last.norm();
    if mag == 0.0 {
        return;
    }
    let rot = last.conj() / mag;
    for x in v.iter_mut() {
        *x *= rot;
    }
    *v.last_mut().unwrap() = C64::new(mag, 0.0);
    if let Some(p) = partner {
        for x in p.iter_mut() {
            *x *= rot;
        }
    }
}

/// Thin SVD of a tall matrix (`rows >= cols`) by one-sided Jacobi.
///
/// Returns `(u_cols, sigma, v)` with `u_cols[j]` either unit-norm or empty
/// (for numerically zero singular values), unsorted.
fn one_sided_jacobi(a: &ComplexMatrix) -> (Vec<Vec<C64>>, Vec<f64>, ComplexMatrix) {
    let n = a.cols();
    let mut g = a.clone();
    let mut v = ComplexMatrix::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let gp = g.col(p);
                let gq = g.col(q);
                let alpha = inner(&gp, &gp).re;
                let beta = inner(&gq, &gq).re;
                let gamma = inner(&gp, &gq);
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt() || gamma.norm() <= f64::MIN_POSITIVE
                {
                    continue;
                }
                rotated = true;
                let (c, s, phase) = jacobi_rotation(alpha, beta, gamma);
                rotate_columns(&mut g, p, q, c, s, phase);
                rotate_columns(&mut v, p, q, c, s, phase);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..n).map(|j| norm(&g.col(j))).collect();
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let cutoff = smax * 1e-14 * (a.rows().max(n) as f64);
    let u_cols = (0..n)
        .map(|j| {
            if sigma[j] > cutoff && sigma[j] > 0.0 {
                g.col(j).iter().map(|x| x / sigma[j]).collect()
            } else {
                Vec::new()
            }
        })
        .collect();
    (u_cols, sigma, v)
}

/// Fill the empty entries of `cols` so that all columns are orthonormal in
/// `dim` dimensions, drawing candidates from the canonical basis.
fn complete_basis(cols: &mut [Vec<C64>], dim: usize) {
    let mut candidate = 0usize;
    for j in 0..cols.len() {
        if !cols[j].is_empty() {
            continue;
        }
        loop {
            assert!(candidate < dim, "basis completion ran out of candidates");
            let mut e = vec![ZERO; dim];
            e[candidate] = ONE;
            candidate += 1;
            for _ in 0..2 {
                for q in cols.iter().filter(|c| !c.is_empty()) {
                    let coeff = inner(q, &e);
                    for (x, qi) in e.iter_mut().zip(q) {
                        *x -= coeff * qi;
                    }
                }
            }
            let nrm = norm(&e);
            if nrm > 1e-8 {
                cols[j] = e.iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
}

/// Singular value decomposition.
pub fn svd(a: &ComplexMatrix) -> Result<SvdResult> {
    if !a.is_finite() {
        return Err(Error::Contract("svd input has non-finite entries".into()));
    }
    let (m, n) = (a.rows(), a.cols());
    let tall = m >= n;
    let work = if tall { a.clone() } else { a.adjoint() };
    let (u_cols, sigma, v) = one_sided_jacobi(&work);
    let k = sigma.len();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
    let lambda: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
    let mut left: Vec<Vec<C64>> = order.iter().map(|&i| u_cols[i].clone()).collect();
    let right: Vec<Vec<C64>> = order.iter().map(|&i| v.col(i)).collect();

    // For the tall case `left` spans the column space of `a` (size m) and
    // `right` is square (n x n). For the wide case the roles swap.
    let (mut w_cols, mut f_cols) = if tall {
        left.resize(m, Vec::new());
        complete_basis(&mut left, m);
        (left, right)
    } else {
        complete_basis(&mut left, n);
        (right, left)
    };
    for j in 0..k {
        let (wj, fj) = (&mut w_cols[j], &mut f_cols[j]);
        normalize_phase_by_last(fj, Some(wj));
    }

    let mut w = ComplexMatrix::zeros(m, m);
    for (j, c) in w_cols.iter().enumerate() {
        w.set_col(j, c);
    }
    let mut f = ComplexMatrix::zeros(n, k);
    for (j, c) in f_cols.iter().enumerate() {
        f.set_col(j, c);
    }
    Ok(SvdResult { w, lambda, f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn orthonormality_defect(q: &ComplexMatrix) -> f64 {
        (&q.adjoint() * q).sub(&ComplexMatrix::identity(q.cols())).max_abs()
    }

    #[test]
    fn eig_of_diagonal() {
        let eig = hermitian_eig(&ComplexMatrix::from_real_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(eig.values, vec![1.0, 3.0]);
        assert_eq!(eig.vectors.col(0), vec![ZERO, ONE]);
        assert_eq!(eig.vectors.col(1), vec![ONE, ZERO]);
    }

    #[test]
    fn eig_of_identity_is_orthonormal() {
        let eig = hermitian_eig(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0]);
        assert!(orthonormality_defect(&eig.vectors) < 1e-15);
    }

    #[test]
    fn eig_residual_on_random_hermitian() {
        for seed in 0..20 {
            let b = random_matrix(4, 4, seed);
            let a = b.add(&b.adjoint());
            let eig = hermitian_eig(&a).unwrap();
            let lhs = &a * &eig.vectors;
            let mut rhs = eig.vectors.clone();
            for j in 0..4 {
                for i in 0..4 {
                    rhs[(i, j)] *= eig.values[j];
                }
            }
            assert!(lhs.sub(&rhs).max_abs() < 1e-9, "seed {seed}");
            assert!(orthonormality_defect(&eig.vectors) < 1e-10);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
            for j in 0..4 {
                let col = eig.vectors.col(j);
                let big = col.iter().map(|x| x.norm()).fold(0.0, f64::max);
                let first = col.iter().find(|x| x.norm() == big).unwrap();
                assert!(first.im == 0.0 && first.re > 0.0);
            }
        }
    }

    #[test]
    fn eig_rejects_bad_input() {
        assert!(hermitian_eig(&ComplexMatrix::zeros(2, 3)).is_err());
        let mut a = ComplexMatrix::identity(2);
        a[(0, 1)] = C64::new(1.0, 0.0);
        assert!(hermitian_eig(&a).is_err());
    }

    #[test]
    fn svd_of_diagonal() {
        let s = svd(&ComplexMatrix::from_real_diag(&[2.0, 1.0])).unwrap();
        assert_eq!(s.lambda, vec![2.0, 1.0]);
        assert_eq!(s.w, ComplexMatrix::identity(2));
        assert_eq!(s.f, ComplexMatrix::identity(2));
    }

    #[test]
    fn svd_of_zero() {
        let s = svd(&ComplexMatrix::zeros(2, 2)).unwrap();
        assert_eq!(s.lambda, vec![0.0, 0.0]);
        assert!(orthonormality_defect(&s.w) < 1e-15);
        assert!(orthonormality_defect(&s.f) < 1e-15);
    }

    #[test]
    fn svd_reconstructs_random_shapes() {
        for (seed, (r, c)) in [(2, 6), (6, 2), (3, 3), (2, 2), (4, 12), (1, 3), (3, 1)]
            .into_iter()
            .enumerate()
        {
            let a = random_matrix(r, c, seed as u64 + 100);
            let s = svd(&a).unwrap();
            let rel = s.reconstruct().sub(&a).frobenius_norm() / a.frobenius_norm();
            assert!(rel < 1e-9, "{r}x{c}: {rel}");
            assert!(orthonormality_defect(&s.w) < 1e-10);
            assert!(orthonormality_defect(&s.f) < 1e-10);
            assert_eq!(s.f.cols(), r.min(c));
            assert!(s.lambda.windows(2).all(|w| w[0] >= w[1]));
            for j in 0..s.f.cols() {
                let last = s.f[(c - 1, j)];
                assert!(last.im == 0.0 && last.re >= 0.0);
            }
        }
    }

    #[test]
    fn svd_of_rank_deficient_wide_matrix() {
        let row = random_matrix(1, 4, 9);
        let a = ComplexMatrix::from_fn(2, 4, |_, c| row[(0, c)]);
        let s = svd(&a).unwrap();
        assert!(s.lambda[1] < 1e-12);
        assert!(orthonormality_defect(&s.f) < 1e-10);
        assert!(s.reconstruct().sub(&a).frobenius_norm() < 1e-12);
    }
}
