//! Phase/Givens parameterization of a tall matrix with orthonormal columns
//! whose last row is real and nonnegative.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::numerics::{givens_zero, ComplexMatrix, C64};

/// Angles in extraction order: for column `i`, `phi` covers rows `i..n-1`
/// (all but the last) and `psi` covers rows `i+1..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GivensAngles {
    pub phi: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
}

/// Number of columns that carry angles.
pub(crate) fn angle_columns(n: usize, m: usize) -> usize {
    m.min(n.saturating_sub(1))
}

/// Angle count per kind for an `n x m` matrix.
pub fn angle_count(n: usize, m: usize) -> usize {
    (0..angle_columns(n, m)).map(|i| n - 1 - i).sum()
}

fn rotate_rows(v: &mut ComplexMatrix, i: usize, l: usize, c: f64, s: f64) {
    for j in 0..v.cols() {
        let (a, b) = (v[(i, j)], v[(l, j)]);
        v[(i, j)] = a * c + b * s;
        v[(l, j)] = b * c - a * s;
    }
}

/// Extract the angle sequence. The last row of `f` is assumed real and
/// nonnegative; its imaginary part is ignored.
pub fn decompose(f: &ComplexMatrix) -> GivensAngles {
    let (n, m) = (f.rows(), f.cols());
    let mut v = f.clone();
    let mut phi = Vec::new();
    let mut psi = Vec::new();
    for i in 0..angle_columns(n, m) {
        let mut col_phi = Vec::with_capacity(n - 1 - i);
        for r in i..n - 1 {
            let p = v[(r, i)].arg().rem_euclid(TAU);
            let rot = C64::from_polar(1.0, -p);
            for j in 0..m {
                v[(r, j)] *= rot;
            }
            col_phi.push(p);
        }
        let mut col_psi = Vec::with_capacity(n - 1 - i);
        for l in i + 1..n {
            let g = givens_zero(v[(i, i)].re, v[(l, i)].re);
            rotate_rows(&mut v, i, l, g.c, g.s);
            col_psi.push(g.angle());
        }
        phi.push(col_phi);
        psi.push(col_psi);
    }
    GivensAngles { phi, psi }
}

/// Rebuild `D_1 G_21^T ... G_n1^T D_2 ... I~` from an angle sequence.
pub fn reconstruct(angles: &GivensAngles, n: usize, m: usize) -> ComplexMatrix {
    let mut x = ComplexMatrix::eye(n, m);
    for i in (0..angle_columns(n, m)).rev() {
        for (t, l) in (i + 1..n).enumerate().rev() {
            let (s, c) = angles.psi[i][t].sin_cos();
            rotate_rows(&mut x, i, l, c, -s);
        }
        for (t, r) in (i..n - 1).enumerate() {
            let rot = C64::from_polar(1.0, angles.phi[i][t]);
            for j in 0..m {
                x[(r, j)] *= rot;
            }
        }
    }
    x
}

/// Uniform phase quantizer over `[0, 2pi)`; zero is a reconstruction point.
pub fn quantize_phi(phi: f64, bits: u8) -> u32 {
    let levels = 1u64 << bits;
    let step = TAU / levels as f64;
    ((phi.rem_euclid(TAU) / step).round() as u64 % levels) as u32
}

pub fn dequantize_phi(code: u32, bits: u8) -> f64 {
    code as f64 * TAU / (1u64 << bits) as f64
}

fn psi_step(bits: u8) -> f64 {
    FRAC_PI_2 / ((1u64 << bits) - 1) as f64
}

/// Uniform quantizer over `[0, pi/2]` with both endpoints as reconstruction points.
pub fn quantize_psi(psi: f64, bits: u8) -> u32 {
    (psi.clamp(0.0, FRAC_PI_2) / psi_step(bits)).round() as u32
}

pub fn dequantize_psi(code: u32, bits: u8) -> f64 {
    code as f64 * psi_step(bits)
}
