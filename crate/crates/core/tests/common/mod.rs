//! Shared test oracles, independent of the solver path: naive Fourier
//! synthesis against the continuum symbol, overflow-safe separable profiles,
//! and Diophantine data for the almost-period tests.

#![allow(dead_code)]

use striplab::{BoundaryField, StripGrid};

/// Naive DFT; `O(n^2)` on purpose, no shared code with the library.
pub fn dft(v: &[f64]) -> Vec<(f64, f64)> {
    let n = v.len();
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, &x) in v.iter().enumerate() {
            let arg = -std::f64::consts::TAU * (m * i) as f64 / n as f64;
            re += x * arg.cos();
            im += x * arg.sin();
        }
        out.push((re / n as f64, im / n as f64));
    }
    out
}

pub fn idft(c: &[(f64, f64)]) -> Vec<f64> {
    let n = c.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = 0.0;
        for (m, &(re, im)) in c.iter().enumerate() {
            let arg = std::f64::consts::TAU * (m * i) as f64 / n as f64;
            acc += re * arg.cos() - im * arg.sin();
        }
        out.push(acc);
    }
    out
}

/// Continuum symbol of the flat-Laplacian boundary operator on a strip of
/// the given depth: `-|k| coth(|k| r)`, with the constant mode at `-1/r`.
pub fn laplace_dtn_symbol(k: f64, depth: f64) -> f64 {
    if k == 0.0 {
        -1.0 / depth
    } else {
        -k.abs() / (k.abs() * depth).tanh()
    }
}

/// Separation-of-variables oracle for the linear boundary operator applied
/// to arbitrary sampled data: Fourier-transform, multiply by the continuum
/// symbol, transform back.
pub fn linear_dtn_fourier_oracle(v: &BoundaryField) -> BoundaryField {
    let g = *v.grid();
    assert_eq!(g.boundary_dim(), 1);
    let n = g.n_tangential();
    let mut coeffs = dft(v.values());
    for (m, c) in coeffs.iter_mut().enumerate() {
        let m_signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
        let k = std::f64::consts::TAU * m_signed / g.period();
        let s = laplace_dtn_symbol(k, g.depth());
        c.0 *= s;
        c.1 *= s;
    }
    BoundaryField::from_values(g, idft(&coeffs)).unwrap()
}

/// `sinh(k (r - y)) / sinh(k r)` evaluated without overflow.
pub fn dirichlet_mode_profile(k: f64, depth: f64, y: f64) -> f64 {
    let k = k.abs();
    if k == 0.0 {
        return 1.0 - y / depth;
    }
    (-k * y).exp() * (1.0 - (-2.0 * k * (depth - y)).exp()) / (1.0 - (-2.0 * k * depth).exp())
}

/// `sinh(k (r - y)) / (k cosh(k r))` evaluated without overflow.
pub fn neumann_mode_profile(k: f64, depth: f64, y: f64) -> f64 {
    let k = k.abs();
    ((-k * y).exp() - (-k * (2.0 * depth - y)).exp()) / (k * (1.0 + (-2.0 * k * depth).exp()))
}

/// Continued-fraction convergents `p/q` of sqrt(2).
pub const SQRT2_CONVERGENTS: [(i64, i64); 6] = [(1, 1), (3, 2), (7, 5), (17, 12), (41, 29), (99, 70)];

pub fn cos_mode(grid: StripGrid, mode: usize, amp: f64) -> BoundaryField {
    let k = std::f64::consts::TAU * mode as f64 / grid.period();
    BoundaryField::from_fn(grid, |x, _| amp * (k * x).cos())
}
