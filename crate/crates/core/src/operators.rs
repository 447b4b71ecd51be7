//! The fully nonlinear second-order operators acting on discrete Hessians:
//! linear trace forms, the Pucci extremal envelopes, and small inf-sup
//! (Bellman) families, together with their ellipticity metadata.

use crate::grid::BulkField;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OperatorError {
    #[error("matrix is not symmetric: |A - A^T| = {0}")]
    NonSymmetricInput(f64),
    #[error("ellipticity constants must satisfy 0 < lambda <= Lambda, got {lambda}, {upper}")]
    BadEllipticity { lambda: f64, upper: f64 },
    #[error("matrix eigenvalues [{min}, {max}] escape the ellipticity band [{lambda}, {upper}]")]
    OutsideEllipticityBand { min: f64, max: f64, lambda: f64, upper: f64 },
    #[error("Bellman family must be a nonempty min-of-max table")]
    EmptyBellmanFamily,
    #[error("Hessian requested at boundary node (k = {0})")]
    BoundaryNode(usize),
    #[error("matrix dimension {0} not supported (must be 2 or 3)")]
    BadDimension(usize),
}

/// Ellipticity band `0 < lambda <= Lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticityConstants {
    lambda: f64,
    upper: f64,
}

impl EllipticityConstants {
    pub fn new(lambda: f64, upper: f64) -> Result<Self, OperatorError> {
        if !(lambda > 0.0) || !(upper >= lambda) {
            return Err(OperatorError::BadEllipticity { lambda, upper });
        }
        Ok(Self { lambda, upper })
    }

    /// Lower constant (lambda).
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Upper constant (Lambda).
    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn unit() -> Self {
        Self { lambda: 1.0, upper: 1.0 }
    }
}

/// Small dense symmetric matrix (2x2 or 3x3), symmetric by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    m: [[f64; 3]; 3],
}

impl SymMatrix {
    pub fn zero(dim: usize) -> Result<Self, OperatorError> {
        if dim != 2 && dim != 3 {
            return Err(OperatorError::BadDimension(dim));
        }
        Ok(Self { dim, m: [[0.0; 3]; 3] })
    }

    pub fn identity(dim: usize) -> Result<Self, OperatorError> {
        let mut s = Self::zero(dim)?;
        for i in 0..dim {
            s.m[i][i] = 1.0;
        }
        Ok(s)
    }

    pub fn diag(entries: &[f64]) -> Result<Self, OperatorError> {
        let mut s = Self::zero(entries.len())?;
        for (i, &e) in entries.iter().enumerate() {
            s.m[i][i] = e;
        }
        Ok(s)
    }

    /// Build from row-major entries, rejecting non-symmetric input. The
    /// asymmetry tolerance is relative to the matrix magnitude.
    pub fn from_rows(rows: &[f64], dim: usize) -> Result<Self, OperatorError> {
        if dim != 2 && dim != 3 {
            return Err(OperatorError::BadDimension(dim));
        }
        assert_eq!(rows.len(), dim * dim, "row-major entry count");
        let scale: f64 = rows.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut s = Self::zero(dim)?;
        let mut defect = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let a = rows[i * dim + j];
                let b = rows[j * dim + i];
                defect = defect.max((a - b).abs());
                s.m[i][j] = 0.5 * (a + b);
            }
        }
        if defect > 1e-12 * (1.0 + scale) {
            return Err(OperatorError::NonSymmetricInput(defect));
        }
        Ok(s)
    }

    pub fn sym2(xx: f64, xy: f64, yy: f64) -> Self {
        Self { dim: 2, m: [[xx, xy, 0.0], [xy, yy, 0.0], [0.0, 0.0, 0.0]] }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn sym3(xx: f64, xy: f64, xz: f64, yy: f64, yz: f64, zz: f64) -> Self {
        Self { dim: 3, m: [[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] = v;
        self.m[j][i] = v;
    }

    pub fn max_abs(&self) -> f64 {
        let mut out = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out = out.max(self.m[i][j].abs());
            }
        }
        out
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] += other.m[i][j];
            }
        }
        out
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] -= other.m[i][j];
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> SymMatrix {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] *= a;
            }
        }
        out
    }

    /// `Tr(self * other)` for symmetric matrices.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += self.m[i][j] * other.m[j][i];
            }
        }
        acc
    }

    /// Eigenvalues in ascending order; the tail of the array is unused for
    /// 2x2 input. Closed form for 2x2, trigonometric Cardano form for 3x3.
    pub fn eigenvalues(&self) -> [f64; 3] {
        match self.dim {
            2 => {
                let (e1, e2) = eig2(self.m[0][0], self.m[0][1], self.m[1][1]);
                [e1, e2, 0.0]
            }
            _ => eig3(&self.m),
        }
    }
}

#[inline]
pub(crate) fn eig2(xx: f64, xy: f64, yy: f64) -> (f64, f64) {
    let mean = 0.5 * (xx + yy);
    let dev = (0.25 * (xx - yy) * (xx - yy) + xy * xy).sqrt();
    (mean - dev, mean + dev)
}

/// Eigenvalues of a symmetric 3x3 matrix, ascending.
fn eig3(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    if p1 == 0.0 {
        let mut d = [m[0][0], m[1][1], m[2][2]];
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return d;
    }
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let inv_p = 1.0 / p;
    let mut b = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) * inv_p;
        }
    }
    let detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (detb / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e_hi = q + 2.0 * p * phi.cos();
    let e_lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let e_mid = 3.0 * q - e_hi - e_lo;
    [e_lo, e_mid, e_hi]
}

#[inline]
pub(crate) fn pucci_from_eigs(eigs: &[f64], lambda: f64, upper: f64, plus: bool) -> f64 {
    let mut acc = 0.0;
    for &e in eigs {
        if plus {
            acc += if e >= 0.0 { upper * e } else { lambda * e };
        } else {
            acc += if e >= 0.0 { lambda * e } else { upper * e };
        }
    }
    acc
}

/// The operator family: linear trace form, Pucci envelopes, or a finite
/// min-of-max Bellman table of linear forms.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Linear(SymMatrix),
    PucciMinus,
    PucciPlus,
    /// Outer list: minimum; inner lists: maximum over trace forms.
    Bellman(Vec<Vec<SymMatrix>>),
}

/// A uniformly elliptic, positively 1-homogeneous operator on symmetric
/// matrices, with `F(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticOperator {
    kind: OperatorKind,
    constants: EllipticityConstants,
}

fn check_band(a: &SymMatrix, c: &EllipticityConstants) -> Result<(), OperatorError> {
    let eigs = a.eigenvalues();
    let n = a.dim();
    let min = eigs[..n].iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eigs[..n].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-10 * (1.0 + a.max_abs());
    if min < c.lambda() - slack || max > c.upper() + slack {
        return Err(OperatorError::OutsideEllipticityBand {
            min,
            max,
            lambda: c.lambda(),
            upper: c.upper(),
        });
    }
    Ok(())
}

impl EllipticOperator {
    pub fn linear(a: SymMatrix, constants: EllipticityConstants) -> Result<Self, OperatorError> {
        check_band(&a, &constants)?;
        Ok(Self { kind: OperatorKind::Linear(a), constants })
    }

    /// `Tr(H)` with unit ellipticity band, in `dim` ambient dimensions.
    pub fn laplacian(dim: usize) -> Self {
        Self {
            kind: OperatorKind::Linear(SymMatrix::identity(dim).expect("dim 2 or 3")),
            constants: EllipticityConstants::unit(),
        }
    }

    pub fn pucci_minus(constants: EllipticityConstants) -> Self {
        Self { kind: OperatorKind::PucciMinus, constants }
    }

    pub fn pucci_plus(constants: EllipticityConstants) -> Self {
        Self { kind: OperatorKind::PucciPlus, constants }
    }

    pub fn bellman(
        groups: Vec<Vec<SymMatrix>>,
        constants: EllipticityConstants,
    ) -> Result<Self, OperatorError> {
        if groups.is_empty() || groups.iter().any(|g| g.is_empty()) {
            return Err(OperatorError::EmptyBellmanFamily);
        }
        for g in &groups {
            for a in g {
                check_band(a, &constants)?;
            }
        }
        Ok(Self { kind: OperatorKind::Bellman(groups), constants })
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn constants(&self) -> EllipticityConstants {
        self.constants
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, OperatorKind::Linear(_))
    }

    /// Evaluate `F(H)`.
    pub fn evaluate(&self, h: &SymMatrix) -> f64 {
        match &self.kind {
            OperatorKind::Linear(a) => a.trace_product(h),
            OperatorKind::PucciMinus => {
                let eigs = h.eigenvalues();
                pucci_from_eigs(&eigs[..h.dim()], self.constants.lambda(), self.constants.upper(), false)
            }
            OperatorKind::PucciPlus => {
                let eigs = h.eigenvalues();
                pucci_from_eigs(&eigs[..h.dim()], self.constants.lambda(), self.constants.upper(), true)
            }
            OperatorKind::Bellman(groups) => {
                let mut outer = f64::INFINITY;
                for g in groups {
                    let mut inner = f64::NEG_INFINITY;
                    for a in g {
                        inner = inner.max(a.trace_product(h));
                    }
                    outer = outer.min(inner);
                }
                outer
            }
        }
    }

    /// Pucci extremal values of `H` for this operator's ellipticity band.
    pub fn pucci_envelope(&self, h: &SymMatrix) -> (f64, f64) {
        let eigs = h.eigenvalues();
        let e = &eigs[..h.dim()];
        (
            pucci_from_eigs(e, self.constants.lambda(), self.constants.upper(), false),
            pucci_from_eigs(e, self.constants.lambda(), self.constants.upper(), true),
        )
    }

    /// Check `M^-(H1 - H2) <= F(H1) - F(H2) <= M^+(H1 - H2)` with a small
    /// magnitude-relative tolerance.
    pub fn ellipticity_sandwich_check(&self, h1: &SymMatrix, h2: &SymMatrix) -> bool {
        let diff = h1.sub(h2);
        let (lo, hi) = self.pucci_envelope(&diff);
        let gap = self.evaluate(h1) - self.evaluate(h2);
        let tol = 1e-10 * (h1.max_abs() + h2.max_abs() + 1.0);
        lo - tol <= gap && gap <= hi + tol
    }
}

/// Centered-difference Hessian of a bulk field at an interior node. Tangential
/// indices wrap; requesting a boundary layer is an error.
pub fn discrete_hessian(u: &BulkField, i: usize, j: usize, k: usize) -> Result<SymMatrix, OperatorError> {
    let g = *u.grid();
    if k == 0 || k == g.n_normal() - 1 {
        return Err(OperatorError::BoundaryNode(k));
    }
    let ht = g.h_tangential();
    let hn = g.h_normal();
    let ip = g.wrap(i as isize + 1);
    let im = g.wrap(i as isize - 1);
    if g.boundary_dim() == 1 {
        let c = u.at(i, 0, k);
        let uxx = (u.at(im, 0, k) - 2.0 * c + u.at(ip, 0, k)) / (ht * ht);
        let uyy = (u.at(i, 0, k - 1) - 2.0 * c + u.at(i, 0, k + 1)) / (hn * hn);
        let uxy = (u.at(ip, 0, k + 1) - u.at(ip, 0, k - 1) - u.at(im, 0, k + 1)
            + u.at(im, 0, k - 1))
            / (4.0 * ht * hn);
        Ok(SymMatrix::sym2(uxx, uxy, uyy))
    } else {
        let jp = g.wrap(j as isize + 1);
        let jm = g.wrap(j as isize - 1);
        let c = u.at(i, j, k);
        let uxx = (u.at(im, j, k) - 2.0 * c + u.at(ip, j, k)) / (ht * ht);
        let uzz = (u.at(i, jm, k) - 2.0 * c + u.at(i, jp, k)) / (ht * ht);
        let uyy = (u.at(i, j, k - 1) - 2.0 * c + u.at(i, j, k + 1)) / (hn * hn);
        let uxz =
            (u.at(ip, jp, k) - u.at(ip, jm, k) - u.at(im, jp, k) + u.at(im, jm, k)) / (4.0 * ht * ht);
        let uxy = (u.at(ip, j, k + 1) - u.at(ip, j, k - 1) - u.at(im, j, k + 1)
            + u.at(im, j, k - 1))
            / (4.0 * ht * hn);
        let uzy = (u.at(i, jp, k + 1) - u.at(i, jp, k - 1) - u.at(i, jm, k + 1)
            + u.at(i, jm, k - 1))
            / (4.0 * ht * hn);
        Ok(SymMatrix::sym3(uxx, uxz, uxy, uzz, uzy, uyy))
    }
}
