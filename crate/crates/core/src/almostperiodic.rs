//! Almost-periodic boundary data as finite trigonometric sums: slicing
//! lattice-periodic functions along a tilted hyperplane, rounding arbitrary
//! frequencies onto a computational torus, and searching for shifts that
//! almost reproduce the function.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ApError {
    #[error("normal vector has norm {0}, expected 1")]
    NonUnitNormal(f64),
    #[error("no almost period found beyond the trivial pocket in [0, {window}] for delta = {delta}")]
    NoneFoundInWindow { delta: f64, window: f64 },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// One cosine term `amplitude * cos(freq . x + phase)`; `freq` uses the first
/// `dim` components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub freq: [f64; 2],
    pub phase: f64,
}

/// Finite sum of cosines with arbitrary real frequency vectors on a one- or
/// two-dimensional boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    dim: usize,
    terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn new(dim: usize, terms: Vec<TrigTerm>) -> Result<Self, ApError> {
        if dim != 1 && dim != 2 {
            return Err(ApError::BadParameter(format!("dim must be 1 or 2, got {dim}")));
        }
        Ok(Self { dim, terms })
    }

    /// `sum_m a_m cos(w_m x + theta_m)` on a one-dimensional boundary.
    pub fn from_terms_1d(terms: &[(f64, f64, f64)]) -> Self {
        Self {
            dim: 1,
            terms: terms
                .iter()
                .map(|&(amplitude, w, phase)| TrigTerm { amplitude, freq: [w, 0.0], phase })
                .collect(),
        }
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let mut arg = t.phase;
                for a in 0..self.dim {
                    arg += t.freq[a] * x[a];
                }
                t.amplitude * arg.cos()
            })
            .sum()
    }

    pub fn eval1(&self, x: f64) -> f64 {
        debug_assert_eq!(self.dim, 1);
        self.terms
            .iter()
            .map(|t| t.amplitude * (t.freq[0] * x + t.phase).cos())
            .sum()
    }

    /// A priori bound `sum |a_m| >= sup |g|`.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.abs()).sum()
    }

    /// Lipschitz bound `sum |a_m| |w_m|`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amplitude.abs() * freq_norm(&t.freq, self.dim))
            .sum()
    }

    /// Exact analytic bound on `sup_x |g(x + tau) - g(x)|`:
    /// `sum_m |a_m| |2 sin(w_m . tau / 2)|`. No grid sampling involved.
    pub fn shift_defect_bound(&self, tau: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let mut half = 0.0;
                for a in 0..self.dim {
                    half += t.freq[a] * tau[a];
                }
                t.amplitude.abs() * 2.0 * (0.5 * half).sin().abs()
            })
            .sum()
    }

    /// Scale the argument: returns `x -> g(x / eps)`.
    pub fn rescale_argument(&self, eps: f64) -> TrigPolynomial {
        let terms = self
            .terms
            .iter()
            .map(|t| TrigTerm {
                amplitude: t.amplitude,
                freq: [t.freq[0] / eps, t.freq[1] / eps],
                phase: t.phase,
            })
            .collect();
        TrigPolynomial { dim: self.dim, terms }
    }
}

fn freq_norm(freq: &[f64; 2], dim: usize) -> f64 {
    if dim == 1 {
        freq[0].abs()
    } else {
        (freq[0] * freq[0] + freq[1] * freq[1]).sqrt()
    }
}

/// A lattice-periodic function of the ambient space: finite sum of
/// `a cos(2 pi m . X + theta)` with integer frequency vectors `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePolynomial {
    pub ambient_dim: usize,
    /// `(amplitude, integer frequency vector, phase)`; the first
    /// `ambient_dim` components of each vector are used.
    pub terms: Vec<(f64, [i64; 3], f64)>,
}

/// Restrict a lattice-periodic ambient function to the hyperplane through the
/// origin orthogonal to `nu`, expressed in an orthonormal tangential frame.
pub fn slice_periodic(g: &LatticePolynomial, nu: &[f64]) -> Result<TrigPolynomial, ApError> {
    let n = g.ambient_dim;
    assert!(n == 2 || n == 3, "ambient dimension 2 or 3");
    assert_eq!(nu.len(), n);
    let norm = nu.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(ApError::NonUnitNormal(norm));
    }
    let frame: Vec<[f64; 3]> = if n == 2 {
        vec![[-nu[1], nu[0], 0.0]]
    } else {
        // pick the coordinate axis least aligned with nu, orthonormalize
        let mut axis = [0.0f64; 3];
        let k = (0..3).min_by(|&a, &b| nu[a].abs().partial_cmp(&nu[b].abs()).unwrap()).unwrap();
        axis[k] = 1.0;
        let dot: f64 = (0..3).map(|i| axis[i] * nu[i]).sum();
        let mut t1 = [0.0f64; 3];
        for i in 0..3 {
            t1[i] = axis[i] - dot * nu[i];
        }
        let t1n = t1.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut t1 {
            *v /= t1n;
        }
        let t2 = [
            nu[1] * t1[2] - nu[2] * t1[1],
            nu[2] * t1[0] - nu[0] * t1[2],
            nu[0] * t1[1] - nu[1] * t1[0],
        ];
        vec![t1, t2]
    };
    let dim = n - 1;
    let tau = std::f64::consts::TAU;
    let terms = g
        .terms
        .iter()
        .map(|(a, m, phase)| {
            let mut freq = [0.0f64; 2];
            for (axis, t) in frame.iter().enumerate() {
                freq[axis] = tau * (0..n).map(|i| m[i] as f64 * t[i]).sum::<f64>();
            }
            TrigTerm { amplitude: *a, freq, phase: *phase }
        })
        .collect();
    TrigPolynomial::new(dim, terms)
}

/// Round every frequency onto the lattice `(2 pi / L) Z^d` so the polynomial
/// becomes exactly `L`-periodic. Returns the rounded polynomial and the
/// worst-case pointwise drift `sum |a_m| |dw_m| L / 2` over one centered
/// period.
pub fn round_to_torus(g: &TrigPolynomial, period: f64) -> Result<(TrigPolynomial, f64), ApError> {
    if !(period > 0.0) {
        return Err(ApError::BadParameter(format!("period must be positive, got {period}")));
    }
    let unit = std::f64::consts::TAU / period;
    let mut error = 0.0;
    let terms = g
        .terms
        .iter()
        .map(|t| {
            let mut freq = [0.0f64; 2];
            let mut delta = [0.0f64; 2];
            for a in 0..g.dim {
                freq[a] = unit * (t.freq[a] / unit).round();
                delta[a] = freq[a] - t.freq[a];
            }
            error += t.amplitude.abs() * freq_norm(&delta, g.dim) * period / 2.0;
            TrigTerm { amplitude: t.amplitude, freq, phase: t.phase }
        })
        .collect();
    Ok((TrigPolynomial { dim: g.dim, terms }, error))
}

/// A shift under which the function almost reproduces itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlmostPeriodRecord {
    pub delta: f64,
    pub tau: [f64; 2],
    pub defect: f64,
    pub search_window: f64,
}

/// Result of an almost-period scan.
#[derive(Debug, Clone, Serialize)]
pub struct AlmostPeriodSearch {
    pub records: Vec<AlmostPeriodRecord>,
    /// Set when some quarter of the window beyond the first holds no hit.
    pub sparse: bool,
    pub scan_step: f64,
}

/// Scan `[0, window]^d` on a fine lattice for shifts with analytic defect
/// bound below `delta`. The defect is evaluated from the coefficients, so no
/// grid sampling error enters.
pub fn find_almost_periods(
    g: &TrigPolynomial,
    delta: f64,
    window: f64,
) -> Result<AlmostPeriodSearch, ApError> {
    if !(delta > 0.0) {
        return Err(ApError::BadParameter(format!("delta must be positive, got {delta}")));
    }
    if !(window > 0.0) {
        return Err(ApError::BadParameter(format!("window must be positive, got {window}")));
    }
    let lip = g.lipschitz_bound().max(1e-300);
    // fine enough that a pocket of half-depth delta/2 cannot be stepped over
    let mut step = delta / (8.0 * lip);
    // total candidate budget, split across axes
    let cap = (1u32 << 22) as f64;
    let per_axis_cap = if g.dim == 1 { cap } else { cap.sqrt() };
    if window / step > per_axis_cap {
        step = window / per_axis_cap;
    }
    let n_steps = (window / step).floor() as usize;

    let mut records = Vec::new();
    let trivial_zone = 2.0 * delta / lip;
    let mut found_nontrivial = false;
    let mut quarter_hit = [false; 4];

    let mut consider = |tau: [f64; 2], radius: f64| {
        let defect = g.shift_defect_bound(&tau[..g.dim]);
        if defect < delta {
            records.push(AlmostPeriodRecord { delta, tau, defect, search_window: window });
            if radius > trivial_zone {
                found_nontrivial = true;
            }
            let q = ((radius / window) * 4.0).floor().min(3.0) as usize;
            quarter_hit[q] = true;
        }
    };

    if g.dim == 1 {
        for i in 0..=n_steps {
            let t = i as f64 * step;
            consider([t, 0.0], t);
        }
    } else {
        for i in 0..=n_steps {
            for j in 0..=n_steps {
                let t = [i as f64 * step, j as f64 * step];
                consider(t, t[0].max(t[1]));
            }
        }
    }

    if !found_nontrivial {
        return Err(ApError::NoneFoundInWindow { delta, window });
    }
    let sparse = !(quarter_hit[1] && quarter_hit[2] && quarter_hit[3]);
    Ok(AlmostPeriodSearch { records, sparse, scan_step: step })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_slice_is_identity() {
        let g = LatticePolynomial {
            ambient_dim: 2,
            terms: vec![(1.0, [1, 0, 0], 0.0)],
        };
        let sliced = slice_periodic(&g, &[0.0, 1.0]).unwrap();
        // frame is (-1, 0): frequency -2pi, cosine is even so values agree
        for x in [0.0, 0.3, 1.7] {
            let direct = (std::f64::consts::TAU * x).cos();
            assert!((sliced.eval1(-x) - direct).abs() < 1e-12 || (sliced.eval1(x) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_polynomial_slices_to_zero() {
        let g = LatticePolynomial { ambient_dim: 2, terms: vec![] };
        let sliced = slice_periodic(&g, &[0.0, 1.0]).unwrap();
        assert_eq!(sliced.terms().len(), 0);
        assert_eq!(sliced.eval1(0.4), 0.0);
    }

    #[test]
    fn non_unit_normal_rejected() {
        let g = LatticePolynomial { ambient_dim: 2, terms: vec![] };
        assert!(matches!(slice_periodic(&g, &[1.0, 1.0]), Err(ApError::NonUnitNormal(_))));
    }

    #[test]
    fn diagonal_slice_matches_direct_sampling() {
        // cos(2 pi X1) + cos(2 pi X2) restricted to the line orthogonal to
        // (1,1)/sqrt(2)
        let g = LatticePolynomial {
            ambient_dim: 2,
            terms: vec![(1.0, [1, 0, 0], 0.0), (1.0, [0, 1, 0], 0.0)],
        };
        let s2 = 0.5f64.sqrt();
        let sliced = slice_periodic(&g, &[s2, s2]).unwrap();
        let frame = [-s2, s2];
        for i in 0..1000 {
            let x = -20.0 + 0.04 * i as f64;
            let ambient = [frame[0] * x, frame[1] * x];
            let direct = (std::f64::consts::TAU * ambient[0]).cos()
                + (std::f64::consts::TAU * ambient[1]).cos();
            assert!((sliced.eval1(x) - direct).abs() < 1e-12);
        }
        // and the slice collapses to 2 cos(sqrt(2) pi x)
        for i in 0..100 {
            let x = 0.11 * i as f64;
            let expect = 2.0 * (std::f64::consts::PI * 2.0f64.sqrt() * x).cos();
            assert!((sliced.eval1(x) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn rounding_on_lattice_is_identity() {
        let l = std::f64::consts::TAU * 4.0;
        let w = 3.0 * std::f64::consts::TAU / l;
        let g = TrigPolynomial::from_terms_1d(&[(1.5, w, 0.7)]);
        let (rounded, err) = round_to_torus(&g, l).unwrap();
        assert_eq!(err, 0.0);
        assert_eq!(rounded, g);
    }

    #[test]
    fn rounding_error_shrinks_with_period() {
        let w = 2.0f64.sqrt();
        let g = TrigPolynomial::from_terms_1d(&[(1.0, w, 0.0)]);
        let l1 = std::f64::consts::TAU * 64.0;
        let (_, e1) = round_to_torus(&g, l1).unwrap();
        let (_, e2) = round_to_torus(&g, 2.0 * l1).unwrap();
        assert!(e1 > 0.0);
        // distance to the lattice is generic, halving the spacing roughly
        // halves it; allow slack for the arithmetic of sqrt(2)
        assert!(e2 < 0.8 * e1, "e1 = {e1}, e2 = {e2}");
    }

    #[test]
    fn empty_polynomial_rounds_to_empty() {
        let g = TrigPolynomial::empty(1);
        let (rounded, err) = round_to_torus(&g, 1.0).unwrap();
        assert_eq!(rounded.terms().len(), 0);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn single_cosine_period_pocket() {
        // for cos(x), defect = 2|sin(tau/2)| < 0.1 iff tau within
        // 2 asin(0.05) of a multiple of 2 pi
        let g = TrigPolynomial::from_terms_1d(&[(1.0, 1.0, 0.0)]);
        let search = find_almost_periods(&g, 0.1, 20.0).unwrap();
        let allow = 2.0 * 0.05f64.asin();
        for rec in &search.records {
            let t = rec.tau[0];
            let dist = (t - std::f64::consts::TAU * (t / std::f64::consts::TAU).round()).abs();
            assert!(dist <= allow + search.scan_step, "tau {t} outside pocket");
            assert!(rec.defect < 0.1);
        }
        // tau = 0 is always a hit
        assert!(search.records.iter().any(|r| r.tau[0] == 0.0 && r.defect == 0.0));
    }

    #[test]
    fn incommensurate_pair_has_relatively_dense_periods() {
        let g = TrigPolynomial::from_terms_1d(&[(1.0, 1.0, 0.0), (1.0, 2.0f64.sqrt(), 0.0)]);
        let search = find_almost_periods(&g, 0.2, 500.0).unwrap();
        assert!(!search.sparse, "expected hits in every quarter of the window");
        // continued-fraction denominators of sqrt(2) give the hit locations:
        // tau ~ 2 pi q for q in {12, 29, 41, 58, 70}
        for q in [12.0f64, 29.0, 41.0, 58.0, 70.0] {
            let target = std::f64::consts::TAU * q;
            assert!(
                search.records.iter().any(|r| (r.tau[0] - target).abs() < 0.5),
                "no hit near 2 pi {q}"
            );
        }
    }

    #[test]
    fn window_too_small_is_signaled() {
        let g = TrigPolynomial::from_terms_1d(&[(1.0, 1.0, 0.0), (1.0, 2.0f64.sqrt(), 0.0)]);
        // within [0, 20] the pair has no nontrivial 0.05-almost period
        assert!(matches!(
            find_almost_periods(&g, 0.05, 20.0),
            Err(ApError::NoneFoundInWindow { .. })
        ));
    }
}
