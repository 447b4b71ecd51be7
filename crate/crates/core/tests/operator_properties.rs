//! Algebraic properties of the pointwise operators: ellipticity sandwich,
//! homogeneity, envelope ordering, eigenvalue routines, and the discrete
//! Hessian against an independent index-arithmetic oracle.

mod common;

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use striplab::{
    discrete_hessian, BulkField, EllipticOperator, EllipticityConstants, StripGrid, SymMatrix,
};

fn random_sym(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> SymMatrix {
    let mut m = SymMatrix::zero(dim).unwrap();
    for i in 0..dim {
        for j in i..dim {
            m.set_sym(i, j, scale * rng.random_range(-1.0..1.0));
        }
    }
    m
}

fn random_band_matrix(rng: &mut ChaCha8Rng, dim: usize, c: EllipticityConstants) -> SymMatrix {
    // rotate a diagonal matrix with eigenvalues inside the band
    let d: Vec<f64> = (0..dim)
        .map(|_| rng.random_range(c.lambda()..=c.upper()))
        .collect();
    if dim == 2 {
        let t: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let (s, co) = t.sin_cos();
        let (a, b) = (d[0], d[1]);
        SymMatrix::sym2(
            a * co * co + b * s * s,
            (a - b) * s * co,
            a * s * s + b * co * co,
        )
    } else {
        SymMatrix::diag(&d).unwrap()
    }
}

fn all_kinds(c: EllipticityConstants) -> Vec<EllipticOperator> {
    let g1 = vec![
        SymMatrix::diag(&[c.lambda(), c.upper()]).unwrap(),
        SymMatrix::diag(&[c.upper(), c.lambda()]).unwrap(),
    ];
    let g2 = vec![SymMatrix::diag(&[c.upper(), c.upper()]).unwrap()];
    vec![
        EllipticOperator::laplacian(2),
        EllipticOperator::pucci_minus(c),
        EllipticOperator::pucci_plus(c),
        EllipticOperator::bellman(vec![g1, g2], c).unwrap(),
    ]
}

#[test]
fn sandwich_holds_on_1000_random_pairs_for_every_kind() {
    let c = EllipticityConstants::new(1.0, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for op in all_kinds(c) {
        for _ in 0..1000 {
            let h1 = random_sym(&mut rng, 2, 3.0);
            let h2 = random_sym(&mut rng, 2, 3.0);
            assert!(op.ellipticity_sandwich_check(&h1, &h2));
        }
    }
}

#[test]
fn sandwich_equal_arguments_and_laplacian_equality() {
    let c = EllipticityConstants::new(1.0, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = random_sym(&mut rng, 2, 2.0);
    for op in all_kinds(c) {
        assert!(op.ellipticity_sandwich_check(&h, &h));
    }
    // A = I with unit band: the sandwich collapses to equality
    let lap = EllipticOperator::laplacian(2);
    let h2 = random_sym(&mut rng, 2, 2.0);
    let diff = h.sub(&h2);
    let (lo, hi) = lap.pucci_envelope(&diff);
    let gap = lap.evaluate(&h) - lap.evaluate(&h2);
    assert!((lo - gap).abs() < 1e-12 && (hi - gap).abs() < 1e-12);
}

#[test]
fn positive_one_homogeneity() {
    let c = EllipticityConstants::new(1.0, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for op in all_kinds(c) {
        for _ in 0..200 {
            let h = random_sym(&mut rng, 2, 4.0);
            let fh = op.evaluate(&h);
            for alpha in [0.0, 0.5, 3.0] {
                let scaled = op.evaluate(&h.scale(alpha));
                assert!(
                    (scaled - alpha * fh).abs() <= 1e-12 * (1.0 + fh.abs()) * (1.0 + alpha),
                    "alpha {alpha}: {scaled} vs {}",
                    alpha * fh
                );
            }
        }
    }
}

#[test]
fn degenerate_ellipticity_monotonicity() {
    // H1 <= H2 as quadratic forms implies F(H1) <= F(H2)
    let c = EllipticityConstants::new(1.0, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for op in all_kinds(c) {
        for _ in 0..300 {
            let h1 = random_sym(&mut rng, 2, 3.0);
            let bump = random_sym(&mut rng, 2, 1.0);
            // make a PSD increment: bump^T bump is PSD
            let psd = SymMatrix::sym2(
                bump.get(0, 0) * bump.get(0, 0) + bump.get(0, 1) * bump.get(0, 1),
                bump.get(0, 0) * bump.get(0, 1) + bump.get(0, 1) * bump.get(1, 1),
                bump.get(0, 1) * bump.get(0, 1) + bump.get(1, 1) * bump.get(1, 1),
            );
            let h2 = h1.add(&psd);
            assert!(op.evaluate(&h1) <= op.evaluate(&h2) + 1e-12 * (1.0 + h1.max_abs()));
        }
    }
}

#[test]
fn pucci_envelopes_bracket_every_admissible_linear_form() {
    let c = EllipticityConstants::new(1.0, 2.0).unwrap();
    let minus = EllipticOperator::pucci_minus(c);
    let plus = EllipticOperator::pucci_plus(c);
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..300 {
        let a = random_band_matrix(&mut rng, 2, c);
        let lin = EllipticOperator::linear(a, c).unwrap();
        let h = random_sym(&mut rng, 2, 3.0);
        let tol = 1e-11 * (1.0 + h.max_abs());
        assert!(minus.evaluate(&h) <= lin.evaluate(&h) + tol);
        assert!(lin.evaluate(&h) <= plus.evaluate(&h) + tol);
    }
}

#[test]
fn collapsed_band_pucci_equals_scaled_trace_3d() {
    let c = EllipticityConstants::new(0.7, 0.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100 {
        let h = random_sym(&mut rng, 3, 2.0);
        let tr = h.get(0, 0) + h.get(1, 1) + h.get(2, 2);
        let lo = EllipticOperator::pucci_minus(c).evaluate(&h);
        let hi = EllipticOperator::pucci_plus(c).evaluate(&h);
        assert!((lo - 0.7 * tr).abs() < 1e-10 * (1.0 + tr.abs()));
        assert!((hi - 0.7 * tr).abs() < 1e-10 * (1.0 + tr.abs()));
    }
}

#[test]
fn symmetric_3x3_eigenvalues_match_reference_routine() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..1000 {
        let m = random_sym(&mut rng, 3, 5.0);
        let got = m.eigenvalues();
        let na = nalgebra::Matrix3::from_fn(|i, j| m.get(i, j));
        let mut want: Vec<f64> = na.symmetric_eigenvalues().iter().cloned().collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9 * (1.0 + m.max_abs()), "{got:?} vs {want:?}");
        }
    }
}

#[test]
fn hessian_matches_index_arithmetic_oracle_on_random_field() {
    // oracle: direct second differences written against the flat value
    // vector with hand-rolled wrapping
    let g = StripGrid::new(1.3, 5.0, 16, 9, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let values: Vec<f64> = (0..g.bulk_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let u = BulkField::from_values(g, values.clone()).unwrap();
    let n = g.n_tangential();
    let (ht, hn) = (g.h_tangential(), g.h_normal());
    let at = |i: isize, k: usize| values[k * n + (i.rem_euclid(n as isize) as usize)];
    for k in 1..g.n_normal() - 1 {
        for i in 0..n {
            let ii = i as isize;
            let h = discrete_hessian(&u, i, 0, k).unwrap();
            let uxx = (at(ii - 1, k) - 2.0 * at(ii, k) + at(ii + 1, k)) / (ht * ht);
            let uyy = (at(ii, k - 1) - 2.0 * at(ii, k) + at(ii, k + 1)) / (hn * hn);
            let uxy = (at(ii + 1, k + 1) - at(ii + 1, k - 1) - at(ii - 1, k + 1)
                + at(ii - 1, k - 1))
                / (4.0 * ht * hn);
            assert!((h.get(0, 0) - uxx).abs() < 1e-13);
            assert!((h.get(1, 1) - uyy).abs() < 1e-13);
            assert!((h.get(0, 1) - uxy).abs() < 1e-13);
            assert!((h.get(0, 1) - h.get(1, 0)).abs() == 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_sandwich_on_random_pairs(
        e1 in -3.0f64..3.0, e2 in -3.0f64..3.0, o in -2.0f64..2.0,
        f1 in -3.0f64..3.0, f2 in -3.0f64..3.0, p in -2.0f64..2.0,
        lambda in 0.25f64..1.5, gap in 0.0f64..2.0
    ) {
        let c = EllipticityConstants::new(lambda, lambda + gap).unwrap();
        let h1 = SymMatrix::sym2(e1, o, e2);
        let h2 = SymMatrix::sym2(f1, p, f2);
        for op in all_kinds(c) {
            prop_assert!(op.ellipticity_sandwich_check(&h1, &h2));
        }
    }

    #[test]
    fn prop_pucci_2x2_extremal_over_rotations(
        e1 in -3.0f64..3.0, e2 in -3.0f64..3.0, o in -2.0f64..2.0, t in 0.0f64..std::f64::consts::PI
    ) {
        // the Pucci value dominates Tr(A H) for every rotated band matrix A
        let c = EllipticityConstants::new(1.0, 2.0).unwrap();
        let h = SymMatrix::sym2(e1, o, e2);
        let (s, co) = t.sin_cos();
        let a = SymMatrix::sym2(
            co * co + 2.0 * s * s,
            (1.0 - 2.0) * s * co,
            s * s + 2.0 * co * co,
        );
        let lin = EllipticOperator::linear(a, c).unwrap();
        let tol = 1e-11 * (1.0 + h.max_abs());
        prop_assert!(lin.evaluate(&h) <= EllipticOperator::pucci_plus(c).evaluate(&h) + tol);
        prop_assert!(lin.evaluate(&h) >= EllipticOperator::pucci_minus(c).evaluate(&h) - tol);
    }
}
