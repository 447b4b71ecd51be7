// scratch reconnaissance: sweep throughput + discrete DtN symbol accuracy
use std::time::Instant;
use striplab::*;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let what = args.get(1).map(String::as_str).unwrap_or("all");

    if what == "aux" {
        // auxiliary bound ratios for criterion sizing: L = 64, R in {1,2,4,8}
        let c = EllipticityConstants::new(1.0, 2.0).unwrap();
        for r in [0.5f64, 1.0, 4.0] {
            let n_n = ((r / 0.125).round() as usize + 1).max(5);
            let g = StripGrid::new(r, 64.0, 512, n_n, 1).unwrap();
            let cfg = SolveConfig::with_tol(1e-9);
            let plus = DtnOperator::new(EllipticOperator::pucci_plus(c), g, cfg.clone());
            let minus = DtnOperator::new(EllipticOperator::pucci_minus(c), g, cfg.clone());
            let t0 = Instant::now();
            let rep = auxiliary_bound_check(&plus, &minus, &[1.0, 2.0, 4.0, 8.0]).unwrap();
            println!(
                "r={r}: sup+ {:?} sup- {:?} C_emp {:.4} halving_ok {} ({:.1}s)",
                rep.sup_plus, rep.sup_minus, rep.empirical_constant, rep.halving_ok,
                t0.elapsed().as_secs_f64()
            );
        }
    }

    if what == "kernel" {
        // kernel structure at r = 8 pi >= 4 L, n_t = 64
        let r = 8.0 * std::f64::consts::PI;
        let g = StripGrid::new(r, std::f64::consts::TAU, 64, 257, 1).unwrap();
        let dtn = DtnOperator::new(EllipticOperator::laplacian(2), g, SolveConfig::default());
        let t0 = Instant::now();
        let est = assemble_linear_dtn_matrix(&dtn).unwrap();
        let mut worst_row = 0.0f64;
        for row in &est.matrix {
            worst_row = worst_row.max((row.iter().sum::<f64>() + 1.0 / r).abs());
        }
        println!(
            "zeroth {:.6e} (want {:.6e}) worst_row_dev {:.2e} offdiag_min {:.3e} sym {:.3e} decay {:.3} equiv {:.2e} ({:.0}s)",
            est.zeroth_order, -1.0 / r, worst_row, est.offdiag_min, est.symmetry_defect,
            est.decay_fit_exponent, est.equivariance_defect, t0.elapsed().as_secs_f64()
        );
    }

    if what == "bench" || what == "all" {
        // large-grid sweep throughput, linear vs pucci
        let g = StripGrid::new(1.0, 4.0 * std::f64::consts::PI, 1536, 62, 1).unwrap();
        let data = BoundaryField::from_fn(g, |x, _| (2.0 * x).cos() + (3.0 * x).cos());
        for (name, op) in [
            ("linear", EllipticOperator::laplacian(2)),
            (
                "pucci+",
                EllipticOperator::pucci_plus(EllipticityConstants::new(1.0, 2.0).unwrap()),
            ),
        ] {
            let cfg = SolveConfig { max_iters: 3000, residual_tol: 1e-300, ..Default::default() };
            let t0 = Instant::now();
            let r = solve_neumann(&op, g, &data, &cfg).unwrap();
            let dt = t0.elapsed().as_secs_f64();
            let nodes = (g.bulk_len() - 2 * g.boundary_len()) as f64 * r.iterations as f64;
            println!(
                "{name}: {} sweeps in {dt:.2}s -> {:.3e} node-updates/s (res {:.2e})",
                r.iterations,
                nodes / dt,
                r.final_residual
            );
        }
    }

    if what == "symbol" || what == "all" {
        // discrete DtN symbol at the acceptance grid
        let g = StripGrid::new(1.0, std::f64::consts::TAU, 128, 129, 1).unwrap();
        let op = EllipticOperator::laplacian(2);
        let cfg = SolveConfig::default();
        for m in [1.0f64, 2.0, 4.0, 8.0] {
            let phi = BoundaryField::from_fn(g, |x, _| (m * x).cos());
            let t0 = Instant::now();
            let r = solve_dirichlet(&op, g, &phi, &cfg).unwrap();
            let dv = normal_derivative_at_boundary(&r.field).unwrap();
            let oracle = -m / (m).tanh();
            // measured symbol via the node at x=0 (cos = 1 there)
            let s = dv.values()[0];
            let field_err = (0..g.n_tangential())
                .map(|i| (dv.values()[i] - oracle * (m * g.tangential_coord(i)).cos()).abs())
                .fold(0.0f64, f64::max);
            println!(
                "m={m}: S_disc={s:.8} oracle={oracle:.8} rel_sym_err={:.3e} rel_field_err={:.3e} iters={} ({:.1}s)",
                (s - oracle).abs() / oracle.abs(),
                field_err / oracle.abs(),
                r.iterations,
                t0.elapsed().as_secs_f64()
            );
        }
    }
}
