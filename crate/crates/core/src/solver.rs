//! Damped fixed-point (pseudo-time) solver for the discrete Dirichlet and
//! Neumann problems on the strip: `u <- u + tau * F(D^2 u)` on interior
//! nodes, boundary rows pinned or enforced through a one-sided ghost update.

use crate::grid::{BoundaryField, BulkField, StripGrid};
use crate::operators::{discrete_hessian, EllipticOperator, OperatorKind};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("solve did not converge: residual {residual:.3e} after {iterations} iterations")]
    NotConverged { iterations: u64, residual: f64 },
    #[error("residual rose from {previous:.6e} to {current:.6e} at iteration {iteration}")]
    ResidualIncreased { iteration: u64, previous: f64, current: f64 },
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error("data does not match the grid: {0}")]
    DataMismatch(String),
    #[error("comparison data are not ordered: phi1 > phi2 by {0:.3e} somewhere")]
    DataNotOrdered(f64),
}

/// Tuning knobs for the damped iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Stop when the infinity norm of `F(D^2 u)` over interior nodes drops
    /// below this.
    pub residual_tol: f64,
    pub max_iters: u64,
    /// Pseudo-time step; `None` picks `1 / (4 Lambda (d/h_t^2 + 1/h_n^2))`,
    /// which reduces to `h_n^2 / (4 Lambda (d+1))` on isotropic grids.
    pub damping_tau: Option<f64>,
    /// Print residual every this many sweeps (0 = silent).
    pub verbose_every: u64,
    /// Abort if the residual grows after the burn-in phase.
    pub enforce_residual_decay: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-9,
            max_iters: 2_000_000,
            damping_tau: None,
            verbose_every: 0,
            enforce_residual_decay: true,
        }
    }
}

impl SolveConfig {
    pub fn with_tol(residual_tol: f64) -> Self {
        Self { residual_tol, ..Self::default() }
    }
}

/// Outcome of one solve. `converged == false` means `max_iters` ran out;
/// callers that need a solution must check the flag.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub field: BulkField,
    pub iterations: u64,
    pub final_residual: f64,
    pub converged: bool,
}

const BURN_IN_SWEEPS: u64 = 10;
// Multiplicative slack on the residual-decay watchdog; Jacobi with the
// default step is nonexpansive for trace forms, the envelope operators get
// a hair of room for the cross-difference stencil.
const DECAY_SLACK: f64 = 1.0 + 1e-9;
// Absolute allowance for the watchdog: evaluating F(D^2 u) loses
// eps * |u| / h^2 to cancellation, so near convergence the measured
// residual wobbles at that scale.
const DECAY_NOISE_ULPS: f64 = 16.0;
// Below this node count the rayon fan-out costs more than it saves.
const PAR_MIN_NODES: usize = 32_768;

/// Largest pseudo-time step the explicit iteration tolerates; the default
/// step is half of this. Reduces to `h_n^2 / (2 Lambda (d+1))` when the
/// spacings agree.
pub fn stable_tau_bound(grid: &StripGrid, op: &EllipticOperator) -> f64 {
    let d = grid.boundary_dim() as f64;
    let ht2 = grid.h_tangential() * grid.h_tangential();
    let hn2 = grid.h_normal() * grid.h_normal();
    1.0 / (2.0 * op.constants().upper() * (d / ht2 + 1.0 / hn2))
}

fn resolve_tau(grid: &StripGrid, op: &EllipticOperator, cfg: &SolveConfig) -> Result<f64, SolveError> {
    let bound = stable_tau_bound(grid, op);
    match cfg.damping_tau {
        None => Ok(0.5 * bound),
        Some(tau) => {
            if tau <= 0.0 || tau > bound {
                Err(SolveError::BadConfig(format!(
                    "damping_tau {tau:.3e} outside stable range (0, {bound:.3e}]"
                )))
            } else {
                Ok(tau)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// flux functors: F evaluated on Hessian entries, monomorphized per kind
// ---------------------------------------------------------------------------

const LANES: usize = 8;

trait Flux2: Sync {
    /// Lane-blocked kernels vectorize the branchy envelope evaluations;
    /// plain trace forms do better in the straight-line loop.
    const BLOCKED: bool;

    fn eval(&self, uxx: f64, uxy: f64, uyy: f64) -> f64;

    /// Lane-blocked evaluation; the fixed-width loop compiles to SIMD.
    #[inline(always)]
    fn eval_block(&self, uxx: &[f64; LANES], uxy: &[f64; LANES], uyy: &[f64; LANES]) -> [f64; LANES] {
        let mut out = [0.0; LANES];
        for l in 0..LANES {
            out[l] = self.eval(uxx[l], uxy[l], uyy[l]);
        }
        out
    }
}

struct LinearFlux2 {
    axx: f64,
    axy2: f64,
    ayy: f64,
}

impl Flux2 for LinearFlux2 {
    const BLOCKED: bool = false;

    #[inline(always)]
    fn eval(&self, uxx: f64, uxy: f64, uyy: f64) -> f64 {
        self.axx * uxx + self.axy2 * uxy + self.ayy * uyy
    }
}

/// Both Pucci envelopes: `pos`/`neg` multiply the positive/negative
/// eigenvalue parts (plus: Lambda/lambda, minus: lambda/Lambda).
struct PucciFlux2 {
    pos: f64,
    neg: f64,
}

impl Flux2 for PucciFlux2 {
    const BLOCKED: bool = true;

    #[inline(always)]
    fn eval(&self, uxx: f64, uxy: f64, uyy: f64) -> f64 {
        let mean = 0.5 * (uxx + uyy);
        let half_diff = 0.5 * (uxx - uyy);
        let dev = (half_diff * half_diff + uxy * uxy).sqrt();
        let e1 = mean - dev;
        let e2 = mean + dev;
        self.pos * e1.max(0.0) + self.neg * e1.min(0.0) + self.pos * e2.max(0.0)
            + self.neg * e2.min(0.0)
    }
}

struct BellmanFlux2 {
    groups: Vec<Vec<[f64; 3]>>,
}

impl Flux2 for BellmanFlux2 {
    const BLOCKED: bool = true;

    #[inline(always)]
    fn eval(&self, uxx: f64, uxy: f64, uyy: f64) -> f64 {
        let mut outer = f64::INFINITY;
        for g in &self.groups {
            let mut inner = f64::NEG_INFINITY;
            for a in g {
                inner = inner.max(a[0] * uxx + a[1] * uxy + a[2] * uyy);
            }
            outer = outer.min(inner);
        }
        outer
    }
}

// ---------------------------------------------------------------------------
// sweeps
// ---------------------------------------------------------------------------

struct StencilScale {
    inv_ht2: f64,
    inv_hn2: f64,
    inv_cross: f64,
    tau: f64,
}

#[inline(always)]
fn sweep_row_d1<F: Flux2>(
    flux: &F,
    sc: &StencilScale,
    below: &[f64],
    center: &[f64],
    above: &[f64],
    out: &mut [f64],
) -> f64 {
    let n = center.len();
    assert!(below.len() == n && above.len() == n && out.len() == n && n >= 3);
    // pass 1: F(D^2 u) into `out`; seam nodes wrap around the torus
    for (i, im, ip) in [(0, n - 1, 1), (n - 1, n - 2, 0)] {
        let c = center[i];
        let uxx = (center[im] - 2.0 * c + center[ip]) * sc.inv_ht2;
        let uyy = (below[i] - 2.0 * c + above[i]) * sc.inv_hn2;
        let uxy = (above[ip] - below[ip] - above[im] + below[im]) * sc.inv_cross;
        out[i] = flux.eval(uxx, uxy, uyy);
    }
    let mut i = 1;
    if F::BLOCKED {
        while i + LANES <= n - 1 {
            let mut uxx = [0.0; LANES];
            let mut uxy = [0.0; LANES];
            let mut uyy = [0.0; LANES];
            for l in 0..LANES {
                let p = i + l;
                let c = center[p];
                uxx[l] = (center[p - 1] - 2.0 * c + center[p + 1]) * sc.inv_ht2;
                uyy[l] = (below[p] - 2.0 * c + above[p]) * sc.inv_hn2;
                uxy[l] = (above[p + 1] - below[p + 1] - above[p - 1] + below[p - 1]) * sc.inv_cross;
            }
            let f = flux.eval_block(&uxx, &uxy, &uyy);
            out[i..i + LANES].copy_from_slice(&f);
            i += LANES;
        }
    }
    for p in i..n - 1 {
        let c = center[p];
        let uxx = (center[p - 1] - 2.0 * c + center[p + 1]) * sc.inv_ht2;
        let uyy = (below[p] - 2.0 * c + above[p]) * sc.inv_hn2;
        let uxy = (above[p + 1] - below[p + 1] - above[p - 1] + below[p - 1]) * sc.inv_cross;
        out[p] = flux.eval(uxx, uxy, uyy);
    }
    // pass 2: residual norm; pass 3: damped update (rows stay in L1)
    let mut res = 0.0f64;
    for &f in out.iter() {
        res = res.max(f.abs());
    }
    for (o, &c) in out.iter_mut().zip(center) {
        *o = c + sc.tau * *o;
    }
    res
}

/// One Jacobi sweep for d = 1: writes interior rows of `next` from `cur`,
/// returns the interior residual infinity norm of `cur`.
fn sweep_d1<F: Flux2>(flux: &F, grid: &StripGrid, sc: &StencilScale, cur: &[f64], next: &mut [f64]) -> f64 {
    let n_t = grid.n_tangential();
    let n_n = grid.n_normal();
    let interior = &mut next[n_t..(n_n - 1) * n_t];
    if grid.bulk_len() >= PAR_MIN_NODES {
        interior
            .par_chunks_mut(n_t)
            .enumerate()
            .map(|(row, out)| {
                let k = row + 1;
                sweep_row_d1(
                    flux,
                    sc,
                    &cur[(k - 1) * n_t..k * n_t],
                    &cur[k * n_t..(k + 1) * n_t],
                    &cur[(k + 1) * n_t..(k + 2) * n_t],
                    out,
                )
            })
            .reduce(|| 0.0f64, f64::max)
    } else {
        let mut res = 0.0f64;
        for (row, out) in interior.chunks_mut(n_t).enumerate() {
            let k = row + 1;
            res = res.max(sweep_row_d1(
                flux,
                sc,
                &cur[(k - 1) * n_t..k * n_t],
                &cur[k * n_t..(k + 1) * n_t],
                &cur[(k + 1) * n_t..(k + 2) * n_t],
                out,
            ));
        }
        res
    }
}

/// General sweep through the full Hessian for d = 2 grids.
fn sweep_d2(
    op: &EllipticOperator,
    grid: &StripGrid,
    tau: f64,
    cur: &BulkField,
    next: &mut [f64],
) -> f64 {
    let n_t = grid.n_tangential();
    let n_n = grid.n_normal();
    let plane = n_t * n_t;
    let interior = &mut next[plane..(n_n - 1) * plane];
    interior
        .par_chunks_mut(plane)
        .enumerate()
        .map(|(row, out)| {
            let k = row + 1;
            let mut res = 0.0f64;
            for j in 0..n_t {
                for i in 0..n_t {
                    let h = discrete_hessian(cur, i, j, k).expect("interior node");
                    let f = op.evaluate(&h);
                    res = res.max(f.abs());
                    out[grid.boundary_index(i, j)] = cur.at(i, j, k) + tau * f;
                }
            }
            res
        })
        .reduce(|| 0.0f64, f64::max)
}

enum BottomCondition<'a> {
    Dirichlet(&'a BoundaryField),
    Neumann(&'a BoundaryField),
}

fn apply_neumann_ghost(grid: &StripGrid, values: &mut [f64], g: &BoundaryField) {
    let n = grid.boundary_len();
    let hn = grid.h_normal();
    let (row0, rest) = values.split_at_mut(n);
    for p in 0..n {
        row0[p] = (4.0 * rest[p] - rest[n + p] - 2.0 * hn * g.values()[p]) / 3.0;
    }
}

fn run_solve(
    op: &EllipticOperator,
    grid: StripGrid,
    bottom: BottomCondition<'_>,
    init: Option<&BulkField>,
    cfg: &SolveConfig,
) -> Result<SolveResult, SolveError> {
    let data = match bottom {
        BottomCondition::Dirichlet(d) => d,
        BottomCondition::Neumann(g) => g,
    };
    if *data.grid() != grid {
        return Err(SolveError::DataMismatch("boundary data grid differs".into()));
    }
    if let Some(u0) = init {
        if *u0.grid() != grid {
            return Err(SolveError::DataMismatch("initial guess grid differs".into()));
        }
    }
    let tau = resolve_tau(&grid, op, cfg)?;
    if !(cfg.residual_tol > 0.0) {
        return Err(SolveError::BadConfig("residual_tol must be positive".into()));
    }

    let n_bnd = grid.boundary_len();
    let n_all = grid.bulk_len();
    let mut cur = match init {
        Some(u0) => u0.clone(),
        None => BulkField::zeros(grid),
    };
    {
        let v = cur.values_mut();
        // top boundary layer is pinned to zero for both problems
        for p in &mut v[n_all - n_bnd..] {
            *p = 0.0;
        }
        match bottom {
            BottomCondition::Dirichlet(phi) => v[..n_bnd].copy_from_slice(phi.values()),
            BottomCondition::Neumann(g) => apply_neumann_ghost(&grid, v, g),
        }
    }
    let mut next = cur.clone();

    let sc = StencilScale {
        inv_ht2: 1.0 / (grid.h_tangential() * grid.h_tangential()),
        inv_hn2: 1.0 / (grid.h_normal() * grid.h_normal()),
        inv_cross: 1.0 / (4.0 * grid.h_tangential() * grid.h_normal()),
        tau,
    };

    let field_scale = cur.max_abs().max(data.max_abs()).max(1.0);
    let noise_floor = DECAY_NOISE_ULPS
        * f64::EPSILON
        * field_scale
        * (grid.boundary_dim() as f64 * sc.inv_ht2 + sc.inv_hn2);

    let mut applied: u64 = 0;
    let mut prev_res = f64::INFINITY;
    loop {
        let res = if grid.boundary_dim() == 1 {
            match op.kind() {
                OperatorKind::Linear(a) => {
                    let flux = LinearFlux2 {
                        axx: a.get(0, 0),
                        axy2: 2.0 * a.get(0, 1),
                        ayy: a.get(1, 1),
                    };
                    sweep_d1(&flux, &grid, &sc, cur.values(), next.values_mut())
                }
                OperatorKind::PucciPlus => {
                    let c = op.constants();
                    let flux = PucciFlux2 { pos: c.upper(), neg: c.lambda() };
                    sweep_d1(&flux, &grid, &sc, cur.values(), next.values_mut())
                }
                OperatorKind::PucciMinus => {
                    let c = op.constants();
                    let flux = PucciFlux2 { pos: c.lambda(), neg: c.upper() };
                    sweep_d1(&flux, &grid, &sc, cur.values(), next.values_mut())
                }
                OperatorKind::Bellman(groups) => {
                    let flux = BellmanFlux2 {
                        groups: groups
                            .iter()
                            .map(|g| {
                                g.iter()
                                    .map(|a| [a.get(0, 0), 2.0 * a.get(0, 1), a.get(1, 1)])
                                    .collect()
                            })
                            .collect(),
                    };
                    sweep_d1(&flux, &grid, &sc, cur.values(), next.values_mut())
                }
            }
        } else {
            sweep_d2(op, &grid, tau, &cur, next.values_mut())
        };

        if cfg.verbose_every > 0 && applied % cfg.verbose_every == 0 {
            eprintln!("sweep {applied}: residual {res:.6e}");
        }
        if res <= cfg.residual_tol {
            return Ok(SolveResult { field: cur, iterations: applied, final_residual: res, converged: true });
        }
        if applied >= cfg.max_iters {
            return Ok(SolveResult {
                field: cur,
                iterations: applied,
                final_residual: res,
                converged: false,
            });
        }
        if cfg.enforce_residual_decay
            && applied > BURN_IN_SWEEPS
            && res > prev_res * DECAY_SLACK + noise_floor
        {
            return Err(SolveError::ResidualIncreased {
                iteration: applied,
                previous: prev_res,
                current: res,
            });
        }
        prev_res = res;

        if let BottomCondition::Neumann(g) = bottom {
            apply_neumann_ghost(&grid, next.values_mut(), g);
        }
        std::mem::swap(&mut cur, &mut next);
        applied += 1;
    }
}

/// Solve `F(D^2 u) = 0` with `u = phi` on the bottom boundary and `u = 0` on
/// the top one, starting from the zero field.
pub fn solve_dirichlet(
    op: &EllipticOperator,
    grid: StripGrid,
    phi: &BoundaryField,
    cfg: &SolveConfig,
) -> Result<SolveResult, SolveError> {
    run_solve(op, grid, BottomCondition::Dirichlet(phi), None, cfg)
}

/// Same as [`solve_dirichlet`] with a warm-start field.
pub fn solve_dirichlet_from(
    op: &EllipticOperator,
    grid: StripGrid,
    phi: &BoundaryField,
    init: &BulkField,
    cfg: &SolveConfig,
) -> Result<SolveResult, SolveError> {
    run_solve(op, grid, BottomCondition::Dirichlet(phi), Some(init), cfg)
}

/// Solve `F(D^2 u) = 0` with interior-normal derivative `g` on the bottom
/// boundary and `u = 0` on the top one. The bottom layer is maintained by the
/// second-order ghost update `u0 = (4 u1 - u2 - 2 h_n g) / 3`, the exact
/// inversion of the one-sided derivative stencil.
pub fn solve_neumann(
    op: &EllipticOperator,
    grid: StripGrid,
    g: &BoundaryField,
    cfg: &SolveConfig,
) -> Result<SolveResult, SolveError> {
    run_solve(op, grid, BottomCondition::Neumann(g), None, cfg)
}

/// Same as [`solve_neumann`] with a warm-start field.
pub fn solve_neumann_from(
    op: &EllipticOperator,
    grid: StripGrid,
    g: &BoundaryField,
    init: &BulkField,
    cfg: &SolveConfig,
) -> Result<SolveResult, SolveError> {
    run_solve(op, grid, BottomCondition::Neumann(g), Some(init), cfg)
}

/// Solve both Dirichlet problems for ordered data `phi1 <= phi2` and check
/// the solutions stay ordered up to a truncation-level slack.
pub fn comparison_fuzz(
    op: &EllipticOperator,
    grid: StripGrid,
    phi1: &BoundaryField,
    phi2: &BoundaryField,
    cfg: &SolveConfig,
) -> Result<bool, SolveError> {
    let worst = phi1
        .values()
        .iter()
        .zip(phi2.values())
        .fold(0.0f64, |m, (a, b)| m.max(a - b));
    if worst > 0.0 {
        return Err(SolveError::DataNotOrdered(worst));
    }
    let r1 = solve_dirichlet(op, grid, phi1, cfg)?;
    let r2 = solve_dirichlet(op, grid, phi2, cfg)?;
    for r in [&r1, &r2] {
        if !r.converged {
            return Err(SolveError::NotConverged {
                iterations: r.iterations,
                residual: r.final_residual,
            });
        }
    }
    let gap_scale = phi1.max_abs_diff(phi2);
    let tol = 10.0 * cfg.residual_tol + 20.0 * grid.h_max() * grid.h_max() * gap_scale;
    let ok = r1
        .field
        .values()
        .iter()
        .zip(r2.field.values())
        .all(|(a, b)| *a <= *b + tol);
    Ok(ok)
}
