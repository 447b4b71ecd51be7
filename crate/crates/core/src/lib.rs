//! Numerical laboratory for Dirichlet-to-Neumann boundary operators of fully
//! nonlinear uniformly elliptic equations on a periodically truncated strip,
//! and for the homogenization of oscillatory Neumann data through them.

pub mod almostperiodic;
pub mod config;
pub mod dtn;
pub mod grid;
pub mod homog;
pub mod io;
pub mod operators;
pub mod solver;
pub mod verify;

pub use almostperiodic::{
    find_almost_periods, round_to_torus, slice_periodic, AlmostPeriodRecord, AlmostPeriodSearch,
    ApError, LatticePolynomial, TrigPolynomial, TrigTerm,
};
pub use dtn::{
    assemble_linear_dtn_matrix, auxiliary_bound_check, extremal_sandwich_check,
    extremal_sandwich_defect, gcp_probe, random_trig_boundary, well_bump, AuxBoundReport,
    DtnError, DtnOperator, GcpReport, KernelEstimate,
};
pub use grid::{
    normal_derivative_at_boundary, restrict_to_boundary, BoundaryField, BulkField, GridError,
    StripGrid,
};
pub use operators::{
    discrete_hessian, EllipticOperator, EllipticityConstants, OperatorError, OperatorKind,
    SymMatrix,
};
pub use homog::{
    check_decay_lemma, check_global_bound, check_profile, check_uniqueness, holder_diagnostic,
    run_sweep, subsequence_report, EpsRecord, EpsilonSweep, HomogError, HomogReport, PassFlags,
};
pub use solver::{
    comparison_fuzz, solve_dirichlet, solve_dirichlet_from, solve_neumann, solve_neumann_from,
    stable_tau_bound, SolveConfig, SolveError, SolveResult,
};
