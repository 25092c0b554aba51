//! Optimal polynomial approximants in `l^p_A`, the extremal Lagrange system,
//! the Phi/Psi recurrence and the critical radius constant.

pub mod dynamics;
pub mod error;
pub mod extra_zero;
pub mod extremal;
pub mod lp;
pub mod numeric;
pub mod opa;
pub mod poly;
pub mod radius;
pub mod records;
pub mod reference;
pub mod verify;

pub use dynamics::{
    branch_interval, branch_of, export_cobweb, fixed_points, invert_phi, iterate_orbit, phi, psi,
    Branch, BranchPolicy, CobwebData, FixedPoints, OrbitFailure, OrbitPoint, OrbitStatus,
    OrbitTrace, PhiPsiParams, StepKind,
};
pub use error::{Error, Result};
pub use extra_zero::{
    family_large_p, family_small_p, find_min_k_extra_zero, g_of_t, ExtraZeroWitness,
};
pub use extremal::{
    direct_maximize_t, extend_solution, lagrange_residuals, ratio_residuals, solve_tdp,
    solve_tdp_chain, DirectMax, ExtremalConfig, LagrangeSolution,
};
pub use lp::{is_bj_orthogonal, lp_norm, lp_norm_pow, semi_inner, signed_power, PNorm};
pub use numeric::{check_precision, SUPPORTED_PRECISIONS};
pub use opa::{
    duality_check, h_prime, h_value, normalization_constant, remove_root_opa, solve_linear_opa,
    solve_opa, Convergence, Duality, LinearOpaResult, OpaResult, SolverConfig,
};
pub use poly::RealPoly;
pub use radius::{
    exclusion_radius, solve_tau, tau_vs_tdp_gap, xi_pair, ExclusionResult, TauResult,
};
pub use records::{ExclusionRecord, ExtremalRecord, OpaRecord, TauRecord};
pub use verify::{run_verify, CheckOutcome, VerifyConfig, VerifyReport};
