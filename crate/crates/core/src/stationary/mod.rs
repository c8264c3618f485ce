//! Stationary solutions: unimodal equilibria and Galerkin equilibria.

mod newton;
mod quartic;
mod unimodal;

pub use newton::{
    linearization, newton_equilibria, newton_from, stationary_a_priori_bound, trivial_uniqueness_threshold,
    NewtonConfig, NewtonEquilibrium, NewtonReport,
};
pub use quartic::{alpha_crit, mu_crit, quartic_roots, QuarticRoots, RootClass};
pub use unimodal::{
    alpha_bar, boundary_determinant_d, boundary_singular_values, boundary_system, build_unimodal, build_unimodal_at,
    characteristic_determinant, companion, fundamental_matrix, phi, project_unimodal, projection_error, psi_at_root,
    solve_mu, solve_mu_in, trace_branch, BranchCurve, MuWindow, PsiSolution, UnimodalEquilibrium, UnimodalResidual,
};
