//! Successive convex approximation for the ARIS deployment subproblem:
//! slack reformulation, DC decomposition with first-order surrogates, and an
//! iterative solve with a monotone objective trace.

mod deploy;
mod subproblem;
mod surrogate;

pub use deploy::{grid_search_single_aris, sca_iterate, DeploymentSolution};
pub use subproblem::{solve_convex_subproblem, ScaParams, SubproblemSolution};
pub use surrogate::{
    build_surrogate, linearize_separation, model_objective, quadratic_form, surrogate_lower_bound,
    taylor_pathloss_bound, taylor_quadratic_bound, tight_slacks, DcDecomposition, PairSurrogate,
    QuadraticMinorant, SeparationCut, SlackState, SurrogateModel,
};
