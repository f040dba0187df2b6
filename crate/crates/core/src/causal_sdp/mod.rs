//! Fixed-order cones, causal separability and random robustness.

mod cones;
mod problems;
mod separability;
mod solver;

pub use cones::{project_to_cone_subspace, CausalOrder, CombConstraint, CombProjector, OrderedConeSpec};
pub use problems::{ConeMembershipProblem, ConeMinimumProblem, FullWitnessProblem, SeparabilityProblem};
pub use separability::{
    cone_membership, cone_minimum, is_causally_separable, random_robustness, Certificate, RobustnessResult,
    Separability, SeparableDecomposition, BISECTION_TOL, ROBUSTNESS_BRACKET,
};
pub(crate) use separability::soundness_shift;
pub use solver::{
    solve_sdp, BlockCone, FreeTerm, LinearSdp, Point, SdpSolution, SolverDiagnostics, SolverSettings, SolverStatus,
    SplitProblem,
};
