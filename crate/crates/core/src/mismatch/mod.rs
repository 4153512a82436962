//! Distribution-mismatch quantities: Pi-norms, perturbation responses and
//! their candidate minimum over reference laws, concentration coefficients,
//! reachable occupancy sets, and the sphere MDP family whose difficulty grows
//! with dimension.

mod curse;
mod distributions;
mod reachable;
mod response;

pub use curse::{from_cartesian, to_cartesian, CurseMdp, LaplacianExpansion};
pub use distributions::{concentration_coefficient, pi_norm, Concentration, DistributionSet};
pub use reachable::{prefix_count, reachable_set, ReachableMode, ReachableSet, ENUMERATION_LIMIT};
pub use response::{
    default_candidates, delta_complexity, dual_norm_bound, perturbation_response, write_response_csv,
    DeltaComplexity, PerturbationInstance, PerturbationResponse, ReferenceForm, ResponseRow, ResponseSolver,
    RhoResponse,
};
