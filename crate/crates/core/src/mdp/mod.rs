//! Finite-horizon MDP model, exact dynamic programming, occupancy measures
//! and softmax policies.

mod dp;
mod model;
mod policy;
mod qfunction;
mod softmax;

pub use dp::{
    apply_bellman, apply_bellman_optimal, evaluate_policy, occupancy, policy_values, solve_exact,
    ExactSolution, OccupancyMeasure, PolicyEvaluation,
};
pub use model::{check_distribution, FiniteMdp, PROB_TOL};
pub use policy::{Policy, PolicyKind};
pub use qfunction::{KernelQ, LinearQ, QFunction, QTable};
pub use softmax::{softmax_gap_bound, softmax_policy, SoftmaxGapBound};

pub use model::default_labels;
pub(crate) use softmax::softmax_row;
