mod closure;
mod features;
mod ridge;
mod spec;

pub use closure::{check_linear_closure, ClosureReport, FeatureProjector};
pub use features::{FeatureKind, FeatureMap, FeatureMapSpec};
pub use ridge::{ridge_fit, ridge_solve, ucb_bonus, RidgeDesign, UcbBonus};
pub use spec::{build_linear_mdp, project_to_simplex, tabular_embedding, LinearMdpSpec};
