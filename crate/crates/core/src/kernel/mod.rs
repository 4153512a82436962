mod gram;
mod kernels;
mod power;
mod random_features;
mod spectrum;

pub use gram::{krr_fit, krr_solve, GramMatrix, KrrModel};
pub use kernels::{Kernel, KernelKind, KernelSpec, SPHERE_TOL};
pub use power::{power_function, power_squared_on_support, MinimalUcb, PowerFunction};
pub use random_features::{
    barron_target, random_feature_regress, random_feature_regress_with, RandomFeatureFit, TwoLayerModel,
};
pub use spectrum::{mercer_spectrum, rkhs_norm, rkhs_norm_detail, tail_sum, RkhsNorm, Spectrum, EIGEN_FLOOR};
