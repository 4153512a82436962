mod fitted_reward;
mod fqi;
mod function_class;
mod lsvi;
mod policy_gradient;
mod report;

pub use fitted_reward::{
    fitted_reward, norm_constrained_fit, unit_ball_reward, ConstrainedFit, FittedRewardRun, PairSampling,
};
pub use fqi::fitted_q_iteration;
pub use function_class::{all_pairs, uniform_pairs, FunctionClass, StepFit};
pub use lsvi::{loglog_fit, loglog_slope_second_half, lsvi_ucb, scaled_beta, LsviConfig, RegularizerMode};
pub use policy_gradient::{
    estimate_gradient, exact_policy_gradient, policy_gradient, GradientEstimate, PolicyGradientConfig,
    PolicyGradientRun, SoftmaxParameterization, DIVERGENCE_NORM,
};
pub use report::{AlgorithmReport, Diagnostics};
