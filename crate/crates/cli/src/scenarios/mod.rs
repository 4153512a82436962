//! Scenario pipelines. Each returns its tables and summary in memory;
//! nothing touches the filesystem until the artifact is written.

mod control;
mod spectral;

use std::time::Instant;

use rand::Rng;
use rlfa_core::rng::{unit_sphere, StreamRng};

use crate::artifact::{Assertions, RunArtifact, Summary, Table};
use crate::config::{Params, ScenarioConfig, SupportWeights};
use crate::error::{CliError, Result};

/// Tolerance for the pass/fail columns of assertion scenarios.
pub const ASSERT_TOL: f64 = 1e-8;

pub(crate) struct Outcome {
    pub summary: Summary,
    pub tables: Vec<Table>,
    pub assertions: Option<Assertions>,
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunArtifact> {
    let start = Instant::now();
    let seed = config.seed;
    let out = match &config.params {
        Params::ExactDp(p) => control::exact_dp(p, seed),
        Params::Theorem1(p) => control::theorem1(p, seed),
        Params::Fqi(p) => control::fqi(p, seed),
        Params::LsviUcb(p) => control::lsvi_ucb(p, seed),
        Params::PolicyGradient(p) => control::policy_gradient(p, seed),
        Params::FittedReward(p) => control::fitted_reward(p, seed),
        Params::ClosureCheck(p) => control::closure_check(p, seed),
        Params::Spectrum(p) => spectral::spectrum(p, seed),
        Params::PowerFunction(p) => spectral::power_function(p, seed),
        Params::Perturbation(p) => spectral::perturbation(p, seed),
        Params::CurseDemo(p) => spectral::curse_demo(p, seed),
    }?;
    Ok(RunArtifact {
        config: config.to_value(),
        seed,
        summary: out.summary,
        tables: out.tables,
        assertions: out.assertions,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

pub(crate) fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::config(msg))
    }
}

pub(crate) fn sphere_points(rng: &mut StreamRng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| unit_sphere(rng, d)).collect()
}

pub(crate) fn support_weights(rng: &mut StreamRng, n: usize, mode: SupportWeights) -> Vec<f64> {
    match mode {
        SupportWeights::Uniform => vec![1.0 / n as f64; n],
        SupportWeights::Random => {
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|v| v / total).collect()
        }
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linear-interpolation quantile of the sorted sample.
pub(crate) fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let pos = q * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(median(&v), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!(quantile(&[], 0.5).is_nan());
    }
}
