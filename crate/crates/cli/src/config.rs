//! Scenario configuration. A config is a JSON object with `scenario`,
//! optional `seed` and `output`, and the scenario's own parameters at the
//! top level; unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use rlfa_core::algorithms::{PairSampling, RegularizerMode};
use rlfa_core::kernel::{KernelKind, KernelSpec};
use rlfa_core::mdp::FiniteMdp;
use rlfa_core::rng::{stream, Stream};
use rlfa_core::simulator::NoiseMode;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    ExactDp,
    Theorem1,
    Fqi,
    LsviUcb,
    PolicyGradient,
    FittedReward,
    Spectrum,
    PowerFunction,
    Perturbation,
    CurseDemo,
    ClosureCheck,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 11] = [
        ScenarioKind::ExactDp,
        ScenarioKind::Theorem1,
        ScenarioKind::Fqi,
        ScenarioKind::LsviUcb,
        ScenarioKind::PolicyGradient,
        ScenarioKind::FittedReward,
        ScenarioKind::Spectrum,
        ScenarioKind::PowerFunction,
        ScenarioKind::Perturbation,
        ScenarioKind::CurseDemo,
        ScenarioKind::ClosureCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::ExactDp => "exact-dp",
            ScenarioKind::Theorem1 => "theorem1",
            ScenarioKind::Fqi => "fqi",
            ScenarioKind::LsviUcb => "lsvi-ucb",
            ScenarioKind::PolicyGradient => "policy-gradient",
            ScenarioKind::FittedReward => "fitted-reward",
            ScenarioKind::Spectrum => "spectrum",
            ScenarioKind::PowerFunction => "power-function",
            ScenarioKind::Perturbation => "perturbation",
            ScenarioKind::CurseDemo => "curse-demo",
            ScenarioKind::ClosureCheck => "closure-check",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Finite MDP instance: loaded from `file`, or random with the given sizes.
/// `reward` overrides every mean reward with a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MdpConfig {
    pub states: usize,
    pub actions: usize,
    pub horizon: usize,
    pub deterministic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
    /// Seed of the instance stream; the run seed when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl MdpConfig {
    pub fn sized(states: usize, actions: usize, horizon: usize) -> Self {
        MdpConfig {
            states,
            actions,
            horizon,
            deterministic: false,
            reward: None,
            instance_seed: None,
            file: None,
        }
    }

    pub fn build(&self, seed: u64) -> Result<FiniteMdp> {
        let mdp = match &self.file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config(format!("cannot read MDP file {}: {e}", path.display())))?;
                FiniteMdp::from_json(&text)?
            }
            None => {
                if self.states == 0 || self.actions == 0 || self.horizon == 0 {
                    return Err(CliError::config("mdp sizes must be positive"));
                }
                let mut rng = stream(self.instance_seed.unwrap_or(seed), Stream::Instance);
                if self.deterministic {
                    FiniteMdp::random_deterministic(&mut rng, self.states, self.actions, self.horizon)
                } else {
                    FiniteMdp::random(&mut rng, self.states, self.actions, self.horizon)
                }
            }
        };
        match self.reward {
            Some(r) => Ok(mdp.with_rewards(vec![r; mdp.horizon() * mdp.n_pairs()], mdp.reward_range())?),
            None => Ok(mdp),
        }
    }
}

impl Default for MdpConfig {
    fn default() -> Self {
        MdpConfig::sized(3, 2, 3)
    }
}

fn kernel(kind: KernelKind, alpha: Option<f64>, d: usize) -> KernelSpec {
    KernelSpec {
        kind,
        alpha,
        d,
        mc_samples: None,
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExactDpParams {
    pub mdp: MdpConfig,
}

/// Random instances for the softmax suboptimality bound: sizes are drawn
/// up to the maxima, `Q` is `Q*` plus uniform noise of width `perturbation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Theorem1Params {
    pub trials: usize,
    pub max_states: usize,
    pub max_actions: usize,
    pub max_horizon: usize,
    pub betas: Vec<f64>,
    pub perturbation: f64,
}

impl Default for Theorem1Params {
    fn default() -> Self {
        Theorem1Params {
            trials: 200,
            max_states: 4,
            max_actions: 3,
            max_horizon: 3,
            betas: vec![0.5, 1.0, 2.0, 8.0],
            perturbation: 2.0,
        }
    }
}

/// Tabular one-hot features; `samples_per_pair` queries of every pair per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FqiParams {
    pub mdp: MdpConfig,
    pub lambda: f64,
    pub samples_per_pair: usize,
    pub noise: NoiseMode,
}

impl Default for FqiParams {
    fn default() -> Self {
        FqiParams {
            mdp: MdpConfig::sized(4, 3, 3),
            lambda: 1e-8,
            samples_per_pair: 1,
            noise: NoiseMode::Exact,
        }
    }
}

/// Tabular embedding of a random MDP. `lambda` defaults to `1/K` and the
/// bonus scale `c` to `1/(d H)`, so `beta = sqrt(log(2 d K H))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LsviParams {
    pub mdp: MdpConfig,
    pub episodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub regularizer: RegularizerMode,
}

impl Default for LsviParams {
    fn default() -> Self {
        LsviParams {
            mdp: MdpConfig::sized(5, 2, 3),
            episodes: 2000,
            lambda: None,
            beta_scale: None,
            beta: None,
            regularizer: RegularizerMode::Budget,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyGradientParams {
    pub mdp: MdpConfig,
    pub iterations: usize,
    pub rollouts: usize,
    pub eta: f64,
}

impl Default for PolicyGradientParams {
    fn default() -> Self {
        PolicyGradientParams {
            mdp: MdpConfig::sized(2, 2, 2),
            iterations: 50,
            rollouts: 1000,
            eta: 0.5,
        }
    }
}

/// Random MDP whose rewards are unit-norm kernel expansions over pairs
/// embedded on the sphere of dimension `kernel.d`; sampling is uniform over
/// pairs at every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FittedRewardParams {
    pub states: usize,
    pub actions: usize,
    pub horizon: usize,
    pub kernel: KernelSpec,
    pub atoms: usize,
    pub n: usize,
    pub noise: NoiseMode,
    pub sampling: PairSampling,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance_seed: Option<u64>,
}

impl Default for FittedRewardParams {
    fn default() -> Self {
        FittedRewardParams {
            states: 4,
            actions: 2,
            horizon: 3,
            kernel: kernel(KernelKind::Gaussian, Some(1.0), 3),
            atoms: 3,
            n: 64,
            noise: NoiseMode::UnitGaussian,
            sampling: PairSampling::Iid,
            instance_seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportWeights {
    #[default]
    Uniform,
    Random,
}

/// Mercer spectrum of a kernel on `support` uniform points of the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumParams {
    pub kernel: KernelSpec,
    pub support: usize,
    pub weights: SupportWeights,
    pub tail_n: usize,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        SpectrumParams {
            kernel: kernel(KernelKind::Laplacian, Some(1.0), 3),
            support: 256,
            weights: SupportWeights::Uniform,
            tail_n: 64,
        }
    }
}

/// Power-function bounds on one random support for each center count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerFunctionParams {
    pub kernel: KernelSpec,
    pub support: usize,
    pub weights: SupportWeights,
    pub centers: Vec<usize>,
}

impl Default for PowerFunctionParams {
    fn default() -> Self {
        PowerFunctionParams {
            kernel: kernel(KernelKind::Gaussian, Some(1.0), 3),
            support: 64,
            weights: SupportWeights::Random,
            centers: vec![1, 4, 16],
        }
    }
}

/// Perturbation responses and the candidate-search complexity on a random
/// support with `pi_members` random target distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationParams {
    pub kernel: KernelSpec,
    pub support: usize,
    pub pi_members: usize,
    pub epsilons: Vec<f64>,
}

impl Default for PerturbationParams {
    fn default() -> Self {
        PerturbationParams {
            kernel: kernel(KernelKind::Laplacian, Some(1.0), 3),
            support: 20,
            pi_members: 3,
            epsilons: vec![0.0, 0.01, 0.05, 0.1, 0.5],
        }
    }
}

/// Laplacian tail sums on uniform sphere samples across dimensions, plus
/// the expected return of the uniform policy in the sphere-walk MDP family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurseDemoParams {
    pub dims: Vec<usize>,
    pub support: usize,
    pub tail_n: usize,
    pub repeats: usize,
    pub alpha: f64,
    pub horizon: usize,
    pub delta: f64,
    pub centers: usize,
    pub starts: usize,
}

impl Default for CurseDemoParams {
    fn default() -> Self {
        CurseDemoParams {
            dims: vec![2, 4, 8],
            support: 512,
            tail_n: 64,
            repeats: 5,
            alpha: 1.0,
            horizon: 3,
            delta: 0.1,
            centers: 8,
            starts: 64,
        }
    }
}

/// Random linear MDP; checks closure of Bellman images and linearity of `Q^pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClosureCheckParams {
    pub states: usize,
    pub actions: usize,
    pub d: usize,
    pub horizon: usize,
    pub trials: usize,
    pub policies: usize,
    pub tolerance: f64,
}

impl Default for ClosureCheckParams {
    fn default() -> Self {
        ClosureCheckParams {
            states: 8,
            actions: 3,
            d: 5,
            horizon: 3,
            trials: 50,
            policies: 20,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    ExactDp(ExactDpParams),
    Theorem1(Theorem1Params),
    Fqi(FqiParams),
    LsviUcb(LsviParams),
    PolicyGradient(PolicyGradientParams),
    FittedReward(FittedRewardParams),
    Spectrum(SpectrumParams),
    PowerFunction(PowerFunctionParams),
    Perturbation(PerturbationParams),
    CurseDemo(CurseDemoParams),
    ClosureCheck(ClosureCheckParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Artifact directory name under the output root.
    pub output: Option<String>,
    pub params: Params,
}

fn parse_params<T: DeserializeOwned>(rest: Map<String, Value>) -> Result<T> {
    serde_json::from_value(Value::Object(rest)).map_err(|e| CliError::config(e.to_string()))
}

fn to_object<T: Serialize>(p: &T) -> Map<String, Value> {
    match serde_json::to_value(p).expect("params serialize") {
        Value::Object(m) => m,
        _ => unreachable!("params are structs"),
    }
}

impl ScenarioConfig {
    pub fn kind(&self) -> ScenarioKind {
        match &self.params {
            Params::ExactDp(_) => ScenarioKind::ExactDp,
            Params::Theorem1(_) => ScenarioKind::Theorem1,
            Params::Fqi(_) => ScenarioKind::Fqi,
            Params::LsviUcb(_) => ScenarioKind::LsviUcb,
            Params::PolicyGradient(_) => ScenarioKind::PolicyGradient,
            Params::FittedReward(_) => ScenarioKind::FittedReward,
            Params::Spectrum(_) => ScenarioKind::Spectrum,
            Params::PowerFunction(_) => ScenarioKind::PowerFunction,
            Params::Perturbation(_) => ScenarioKind::Perturbation,
            Params::CurseDemo(_) => ScenarioKind::CurseDemo,
            Params::ClosureCheck(_) => ScenarioKind::ClosureCheck,
        }
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let Value::Object(mut map) = value else {
            return Err(CliError::config("config must be a JSON object"));
        };
        let name = match map.remove("scenario") {
            Some(Value::String(s)) => s,
            Some(_) => return Err(CliError::config("`scenario` must be a string")),
            None => return Err(CliError::config("missing `scenario`")),
        };
        let kind = ScenarioKind::from_name(&name).ok_or_else(|| {
            let known: Vec<&str> = ScenarioKind::ALL.iter().map(|k| k.name()).collect();
            CliError::config(format!("unknown scenario `{name}` (expected one of {})", known.join(", ")))
        })?;
        let seed = match map.remove("seed") {
            None => 0,
            Some(v) => v
                .as_u64()
                .ok_or_else(|| CliError::config("`seed` must be a nonnegative integer"))?,
        };
        let output = match map.remove("output") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s),
            Some(_) => return Err(CliError::config("`output` must be a string")),
        };
        let params = match kind {
            ScenarioKind::ExactDp => Params::ExactDp(parse_params(map)?),
            ScenarioKind::Theorem1 => Params::Theorem1(parse_params(map)?),
            ScenarioKind::Fqi => Params::Fqi(parse_params(map)?),
            ScenarioKind::LsviUcb => Params::LsviUcb(parse_params(map)?),
            ScenarioKind::PolicyGradient => Params::PolicyGradient(parse_params(map)?),
            ScenarioKind::FittedReward => Params::FittedReward(parse_params(map)?),
            ScenarioKind::Spectrum => Params::Spectrum(parse_params(map)?),
            ScenarioKind::PowerFunction => Params::PowerFunction(parse_params(map)?),
            ScenarioKind::Perturbation => Params::Perturbation(parse_params(map)?),
            ScenarioKind::CurseDemo => Params::CurseDemo(parse_params(map)?),
            ScenarioKind::ClosureCheck => Params::ClosureCheck(parse_params(map)?),
        };
        Ok(ScenarioConfig { seed, output, params })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The fully resolved config, defaults filled in.
    pub fn to_value(&self) -> Value {
        let mut map = match &self.params {
            Params::ExactDp(p) => to_object(p),
            Params::Theorem1(p) => to_object(p),
            Params::Fqi(p) => to_object(p),
            Params::LsviUcb(p) => to_object(p),
            Params::PolicyGradient(p) => to_object(p),
            Params::FittedReward(p) => to_object(p),
            Params::Spectrum(p) => to_object(p),
            Params::PowerFunction(p) => to_object(p),
            Params::Perturbation(p) => to_object(p),
            Params::CurseDemo(p) => to_object(p),
            Params::ClosureCheck(p) => to_object(p),
        };
        map.insert("scenario".into(), self.kind().name().into());
        map.insert("seed".into(), self.seed.into());
        if let Some(o) = &self.output {
            map.insert("output".into(), o.clone().into());
        }
        Value::Object(map)
    }

    pub fn output_name(&self) -> String {
        self.output
            .clone()
            .unwrap_or_else(|| format!("{}-seed{}", self.kind(), self.seed))
    }
}
