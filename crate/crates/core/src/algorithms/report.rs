use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::mdp::{Policy, QTable};
use crate::simulator::RegretLedger;

/// Per-iteration diagnostics. Every populated vector has one entry per
/// iteration (backward step, episode or gradient step, by algorithm).
#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub losses: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub clipped: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bonus_max: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub gradient_norms: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub multipliers: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rkhs_norms: Vec<f64>,
    /// Fraction of `(h, s, a)` with `Q_h^k >= Q_h^*`, per episode.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub optimism: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmReport {
    pub algorithm: &'static str,
    pub seed: u64,
    pub config: serde_json::Value,
    pub policy: Policy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<QTable>,
    pub diagnostics: Diagnostics,
    /// Exact `J` of the iterate, index 0 being the initial one, when evaluable.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub learning_curve: Vec<f64>,
    #[serde(skip)]
    pub regret: Option<RegretLedger>,
    pub queries: usize,
}

impl AlgorithmReport {
    pub fn new(algorithm: &'static str, seed: u64, config: serde_json::Value, policy: Policy) -> Self {
        AlgorithmReport {
            algorithm,
            seed,
            config,
            policy,
            q: None,
            diagnostics: Diagnostics::default(),
            learning_curve: Vec::new(),
            regret: None,
            queries: 0,
        }
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self)?;
        if let Some(ledger) = &self.regret {
            v["cumulative_regret"] = ledger.cumulative().into();
            v["jstar"] = ledger.jstar().into();
        }
        Ok(v)
    }

    /// Writes `k,instant_regret,cumulative`; no-op without a ledger.
    pub fn write_regret_csv<W: Write>(&self, out: W) -> Result<()> {
        match &self.regret {
            Some(l) => l.write_csv(out),
            None => Ok(()),
        }
    }

    /// Writes `iteration,J`.
    pub fn write_learning_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "J"])?;
        for (i, j) in self.learning_curve.iter().enumerate() {
            w.write_record([i.to_string(), j.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
