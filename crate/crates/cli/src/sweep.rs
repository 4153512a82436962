//! One-axis sweeps over a config template.

use std::path::Path;

use rayon::prelude::*;
use rlfa_core::algorithms::loglog_fit;
use serde_json::{json, Value};

use crate::artifact::{versions, RunArtifact, Table};
use crate::config::{ScenarioConfig, ScenarioKind};
use crate::error::{CliError, Result};
use crate::scenarios::{quantile, run_scenario};

/// `name=v1,v2,...`; `name` may be a dotted path such as `mdp.states`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<Value>,
}

impl Axis {
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, list) = spec
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("axis `{spec}` is not of the form name=v1,v2,...")))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(CliError::config("axis name is empty"));
        }
        if matches!(name, "scenario" | "output") {
            return Err(CliError::config(format!("cannot sweep over `{name}`")));
        }
        let values: Vec<Value> = list
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string())))
            .collect();
        if values.is_empty() {
            return Err(CliError::config(format!("axis `{name}` has no values")));
        }
        Ok(Axis {
            name: name.to_string(),
            values,
        })
    }

    pub fn label(&self, i: usize) -> String {
        match &self.values[i] {
            Value::String(s) => s.clone(),
            v => v.to_string(),
        }
    }
}

fn set_path(target: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = target;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::config(format!("axis `{path}`: `{part}` is not inside an object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| json!({}));
    }
    unreachable!("split yields at least one part")
}

#[derive(Debug)]
pub struct SweepPoint {
    pub axis_index: usize,
    pub seed: u64,
    pub result: Result<RunArtifact>,
}

#[derive(Debug)]
pub struct SweepResult {
    pub kind: ScenarioKind,
    pub axis: Axis,
    pub points: Vec<SweepPoint>,
    pub aggregate: Table,
    pub runs: Table,
}

impl SweepResult {
    /// Exit status of the sweep: the first failed run's status, else 4 if
    /// any run failed its assertions, else 0.
    pub fn exit_code(&self) -> i32 {
        if let Some(e) = self.points.iter().find_map(|p| p.result.as_ref().err()) {
            return e.exit_code();
        }
        let failed_assertions = self
            .points
            .iter()
            .filter_map(|p| p.result.as_ref().ok())
            .any(|a| a.assertions.is_some_and(|x| !x.all_passed()));
        if failed_assertions {
            4
        } else {
            0
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("aggregate.csv"), self.aggregate.to_csv()?)?;
        std::fs::write(dir.join("runs.csv"), self.runs.to_csv()?)?;
        for p in &self.points {
            if let Ok(a) = &p.result {
                let name = format!("{}={}-seed{}", self.axis.name, self.axis.label(p.axis_index), p.seed);
                a.write(&dir.join("points").join(sanitize(&name)))?;
            }
        }
        let meta = json!({
            "scenario": self.kind.name(),
            "axis": {"name": self.axis.name, "values": self.axis.values},
            "seeds": self.points.iter().filter(|p| p.axis_index == 0).map(|p| p.seed).collect::<Vec<_>>(),
            "versions": versions(),
            "tables": ["aggregate.csv", "runs.csv"],
        });
        std::fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta).expect("serializes") + "\n")?;
        Ok(())
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "=-_.".contains(c) { c } else { '_' })
        .collect()
}

/// Runs every `(axis value, seed)` point in parallel. Point configs are all
/// validated before anything runs; a run that fails afterwards is recorded
/// in its row and the sweep carries on.
pub fn sweep(template: &Value, axis: &Axis, seeds: &[u64]) -> Result<SweepResult> {
    if seeds.is_empty() {
        return Err(CliError::config("a sweep needs at least one seed"));
    }
    let base = ScenarioConfig::from_value(template.clone())?;
    let kind = base.kind();
    let mut configs = Vec::with_capacity(axis.values.len() * seeds.len());
    for (i, v) in axis.values.iter().enumerate() {
        for &seed in seeds {
            let mut value = base.to_value();
            set_path(&mut value, "seed", seed.into())?;
            set_path(&mut value, &axis.name, v.clone())?;
            let cfg = ScenarioConfig::from_value(value)
                .map_err(|e| CliError::config(format!("axis {}={}: {e}", axis.name, axis.label(i))))?;
            configs.push((i, seed, cfg));
        }
    }
    let points: Vec<SweepPoint> = configs
        .into_par_iter()
        .map(|(axis_index, seed, cfg)| SweepPoint {
            axis_index,
            seed,
            result: run_scenario(&cfg),
        })
        .collect();

    let mut runs = Table::new("runs", &[axis.name.as_str(), "seed", "status", "headline", "value", "error"]);
    for p in &points {
        let (status, headline, value, error) = match &p.result {
            Ok(a) => {
                let status = match a.assertions {
                    Some(x) if !x.all_passed() => "assertion-failed",
                    _ => "ok",
                };
                (status, a.summary.headline.clone(), a.summary.value.to_string(), String::new())
            }
            Err(e) => ("failed", String::new(), String::new(), e.to_string()),
        };
        runs.push([axis.label(p.axis_index), p.seed.to_string(), status.into(), headline, value, error]);
    }

    let with_slope = kind == ScenarioKind::LsviUcb;
    let mut header = vec![axis.name.as_str(), "runs", "failures", "headline", "median", "q1", "q3"];
    if with_slope {
        header.push("loglog_slope");
    }
    let mut aggregate = Table::new("aggregate", &header);
    let mut medians = Vec::with_capacity(axis.values.len());
    let mut rows = Vec::with_capacity(axis.values.len());
    for i in 0..axis.values.len() {
        let ok: Vec<&RunArtifact> = points
            .iter()
            .filter(|p| p.axis_index == i)
            .filter_map(|p| p.result.as_ref().ok())
            .collect();
        let values: Vec<f64> = ok.iter().map(|a| a.summary.value).collect();
        let headline = ok.first().map(|a| a.summary.headline.clone()).unwrap_or_default();
        let med = quantile(&values, 0.5);
        medians.push(med);
        rows.push(vec![
            axis.label(i),
            seeds.len().to_string(),
            (seeds.len() - ok.len()).to_string(),
            headline,
            med.to_string(),
            quantile(&values, 0.25).to_string(),
            quantile(&values, 0.75).to_string(),
        ]);
    }
    if with_slope {
        // Log-log fit of the median headline against the axis value.
        let pts: Vec<(f64, f64)> = axis
            .values
            .iter()
            .zip(&medians)
            .filter_map(|(v, m)| v.as_f64().filter(|x| *x > 0.0 && *m > 0.0).map(|x| (x.ln(), m.ln())))
            .collect();
        let slope = loglog_fit(&pts).map_or(String::new(), |s| s.to_string());
        for row in &mut rows {
            row.push(slope.clone());
        }
    }
    for row in rows {
        aggregate.push(row);
    }
    Ok(SweepResult {
        kind,
        axis: axis.clone(),
        points,
        aggregate,
        runs,
    })
}
