use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linear::FeatureMap;

/// Per-step state-action values stored as a dense `[h][s][a]` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(horizon: usize, n_states: usize, n_actions: usize) -> Self {
        QTable {
            horizon,
            n_states,
            n_actions,
            values: vec![0.0; horizon * n_states * n_actions],
        }
    }

    pub fn from_values(
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != horizon * n_states * n_actions {
            return Err(Error::DimensionMismatch {
                expected: horizon * n_states * n_actions,
                got: values.len(),
                context: "Q table",
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("Q table entry {v} is not finite")));
        }
        Ok(QTable {
            horizon,
            n_states,
            n_actions,
            values,
        })
    }

    pub fn from_fn(
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(horizon * n_states * n_actions);
        for h in 0..horizon {
            for s in 0..n_states {
                for a in 0..n_actions {
                    values.push(f(h, s, a));
                }
            }
        }
        QTable {
            horizon,
            n_states,
            n_actions,
            values,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    fn index(&self, h: usize, s: usize, a: usize) -> usize {
        (h * self.n_states + s) * self.n_actions + a
    }

    pub fn get(&self, h: usize, s: usize, a: usize) -> f64 {
        self.values[self.index(h, s, a)]
    }

    pub fn set(&mut self, h: usize, s: usize, a: usize, v: f64) {
        let i = self.index(h, s, a);
        self.values[i] = v;
    }

    /// `Q_h(s, .)`.
    pub fn row(&self, h: usize, s: usize) -> &[f64] {
        let start = self.index(h, s, 0);
        &self.values[start..start + self.n_actions]
    }

    /// All values of step `h` in `[s][a]` order.
    pub fn step(&self, h: usize) -> &[f64] {
        let n = self.n_states * self.n_actions;
        &self.values[h * n..(h + 1) * n]
    }

    pub fn step_mut(&mut self, h: usize) -> &mut [f64] {
        let n = self.n_states * self.n_actions;
        &mut self.values[h * n..(h + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `V_h(s) = max_a Q_h(s, a)`.
    pub fn max_value(&self, h: usize, s: usize) -> f64 {
        self.row(h, s).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest-index maximizer of `Q_h(s, .)`.
    pub fn argmax(&self, h: usize, s: usize) -> usize {
        argmax_lowest(self.row(h, s))
    }

    pub fn max_abs_diff(&self, other: &QTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn same_shape(&self, horizon: usize, n_states: usize, n_actions: usize) -> bool {
        self.horizon == horizon && self.n_states == n_states && self.n_actions == n_actions
    }
}

pub(crate) fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Linear-in-features Q function `clip(phi(s,a)^T w_h)`.
#[derive(Debug, Clone)]
pub struct LinearQ {
    pub features: FeatureMap,
    pub weights: Vec<DVector<f64>>,
    pub clip: Option<(f64, f64)>,
}

/// Kernel-expansion Q function `clip(sum_i c_i k(z(s,a), z_i))` per step.
#[derive(Debug, Clone)]
pub struct KernelQ {
    pub kernel: Kernel,
    /// Embedding of every `(s, a)` pair, indexed `s * |A| + a`.
    pub embedding: Vec<Vec<f64>>,
    pub n_actions: usize,
    pub centers: Vec<Vec<Vec<f64>>>,
    pub coefficients: Vec<Vec<f64>>,
    pub clip: Option<(f64, f64)>,
}

/// Q function in one of its three representations.
#[derive(Debug, Clone)]
pub enum QFunction {
    Table(QTable),
    Linear(LinearQ),
    Kernel(KernelQ),
}

fn clip_to(v: f64, clip: Option<(f64, f64)>) -> f64 {
    match clip {
        Some((lo, hi)) => v.clamp(lo, hi),
        None => v,
    }
}

impl QFunction {
    pub fn eval(&self, h: usize, s: usize, a: usize) -> f64 {
        match self {
            QFunction::Table(t) => t.get(h, s, a),
            QFunction::Linear(l) => {
                let phi = l.features.phi(s, a);
                clip_to(phi.dot(&l.weights[h]), l.clip)
            }
            QFunction::Kernel(k) => {
                let z = &k.embedding[s * k.n_actions + a];
                let v: f64 = k.centers[h]
                    .iter()
                    .zip(&k.coefficients[h])
                    .map(|(c, w)| w * k.kernel.eval_unchecked(z, c))
                    .sum();
                clip_to(v, k.clip)
            }
        }
    }

    /// Materializes the function on the full `(h, s, a)` grid.
    pub fn to_table(&self, horizon: usize, n_states: usize, n_actions: usize) -> QTable {
        match self {
            QFunction::Table(t) => t.clone(),
            _ => QTable::from_fn(horizon, n_states, n_actions, |h, s, a| self.eval(h, s, a)),
        }
    }
}
