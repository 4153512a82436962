use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{simplex_point, standard_normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    TabularOnehot,
    CustomGrid,
}

/// Feature map `phi: S x A -> R^d` tabulated on a finite grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    kind: FeatureKind,
    n_states: usize,
    n_actions: usize,
    dim: usize,
    /// `[s][a][k]`
    values: Vec<f64>,
}

impl FeatureMap {
    /// Canonical basis vector for each pair, coordinate `s * |A| + a`.
    pub fn tabular_onehot(n_states: usize, n_actions: usize) -> Self {
        let d = n_states * n_actions;
        let mut values = vec![0.0; d * d];
        for i in 0..d {
            values[i * d + i] = 1.0;
        }
        FeatureMap {
            kind: FeatureKind::TabularOnehot,
            n_states,
            n_actions,
            dim: d,
            values,
        }
    }

    pub fn from_values(n_states: usize, n_actions: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be positive"));
        }
        if values.len() != n_states * n_actions * dim {
            return Err(Error::DimensionMismatch {
                expected: n_states * n_actions * dim,
                got: values.len(),
                context: "feature grid",
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature values must be finite"));
        }
        Ok(FeatureMap {
            kind: FeatureKind::CustomGrid,
            n_states,
            n_actions,
            dim,
            values,
        })
    }

    /// Standard Gaussian features.
    pub fn random_gaussian<R: Rng + ?Sized>(rng: &mut R, n_states: usize, n_actions: usize, dim: usize) -> Self {
        let values = (0..n_states * n_actions * dim)
            .map(|_| standard_normal(rng))
            .collect();
        Self::from_values(n_states, n_actions, dim, values).expect("finite draws")
    }

    /// Features drawn from the probability simplex of `R^d`.
    pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n_states: usize, n_actions: usize, dim: usize) -> Self {
        let mut values = Vec::with_capacity(n_states * n_actions * dim);
        for _ in 0..n_states * n_actions {
            values.extend(simplex_point(rng, dim));
        }
        Self::from_values(n_states, n_actions, dim, values).expect("finite draws")
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn phi_slice(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.dim;
        &self.values[start..start + self.dim]
    }

    pub fn phi(&self, s: usize, a: usize) -> DVector<f64> {
        DVector::from_column_slice(self.phi_slice(s, a))
    }

    /// `sup_{s,a} ||phi(s, a)||`.
    pub fn norm_bound(&self) -> f64 {
        self.values
            .chunks(self.dim)
            .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Stacked features, one row per pair in `s * |A| + a` order.
    pub fn design_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_states * self.n_actions, self.dim, &self.values)
    }

    pub fn to_spec(&self) -> FeatureMapSpec {
        let values = match self.kind {
            FeatureKind::TabularOnehot => None,
            FeatureKind::CustomGrid => Some(
                (0..self.n_states)
                    .map(|s| (0..self.n_actions).map(|a| self.phi_slice(s, a).to_vec()).collect())
                    .collect(),
            ),
        };
        FeatureMapSpec {
            kind: self.kind,
            d: self.dim,
            values,
        }
    }

    /// Resolves a serialized spec against a grid of `n_states x n_actions`.
    pub fn from_spec(spec: &FeatureMapSpec, n_states: usize, n_actions: usize) -> Result<Self> {
        match spec.kind {
            FeatureKind::TabularOnehot => {
                if spec.d != n_states * n_actions {
                    return Err(Error::invalid(format!(
                        "tabular-onehot needs d = |S||A| = {}, got {}",
                        n_states * n_actions,
                        spec.d
                    )));
                }
                Ok(Self::tabular_onehot(n_states, n_actions))
            }
            FeatureKind::CustomGrid => {
                let grid = spec
                    .values
                    .as_ref()
                    .ok_or_else(|| Error::invalid("custom-grid features need `values`"))?;
                if grid.len() != n_states || grid.iter().any(|r| r.len() != n_actions) {
                    return Err(Error::invalid("feature `values` grid has the wrong shape"));
                }
                let mut flat = Vec::with_capacity(n_states * n_actions * spec.d);
                for row in grid.iter().flatten() {
                    if row.len() != spec.d {
                        return Err(Error::DimensionMismatch {
                            expected: spec.d,
                            got: row.len(),
                            context: "feature vector",
                        });
                    }
                    flat.extend_from_slice(row);
                }
                Self::from_values(n_states, n_actions, spec.d, flat)
            }
        }
    }
}

/// JSON form: `{kind: "tabular-onehot" | "custom-grid", d, values?: [s][a][d]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureMapSpec {
    pub kind: FeatureKind,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Vec<Vec<f64>>>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn onehot_layout() {
        let fm = FeatureMap::tabular_onehot(2, 2);
        assert_eq!(fm.dim(), 4);
        assert_eq!(fm.phi_slice(1, 0), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(fm.norm_bound(), 1.0);
    }

    #[test]
    fn spec_round_trip() {
        let mut rng = stream(1, Stream::Instance);
        let fm = FeatureMap::random_gaussian(&mut rng, 3, 2, 4);
        let json = serde_json::to_string(&fm.to_spec()).unwrap();
        let spec: FeatureMapSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(FeatureMap::from_spec(&spec, 3, 2).unwrap(), fm);

        let onehot: FeatureMapSpec = serde_json::from_str(r#"{"kind":"tabular-onehot","d":6}"#).unwrap();
        assert_eq!(FeatureMap::from_spec(&onehot, 3, 2).unwrap(), FeatureMap::tabular_onehot(3, 2));
        assert!(FeatureMap::from_spec(&onehot, 2, 2).is_err());
        assert!(serde_json::from_str::<FeatureMapSpec>(r#"{"kind":"tabular-onehot","d":6,"x":1}"#).is_err());
    }
}
