use std::io::Write;

use crate::error::{Error, Result};
use crate::rng::{standard_normal, stream, Stream, StreamRng};

use super::dynamics::Dynamics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    #[default]
    Exact,
    /// Reward plus an independent standard normal draw.
    UnitGaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord<S> {
    pub h: usize,
    pub s: S,
    pub a: usize,
    pub r: f64,
    pub s_next: S,
}

/// Generative access: any `(h, s, a)` may be queried for a successor and a reward.
#[derive(Debug, Clone)]
pub struct GenerativeModel<D: Dynamics> {
    model: D,
    seed: u64,
    rng: StreamRng,
    noise_rng: StreamRng,
    noise: NoiseMode,
    queries: usize,
    budget: Option<usize>,
    log: Option<Vec<QueryRecord<D::State>>>,
}

impl<D: Dynamics> GenerativeModel<D> {
    pub fn new(model: D, seed: u64) -> Self {
        GenerativeModel {
            model,
            seed,
            rng: stream(seed, Stream::Simulator),
            noise_rng: stream(seed, Stream::Noise),
            noise: NoiseMode::Exact,
            queries: 0,
            budget: None,
            log: None,
        }
    }

    pub fn with_noise(mut self, noise: NoiseMode) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn model(&self) -> &D {
        &self.model
    }

    pub fn noise(&self) -> NoiseMode {
        self.noise
    }

    pub fn queries(&self) -> usize {
        self.queries
    }

    pub fn budget(&self) -> Option<usize> {
        self.budget
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn query(&mut self, h: usize, s: &D::State, a: usize) -> Result<(D::State, f64)> {
        self.model.check(h, s, a)?;
        if let Some(budget) = self.budget {
            if self.queries >= budget {
                return Err(Error::BudgetExhausted { budget });
            }
        }
        self.queries += 1;
        let (next, r) = self.model.transition(h, s, a, &mut self.rng);
        let r = match self.noise {
            NoiseMode::Exact => r,
            NoiseMode::UnitGaussian => r + standard_normal(&mut self.noise_rng),
        };
        if let Some(log) = self.log.as_mut() {
            log.push(QueryRecord {
                h,
                s: s.clone(),
                a,
                r,
                s_next: next.clone(),
            });
        }
        Ok((next, r))
    }

    pub fn query_log(&self) -> Option<&[QueryRecord<D::State>]> {
        self.log.as_deref()
    }

    /// Writes the query log as `h,s,a,r,s_next` rows after a `# seed=` line.
    pub fn write_query_log<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# seed={}", self.seed)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["h", "s", "a", "r", "s_next"])?;
        for q in self.log.as_deref().unwrap_or(&[]) {
            w.write_record([
                q.h.to_string(),
                self.model.state_label(&q.s),
                q.a.to_string(),
                q.r.to_string(),
                self.model.state_label(&q.s_next),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::FiniteMdp;

    fn coin() -> FiniteMdp {
        FiniteMdp::from_tensors(1, 2, 1, vec![0.5, 0.5, 0.5, 0.5], vec![0.25, 0.75], vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn deterministic_exact() {
        let mdp = FiniteMdp::from_tensors(2, 2, 1, vec![0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0], vec![0.1, 0.2, 0.3, 0.4], vec![1.0, 0.0])
            .unwrap();
        let mut gm = GenerativeModel::new(&mdp, 3);
        for _ in 0..50 {
            assert_eq!(gm.query(1, &1, 0).unwrap(), (0, 0.4));
        }
        assert_eq!(gm.queries(), 50);
    }

    #[test]
    fn budget_and_validation() {
        let mdp = coin();
        let mut gm = GenerativeModel::new(&mdp, 1).with_budget(2);
        assert!(gm.query(0, &0, 1).is_err());
        assert!(gm.query(1, &0, 0).is_err());
        gm.query(0, &0, 0).unwrap();
        gm.query(0, &1, 0).unwrap();
        assert_eq!(gm.query(0, &0, 0), Err(Error::BudgetExhausted { budget: 2 }));
        assert_eq!(gm.queries(), 2);
    }

    #[test]
    fn seeded_replay_is_identical() {
        let mdp = coin();
        let run = || {
            let mut gm = GenerativeModel::new(&mdp, 42).with_noise(NoiseMode::UnitGaussian);
            (0..100).map(|i| gm.query(0, &(i % 2), 0).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn query_log_csv() {
        let mdp = coin();
        let mut gm = GenerativeModel::new(&mdp, 5).with_log();
        gm.query(0, &1, 0).unwrap();
        let mut buf = Vec::new();
        gm.write_query_log(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# seed=5");
        assert_eq!(lines[1], "h,s,a,r,s_next");
        assert!(lines[2].starts_with("0,1,0,0.75,"));
    }
}
