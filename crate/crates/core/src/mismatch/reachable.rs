use std::collections::HashSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mdp::{occupancy, solve_exact, FiniteMdp, Policy};
use crate::rng::StreamRng;

use super::distributions::DistributionSet;

/// Largest number of deterministic policy prefixes enumerate mode will visit.
pub const ENUMERATION_LIMIT: u128 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReachableMode {
    /// Every deterministic policy prefix.
    Enumerate,
    /// `m` random stochastic policies plus `m` greedy policies of random rewards.
    Sample(usize),
}

/// State-action laws reachable at each step, over the `|S| |A|` pairs.
#[derive(Debug, Clone)]
pub struct ReachableSet {
    pub per_step: Vec<DistributionSet>,
}

impl ReachableSet {
    /// Union over steps.
    pub fn all(&self) -> Result<DistributionSet> {
        DistributionSet::union(&self.per_step)
    }
}

/// `sum_h |A|^{|S| (h + 1)}`, saturating.
pub fn prefix_count(mdp: &FiniteMdp) -> u128 {
    let (ns, na) = (mdp.n_states() as u32, mdp.n_actions() as u128);
    let mut total: u128 = 0;
    for h in 0..mdp.horizon() as u32 {
        let c = na.checked_pow(ns.saturating_mul(h + 1)).unwrap_or(u128::MAX);
        total = total.saturating_add(c);
    }
    total
}

fn dedupe_key(p: &[f64]) -> Vec<i64> {
    p.iter().map(|v| (v * 1e12).round() as i64).collect()
}

struct Dedup {
    seen: HashSet<Vec<i64>>,
}

impl Dedup {
    fn new() -> Self {
        Dedup { seen: HashSet::new() }
    }

    fn insert(&mut self, p: &[f64]) -> bool {
        self.seen.insert(dedupe_key(p))
    }
}

pub fn reachable_set(mdp: &FiniteMdp, mode: ReachableMode, rng: &mut StreamRng) -> Result<ReachableSet> {
    match mode {
        ReachableMode::Enumerate => enumerate(mdp),
        ReachableMode::Sample(m) => sample(mdp, m, rng),
    }
}

fn enumerate(mdp: &FiniteMdp) -> Result<ReachableSet> {
    let count = prefix_count(mdp);
    if count > ENUMERATION_LIMIT {
        return Err(Error::invalid(format!(
            "enumerating {count} deterministic policy prefixes exceeds the limit of {ENUMERATION_LIMIT}; use sample mode"
        )));
    }
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let rules = na.pow(ns as u32);
    let mut laws = vec![mdp.initial().to_vec()];
    let mut per_step = Vec::with_capacity(mdp.horizon());
    for h in 0..mdp.horizon() {
        let mut set = DistributionSet::empty(ns * na);
        let mut seen = Dedup::new();
        let mut next_laws = Vec::new();
        let mut next_seen = Dedup::new();
        for law in &laws {
            for rule in 0..rules {
                let mut code = rule;
                let mut rho = vec![0.0; ns * na];
                let mut next = vec![0.0; ns];
                for s in 0..ns {
                    let a = code % na;
                    code /= na;
                    rho[s * na + a] = law[s];
                    if h + 1 < mdp.horizon() && law[s] > 0.0 {
                        for (acc, p) in next.iter_mut().zip(mdp.transition_row(h, s, a)) {
                            *acc += law[s] * p;
                        }
                    }
                }
                if seen.insert(&rho) {
                    set.push(rho)?;
                }
                if h + 1 < mdp.horizon() && next_seen.insert(&next) {
                    next_laws.push(next);
                }
            }
        }
        per_step.push(set);
        laws = next_laws;
    }
    Ok(ReachableSet { per_step })
}

fn sample(mdp: &FiniteMdp, m: usize, rng: &mut StreamRng) -> Result<ReachableSet> {
    let (horizon, ns, na) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
    let mut per_step: Vec<DistributionSet> = (0..horizon).map(|_| DistributionSet::empty(ns * na)).collect();
    let mut seen: Vec<Dedup> = (0..horizon).map(|_| Dedup::new()).collect();
    let mut add = |pi: &Policy| -> Result<()> {
        for occ in occupancy(mdp, pi)? {
            if seen[occ.step].insert(&occ.probs) {
                per_step[occ.step].push(occ.probs)?;
            }
        }
        Ok(())
    };
    for _ in 0..m {
        add(&Policy::random(rng, horizon, ns, na))?;
    }
    for _ in 0..m {
        let reward: Vec<f64> = (0..horizon * ns * na).map(|_| rng.random::<f64>()).collect();
        let shadow = mdp.with_rewards(reward, (0.0, 1.0))?;
        add(&solve_exact(&shadow).pistar)?;
    }
    Ok(ReachableSet { per_step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn single_step_is_all_assignments() {
        let mut rng = stream(1, Stream::Instance);
        let mdp = FiniteMdp::random(&mut rng, 3, 2, 1);
        let r = reachable_set(&mdp, ReachableMode::Enumerate, &mut rng).unwrap();
        // Initial law has full support almost surely.
        assert_eq!(r.per_step[0].len(), 8);
    }

    #[test]
    fn single_action_gives_one_law_per_step() {
        let mut rng = stream(2, Stream::Instance);
        let mdp = FiniteMdp::random(&mut rng, 4, 1, 3);
        let r = reachable_set(&mdp, ReachableMode::Enumerate, &mut rng).unwrap();
        assert!(r.per_step.iter().all(|s| s.len() == 1));
        assert_eq!(r.all().unwrap().len(), 3);
    }

    #[test]
    fn blow_up_rejected_with_count() {
        let mut rng = stream(3, Stream::Instance);
        let mdp = FiniteMdp::random(&mut rng, 6, 3, 3);
        let err = reachable_set(&mdp, ReachableMode::Enumerate, &mut rng).unwrap_err();
        assert!(err.to_string().contains(&prefix_count(&mdp).to_string()));
        assert!(reachable_set(&mdp, ReachableMode::Sample(5), &mut rng).is_ok());
    }
}
