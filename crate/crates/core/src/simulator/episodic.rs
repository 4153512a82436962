use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mdp::{evaluate_policy, solve_exact, FiniteMdp, Policy};
use crate::rng::{stream, Stream, StreamRng};

use super::dynamics::Dynamics;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S> {
    pub h: usize,
    pub s: S,
    pub a: usize,
    pub r: f64,
    pub s_next: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub episode: usize,
    pub steps: Vec<Transition<S>>,
}

impl<S> Trajectory<S> {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|t| t.r).sum()
    }
}

/// Episodic access: trajectories only, started from `mu` and advanced one
/// step at a time in order.
///
/// There is deliberately no way to query an arbitrary `(h, s, a)`:
///
/// ```compile_fail
/// use rlfa_core::mdp::FiniteMdp;
/// use rlfa_core::simulator::EpisodicSimulator;
/// let mdp = FiniteMdp::from_tensors(1, 1, 1, vec![1.0], vec![0.0], vec![1.0]).unwrap();
/// let mut sim = EpisodicSimulator::new(&mdp, 0);
/// sim.query(0, &0, 0);
/// ```
#[derive(Debug, Clone)]
pub struct EpisodicSimulator<D: Dynamics> {
    model: D,
    seed: u64,
    rng: StreamRng,
    episodes: usize,
    current: Option<(usize, D::State)>,
    allow_agent_start: bool,
}

impl<D: Dynamics> EpisodicSimulator<D> {
    pub fn new(model: D, seed: u64) -> Self {
        EpisodicSimulator {
            model,
            seed,
            rng: stream(seed, Stream::Simulator),
            episodes: 0,
            current: None,
            allow_agent_start: false,
        }
    }

    /// Permits [`EpisodicSimulator::begin_episode_at`].
    pub fn with_agent_start(mut self, allow: bool) -> Self {
        self.allow_agent_start = allow;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn horizon(&self) -> usize {
        self.model.horizon()
    }

    pub fn n_actions(&self) -> usize {
        self.model.n_actions()
    }

    /// Number of completed episodes.
    pub fn episodes(&self) -> usize {
        self.episodes
    }

    pub fn in_episode(&self) -> bool {
        self.current.is_some()
    }

    /// Current step and state, if an episode is in progress.
    pub fn current(&self) -> Option<(usize, &D::State)> {
        self.current.as_ref().map(|(h, s)| (*h, s))
    }

    pub fn begin_episode(&mut self) -> Result<D::State> {
        if self.current.is_some() {
            return Err(Error::Protocol("an episode is already in progress".into()));
        }
        let s = self.model.sample_initial(&mut self.rng);
        self.current = Some((0, s.clone()));
        Ok(s)
    }

    pub fn begin_episode_at(&mut self, s: D::State) -> Result<D::State> {
        if !self.allow_agent_start {
            return Err(Error::Protocol("agent-chosen initial states are disabled".into()));
        }
        if self.current.is_some() {
            return Err(Error::Protocol("an episode is already in progress".into()));
        }
        self.model.check_state(&s)?;
        self.current = Some((0, s.clone()));
        Ok(s)
    }

    /// Submits the action for the current step.
    pub fn step(&mut self, a: usize) -> Result<Transition<D::State>> {
        let (h, s) = self
            .current
            .take()
            .ok_or_else(|| Error::Protocol("no episode in progress".into()))?;
        if let Err(e) = self.model.check(h, &s, a) {
            self.current = Some((h, s));
            return Err(e);
        }
        let (next, r) = self.model.transition(h, &s, a, &mut self.rng);
        if h + 1 < self.model.horizon() {
            self.current = Some((h + 1, next.clone()));
        } else {
            self.episodes += 1;
        }
        Ok(Transition {
            h,
            s,
            a,
            r,
            s_next: next,
        })
    }

    /// Runs one full episode choosing actions with `act(h, state)`.
    pub fn rollout_with(&mut self, mut act: impl FnMut(usize, &D::State) -> usize) -> Result<Trajectory<D::State>> {
        let episode = self.episodes;
        let mut s = self.begin_episode()?;
        let mut steps = Vec::with_capacity(self.horizon());
        for h in 0..self.horizon() {
            let t = self.step(act(h, &s))?;
            s = t.s_next.clone();
            steps.push(t);
        }
        Ok(Trajectory { episode, steps })
    }
}

impl<D: Dynamics<State = usize>> EpisodicSimulator<D> {
    /// One episode under `pi`, with actions drawn from `action_rng`.
    pub fn rollout<R: Rng + ?Sized>(&mut self, pi: &Policy, action_rng: &mut R) -> Result<Trajectory<usize>> {
        if pi.horizon() != self.horizon() || pi.n_actions() != self.n_actions() {
            return Err(Error::invalid("policy does not match the simulator's horizon or action set"));
        }
        if self.current.is_some() {
            return Err(Error::Protocol("an episode is already in progress".into()));
        }
        let n_states = pi.n_states();
        let mut bad = None;
        let traj = self.rollout_with(|h, &s| {
            if s >= n_states {
                bad = Some(s);
                return 0;
            }
            pi.sample_action(action_rng, h, s)
        })?;
        if let Some(s) = bad {
            return Err(Error::invalid(format!("policy has no row for state {s}")));
        }
        Ok(traj)
    }
}

/// Writes `episode,h,s,a,r,s_next` rows after a `# seed=` comment line.
pub fn write_trajectories<W: Write>(mut out: W, seed: u64, trajectories: &[Trajectory<usize>]) -> Result<()> {
    writeln!(out, "# seed={seed}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["episode", "h", "s", "a", "r", "s_next"])?;
    for t in trajectories {
        for st in &t.steps {
            w.write_record([
                t.episode.to_string(),
                st.h.to_string(),
                st.s.to_string(),
                st.a.to_string(),
                st.r.to_string(),
                st.s_next.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretRecord {
    pub k: usize,
    pub jstar: f64,
    pub j: f64,
    pub instant: f64,
    pub cumulative: f64,
}

/// Per-episode regret `J* - J(pi_k)` computed by exact policy evaluation.
#[derive(Debug, Clone)]
pub struct RegretLedger {
    jstar: f64,
    records: Vec<RegretRecord>,
}

impl RegretLedger {
    pub fn new(mdp: &FiniteMdp) -> Self {
        RegretLedger {
            jstar: solve_exact(mdp).jstar,
            records: Vec::new(),
        }
    }

    pub fn with_jstar(jstar: f64) -> Self {
        RegretLedger {
            jstar,
            records: Vec::new(),
        }
    }

    pub fn jstar(&self) -> f64 {
        self.jstar
    }

    pub fn record(&mut self, mdp: &FiniteMdp, pi: &Policy) -> Result<f64> {
        let j = evaluate_policy(mdp, pi)?.j;
        Ok(self.record_value(j))
    }

    /// Appends an already-evaluated `J(pi_k)`.
    pub fn record_value(&mut self, j: f64) -> f64 {
        let instant = self.jstar - j;
        debug_assert!(instant >= -1e-10, "negative regret {instant}");
        let cumulative = self.cumulative() + instant;
        self.records.push(RegretRecord {
            k: self.records.len() + 1,
            jstar: self.jstar,
            j,
            instant,
            cumulative,
        });
        instant
    }

    pub fn records(&self) -> &[RegretRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn cumulative(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cumulative)
    }

    /// Cumulative regret after each episode.
    pub fn curve(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cumulative).collect()
    }

    /// Writes `k,instant_regret,cumulative`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "instant_regret", "cumulative"])?;
        for r in &self.records {
            w.write_record([r.k.to_string(), r.instant.to_string(), r.cumulative.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> FiniteMdp {
        // two actions; action 1 pays 1 at every step, action 0 pays 0.5
        FiniteMdp::from_tensors(
            3,
            2,
            2,
            [0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0].repeat(3),
            [0.5, 1.0, 0.5, 1.0].repeat(3),
            vec![1.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn single_pair_trajectory() {
        let mdp = FiniteMdp::from_tensors(1, 1, 1, vec![1.0], vec![0.3], vec![1.0]).unwrap();
        let mut sim = EpisodicSimulator::new(&mdp, 0);
        let mut rng = stream(0, Stream::Actions);
        let t = sim.rollout(&Policy::uniform(1, 1, 1), &mut rng).unwrap();
        assert_eq!(t.steps, vec![Transition { h: 0, s: 0, a: 0, r: 0.3, s_next: 0 }]);
        assert_eq!(sim.episodes(), 1);
    }

    #[test]
    fn deterministic_trajectory_independent_of_seed() {
        let mdp = chain();
        let pi = Policy::deterministic(3, 2, 2, &[1, 0, 0, 1, 1, 1]).unwrap();
        let trajs: Vec<_> = (0..5)
            .map(|seed| {
                let mut sim = EpisodicSimulator::new(&mdp, seed);
                sim.rollout(&pi, &mut stream(seed, Stream::Actions)).unwrap().steps
            })
            .collect();
        assert!(trajs.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn step_order_enforced() {
        let mdp = chain();
        let mut sim = EpisodicSimulator::new(&mdp, 1);
        assert!(matches!(sim.step(0), Err(Error::Protocol(_))));
        sim.begin_episode().unwrap();
        assert!(matches!(sim.begin_episode(), Err(Error::Protocol(_))));
        assert!(sim.step(5).is_err());
        for h in 0..3 {
            assert_eq!(sim.step(1).unwrap().h, h);
        }
        assert_eq!(sim.episodes(), 1);
        assert!(!sim.in_episode());
        assert!(matches!(sim.begin_episode_at(1), Err(Error::Protocol(_))));
        let mut sim = EpisodicSimulator::new(&mdp, 1).with_agent_start(true);
        assert_eq!(sim.begin_episode_at(1).unwrap(), 1);
        assert!(sim.begin_episode_at(0).is_err());
    }

    #[test]
    fn ledger_linearity() {
        let mdp = chain();
        let mut ledger = RegretLedger::new(&mdp);
        assert_eq!(ledger.jstar(), 3.0);
        let good = solve_exact(&mdp).pistar;
        let bad = Policy::deterministic(3, 2, 2, &[0; 6]).unwrap();
        for _ in 0..4 {
            ledger.record(&mdp, &good).unwrap();
        }
        assert_eq!(ledger.cumulative(), 0.0);
        for _ in 0..10 {
            ledger.record(&mdp, &bad).unwrap();
        }
        assert!((ledger.cumulative() - 15.0).abs() < 1e-12);
        let mut buf = Vec::new();
        ledger.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("k,instant_regret,cumulative\n1,0,0\n"));
    }

    #[test]
    fn trajectory_csv_header() {
        let mdp = chain();
        let mut sim = EpisodicSimulator::new(&mdp, 9);
        let t = sim.rollout(&Policy::uniform(3, 2, 2), &mut stream(9, Stream::Actions)).unwrap();
        let mut buf = Vec::new();
        write_trajectories(&mut buf, 9, &[t]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# seed=9");
        assert_eq!(lines[1], "episode,h,s,a,r,s_next");
        assert_eq!(lines.len(), 5);
    }
}
