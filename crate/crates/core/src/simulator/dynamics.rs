use crate::error::Result;
use crate::mdp::FiniteMdp;
use crate::rng::{sample_categorical, StreamRng};

/// Transition structure a simulator can drive.
pub trait Dynamics {
    type State: Clone + std::fmt::Debug;

    fn horizon(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn check(&self, h: usize, s: &Self::State, a: usize) -> Result<()>;
    fn sample_initial(&self, rng: &mut StreamRng) -> Self::State;
    /// Next state and the noiseless reward `r(h, s, a)`.
    fn transition(&self, h: usize, s: &Self::State, a: usize, rng: &mut StreamRng) -> (Self::State, f64);
    /// Whether `s` is a valid state (used for agent-chosen starts).
    fn check_state(&self, s: &Self::State) -> Result<()>;
    fn state_label(&self, s: &Self::State) -> String;
}

impl Dynamics for FiniteMdp {
    type State = usize;

    fn horizon(&self) -> usize {
        FiniteMdp::horizon(self)
    }

    fn n_actions(&self) -> usize {
        FiniteMdp::n_actions(self)
    }

    fn check(&self, h: usize, s: &usize, a: usize) -> Result<()> {
        self.check_pair(h, *s, a)
    }

    fn sample_initial(&self, rng: &mut StreamRng) -> usize {
        sample_categorical(rng, self.initial())
    }

    fn transition(&self, h: usize, s: &usize, a: usize, rng: &mut StreamRng) -> (usize, f64) {
        let next = sample_categorical(rng, self.transition_row(h, *s, a));
        (next, self.reward(h, *s, a))
    }

    fn check_state(&self, s: &usize) -> Result<()> {
        if *s >= self.n_states() {
            return Err(crate::Error::invalid(format!("state {s} outside 0..{}", self.n_states())));
        }
        Ok(())
    }

    fn state_label(&self, s: &usize) -> String {
        s.to_string()
    }
}

impl<D: Dynamics + ?Sized> Dynamics for &D {
    type State = D::State;

    fn horizon(&self) -> usize {
        (**self).horizon()
    }

    fn n_actions(&self) -> usize {
        (**self).n_actions()
    }

    fn check(&self, h: usize, s: &Self::State, a: usize) -> Result<()> {
        (**self).check(h, s, a)
    }

    fn sample_initial(&self, rng: &mut StreamRng) -> Self::State {
        (**self).sample_initial(rng)
    }

    fn transition(&self, h: usize, s: &Self::State, a: usize, rng: &mut StreamRng) -> (Self::State, f64) {
        (**self).transition(h, s, a, rng)
    }

    fn check_state(&self, s: &Self::State) -> Result<()> {
        (**self).check_state(s)
    }

    fn state_label(&self, s: &Self::State) -> String {
        (**self).state_label(s)
    }
}
