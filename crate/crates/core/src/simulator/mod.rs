mod dynamics;
mod episodic;
mod generative;

pub use dynamics::Dynamics;
pub use episodic::{write_trajectories, EpisodicSimulator, RegretLedger, RegretRecord, Trajectory, Transition};
pub use generative::{GenerativeModel, NoiseMode, QueryRecord};
