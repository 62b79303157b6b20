//! Expected file transfer times over opportunistic Bernoulli channels.
//!
//! A secondary user moves a file of `F` bits over one of `N` channels. Time is
//! slotted; in each slot the sensed channel is idle with probability `p_i` and
//! then carries up to `slot * r_i` bits. The crate computes exact expected
//! transfer times for single-channel, dynamically switching, and split
//! heuristic policies, simulates transfers slot by slot, and learns unknown
//! availabilities online with a KL-UCB style index.
//!
//! * [`channel`]: environments and the built-in scenarios
//! * [`analytic`]: closed forms for single-channel policies and ratio bounds
//! * [`ssp`]: the shortest-path solver, path evaluation, and the heuristic
//! * [`sim`]: the slotted Monte Carlo simulator
//! * [`online`]: the online learner and its regret accounting
//! * [`experiment`]: sweeps and multi-policy comparisons

pub mod analytic;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod online;
pub mod policy;
pub mod sim;
pub mod ssp;

pub use channel::{load_scenario, Channel, ChannelId, EnvConfig, Environment, FileSize, Scenario};
pub use error::{OsaError, Result};
pub use policy::{plan, PolicyKind};
pub use sim::RngStream;
