//! Slot-level Monte Carlo of a file transfer.
//!
//! At each slot boundary the decision rule picks a channel from the remaining
//! bits; only that channel's availability is drawn. An idle channel carries
//! `min(B_i, remaining)` bits, a busy one costs the whole slot, and the last
//! slot is charged only for the time actually spent transmitting.

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelId, Environment};
use crate::error::{OsaError, Result};
use crate::ssp::{PolicyPath, ValueTable};

/// Picks the channel to sense given the bits still to send.
pub trait DecisionRule {
    fn choose(&self, remaining_bits: u64) -> Option<ChannelId>;
}

impl DecisionRule for ChannelId {
    fn choose(&self, _remaining_bits: u64) -> Option<ChannelId> {
        Some(*self)
    }
}

impl DecisionRule for PolicyPath {
    fn choose(&self, remaining_bits: u64) -> Option<ChannelId> {
        self.channel_at(remaining_bits)
    }
}

impl DecisionRule for ValueTable {
    fn choose(&self, remaining_bits: u64) -> Option<ChannelId> {
        self.action(remaining_bits)
    }
}

impl<R: DecisionRule + ?Sized> DecisionRule for &R {
    fn choose(&self, remaining_bits: u64) -> Option<ChannelId> {
        (**self).choose(remaining_bits)
    }
}

/// Adapts a closure into a [`DecisionRule`].
pub struct FnRule<F>(pub F);

impl<F: Fn(u64) -> ChannelId> DecisionRule for FnRule<F> {
    fn choose(&self, remaining_bits: u64) -> Option<ChannelId> {
        Some((self.0)(remaining_bits))
    }
}

/// Addresses one reproducible random stream: the same pair always yields the
/// same draws, and distinct indices under one seed yield distinct streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// A derived stream, e.g. one per episode or per repeat.
    pub fn child(&self, index: u64) -> RngStream {
        RngStream {
            master_seed: self.master_seed,
            stream_index: splitmix64(self.stream_index ^ splitmix64(index.wrapping_add(1))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub channel: ChannelId,
    pub idle: bool,
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeTrace {
    pub file_bits: u64,
    pub slots: Vec<SlotRecord>,
    pub transfer_time: f64,
    pub senses: Vec<u64>,
    pub idle_observations: Vec<u64>,
}

impl EpisodeTrace {
    pub fn transmitted_bits(&self) -> u64 {
        self.slots.iter().map(|s| s.bits).sum()
    }

    pub fn busy_slots(&self) -> u64 {
        self.slots.iter().filter(|s| !s.idle).count() as u64
    }
}

/// Outcome of one episode without the per-slot log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub transfer_time: f64,
    pub senses: Vec<u64>,
    pub idle_observations: Vec<u64>,
}

fn simulate<R: DecisionRule + ?Sized, G: Rng + ?Sized>(
    env: &Environment,
    rule: &R,
    file_bits: u64,
    rng: &mut G,
    mut log: Option<&mut Vec<SlotRecord>>,
) -> Result<EpisodeSummary> {
    if file_bits == 0 {
        return Err(OsaError::EmptyFile);
    }
    let n = env.len();
    let draws: Vec<Bernoulli> = env
        .channels()
        .iter()
        .map(|c| Bernoulli::new(c.avail_prob).expect("probabilities validated at construction"))
        .collect();
    let mut senses = vec![0u64; n];
    let mut idle_obs = vec![0u64; n];
    let mut remaining = file_bits;
    let mut slot = 0u64;
    loop {
        let channel = rule.choose(remaining).ok_or(OsaError::InvalidDecision {
            channel: ChannelId(0),
            remaining_bits: remaining,
        })?;
        if !env.contains(channel) {
            return Err(OsaError::InvalidDecision {
                channel,
                remaining_bits: remaining,
            });
        }
        let idx = channel.index();
        senses[idx] += 1;
        let idle = draws[idx].sample(rng);
        let bits = if idle {
            idle_obs[idx] += 1;
            remaining.min(env.bits_per_slot(channel))
        } else {
            0
        };
        if let Some(log) = log.as_deref_mut() {
            log.push(SlotRecord {
                slot,
                channel,
                idle,
                bits,
            });
        }
        remaining -= bits;
        if remaining == 0 {
            let transfer_time = slot as f64 * env.slot() + env.transmit_seconds(channel, bits);
            return Ok(EpisodeSummary {
                transfer_time,
                senses,
                idle_observations: idle_obs,
            });
        }
        slot += 1;
    }
}

/// Runs one transfer and records every slot.
pub fn run_episode<R: DecisionRule + ?Sized, G: Rng + ?Sized>(
    env: &Environment,
    rule: &R,
    file_bits: u64,
    rng: &mut G,
) -> Result<EpisodeTrace> {
    let mut slots = Vec::new();
    let s = simulate(env, rule, file_bits, rng, Some(&mut slots))?;
    Ok(EpisodeTrace {
        file_bits,
        slots,
        transfer_time: s.transfer_time,
        senses: s.senses,
        idle_observations: s.idle_observations,
    })
}

/// Runs one transfer keeping only counts and the transfer time.
pub fn run_episode_summary<R: DecisionRule + ?Sized, G: Rng + ?Sized>(
    env: &Environment,
    rule: &R,
    file_bits: u64,
    rng: &mut G,
) -> Result<EpisodeSummary> {
    simulate(env, rule, file_bits, rng, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub episodes: u64,
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Sample mean and standard error of `episodes` independent transfers.
/// Episode `e` draws from `stream.child(e)`, so the result does not depend on
/// how the episodes are scheduled.
pub fn estimate_expected_time<R: DecisionRule + Sync + ?Sized>(
    env: &Environment,
    rule: &R,
    file_bits: u64,
    episodes: u64,
    stream: RngStream,
) -> Result<Estimate> {
    if episodes == 0 {
        return Err(OsaError::InvalidConfig(
            "episodes must be at least 1".into(),
        ));
    }
    let times = (0..episodes)
        .into_par_iter()
        .map(|e| {
            let mut rng = stream.child(e).rng();
            simulate(env, rule, file_bits, &mut rng, None).map(|s| s.transfer_time)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = times.len() as f64;
    let mean = pairwise_sum(&times) / n;
    let sq: Vec<f64> = times.iter().map(|t| (t - mean) * (t - mean)).collect();
    let var = if times.len() > 1 {
        pairwise_sum(&sq) / (n - 1.0)
    } else {
        0.0
    };
    Ok(Estimate {
        mean,
        std_error: (var / n).sqrt(),
        episodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::static_expected_time;
    use crate::channel::tests::toy;
    use crate::channel::{Channel, Scenario};

    const C1: ChannelId = ChannelId(1);
    const C2: ChannelId = ChannelId(2);

    #[test]
    fn deterministic_channel() {
        let env = Environment::new(vec![Channel::new(1, 10.0, 1.0)], 1.0).unwrap();
        let trace = run_episode(&env, &C1, 25, &mut RngStream::new(1, 0).rng()).unwrap();
        assert_eq!(trace.transfer_time, 2.5);
        assert_eq!(trace.slots.len(), 3);
        assert_eq!(trace.transmitted_bits(), 25);
        let est = estimate_expected_time(&env, &C1, 25, 100, RngStream::new(3, 0)).unwrap();
        assert_eq!(est.mean, 2.5);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn geometric_wait_structure() {
        let env = toy();
        for seed in 0..50 {
            let t = run_episode(&env, &C2, 1, &mut RngStream::new(seed, 0).rng()).unwrap();
            let busy = t.busy_slots();
            assert_eq!(t.transfer_time, busy as f64 + 1.0);
            assert_eq!(t.slots.len() as u64, busy + 1);
            assert!(t.slots.last().unwrap().idle);
        }
    }

    #[test]
    fn static_trace_decomposes() {
        let env = Scenario::Lossy.environment();
        for id in env.channel_ids() {
            for seed in 0..20 {
                let f = 1_130_000;
                let t = run_episode(&env, &id, f, &mut RngStream::new(seed, 7).rng()).unwrap();
                assert_eq!(t.transmitted_bits(), f);
                let t_tran = env.transmit_seconds(id, f);
                let waits = t.busy_slots() as f64 * env.slot();
                assert!((t.transfer_time - (t_tran + waits)).abs() < 1e-9);
                assert_eq!(t.senses.iter().sum::<u64>(), t.slots.len() as u64);
            }
        }
    }

    #[test]
    fn invalid_decision() {
        let env = toy();
        let err = run_episode(&env, &ChannelId(9), 3, &mut RngStream::new(0, 0).rng()).unwrap_err();
        assert!(matches!(
            err,
            OsaError::InvalidDecision {
                channel: ChannelId(9),
                ..
            }
        ));
        let short = PolicyPath::from_choices(&env, 5, vec![C1, C2]).unwrap();
        // state 3 never appears on that path
        assert!(run_episode(&env, &short, 3, &mut RngStream::new(0, 0).rng()).is_err());
    }

    #[test]
    fn same_seed_same_mean() {
        let env = toy();
        let a = estimate_expected_time(&env, &C1, 5, 2_000, RngStream::new(42, 1)).unwrap();
        let b = estimate_expected_time(&env, &C1, 5, 2_000, RngStream::new(42, 1)).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        let c = estimate_expected_time(&env, &C1, 5, 2_000, RngStream::new(43, 1)).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn static_means_agree_with_closed_form() {
        let env = toy();
        for (id, f) in [(C1, 1), (C1, 5), (C2, 3), (C1, 13)] {
            let est = estimate_expected_time(&env, &id, f, 100_000, RngStream::new(11, f)).unwrap();
            let exact = static_expected_time(&env, id, f).unwrap();
            assert!(
                (est.mean - exact).abs() < 4.0 * est.std_error,
                "{id} {f}: {} vs {exact}",
                est.mean
            );
        }
    }

    #[test]
    fn idle_frequency_converges() {
        let env = toy();
        let mut rng = RngStream::new(5, 0).rng();
        let t = run_episode(&env, &C1, 40_000, &mut rng).unwrap();
        let n = t.senses[0] as f64;
        let freq = t.idle_observations[0] as f64 / n;
        let se = (0.3 * 0.7 / n).sqrt();
        assert!((freq - 0.3).abs() < 4.0 * se);
    }

    #[test]
    fn child_streams_differ() {
        let s = RngStream::new(9, 0);
        let a: u64 = s.child(0).rng().random();
        let b: u64 = s.child(1).rng().random();
        let a2: u64 = s.child(0).rng().random();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }
}
