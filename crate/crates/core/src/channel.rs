//! Channels, the slotted environment, and the named channel scenarios.
//!
//! Every channel delivers `bits_per_slot = slot * rate` bits when it is idle
//! for a whole slot. That product must be an exact integer so that all file
//! and state arithmetic downstream stays in whole bits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{OsaError, Result};

/// One-based channel identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChannelId(pub u32);

impl ChannelId {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(index: usize) -> Self {
        ChannelId(index as u32 + 1)
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub id: ChannelId,
    #[serde(rename = "rate_bps")]
    pub rate: f64,
    pub avail_prob: f64,
}

impl Channel {
    pub fn new(id: u32, rate: f64, avail_prob: f64) -> Self {
        Channel {
            id: ChannelId(id),
            rate,
            avail_prob,
        }
    }

    pub fn throughput(&self) -> f64 {
        self.rate * self.avail_prob
    }
}

/// A file size in whole bits, never zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct FileSize(u64);

impl FileSize {
    pub fn new(bits: u64) -> Result<Self> {
        if bits == 0 {
            return Err(OsaError::EmptyFile);
        }
        Ok(FileSize(bits))
    }

    pub fn bits(self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for FileSize {
    type Error = OsaError;

    fn try_from(bits: u64) -> Result<Self> {
        FileSize::new(bits)
    }
}

impl From<FileSize> for u64 {
    fn from(f: FileSize) -> u64 {
        f.0
    }
}

/// The slotted channel environment. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    slot: f64,
    channels: Vec<Channel>,
    bits_per_slot: Vec<u64>,
    max_tp_channel: ChannelId,
    runner_up_channel: Option<ChannelId>,
}

const INTEGRALITY_TOL: f64 = 1e-9;

/// Availability probabilities below this are clamped when building an
/// environment from estimates, so that expected times stay finite.
pub const MIN_ESTIMATED_PROB: f64 = 1e-9;

fn whole_bits(slot: f64, ch: &Channel) -> Result<u64> {
    let product = slot * ch.rate;
    let rounded = product.round();
    if rounded < 1.0 || (product - rounded).abs() > INTEGRALITY_TOL * rounded.max(1.0) {
        return Err(OsaError::NonIntegralBitsPerSlot {
            channel: ch.id,
            product,
        });
    }
    Ok(rounded as u64)
}

/// Index of the max-throughput channel and of the best remaining one.
/// Ties go to the lowest id; `strict` turns a tie for the top into an error.
fn rank_throughput(channels: &[Channel], strict: bool) -> Result<(usize, Option<usize>)> {
    let mut best = 0;
    for (i, ch) in channels.iter().enumerate().skip(1) {
        if ch.throughput() > channels[best].throughput() {
            best = i;
        }
    }
    if strict {
        if let Some(tie) = channels
            .iter()
            .enumerate()
            .find(|(i, ch)| *i != best && ch.throughput() == channels[best].throughput())
        {
            let (a, b) = (
                channels[best].id.min(tie.1.id),
                channels[best].id.max(tie.1.id),
            );
            return Err(OsaError::ThroughputTie {
                first: a,
                second: b,
            });
        }
    }
    let mut runner_up: Option<usize> = None;
    for (i, ch) in channels.iter().enumerate() {
        if i == best {
            continue;
        }
        match runner_up {
            Some(r) if ch.throughput() <= channels[r].throughput() => {}
            _ => runner_up = Some(i),
        }
    }
    Ok((best, runner_up))
}

impl Environment {
    /// Validates and builds an environment.
    ///
    /// Channel ids must be exactly `1..=N` in some order; the stored list is
    /// sorted by id. Fails on an empty set, on `slot * rate` that is not a
    /// whole number of bits, or when two channels share the largest
    /// `rate * avail_prob`.
    pub fn new(channels: Vec<Channel>, slot: f64) -> Result<Self> {
        Self::build(channels, slot, true)
    }

    fn build(mut channels: Vec<Channel>, slot: f64, strict: bool) -> Result<Self> {
        if channels.is_empty() {
            return Err(OsaError::EmptyChannelSet);
        }
        if !(slot.is_finite() && slot > 0.0) {
            return Err(OsaError::InvalidSlot(slot));
        }
        channels.sort_by_key(|c| c.id);
        for (i, ch) in channels.iter().enumerate() {
            if ch.id != ChannelId::from_index(i) {
                return Err(OsaError::InvalidChannel {
                    channel: ch.id,
                    reason: format!("ids must be 1..={} without gaps", channels.len()),
                });
            }
            if !(ch.rate.is_finite() && ch.rate > 0.0) {
                return Err(OsaError::InvalidChannel {
                    channel: ch.id,
                    reason: format!("rate {} must be positive", ch.rate),
                });
            }
            if !(ch.avail_prob > 0.0 && ch.avail_prob <= 1.0) {
                return Err(OsaError::InvalidChannel {
                    channel: ch.id,
                    reason: format!("availability {} must lie in (0, 1]", ch.avail_prob),
                });
            }
        }
        let bits_per_slot = channels
            .iter()
            .map(|ch| whole_bits(slot, ch))
            .collect::<Result<Vec<_>>>()?;
        let (best, runner_up) = rank_throughput(&channels, strict)?;
        Ok(Environment {
            slot,
            max_tp_channel: channels[best].id,
            runner_up_channel: runner_up.map(|r| channels[r].id),
            channels,
            bits_per_slot,
        })
    }

    /// Same rates and slot, different availability probabilities.
    ///
    /// Used for plans computed from estimates: probabilities are clamped to
    /// `[MIN_ESTIMATED_PROB, 1]` and throughput ties are broken by lowest id
    /// instead of rejected.
    pub fn with_avail_probs(&self, probs: &[f64]) -> Result<Self> {
        if probs.len() != self.channels.len() {
            return Err(OsaError::InvalidConfig(format!(
                "expected {} probabilities, got {}",
                self.channels.len(),
                probs.len()
            )));
        }
        let channels = self
            .channels
            .iter()
            .zip(probs)
            .map(|(ch, &p)| Channel {
                avail_prob: if p.is_nan() {
                    MIN_ESTIMATED_PROB
                } else {
                    p.clamp(MIN_ESTIMATED_PROB, 1.0)
                },
                ..*ch
            })
            .collect();
        Self::build(channels, self.slot, false)
    }

    pub fn slot(&self) -> f64 {
        self.slot
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn channel_ids(&self) -> impl Iterator<Item = ChannelId> + '_ {
        self.channels.iter().map(|c| c.id)
    }

    pub fn contains(&self, id: ChannelId) -> bool {
        id.0 >= 1 && id.index() < self.channels.len()
    }

    /// Panics if `id` is not in the environment.
    pub fn channel(&self, id: ChannelId) -> &Channel {
        &self.channels[id.index()]
    }

    pub fn rate(&self, id: ChannelId) -> f64 {
        self.channel(id).rate
    }

    pub fn avail_prob(&self, id: ChannelId) -> f64 {
        self.channel(id).avail_prob
    }

    pub fn avail_probs(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.avail_prob).collect()
    }

    pub fn bits_per_slot(&self, id: ChannelId) -> u64 {
        self.bits_per_slot[id.index()]
    }

    pub fn max_tp_channel(&self) -> ChannelId {
        self.max_tp_channel
    }

    pub fn runner_up_channel(&self) -> Option<ChannelId> {
        self.runner_up_channel
    }

    pub fn max_rate(&self) -> f64 {
        self.channels.iter().map(|c| c.rate).fold(0.0, f64::max)
    }

    pub fn min_rate(&self) -> f64 {
        self.channels
            .iter()
            .map(|c| c.rate)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_avail_prob(&self) -> f64 {
        self.channels
            .iter()
            .map(|c| c.avail_prob)
            .fold(f64::INFINITY, f64::min)
    }

    /// Seconds needed to push `bits` through channel `id` while it is idle.
    pub fn transmit_seconds(&self, id: ChannelId, bits: u64) -> f64 {
        self.slot * bits as f64 / self.bits_per_slot(id) as f64
    }
}

/// The channel scenarios used in the online experiments, all with 100 ms slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Gradual,
    Steep,
    Lossy,
}

pub const SCENARIO_SLOT_SECONDS: f64 = 0.1;

/// Channel rates in bits/s shared by all named scenarios.
pub const SCENARIO_RATES_BPS: [f64; 8] = [
    1_500_000.0,
    4_500_000.0,
    6_000_000.0,
    9_000_000.0,
    12_000_000.0,
    18_000_000.0,
    20_000_000.0,
    23_000_000.0,
];

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Gradual, Scenario::Steep, Scenario::Lossy];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Gradual => "gradual",
            Scenario::Steep => "steep",
            Scenario::Lossy => "lossy",
        }
    }

    pub fn avail_probs(self) -> [f64; 8] {
        match self {
            Scenario::Gradual => [0.95, 0.85, 0.75, 0.65, 0.4, 0.3, 0.2, 0.1],
            Scenario::Steep => [0.9, 0.25, 0.2, 0.18, 0.17, 0.16, 0.15, 0.14],
            Scenario::Lossy => [0.9, 0.8, 0.7, 0.4, 0.3, 0.25, 0.2, 0.1],
        }
    }

    pub fn channels(self) -> Vec<Channel> {
        SCENARIO_RATES_BPS
            .iter()
            .zip(self.avail_probs())
            .enumerate()
            .map(|(i, (&r, p))| Channel::new(i as u32 + 1, r, p))
            .collect()
    }

    pub fn environment(self) -> Environment {
        Environment::new(self.channels(), SCENARIO_SLOT_SECONDS)
            .expect("named scenarios are valid environments")
    }
}

impl FromStr for Scenario {
    type Err = OsaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gradual" => Ok(Scenario::Gradual),
            "steep" => Ok(Scenario::Steep),
            "lossy" => Ok(Scenario::Lossy),
            _ => Err(OsaError::UnknownScenario(s.to_string())),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn load_scenario(name: &str) -> Result<Environment> {
    Ok(name.parse::<Scenario>()?.environment())
}

/// JSON environment description.
///
/// Either `scenario` names one of the built-in scenarios, or `slot_seconds`
/// and `channels` describe a custom one. `"scenario": "custom"` is accepted
/// as an explicit marker for the latter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<Channel>>,
}

impl EnvConfig {
    pub fn build(&self) -> Result<Environment> {
        match (self.scenario.as_deref(), &self.channels) {
            (Some(name), None) if !name.eq_ignore_ascii_case("custom") => {
                if self
                    .slot_seconds
                    .is_some_and(|s| s != SCENARIO_SLOT_SECONDS)
                {
                    return Err(OsaError::InvalidConfig(format!(
                        "scenario `{name}` fixes slot_seconds to {SCENARIO_SLOT_SECONDS}"
                    )));
                }
                load_scenario(name)
            }
            (Some(name), Some(_)) if !name.eq_ignore_ascii_case("custom") => Err(
                OsaError::InvalidConfig(format!("both scenario `{name}` and channels given")),
            ),
            (_, Some(channels)) => {
                let slot = self.slot_seconds.ok_or_else(|| {
                    OsaError::InvalidConfig("custom environment needs slot_seconds".into())
                })?;
                Environment::new(channels.clone(), slot)
            }
            (_, None) => Err(OsaError::InvalidConfig(
                "config needs either a scenario or channels".into(),
            )),
        }
    }
}

impl From<&Environment> for EnvConfig {
    fn from(env: &Environment) -> Self {
        EnvConfig {
            scenario: None,
            slot_seconds: Some(env.slot()),
            channels: Some(env.channels().to_vec()),
        }
    }
}
