use thiserror::Error;

use crate::channel::ChannelId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OsaError {
    #[error("channel set is empty")]
    EmptyChannelSet,
    #[error("channel {channel}: slot * rate = {product} is not a whole number of bits")]
    NonIntegralBitsPerSlot { channel: ChannelId, product: f64 },
    #[error("channels {first} and {second} tie for maximum throughput")]
    ThroughputTie { first: ChannelId, second: ChannelId },
    #[error("invalid channel {channel}: {reason}")]
    InvalidChannel { channel: ChannelId, reason: String },
    #[error("invalid slot duration {0}")]
    InvalidSlot(f64),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("file size must be at least one bit")]
    EmptyFile,
    #[error("threshold is undefined for a single-channel environment")]
    SingleChannel,
    #[error("file size {file_bits} is a multiple of the max-throughput slot payload")]
    OnLatticePoint { file_bits: u64 },
    #[error("policy path is inconsistent: {0}")]
    InconsistentPath(String),
    #[error("state space too large: {count} exceeds limit {limit}")]
    StateSpaceTooLarge { count: u128, limit: u128 },
    #[error("decision rule returned unknown channel {channel} at {remaining_bits} remaining bits")]
    InvalidDecision {
        channel: ChannelId,
        remaining_bits: u64,
    },
    #[error("file sequence is empty")]
    EmptySequence,
    #[error("regret bound is undefined for K = {0} (needs K >= 2)")]
    UndefinedForK(u64),
    #[error("regret bound is inapplicable: {0}")]
    BoundInapplicable(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, OsaError>;
