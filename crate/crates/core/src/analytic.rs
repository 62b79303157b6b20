//! Closed-form expected transfer times for single-channel (static) policies,
//! the file-size threshold above which the max-throughput channel is the best
//! static choice, and ratio bounds against the max-throughput policy.

use serde::Serialize;

use crate::channel::{ChannelId, Environment};
use crate::error::{OsaError, Result};

/// `F = (full_slots + remainder_bits / slot_bits) * slot_bits`, kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotDecomposition {
    pub full_slots: u64,
    pub remainder_bits: u64,
    pub slot_bits: u64,
}

impl SlotDecomposition {
    pub fn new(file_bits: u64, slot_bits: u64) -> Self {
        SlotDecomposition {
            full_slots: file_bits / slot_bits,
            remainder_bits: file_bits % slot_bits,
            slot_bits,
        }
    }

    pub fn for_channel(env: &Environment, channel: ChannelId, file_bits: u64) -> Self {
        Self::new(file_bits, env.bits_per_slot(channel))
    }

    pub fn has_fraction(&self) -> bool {
        self.remainder_bits > 0
    }

    /// The fractional slot in `[0, 1)`.
    pub fn fraction(&self) -> f64 {
        self.remainder_bits as f64 / self.slot_bits as f64
    }
}

fn check_file(file_bits: u64) -> Result<()> {
    if file_bits == 0 {
        Err(OsaError::EmptyFile)
    } else {
        Ok(())
    }
}

/// Expected time to move `file_bits` through `channel` alone.
///
/// Each whole slot costs `slot / p` in expectation (geometric wait plus the
/// slot itself); a trailing partial slot adds one more expected wait and the
/// partial transmission time.
pub fn static_expected_time(env: &Environment, channel: ChannelId, file_bits: u64) -> Result<f64> {
    check_file(file_bits)?;
    Ok(static_time_unchecked(env, channel, file_bits))
}

pub(crate) fn static_time_unchecked(env: &Environment, channel: ChannelId, file_bits: u64) -> f64 {
    let p = env.avail_prob(channel);
    let d = SlotDecomposition::for_channel(env, channel, file_bits);
    let tail = if d.has_fraction() {
        (1.0 - p) / p + d.fraction()
    } else {
        0.0
    };
    env.slot() * (d.full_slots as f64 / p + tail)
}

/// `F / (r p)`: the transfer time a renewal-reward argument would predict.
pub fn wald_floor(env: &Environment, channel: ChannelId, file_bits: u64) -> f64 {
    file_bits as f64 / env.channel(channel).throughput()
}

/// Best single channel for this file; ties go to the lowest id.
pub fn static_optimal(env: &Environment, file_bits: u64) -> Result<(ChannelId, f64)> {
    check_file(file_bits)?;
    Ok(static_optimal_unchecked(env, file_bits))
}

pub(crate) fn static_optimal_unchecked(env: &Environment, file_bits: u64) -> (ChannelId, f64) {
    let mut best: Option<(ChannelId, f64)> = None;
    for id in env.channel_ids() {
        let t = static_time_unchecked(env, id, file_bits);
        match best {
            Some((_, bt)) if t >= bt => {}
            _ => best = Some((id, t)),
        }
    }
    best.expect("environment has at least one channel")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticReport {
    pub file_bits: u64,
    pub expected_time_s: Vec<f64>,
    pub wald_floor_s: Vec<f64>,
    pub static_optimal: ChannelId,
    pub static_optimal_time_s: f64,
}

pub fn static_report(env: &Environment, file_bits: u64) -> Result<StaticReport> {
    check_file(file_bits)?;
    let (best, best_t) = static_optimal_unchecked(env, file_bits);
    Ok(StaticReport {
        file_bits,
        expected_time_s: env
            .channel_ids()
            .map(|id| static_time_unchecked(env, id, file_bits))
            .collect(),
        wald_floor_s: env
            .channel_ids()
            .map(|id| wald_floor(env, id, file_bits))
            .collect(),
        static_optimal: best,
        static_optimal_time_s: best_t,
    })
}

/// File size (bits) at and above which the max-throughput channel is always
/// the static optimum.
pub fn threshold_h(env: &Environment) -> Result<f64> {
    let h = env.runner_up_channel().ok_or(OsaError::SingleChannel)?;
    let star = env.channel(env.max_tp_channel());
    let runner = env.channel(h);
    let wait = env.slot() * (1.0 - star.avail_prob) / star.avail_prob;
    Ok(wait / (1.0 / runner.throughput() - 1.0 / star.throughput()))
}

/// `k` with `F` strictly inside `(k B*, (k+1) B*)`.
fn lattice_index(env: &Environment, file_bits: u64) -> Result<u64> {
    check_file(file_bits)?;
    let d = SlotDecomposition::for_channel(env, env.max_tp_channel(), file_bits);
    if !d.has_fraction() {
        return Err(OsaError::OnLatticePoint { file_bits });
    }
    Ok(d.full_slots)
}

/// Per-channel pieces shared by both ratio bounds, for `i != i*`.
struct BoundTerms {
    /// `F / (slot r_i p_i) + (1 - p_i) / p_i`
    static_numerator: f64,
    /// `k m_i (r* p* - r_i p_i) / (r_i p_i^2)`
    switch_saving: f64,
    /// `(k + 1)(m_i / p_i - 1)`
    denominator: f64,
}

fn bound_terms(env: &Environment, file_bits: u64, k: u64) -> Vec<BoundTerms> {
    let star = env.channel(env.max_tp_channel());
    env.channels()
        .iter()
        .filter(|c| c.id != star.id)
        .map(|c| {
            let m = c.avail_prob / star.avail_prob;
            let p = c.avail_prob;
            BoundTerms {
                static_numerator: file_bits as f64 / (env.slot() * c.throughput()) + (1.0 - p) / p,
                switch_saving: k as f64 * m * (star.throughput() - c.throughput())
                    / (c.rate * p * p),
                denominator: (k as f64 + 1.0) * (m / p - 1.0),
            }
        })
        .collect()
}

fn clamped_min(candidates: impl Iterator<Item = (f64, f64)>) -> f64 {
    candidates
        .map(|(num, den)| if den > 0.0 { (num / den).min(1.0) } else { 1.0 })
        .fold(1.0, f64::min)
}

/// Upper bound on `E[T(static optimal)] / E[T(i*)]` for off-lattice `F`.
pub fn static_ratio_bound(env: &Environment, file_bits: u64) -> Result<f64> {
    let k = lattice_index(env, file_bits)?;
    let terms = bound_terms(env, file_bits, k);
    Ok(clamped_min(
        terms.iter().map(|t| (t.static_numerator, t.denominator)),
    ))
}

/// Lower and upper bounds on `E[T(dynamic optimal)] / E[T(i*)]` for
/// off-lattice `F`.
///
/// The lower bound's indicator is taken on the max-throughput channel's
/// fractional slot, which is always positive off the lattice.
pub fn dynamic_ratio_bounds(env: &Environment, file_bits: u64) -> Result<(f64, f64)> {
    let k = lattice_index(env, file_bits)?;
    let star = env.channel(env.max_tp_channel());
    let lower = 1.0 / (1.0 + env.slot() * (1.0 - star.avail_prob) * star.rate / file_bits as f64);
    let terms = bound_terms(env, file_bits, k);
    let upper = clamped_min(
        terms
            .iter()
            .map(|t| (t.static_numerator - t.switch_saving, t.denominator)),
    );
    Ok((lower, upper))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub file_bits: u64,
    pub lattice_index: u64,
    /// `p_i / p*` per channel, `None` for the max-throughput channel itself.
    pub ratios: Vec<Option<f64>>,
    pub static_upper: f64,
    pub dynamic_lower: f64,
    pub dynamic_upper: f64,
}

pub fn bounds_report(env: &Environment, file_bits: u64) -> Result<BoundsReport> {
    let k = lattice_index(env, file_bits)?;
    let star = env.max_tp_channel();
    let p_star = env.avail_prob(star);
    let (dynamic_lower, dynamic_upper) = dynamic_ratio_bounds(env, file_bits)?;
    Ok(BoundsReport {
        file_bits,
        lattice_index: k,
        ratios: env
            .channels()
            .iter()
            .map(|c| (c.id != star).then(|| c.avail_prob / p_star))
            .collect(),
        static_upper: static_ratio_bound(env, file_bits)?,
        dynamic_lower,
        dynamic_upper,
    })
}
