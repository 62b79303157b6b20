//! Online transfer with unknown availability probabilities.
//!
//! The first `N` files each go over a single channel in turn. From then on,
//! every channel's availability is replaced by an optimistic KL index built
//! from its sense history, the chosen policy family is planned against those
//! estimates, and the plan is executed on the true channels. Regret is charged
//! with true-parameter expected times against the same policy family planned
//! with the true parameters.

use serde::Serialize;

use crate::analytic::static_time_unchecked;
use crate::channel::{ChannelId, Environment};
use crate::error::{OsaError, Result};
use crate::policy::{plan, PolicyKind};
use crate::sim::{run_episode_summary, RngStream};
use crate::ssp::{enumerate_paths, evaluate_path, worst_path_value, PolicyPath};

/// Bernoulli Kullback-Leibler divergence `kl(p || q)` in nats.
pub fn kl_bernoulli(p: f64, q: f64) -> f64 {
    fn term(a: f64, b: f64) -> f64 {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    }
    term(p, q) + term(1.0 - p, 1.0 - q)
}

const INDEX_TOL: f64 = 1e-9;

/// Largest `q` in `[mean, 1]` with `senses * kl(mean, q) <= budget`.
/// Unsensed channels get 1.
pub fn kl_index(empirical_mean: f64, senses: u64, budget: f64) -> f64 {
    if senses == 0 || empirical_mean >= 1.0 {
        return 1.0;
    }
    let mean = empirical_mean.max(0.0);
    let n = senses as f64;
    if n * kl_bernoulli(mean, 1.0) <= budget {
        return 1.0;
    }
    let (mut lo, mut hi) = (mean, 1.0);
    while hi - lo > INDEX_TOL {
        let mid = 0.5 * (lo + hi);
        if n * kl_bernoulli(mean, mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `ln k + 4 ln ln k`, falling back to `ln k` while `ln ln k < 0`.
pub fn exploration_rate(k: u64) -> f64 {
    let ln = (k.max(1) as f64).ln();
    let lnln = ln.ln();
    if lnln.is_finite() && lnln >= 0.0 {
        ln + 4.0 * lnln
    } else {
        ln
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnerState {
    /// Episodes completed so far.
    pub episode: u64,
    pub senses: Vec<u64>,
    pub idle_observations: Vec<u64>,
    pub policy_type: PolicyKind,
}

impl LearnerState {
    pub fn new(channels: usize, policy_type: PolicyKind) -> Self {
        LearnerState {
            episode: 0,
            senses: vec![0; channels],
            idle_observations: vec![0; channels],
            policy_type,
        }
    }

    /// Fraction of senses that found the channel idle; 0 before any sense.
    pub fn empirical_mean(&self, channel: usize) -> f64 {
        match self.senses[channel] {
            0 => 0.0,
            n => self.idle_observations[channel] as f64 / n as f64,
        }
    }

    pub fn empirical_means(&self) -> Vec<f64> {
        (0..self.senses.len())
            .map(|i| self.empirical_mean(i))
            .collect()
    }

    /// Optimistic estimates for episode `k` (1-based).
    pub fn index_estimates(&self, k: u64) -> Vec<f64> {
        let budget = exploration_rate(k);
        (0..self.senses.len())
            .map(|i| kl_index(self.empirical_mean(i), self.senses[i], budget))
            .collect()
    }

    /// Folds one finished episode's observations in.
    pub fn record(&mut self, senses: &[u64], idle: &[u64]) {
        for (acc, s) in self.senses.iter_mut().zip(senses) {
            *acc += s;
        }
        for (acc, s) in self.idle_observations.iter_mut().zip(idle) {
            *acc += s;
        }
        self.episode += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub k: u64,
    pub file_bits: u64,
    pub policy: PolicyPath,
    pub realized_time: f64,
    /// Expected time of the executed path under the true parameters.
    pub expected_time_true: f64,
    /// Expected time of the target policy under the true parameters.
    pub target_time: f64,
    /// Expected time of the true max-throughput channel for this file.
    pub max_tp_time: f64,
    pub regret_cum: f64,
    pub avg_time_ratio: f64,
    pub avg_throughput: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretLedger {
    pub policy_type: PolicyKind,
    pub rows: Vec<LedgerRow>,
    pub final_state: LearnerState,
}

impl RegretLedger {
    pub fn cumulative_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.regret_cum)
    }

    pub fn total_slots(&self) -> u64 {
        self.final_state.senses.iter().sum()
    }
}

/// Runs the learner over `files`. Episode `k` draws channel states from
/// `stream.child(k)`.
pub fn run_online(
    env_true: &Environment,
    files: &[u64],
    policy_type: PolicyKind,
    stream: RngStream,
) -> Result<RegretLedger> {
    if files.is_empty() {
        return Err(OsaError::EmptySequence);
    }
    if files.contains(&0) {
        return Err(OsaError::EmptyFile);
    }
    let n = env_true.len() as u64;
    let star = env_true.max_tp_channel();
    let mut state = LearnerState::new(env_true.len(), policy_type);
    let mut rows = Vec::with_capacity(files.len());
    let (mut regret, mut ratio_sum, mut tp_sum) = (0.0, 0.0, 0.0);
    for (j, &f) in files.iter().enumerate() {
        let k = j as u64 + 1;
        let path = if k <= n {
            PolicyPath::constant(env_true, ChannelId(k as u32), f)?
        } else {
            let est = env_true.with_avail_probs(&state.index_estimates(k))?;
            plan(&est, policy_type, f)?.0
        };
        let mut rng = stream.child(k).rng();
        let outcome = run_episode_summary(env_true, &path, f, &mut rng)?;
        state.record(&outcome.senses, &outcome.idle_observations);

        let expected_time_true = evaluate_path(env_true, &path)?;
        let target_time = plan(env_true, policy_type, f)?.1;
        let max_tp_time = static_time_unchecked(env_true, star, f);
        regret += expected_time_true - target_time;
        ratio_sum += outcome.transfer_time / max_tp_time;
        tp_sum += f as f64 / outcome.transfer_time;
        rows.push(LedgerRow {
            k,
            file_bits: f,
            policy: path,
            realized_time: outcome.transfer_time,
            expected_time_true,
            target_time,
            max_tp_time,
            regret_cum: regret,
            avg_time_ratio: ratio_sum / k as f64,
            avg_throughput: tp_sum / k as f64,
        });
    }
    Ok(RegretLedger {
        policy_type,
        rows,
        final_state: state,
    })
}

/// Constants of the gap-dependent regret bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretBoundParams {
    pub f_max_bits: u64,
    pub r_min: f64,
    pub p_min: f64,
    pub avail_probs: Vec<f64>,
    /// `F_max / r_min`.
    pub h_bound: f64,
    /// Longest expected transfer time at the largest file.
    pub d: f64,
    /// Smallest positive optimality gap; `None` when no policy is worse than
    /// the target.
    pub delta_min: Option<f64>,
    pub epsilon: Option<f64>,
}

/// Gaps at or below this are treated as ties, not as suboptimal policies.
const GAP_TOL: f64 = 1e-9;

/// Largest number of reachable states enumerated per file when measuring
/// gaps for path-valued targets.
pub const BOUND_MAX_STATES: usize = 10_000;

fn smallest_positive_gap(values: impl Iterator<Item = f64>, target: f64) -> Option<f64> {
    values
        .map(|v| v - target)
        .filter(|&g| g > GAP_TOL)
        .fold(None, |acc: Option<f64>, g| {
            Some(acc.map_or(g, |a| a.min(g)))
        })
}

/// Estimates the bound constants on the file sizes actually seen: the gap
/// minimum and the longest expected time are taken over `files` rather than
/// over every size up to the maximum.
pub fn bound_params_from_run(
    env_true: &Environment,
    files: &[u64],
    policy_type: PolicyKind,
) -> Result<RegretBoundParams> {
    let f_max = *files.iter().max().ok_or(OsaError::EmptySequence)?;
    if f_max == 0 || files.contains(&0) {
        return Err(OsaError::EmptyFile);
    }
    let mut distinct = files.to_vec();
    distinct.sort_unstable();
    distinct.dedup();

    let mut delta_min: Option<f64> = None;
    let mut d: f64 = 0.0;
    for &f in &distinct {
        let target = plan(env_true, policy_type, f)?.1;
        let gap = match policy_type {
            PolicyKind::MaxTp | PolicyKind::StaticOpt => smallest_positive_gap(
                env_true
                    .channel_ids()
                    .map(|id| static_time_unchecked(env_true, id, f)),
                target,
            ),
            PolicyKind::DynamicOpt | PolicyKind::Heuristic => smallest_positive_gap(
                enumerate_paths(env_true, f, BOUND_MAX_STATES)?
                    .into_iter()
                    .map(|p| p.1),
                target,
            ),
        };
        if let Some(g) = gap {
            delta_min = Some(delta_min.map_or(g, |m| m.min(g)));
        }
        d = d.max(worst_path_value(env_true, f)?);
    }
    let epsilon = delta_min.map(|dm| (1.0 - 2f64.powf(-0.25)) * dm / d);
    Ok(RegretBoundParams {
        f_max_bits: f_max,
        r_min: env_true.min_rate(),
        p_min: env_true.min_avail_prob(),
        avail_probs: env_true.avail_probs(),
        h_bound: f_max as f64 / env_true.min_rate(),
        d,
        delta_min,
        epsilon,
    })
}

/// `360 N H f(K) / (delta_min p_min^2) + 2 D (4 H + sum_i 1 / (eps^2 p_i^2))`.
pub fn regret_bound(params: &RegretBoundParams, channels: usize, k: u64) -> Result<f64> {
    if k < 2 {
        return Err(OsaError::UndefinedForK(k));
    }
    let (Some(delta_min), Some(eps)) = (params.delta_min, params.epsilon) else {
        return Err(OsaError::BoundInapplicable(
            "no suboptimal policy exists, so the optimality gap is undefined".into(),
        ));
    };
    let h = params.h_bound;
    let leading =
        360.0 * channels as f64 * h * exploration_rate(k) / (delta_min * params.p_min.powi(2));
    let tail: f64 = params
        .avail_probs
        .iter()
        .map(|p| 1.0 / (eps * eps * p * p))
        .sum();
    Ok(leading + 2.0 * params.d * (4.0 * h + tail))
}
