//! File transfer as a stochastic shortest path over remaining bits.
//!
//! From state `s > 0`, sensing channel `i` either finds it busy (stay at `s`,
//! pay one slot) or idle (move to `(s - B_i)^+`, pay `min(slot, s / r_i)`).
//! Taking expectations over the busy self-loops turns every policy into a
//! deterministic path of successful transmissions from `F` down to 0, so the
//! reachable state set is the finite lattice `F - sum_i k_i B_i >= 0`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::analytic::static_optimal_unchecked;
use crate::channel::{ChannelId, Environment};
use crate::error::{OsaError, Result};

/// Relative slack under which two Bellman candidates count as tied.
const TIE_RTOL: f64 = 1e-12;

/// Hard cap on the number of paths [`enumerate_paths`] will materialize.
pub const MAX_ENUMERATED_PATHS: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SspTransition {
    pub from_state: u64,
    pub action: ChannelId,
    pub to_state: u64,
    pub probability: f64,
    pub cost: f64,
}

/// Outgoing transitions of `(state, action)`: the busy self-loop first, then
/// the successful transmission. The absorbing state 0 has none.
pub fn transitions(env: &Environment, state: u64, action: ChannelId) -> Vec<SspTransition> {
    if state == 0 {
        return Vec::new();
    }
    let p = env.avail_prob(action);
    let b = env.bits_per_slot(action);
    let mut out = Vec::with_capacity(2);
    if p < 1.0 {
        out.push(SspTransition {
            from_state: state,
            action,
            to_state: state,
            probability: 1.0 - p,
            cost: env.slot(),
        });
    }
    out.push(SspTransition {
        from_state: state,
        action,
        to_state: state.saturating_sub(b),
        probability: p,
        cost: hop_seconds(env, action, state),
    });
    out
}

/// `min(slot, s / r_i)`
fn hop_seconds(env: &Environment, channel: ChannelId, state: u64) -> f64 {
    if state >= env.bits_per_slot(channel) {
        env.slot()
    } else {
        env.transmit_seconds(channel, state)
    }
}

/// Expected wait before channel `i` is found idle.
fn expected_wait(env: &Environment, channel: ChannelId) -> f64 {
    let p = env.avail_prob(channel);
    env.slot() * (1.0 - p) / p
}

/// The channel used for each successful transmission, with the remaining
/// bits right before it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PolicyPath {
    choices: Vec<ChannelId>,
    milestones: Vec<u64>,
}

impl PolicyPath {
    /// Builds the path that uses `choices[n]` for the `n`-th successful
    /// transmission of a `file_bits` file. Every hop but the last must leave
    /// bits behind and the last must finish the file.
    pub fn from_choices(
        env: &Environment,
        file_bits: u64,
        choices: Vec<ChannelId>,
    ) -> Result<Self> {
        if file_bits == 0 {
            return Err(OsaError::EmptyFile);
        }
        if choices.is_empty() {
            return Err(OsaError::InconsistentPath("no choices".into()));
        }
        let mut milestones = Vec::with_capacity(choices.len());
        let mut remaining = file_bits;
        for (n, &c) in choices.iter().enumerate() {
            if !env.contains(c) {
                return Err(OsaError::InconsistentPath(format!("unknown channel {c}")));
            }
            if remaining == 0 {
                return Err(OsaError::InconsistentPath(format!(
                    "file finished before hop {}",
                    n + 1
                )));
            }
            milestones.push(remaining);
            remaining = remaining.saturating_sub(env.bits_per_slot(c));
        }
        if remaining != 0 {
            return Err(OsaError::InconsistentPath(format!(
                "{remaining} bits left after the last hop"
            )));
        }
        Ok(PolicyPath {
            choices,
            milestones,
        })
    }

    /// Single-channel path.
    pub fn constant(env: &Environment, channel: ChannelId, file_bits: u64) -> Result<Self> {
        if !env.contains(channel) {
            return Err(OsaError::InconsistentPath(format!(
                "unknown channel {channel}"
            )));
        }
        let hops = file_bits.div_ceil(env.bits_per_slot(channel)) as usize;
        Self::from_choices(env, file_bits, vec![channel; hops])
    }

    pub fn choices(&self) -> &[ChannelId] {
        &self.choices
    }

    pub fn milestones(&self) -> &[u64] {
        &self.milestones
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn file_bits(&self) -> u64 {
        self.milestones[0]
    }

    /// Channel this path senses when `remaining_bits` are left, if that state
    /// lies on the path.
    pub fn channel_at(&self, remaining_bits: u64) -> Option<ChannelId> {
        // milestones are strictly decreasing
        self.milestones
            .binary_search_by(|m| remaining_bits.cmp(m))
            .ok()
            .map(|i| self.choices[i])
    }

    fn check_env(&self, env: &Environment) -> Result<()> {
        let mut remaining = self.file_bits();
        for (n, (&c, &m)) in self.choices.iter().zip(&self.milestones).enumerate() {
            if !env.contains(c) || m != remaining {
                return Err(OsaError::InconsistentPath(format!(
                    "hop {} does not match the environment",
                    n + 1
                )));
            }
            remaining = remaining.saturating_sub(env.bits_per_slot(c));
            if remaining == 0 && n + 1 != self.len() {
                return Err(OsaError::InconsistentPath("hops after completion".into()));
            }
        }
        if remaining != 0 {
            return Err(OsaError::InconsistentPath(
                "path does not finish the file".into(),
            ));
        }
        Ok(())
    }
}

/// Closed-form expected transfer time of a path:
/// `slot * sum_{n<|pi|} 1/p_n + slot * (1 - p_last)/p_last + F_last / r_last`.
pub fn evaluate_path(env: &Environment, path: &PolicyPath) -> Result<f64> {
    path.check_env(env)?;
    let (&last, body) = path.choices.split_last().expect("paths are nonempty");
    let body_sum: f64 = body.iter().map(|&c| 1.0 / env.avail_prob(c)).sum();
    let last_bits = *path.milestones.last().expect("paths are nonempty");
    Ok(env.slot() * body_sum + expected_wait(env, last) + env.transmit_seconds(last, last_bits))
}

/// Optimal expected time-to-go and action for every reachable state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueTable {
    file_bits: u64,
    entries: BTreeMap<u64, (f64, ChannelId)>,
}

impl ValueTable {
    pub fn file_bits(&self) -> u64 {
        self.file_bits
    }

    /// Optimal expected time from `state`; `Some(0.0)` at the absorbing state.
    pub fn value(&self, state: u64) -> Option<f64> {
        if state == 0 {
            return Some(0.0);
        }
        self.entries.get(&state).map(|e| e.0)
    }

    pub fn action(&self, state: u64) -> Option<ChannelId> {
        self.entries.get(&state).map(|e| e.1)
    }

    /// Number of nonzero states solved.
    pub fn states_explored(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64, ChannelId)> + '_ {
        self.entries.iter().map(|(&s, &(v, a))| (s, v, a))
    }

    /// Follows the optimal actions from `file_bits` down to 0.
    pub fn path(&self, env: &Environment) -> Result<PolicyPath> {
        let mut choices = Vec::new();
        let mut s = self.file_bits;
        while s > 0 {
            let a = self
                .action(s)
                .ok_or_else(|| OsaError::InconsistentPath(format!("state {s} not in table")))?;
            choices.push(a);
            s = s.saturating_sub(env.bits_per_slot(a));
        }
        PolicyPath::from_choices(env, self.file_bits, choices)
    }
}

/// All nonzero states reachable from `file_bits`, ascending.
pub fn reachable_states(env: &Environment, file_bits: u64) -> Vec<u64> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![file_bits];
    while let Some(s) = stack.pop() {
        if s == 0 || !seen.insert(s) {
            continue;
        }
        for id in env.channel_ids() {
            stack.push(s.saturating_sub(env.bits_per_slot(id)));
        }
    }
    seen.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicSolution {
    pub path: PolicyPath,
    pub table: ValueTable,
    pub value: f64,
}

/// Exact dynamic program over the reachable lattice, solved bottom-up.
///
/// `V(s) = min_i [slot (1 - p_i)/p_i + min(slot, s/r_i) + V((s - B_i)^+)]`,
/// with near-ties resolved toward the lowest channel id.
pub fn solve_dynamic_optimal(env: &Environment, file_bits: u64) -> Result<DynamicSolution> {
    if file_bits == 0 {
        return Err(OsaError::EmptyFile);
    }
    let mut entries: BTreeMap<u64, (f64, ChannelId)> = BTreeMap::new();
    for s in reachable_states(env, file_bits) {
        let mut best: Option<(f64, ChannelId)> = None;
        for id in env.channel_ids() {
            let next = s.saturating_sub(env.bits_per_slot(id));
            let tail = if next == 0 { 0.0 } else { entries[&next].0 };
            let q = expected_wait(env, id) + hop_seconds(env, id, s) + tail;
            match best {
                Some((bq, _)) if q >= bq - TIE_RTOL * bq.abs().max(1.0) => {}
                _ => best = Some((q, id)),
            }
        }
        entries.insert(s, best.expect("environment has at least one channel"));
    }
    let table = ValueTable { file_bits, entries };
    let path = table.path(env)?;
    let value = table.value(file_bits).expect("root state is solved");
    Ok(DynamicSolution { path, table, value })
}

/// Number of distinct paths from `file_bits` to 0, saturating at `u128::MAX`.
pub fn count_paths(env: &Environment, file_bits: u64) -> u128 {
    let mut counts: BTreeMap<u64, u128> = BTreeMap::new();
    counts.insert(0, 1);
    for s in reachable_states(env, file_bits) {
        let c = env
            .channel_ids()
            .map(|id| counts[&s.saturating_sub(env.bits_per_slot(id))])
            .fold(0u128, |a, b| a.saturating_add(b));
        counts.insert(s, c);
    }
    counts[&file_bits]
}

/// Brute-force oracle: every path from `file_bits` to 0 with its closed-form
/// expected time. Refuses when more than `max_states` states are reachable or
/// more than [`MAX_ENUMERATED_PATHS`] paths exist.
pub fn enumerate_paths(
    env: &Environment,
    file_bits: u64,
    max_states: usize,
) -> Result<Vec<(PolicyPath, f64)>> {
    if file_bits == 0 {
        return Err(OsaError::EmptyFile);
    }
    let states = reachable_states(env, file_bits).len();
    if states > max_states {
        return Err(OsaError::StateSpaceTooLarge {
            count: states as u128,
            limit: max_states as u128,
        });
    }
    let total = count_paths(env, file_bits);
    if total > MAX_ENUMERATED_PATHS {
        return Err(OsaError::StateSpaceTooLarge {
            count: total,
            limit: MAX_ENUMERATED_PATHS,
        });
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut prefix = Vec::new();
    walk(env, file_bits, file_bits, &mut prefix, &mut out)?;
    Ok(out)
}

fn walk(
    env: &Environment,
    file_bits: u64,
    remaining: u64,
    prefix: &mut Vec<ChannelId>,
    out: &mut Vec<(PolicyPath, f64)>,
) -> Result<()> {
    for id in env.channel_ids() {
        prefix.push(id);
        let next = remaining.saturating_sub(env.bits_per_slot(id));
        if next == 0 {
            let path = PolicyPath::from_choices(env, file_bits, prefix.clone())?;
            let value = evaluate_path(env, &path)?;
            out.push((path, value));
        } else {
            walk(env, file_bits, next, prefix, out)?;
        }
        prefix.pop();
    }
    Ok(())
}

/// Largest expected transfer time over all paths, by a max-Bellman pass.
pub fn worst_path_value(env: &Environment, file_bits: u64) -> Result<f64> {
    if file_bits == 0 {
        return Err(OsaError::EmptyFile);
    }
    let mut worst: BTreeMap<u64, f64> = BTreeMap::new();
    worst.insert(0, 0.0);
    for s in reachable_states(env, file_bits) {
        let v = env
            .channel_ids()
            .map(|id| {
                expected_wait(env, id)
                    + hop_seconds(env, id, s)
                    + worst[&s.saturating_sub(env.bits_per_slot(id))]
            })
            .fold(f64::NEG_INFINITY, f64::max);
        worst.insert(s, v);
    }
    Ok(worst[&file_bits])
}

/// `n` slots' worth on the max-throughput channel, then the best single
/// channel for whatever is left. Requires `n <= floor(F / B*)`.
pub fn heuristic_split(env: &Environment, file_bits: u64, n: u64) -> Result<(PolicyPath, f64)> {
    if file_bits == 0 {
        return Err(OsaError::EmptyFile);
    }
    let star = env.max_tp_channel();
    let b_star = env.bits_per_slot(star);
    if n > file_bits / b_star {
        return Err(OsaError::InconsistentPath(format!(
            "split {n} exceeds {} whole slots",
            file_bits / b_star
        )));
    }
    let mut choices = vec![star; n as usize];
    let rest = file_bits - n * b_star;
    if rest > 0 {
        let (j, _) = static_optimal_unchecked(env, rest);
        let hops = rest.div_ceil(env.bits_per_slot(j)) as usize;
        choices.extend(std::iter::repeat_n(j, hops));
    }
    let path = PolicyPath::from_choices(env, file_bits, choices)?;
    let value = evaluate_path(env, &path)?;
    Ok((path, value))
}

/// The split heuristic at `n = floor(F / B*)`.
pub fn heuristic_policy(env: &Environment, file_bits: u64) -> Result<(PolicyPath, f64)> {
    if file_bits == 0 {
        return Err(OsaError::EmptyFile);
    }
    let k = file_bits / env.bits_per_slot(env.max_tp_channel());
    heuristic_split(env, file_bits, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{static_expected_time, static_optimal};
    use crate::channel::tests::toy;
    use crate::channel::{Channel, Scenario};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const C1: ChannelId = ChannelId(1);
    const C2: ChannelId = ChannelId(2);

    #[test]
    fn table_rows() {
        let env = toy();
        let t = transitions(&env, 5, C1);
        assert_eq!(t.len(), 2);
        assert_eq!((t[0].to_state, t[0].cost), (5, 1.0));
        assert_abs_diff_eq!(t[0].probability, 0.7, epsilon = 1e-15);
        assert_eq!((t[1].to_state, t[1].cost, t[1].probability), (1, 1.0, 0.3));
        let last = transitions(&env, 1, C1);
        assert_eq!((last[1].to_state, last[1].cost), (0, 0.25));
        assert!(transitions(&env, 0, C1).is_empty());
    }

    #[test]
    fn evaluate_toy_paths() {
        let env = toy();
        let p = PolicyPath::from_choices(&env, 5, vec![C1, C2]).unwrap();
        assert_eq!(p.milestones(), &[5, 1]);
        assert_abs_diff_eq!(
            evaluate_path(&env, &p).unwrap(),
            1.0 / 0.3 + 1.0 / 0.9,
            epsilon = 1e-12
        );
        let s = PolicyPath::constant(&env, C2, 5).unwrap();
        assert_eq!(s.len(), 5);
        assert_abs_diff_eq!(evaluate_path(&env, &s).unwrap(), 5.0 / 0.9, epsilon = 1e-12);
        let one = PolicyPath::from_choices(&env, 1, vec![C2]).unwrap();
        assert_abs_diff_eq!(
            evaluate_path(&env, &one).unwrap(),
            0.1 / 0.9 + 1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn inconsistent_paths_rejected() {
        let env = toy();
        assert!(PolicyPath::from_choices(&env, 5, vec![C1]).is_err());
        assert!(PolicyPath::from_choices(&env, 5, vec![C1, C1, C1]).is_err());
        assert!(PolicyPath::from_choices(&env, 5, vec![ChannelId(3), C1]).is_err());
        // a path built for another environment
        let other = Environment::new(
            vec![Channel::new(1, 8.0, 0.3), Channel::new(2, 1.0, 0.9)],
            1.0,
        )
        .unwrap();
        let p = PolicyPath::from_choices(&env, 5, vec![C1, C2]).unwrap();
        assert!(matches!(
            evaluate_path(&other, &p),
            Err(OsaError::InconsistentPath(_))
        ));
    }

    #[test]
    fn static_paths_match_closed_form() {
        for sc in Scenario::ALL {
            let env = sc.environment();
            for f in [1, 149_999, 150_000, 310_000, 2_300_001, 5_030_000] {
                for id in env.channel_ids() {
                    let p = PolicyPath::constant(&env, id, f).unwrap();
                    let a = evaluate_path(&env, &p).unwrap();
                    let b = static_expected_time(&env, id, f).unwrap();
                    assert!((a - b).abs() <= 1e-9 * b);
                }
            }
        }
    }

    #[test]
    fn solve_toy() {
        let env = toy();
        let sol = solve_dynamic_optimal(&env, 5).unwrap();
        assert_abs_diff_eq!(sol.value, 40.0 / 9.0, epsilon = 1e-12);
        assert_eq!(sol.path.choices(), &[C1, C2]);
        let one = solve_dynamic_optimal(&env, 1).unwrap();
        assert_eq!(one.path.choices(), &[C2]);
        assert_abs_diff_eq!(one.value, 1.0 / 0.9, epsilon = 1e-12);
        assert_eq!(sol.table.value(0), Some(0.0));
    }

    #[test]
    fn toy_enumeration() {
        let env = toy();
        let paths = enumerate_paths(&env, 5, 100).unwrap();
        // counts satisfy c(s) = c(s-4) + c(s-1) with c(0) = 1 and c(<0) -> c(0)
        assert_eq!(paths.len(), 7);
        assert_eq!(count_paths(&env, 5), 7);
        let min = paths.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(min, 40.0 / 9.0, epsilon = 1e-12);
        assert_eq!(enumerate_paths(&env, 1, 10).unwrap().len(), 2);
        assert!(matches!(
            enumerate_paths(&env, 1_000, 10),
            Err(OsaError::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn lattice_point_is_all_max_throughput() {
        for sc in Scenario::ALL {
            let env = sc.environment();
            let star = env.max_tp_channel();
            for k in 1..=5 {
                let f = k * env.bits_per_slot(star);
                let sol = solve_dynamic_optimal(&env, f).unwrap();
                assert!(sol.path.choices().iter().all(|&c| c == star));
                let floor = f as f64 / env.channel(star).throughput();
                assert!((sol.value - floor).abs() <= 1e-9 * floor);
            }
        }
    }

    #[test]
    fn heuristic_toy() {
        let env = toy();
        let (p, v) = heuristic_policy(&env, 5).unwrap();
        assert_eq!(p.choices(), &[C1, C2]);
        assert_abs_diff_eq!(v, 40.0 / 9.0, epsilon = 1e-12);
        let (p, v) = heuristic_policy(&env, 8).unwrap();
        assert_eq!(p.choices(), &[C1, C1]);
        assert_abs_diff_eq!(v, 2.0 / 0.3, epsilon = 1e-12);
        let (p, v) = heuristic_policy(&env, 3).unwrap();
        let (so, so_t) = static_optimal(&env, 3).unwrap();
        assert!(p.choices().iter().all(|&c| c == so));
        assert_abs_diff_eq!(v, so_t, epsilon = 1e-12);
    }

    #[test]
    fn worst_matches_enumeration() {
        let env = toy();
        for f in 1..=20 {
            let max = enumerate_paths(&env, f, 1000)
                .unwrap()
                .iter()
                .map(|p| p.1)
                .fold(0.0, f64::max);
            assert_abs_diff_eq!(worst_path_value(&env, f).unwrap(), max, epsilon = 1e-9);
        }
    }

    /// Iterative policy evaluation on the raw busy/idle transitions, without
    /// collapsing the self-loops.
    fn evaluate_by_iteration(env: &Environment, table: &ValueTable) -> f64 {
        let states: Vec<u64> = table.iter().map(|e| e.0).collect();
        let mut v: BTreeMap<u64, f64> = states.iter().map(|&s| (s, 0.0)).collect();
        v.insert(0, 0.0);
        for _ in 0..5_000 {
            for &s in &states {
                let a = table.action(s).unwrap();
                let nv: f64 = transitions(env, s, a)
                    .iter()
                    .map(|t| t.probability * (t.cost + v[&t.to_state]))
                    .sum();
                v.insert(s, nv);
            }
        }
        v[&table.file_bits()]
    }

    #[test]
    fn raw_transitions_agree_with_collapsed_values() {
        let env = toy();
        for f in [1, 5, 9, 13] {
            let sol = solve_dynamic_optimal(&env, f).unwrap();
            assert_abs_diff_eq!(
                evaluate_by_iteration(&env, &sol.table),
                sol.value,
                epsilon = 1e-9
            );
        }
    }

    /// `n slot / p* + min_{i != i*} [(F - n B*) / (r_i p_i) + slot (1 - p_i) / p_i]`,
    /// an upper bound on the split heuristic's expected time.
    fn split_upper_bound(env: &Environment, f: u64, n: u64) -> f64 {
        let star = env.max_tp_channel();
        let rest = (f - n * env.bits_per_slot(star)) as f64;
        let others = env
            .channels()
            .iter()
            .filter(|c| c.id != star)
            .map(|c| rest / c.throughput() + expected_wait(env, c.id))
            .fold(f64::INFINITY, f64::min);
        let tail = if others.is_finite() { others } else { 0.0 };
        n as f64 * env.slot() / env.avail_prob(star) + tail
    }

    #[test]
    fn exact_split_value_is_not_monotone() {
        // one full slot on channel 1 beats a slot on i* = 2 plus a 1-bit tail
        let env = Environment::new(
            vec![
                Channel::new(1, 6.0, 0.4178111972669529),
                Channel::new(2, 5.0, 0.585298046915332),
            ],
            1.0,
        )
        .unwrap();
        assert_eq!(env.max_tp_channel(), C2);
        let (_, at_k) = heuristic_split(&env, 6, 1).unwrap();
        let (p0, at_0) = heuristic_split(&env, 6, 0).unwrap();
        assert_eq!(p0.choices(), &[C1]);
        assert!(at_0 < at_k);
        assert!(split_upper_bound(&env, 6, 1) <= split_upper_bound(&env, 6, 0));
    }

    fn small_env() -> impl Strategy<Value = Environment> {
        prop::collection::vec((1u32..=6, 0.05f64..=1.0), 2..=3).prop_filter_map(
            "distinct throughputs",
            |spec| {
                let chans = spec
                    .iter()
                    .enumerate()
                    .map(|(i, &(b, p))| Channel::new(i as u32 + 1, b as f64, p))
                    .collect();
                Environment::new(chans, 1.0).ok()
            },
        )
    }

    proptest! {
        #[test]
        fn solver_matches_brute_force(env in small_env(), f in 1u64..=18) {
            prop_assume!(count_paths(&env, f) <= 200_000);
            let sol = solve_dynamic_optimal(&env, f).unwrap();
            let paths = enumerate_paths(&env, f, 200).unwrap();
            let min = paths.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            prop_assert!((sol.value - min).abs() <= 1e-9);
            prop_assert!((evaluate_path(&env, &sol.path).unwrap() - sol.value).abs() <= 1e-12);
        }

        #[test]
        fn bellman_holds_everywhere(env in small_env(), f in 1u64..=30) {
            let sol = solve_dynamic_optimal(&env, f).unwrap();
            for (s, v, _) in sol.table.iter() {
                let best = env.channel_ids().map(|id| {
                    let next = s.saturating_sub(env.bits_per_slot(id));
                    expected_wait(&env, id) + hop_seconds(&env, id, s) + sol.table.value(next).unwrap()
                }).fold(f64::INFINITY, f64::min);
                prop_assert!((v - best).abs() <= 1e-9);
            }
        }

        #[test]
        fn split_bound_is_smallest_at_k(env in small_env(), f in 1u64..=40) {
            let k = f / env.bits_per_slot(env.max_tp_channel());
            let at_k = split_upper_bound(&env, f, k);
            for n in 0..=k {
                let (_, exact) = heuristic_split(&env, f, n).unwrap();
                prop_assert!(exact <= split_upper_bound(&env, f, n) + 1e-9);
                prop_assert!(at_k <= split_upper_bound(&env, f, n) + 1e-9);
            }
        }
    }
}
