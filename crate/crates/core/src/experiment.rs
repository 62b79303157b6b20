//! Offline sweeps, ratio-bound tables, and the multi-policy online comparison.
//!
//! Everything here is a deterministic function of its configuration: repeats
//! fan out over rayon but results are gathered in repeat order, so CSV output
//! is byte-identical across runs with the same seed.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    dynamic_ratio_bounds, static_optimal_unchecked, static_ratio_bound, static_time_unchecked,
    threshold_h, wald_floor,
};
use crate::channel::{EnvConfig, Environment};
use crate::error::{OsaError, Result};
use crate::online::{run_online, RegretLedger};
use crate::policy::PolicyKind;
use crate::sim::RngStream;
use crate::ssp::{heuristic_policy, solve_dynamic_optimal};

fn default_policies() -> Vec<PolicyKind> {
    PolicyKind::ALL.to_vec()
}
fn default_f_max() -> u64 {
    7_000_000
}
fn default_episodes() -> usize {
    2000
}
fn default_repeats() -> usize {
    20
}

/// Environment plus experiment knobs, as read from the JSON config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub env: EnvConfig,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyKind>,
    /// Files are drawn uniformly from `(0, f_max_bits]`, rounded up to whole bits.
    #[serde(default = "default_f_max")]
    pub f_max_bits: u64,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(env: EnvConfig) -> Self {
        ExperimentConfig {
            env,
            policies: default_policies(),
            f_max_bits: default_f_max(),
            episodes: default_episodes(),
            repeats: default_repeats(),
            seed: 0,
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| OsaError::InvalidConfig(e.to_string()))
    }

    /// Builds the environment and checks the experiment knobs against it.
    pub fn validate(&self) -> Result<Environment> {
        let env = self.env.build()?;
        if self.episodes < env.len() {
            return Err(OsaError::InvalidConfig(format!(
                "{} episodes cannot cover forced exploration of {} channels",
                self.episodes,
                env.len()
            )));
        }
        if self.f_max_bits == 0 {
            return Err(OsaError::EmptyFile);
        }
        if self.repeats == 0 || self.policies.is_empty() {
            return Err(OsaError::InvalidConfig(
                "need at least one repeat and policy".into(),
            ));
        }
        Ok(env)
    }
}

/// `count` file sizes uniform on `(lo, hi]`, rounded up to whole bits.
pub fn uniform_files(lo: u64, hi: u64, count: usize, stream: RngStream) -> Vec<u64> {
    let mut rng = stream.rng();
    let span = hi.saturating_sub(lo) as f64;
    (0..count)
        .map(|_| {
            let u = 1.0 - rng.random::<f64>();
            ((lo as f64 + u * span).ceil() as u64).clamp(lo + 1, hi.max(lo + 1))
        })
        .collect()
}

/// Inclusive arithmetic grid `min, min + step, ..., <= max`.
pub fn file_grid(min: u64, max: u64, step: u64) -> Result<Vec<u64>> {
    if min == 0 || step == 0 || max < min {
        return Err(OsaError::InvalidConfig(format!(
            "bad grid {min}..={max} step {step}"
        )));
    }
    Ok((min..=max).step_by(step as usize).collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per (file size, channel) of static expected times.
pub fn analyze_csv(env: &Environment, grid: &[u64]) -> Result<String> {
    let h = threshold_h(env).ok();
    let mut out =
        String::from("F_bits,channel_id,expected_time_s,wald_floor_s,static_optimal_id,H_bits\n");
    for &f in grid {
        if f == 0 {
            return Err(OsaError::EmptyFile);
        }
        let (so, _) = static_optimal_unchecked(env, f);
        for id in env.channel_ids() {
            writeln!(
                out,
                "{f},{id},{},{},{so},{}",
                static_time_unchecked(env, id, f),
                wald_floor(env, id, f),
                fmt_opt(h)
            )
            .unwrap();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub file_bits: u64,
    pub static_times: Vec<f64>,
    pub dynamic_opt: f64,
    pub heuristic: f64,
    pub static_opt_id: u32,
    pub static_opt: f64,
    pub above_h: bool,
}

/// Static curves per channel alongside the dynamic optimum and heuristic.
pub fn run_offline_sweep(env: &Environment, grid: &[u64]) -> Result<Vec<SweepRow>> {
    let h = threshold_h(env).ok();
    grid.iter()
        .map(|&f| {
            let dynamic = solve_dynamic_optimal(env, f)?;
            let (_, heuristic) = heuristic_policy(env, f)?;
            let (so, so_t) = static_optimal_unchecked(env, f);
            Ok(SweepRow {
                file_bits: f,
                static_times: env
                    .channel_ids()
                    .map(|id| static_time_unchecked(env, id, f))
                    .collect(),
                dynamic_opt: dynamic.value,
                heuristic,
                static_opt_id: so.0,
                static_opt: so_t,
                above_h: h.is_some_and(|h| f as f64 >= h),
            })
        })
        .collect()
}

pub fn sweep_csv(env: &Environment, rows: &[SweepRow]) -> String {
    let mut out = String::from("F_bits");
    for id in env.channel_ids() {
        write!(out, ",static_ch{id}_s").unwrap();
    }
    out.push_str(",dynamic_opt_s,heuristic_s,static_opt_id,static_opt_s,above_H\n");
    for r in rows {
        write!(out, "{}", r.file_bits).unwrap();
        for t in &r.static_times {
            write!(out, ",{t}").unwrap();
        }
        writeln!(
            out,
            ",{},{},{},{},{}",
            r.dynamic_opt, r.heuristic, r.static_opt_id, r.static_opt, r.above_h as u8
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRow {
    pub file_bits: u64,
    pub static_ratio: f64,
    pub static_upper: f64,
    pub dynamic_ratio: f64,
    pub dynamic_lower: f64,
    pub dynamic_upper: f64,
    pub violations: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsTable {
    pub rows: Vec<BoundsRow>,
    /// File sizes skipped because they sit on a multiple of the
    /// max-throughput slot payload.
    pub omitted_lattice_points: Vec<u64>,
}

impl BoundsTable {
    pub fn violations(&self) -> u32 {
        self.rows.iter().map(|r| r.violations).sum()
    }
}

/// Measured ratios against the max-throughput channel next to their bounds.
/// A violation is any measured ratio outside its bound by more than `tol`.
pub fn run_bounds_table(env: &Environment, grid: &[u64], tol: f64) -> Result<BoundsTable> {
    let star = env.max_tp_channel();
    let mut rows = Vec::new();
    let mut omitted = Vec::new();
    for &f in grid {
        let static_upper = match static_ratio_bound(env, f) {
            Ok(b) => b,
            Err(OsaError::OnLatticePoint { .. }) => {
                omitted.push(f);
                continue;
            }
            Err(e) => return Err(e),
        };
        let (dynamic_lower, dynamic_upper) = dynamic_ratio_bounds(env, f)?;
        let base = static_time_unchecked(env, star, f);
        let static_ratio = static_optimal_unchecked(env, f).1 / base;
        let dynamic_ratio = solve_dynamic_optimal(env, f)?.value / base;
        let violations = [
            static_ratio > static_upper + tol,
            dynamic_ratio < dynamic_lower - tol,
            dynamic_ratio > dynamic_upper + tol,
        ]
        .iter()
        .filter(|&&v| v)
        .count() as u32;
        rows.push(BoundsRow {
            file_bits: f,
            static_ratio,
            static_upper,
            dynamic_ratio,
            dynamic_lower,
            dynamic_upper,
            violations,
        });
    }
    Ok(BoundsTable {
        rows,
        omitted_lattice_points: omitted,
    })
}

pub fn bounds_csv(table: &BoundsTable) -> String {
    let mut out = String::from(
        "F_bits,static_ratio,static_upper,dynamic_ratio,dynamic_lower,dynamic_upper,violations\n",
    );
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.file_bits,
            r.static_ratio,
            r.static_upper,
            r.dynamic_ratio,
            r.dynamic_lower,
            r.dynamic_upper,
            r.violations
        )
        .unwrap();
    }
    out
}

/// Running averages after `k` episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsRow {
    pub k: u64,
    /// Mean of realized time over the true max-throughput channel's expected time.
    pub average_time_ratio: f64,
    /// Mean of file size over realized time, bits/s.
    pub average_throughput: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyCurve {
    pub policy: PolicyKind,
    /// Metrics averaged across repeats, one row per episode.
    pub rows: Vec<MetricsRow>,
    pub final_regret_mean: f64,
}

impl PolicyCurve {
    pub fn final_row(&self) -> MetricsRow {
        *self.rows.last().expect("curves are nonempty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnlineComparison {
    pub curves: Vec<PolicyCurve>,
}

impl OnlineComparison {
    pub fn curve(&self, policy: PolicyKind) -> Option<&PolicyCurve> {
        self.curves.iter().find(|c| c.policy == policy)
    }
}

/// Stream layout: repeat `r` draws its files from `seed/r/0` and policy `j`
/// draws its channel states from `seed/r/(j+1)`, so learners in one repeat
/// see the same files but independent channel realizations.
fn repeat_stream(seed: u64, repeat: usize) -> RngStream {
    RngStream::new(seed, 0).child(repeat as u64)
}

/// Runs every configured learner over shared per-repeat file sequences.
pub fn run_online_repeats(cfg: &ExperimentConfig) -> Result<Vec<Vec<RegretLedger>>> {
    let env = cfg.validate()?;
    (0..cfg.repeats)
        .into_par_iter()
        .map(|r| {
            let stream = repeat_stream(cfg.seed, r);
            let files = uniform_files(0, cfg.f_max_bits, cfg.episodes, stream.child(0));
            cfg.policies
                .iter()
                .enumerate()
                .map(|(j, &kind)| run_online(&env, &files, kind, stream.child(j as u64 + 1)))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// Average the per-repeat ledgers into one curve per policy.
pub fn run_online_comparison(cfg: &ExperimentConfig) -> Result<OnlineComparison> {
    let ledgers = run_online_repeats(cfg)?;
    let reps = ledgers.len() as f64;
    let curves = cfg
        .policies
        .iter()
        .enumerate()
        .map(|(j, &policy)| {
            let rows = (0..cfg.episodes)
                .map(|e| {
                    let (mut ratio, mut tp) = (0.0, 0.0);
                    for rep in &ledgers {
                        ratio += rep[j].rows[e].avg_time_ratio;
                        tp += rep[j].rows[e].avg_throughput;
                    }
                    MetricsRow {
                        k: e as u64 + 1,
                        average_time_ratio: ratio / reps,
                        average_throughput: tp / reps,
                    }
                })
                .collect();
            let final_regret_mean = ledgers
                .iter()
                .map(|rep| rep[j].cumulative_regret())
                .sum::<f64>()
                / reps;
            PolicyCurve {
                policy,
                rows,
                final_regret_mean,
            }
        })
        .collect();
    Ok(OnlineComparison { curves })
}

pub fn comparison_csv(cmp: &OnlineComparison) -> String {
    let mut out = String::from("policy,k,avg_time_ratio,avg_throughput_bps\n");
    for c in &cmp.curves {
        for r in &c.rows {
            writeln!(
                out,
                "{},{},{},{}",
                c.policy, r.k, r.average_time_ratio, r.average_throughput
            )
            .unwrap();
        }
    }
    out
}

/// Per-episode learner CSV for one or more repeats.
pub fn ledger_csv(ledgers: &[RegretLedger]) -> String {
    let mut out = String::from(
        "repeat,k,F_bits,realized_time_s,expected_time_true_s,target_time_s,regret_cum_s,avg_time_ratio,avg_throughput_bps\n",
    );
    for (rep, l) in ledgers.iter().enumerate() {
        for r in &l.rows {
            writeln!(
                out,
                "{rep},{},{},{},{},{},{},{},{}",
                r.k,
                r.file_bits,
                r.realized_time,
                r.expected_time_true,
                r.target_time,
                r.regret_cum,
                r.avg_time_ratio,
                r.avg_throughput
            )
            .unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelId, Scenario};

    fn scenario_cfg(sc: Scenario) -> ExperimentConfig {
        ExperimentConfig::new(EnvConfig {
            scenario: Some(sc.name().into()),
            ..Default::default()
        })
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = ExperimentConfig::from_json(r#"{"scenario": "lossy", "seed": 9}"#).unwrap();
        assert_eq!(cfg.episodes, 2000);
        assert_eq!(cfg.repeats, 20);
        assert_eq!(cfg.f_max_bits, 7_000_000);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.policies.len(), 4);
        cfg.validate().unwrap();
        let short = ExperimentConfig::from_json(r#"{"scenario": "lossy", "episodes": 5}"#).unwrap();
        assert!(short.validate().is_err());
    }

    #[test]
    fn uniform_files_in_range() {
        let files = uniform_files(0, 20, 10_000, RngStream::new(1, 2));
        assert!(files.iter().all(|&f| (1..=20).contains(&f)));
        assert!(files.contains(&1) && files.contains(&20));
        assert_eq!(files, uniform_files(0, 20, 10_000, RngStream::new(1, 2)));
    }

    #[test]
    fn gradual_sweep_structure() {
        let env = Scenario::Gradual.environment();
        let grid = file_grid(50_000, 7_000_000, 50_000).unwrap();
        let rows = run_offline_sweep(&env, &grid).unwrap();
        for r in &rows {
            for t in &r.static_times {
                assert!(r.dynamic_opt <= t + 1e-9);
            }
        }
        let star = env.max_tp_channel();
        let b = env.bits_per_slot(star);
        let at = run_offline_sweep(&env, &[b]).unwrap().remove(0);
        let p = env.avail_prob(star);
        for v in [
            at.static_times[star.index()],
            at.dynamic_opt,
            at.heuristic,
            at.static_opt,
        ] {
            assert!((v - env.slot() / p).abs() < 1e-12);
        }
    }

    #[test]
    fn static_jumps_at_slot_multiples() {
        let env = Scenario::Steep.environment();
        for id in env.channel_ids() {
            let b = env.bits_per_slot(id);
            let p = env.avail_prob(id);
            for m in 1..4 {
                let at = static_time_unchecked(&env, id, m * b);
                let after = static_time_unchecked(&env, id, m * b + 1);
                let jump = after - at - env.transmit_seconds(id, 1);
                assert!((jump - env.slot() * (1.0 - p) / p).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn toy_bounds_row() {
        let env = crate::channel::tests::toy();
        let t = run_bounds_table(&env, &[4, 5], 1e-9).unwrap();
        assert_eq!(t.omitted_lattice_points, vec![4]);
        let r = &t.rows[0];
        assert!((r.static_ratio - (5.0 / 0.9) / (1.0 / 0.3 + 0.7 / 0.3 + 0.25)).abs() < 1e-12);
        assert!((r.static_ratio - 0.9390).abs() < 1e-4);
        assert!((r.dynamic_ratio - 0.7512).abs() < 1e-4);
        assert!((r.dynamic_lower - 0.6410).abs() < 1e-4);
        assert!(r.dynamic_ratio <= r.dynamic_upper);
        assert_eq!(t.violations(), 0);
    }

    #[test]
    fn lossy_bounds_sweep_clean() {
        let env = Scenario::Lossy.environment();
        let grid: Vec<u64> = (1..=500).map(|j| 14_000 * j - 7_000).collect();
        let t = run_bounds_table(&env, &grid, 1e-9).unwrap();
        assert_eq!(t.rows.len(), 500);
        assert_eq!(t.violations(), 0);
    }

    #[test]
    fn small_comparison_is_deterministic() {
        let mut cfg = scenario_cfg(Scenario::Steep);
        cfg.episodes = 60;
        cfg.repeats = 3;
        cfg.seed = 4;
        let a = comparison_csv(&run_online_comparison(&cfg).unwrap());
        let b = comparison_csv(&run_online_comparison(&cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 1 + 4 * 60);
    }

    #[test]
    fn analyze_csv_shape() {
        let env = crate::channel::tests::toy();
        let csv = analyze_csv(&env, &[1, 9]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(&fields[..2], &["1", "1"]);
        assert_eq!(fields[4], ChannelId(2).to_string());
        assert!((fields[5].parse::<f64>().unwrap() - 8.4).abs() < 1e-9);
    }
}
