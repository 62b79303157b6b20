use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use osa_filetime::analytic::threshold_h;
use osa_filetime::experiment::{
    analyze_csv, bounds_csv, comparison_csv, file_grid, ledger_csv, run_bounds_table,
    run_offline_sweep, run_online_comparison, sweep_csv, uniform_files, ExperimentConfig,
};
use osa_filetime::online::run_online;
use osa_filetime::sim::estimate_expected_time;
use osa_filetime::ssp::solve_dynamic_optimal;
use osa_filetime::{plan, Environment, PolicyKind, RngStream};

#[derive(Parser)]
#[command(
    name = "osa-filetime",
    version,
    about = "File transfer time policies over opportunistic channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON file with the environment and experiment settings.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the CSV/JSON output and summary.json; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Grid {
    #[arg(long)]
    f_min: u64,
    #[arg(long)]
    f_max: u64,
    #[arg(long)]
    f_step: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Per-channel static expected times over a file-size grid.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
    },
    /// Optimal switching path for one file.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        file_bits: u64,
    },
    /// Monte Carlo estimate of one policy's transfer time.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: PolicyKind,
        #[arg(long)]
        file_bits: u64,
        #[arg(long, default_value_t = 100_000)]
        episodes: u64,
    },
    /// Online learner over a file sequence.
    Learn {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy_type: PolicyKind,
        /// `uniform:min,max,count` or `file:path` with one size per line.
        #[arg(long)]
        files: String,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
    },
    /// Measured ratios against their bounds on an off-lattice grid.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Static, dynamic and heuristic expected times over a file-size grid.
    Figure2 {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50_000)]
        f_min: u64,
        #[arg(long, default_value_t = 7_000_000)]
        f_max: u64,
        #[arg(long, default_value_t = 50_000)]
        f_step: u64,
    },
    /// Averaged learning curves of every configured policy.
    Figure4 {
        #[command(flatten)]
        common: Common,
    },
}

struct Loaded {
    cfg: ExperimentConfig,
    env: Environment,
    seed: u64,
}

fn load(common: &Common) -> anyhow::Result<Loaded> {
    let text = fs::read_to_string(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let env = cfg.env.build()?;
    let seed = cfg.seed;
    Ok(Loaded { cfg, env, seed })
}

/// Writes `name` and `summary.json` under `--out`, or prints `body` alone.
fn emit(common: &Common, name: &str, body: &str, summary: Value) -> anyhow::Result<()> {
    match &common.out {
        None => print!("{body}"),
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write(&dir.join(name), body)?;
            write(
                &dir.join("summary.json"),
                &(serde_json::to_string_pretty(&summary)? + "\n"),
            )?;
        }
    }
    Ok(())
}

fn write(path: &Path, body: &str) -> anyhow::Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn summary(command: &str, seed: u64, cfg: &ExperimentConfig, results: Value) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "config": cfg,
        "results": results,
    })
}

fn parse_files(spec: &str, stream: RngStream) -> anyhow::Result<Vec<u64>> {
    if let Some(rest) = spec.strip_prefix("uniform:") {
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        let [lo, hi, count] = parts[..] else {
            bail!("expected uniform:min,max,count, got `{spec}`");
        };
        let (lo, hi): (u64, u64) = (lo.parse()?, hi.parse()?);
        if hi <= lo {
            bail!("uniform range needs min < max");
        }
        Ok(uniform_files(lo, hi, count.parse()?, stream))
    } else if let Some(path) = spec.strip_prefix("file:") {
        let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.parse::<u64>()
                    .with_context(|| format!("bad file size `{l}`"))
            })
            .collect()
    } else {
        bail!("--files must start with `uniform:` or `file:`")
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analyze { common, grid } => {
            let l = load(&common)?;
            let fs = file_grid(grid.f_min, grid.f_max, grid.f_step)?;
            let csv = analyze_csv(&l.env, &fs)?;
            let h = threshold_h(&l.env).ok();
            let results = json!({ "grid_points": fs.len(), "H_bits": h });
            emit(
                &common,
                "analyze.csv",
                &csv,
                summary("analyze", l.seed, &l.cfg, results),
            )
        }
        Command::Solve { common, file_bits } => {
            let l = load(&common)?;
            let sol = solve_dynamic_optimal(&l.env, file_bits)?;
            let out = json!({
                "value_s": sol.value,
                "path": sol.path.choices(),
                "milestones_bits": sol.path.milestones(),
                "states_explored": sol.table.states_explored(),
            });
            let body = serde_json::to_string_pretty(&out)? + "\n";
            emit(
                &common,
                "solve.json",
                &body,
                summary("solve", l.seed, &l.cfg, out),
            )
        }
        Command::Simulate {
            common,
            policy,
            file_bits,
            episodes,
        } => {
            let l = load(&common)?;
            let (path, analytic) = plan(&l.env, policy, file_bits)?;
            let est = estimate_expected_time(
                &l.env,
                &path,
                file_bits,
                episodes,
                RngStream::new(l.seed, 0),
            )?;
            let out = json!({
                "mean_s": est.mean,
                "std_error_s": est.std_error,
                "analytic_s": analytic,
                "rel_gap": (est.mean - analytic) / analytic,
            });
            let body = serde_json::to_string_pretty(&out)? + "\n";
            emit(
                &common,
                "simulate.json",
                &body,
                summary("simulate", l.seed, &l.cfg, out),
            )
        }
        Command::Learn {
            common,
            policy_type,
            files,
            repeats,
        } => {
            let l = load(&common)?;
            if repeats == 0 {
                bail!("--repeats must be at least 1");
            }
            let ledgers = (0..repeats)
                .map(|r| {
                    let stream = RngStream::new(l.seed, 0).child(r as u64);
                    let seq = parse_files(&files, stream.child(0))?;
                    if (seq.len()) < l.env.len() {
                        bail!("{} files cannot cover {} channels", seq.len(), l.env.len());
                    }
                    Ok(run_online(&l.env, &seq, policy_type, stream.child(1))?)
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let n = repeats as f64;
            let mean = |f: &dyn Fn(&osa_filetime::online::LedgerRow) -> f64| {
                ledgers
                    .iter()
                    .map(|l| f(l.rows.last().unwrap()))
                    .sum::<f64>()
                    / n
            };
            let results = json!({
                "policy_type": policy_type,
                "repeats": repeats,
                "final_regret_mean_s": mean(&|r| r.regret_cum),
                "final_avg_time_ratio": mean(&|r| r.avg_time_ratio),
                "final_avg_throughput_bps": mean(&|r| r.avg_throughput),
            });
            emit(
                &common,
                "learn.csv",
                &ledger_csv(&ledgers),
                summary("learn", l.seed, &l.cfg, results),
            )
        }
        Command::Bounds { common, grid, tol } => {
            let l = load(&common)?;
            let fs = file_grid(grid.f_min, grid.f_max, grid.f_step)?;
            let table = run_bounds_table(&l.env, &fs, tol)?;
            let results = json!({
                "rows": table.rows.len(),
                "violations": table.violations(),
                "omitted_lattice_points": table.omitted_lattice_points,
            });
            emit(
                &common,
                "bounds.csv",
                &bounds_csv(&table),
                summary("bounds", l.seed, &l.cfg, results),
            )
        }
        Command::Figure2 {
            common,
            f_min,
            f_max,
            f_step,
        } => {
            let l = load(&common)?;
            let fs = file_grid(f_min, f_max, f_step)?;
            let rows = run_offline_sweep(&l.env, &fs)?;
            let results = json!({ "grid_points": fs.len(), "H_bits": threshold_h(&l.env).ok() });
            emit(
                &common,
                "figure2.csv",
                &sweep_csv(&l.env, &rows),
                summary("figure2", l.seed, &l.cfg, results),
            )
        }
        Command::Figure4 { common } => {
            let l = load(&common)?;
            let cmp = run_online_comparison(&l.cfg)?;
            let finals: serde_json::Map<String, Value> = cmp
                .curves
                .iter()
                .map(|c| {
                    let last = c.final_row();
                    (
                        c.policy.to_string(),
                        json!({
                            "avg_time_ratio": last.average_time_ratio,
                            "avg_throughput_bps": last.average_throughput,
                            "regret_mean_s": c.final_regret_mean,
                        }),
                    )
                })
                .collect();
            emit(
                &common,
                "figure4.csv",
                &comparison_csv(&cmp),
                summary("figure4", l.seed, &l.cfg, Value::Object(finals)),
            )
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
