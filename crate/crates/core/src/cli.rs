//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a run fails, 2 for usage, config and
//! input-format errors. Every output directory gets a `manifest.txt`
//! written before anything else; it is the only file carrying a timestamp.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::eval::{self, EvalConfig, EvalError};
use crate::local::TrajectoryLibrary;
use crate::sim::export::{comparison_summary, metrics_summary, trajectories_csv};
use crate::sim::{run_scenario, NavMode, ScenarioConfig, SimResult};

#[derive(Debug, Parser)]
#[command(
    name = "crowdnav",
    version,
    about = "Crowd navigation simulator and trajectory evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    With,
    Without,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PredictorArg {
    Linear,
    Flow,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write trajectories and metrics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the navigation mode; `both` runs a paired comparison.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run both modes over a range of seeds and aggregate the metrics.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Half-open `A..B` or inclusive `A..=B`.
        #[arg(long, value_parser = parse_seeds)]
        seeds: SeedRange,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a predictor on `frame_id ped_id x y` dataset files.
    Evaluate {
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "linear")]
        predictor: PredictorArg,
        #[arg(long, default_value_t = 8)]
        t_obs: usize,
        #[arg(long, default_value_t = 8)]
        t_pred: usize,
        /// Seconds between consecutive frames.
        #[arg(long, default_value_t = 0.4)]
        frame_period: f64,
        /// Also write reports and per-window errors here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the motion-primitive library as CSV.
    ExportPrimitives {
        /// Takes the library parameters from this scenario config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SeedRange {
    start: u64,
    end: u64,
}

impl SeedRange {
    fn seeds(self) -> impl Iterator<Item = u64> + Clone {
        self.start..self.end
    }
}

fn parse_seeds(s: &str) -> Result<SeedRange, String> {
    let (a, b, inclusive) = if let Some((a, b)) = s.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = s.split_once("..") {
        (a, b, false)
    } else {
        return Err(format!("expected A..B or A..=B, got {s:?}"));
    };
    let a: u64 = a.trim().parse().map_err(|_| format!("bad seed {a:?}"))?;
    let b: u64 = b.trim().parse().map_err(|_| format!("bad seed {b:?}"))?;
    let end = if inclusive {
        b.checked_add(1).ok_or("seed range overflows")?
    } else {
        b
    };
    if end <= a {
        return Err(format!("seed range {s:?} is empty"));
    }
    Ok(SeedRange { start: a, end })
}

/// Failure of a subcommand, split by exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_manifest(dir: &Path, command: &str, config: Option<&Path>, seeds: &str) -> Result<(), Failure> {
    create_dir(dir)?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut m = String::new();
    let _ = writeln!(m, "command: {command}");
    let _ = writeln!(
        m,
        "config: {}",
        config.map_or_else(|| "-".to_string(), |p| p.display().to_string())
    );
    let _ = writeln!(m, "seeds: {seeds}");
    let _ = writeln!(m, "output: {}", dir.display());
    let _ = writeln!(m, "version: {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "timestamp_unix: {stamp}");
    write_file(&dir.join("manifest.txt"), &m)
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    ScenarioConfig::load(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn simulate(cfg: &ScenarioConfig) -> Result<SimResult, Failure> {
    run_scenario(cfg).map_err(|e| Failure::Runtime(format!("seed {} mode {}: {e}", cfg.seed, cfg.mode)))
}

fn cmd_simulate(config: &Path, seed: Option<u64>, mode: Option<ModeArg>, out: &Path) -> Result<(), Failure> {
    let mut cfg = load_config(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let modes = match mode {
        None => vec![cfg.mode],
        Some(ModeArg::With) => vec![NavMode::WithSocialModel],
        Some(ModeArg::Without) => vec![NavMode::WithoutSocialModel],
        Some(ModeArg::Both) => vec![NavMode::WithSocialModel, NavMode::WithoutSocialModel],
    };
    write_manifest(out, "simulate", Some(config), &cfg.seed.to_string())?;
    let mut results = Vec::new();
    for m in modes {
        let run_cfg = ScenarioConfig { mode: m, ..cfg.clone() };
        let r = simulate(&run_cfg)?;
        write_file(&out.join(format!("trajectories_{m}.csv")), &trajectories_csv(&r))?;
        write_file(&out.join(format!("metrics_{m}.txt")), &metrics_summary(&r))?;
        print!("{}", metrics_summary(&r));
        results.push(r);
    }
    if let [with, without] = results.as_slice() {
        write_file(&out.join("comparison.txt"), &comparison_summary(with, without))?;
    }
    Ok(())
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

const RUN_HEADER: &str =
    "seed,mode,goal_reached,travel_time,path_length,collision_count,min_clearance,disturbance,planner_ticks,follow_ticks\n";

fn run_row(r: &SimResult) -> String {
    format!(
        "{},{},{},{:.1},{},{},{},{},{},{}\n",
        r.seed,
        r.mode,
        r.goal_reached,
        r.travel_time,
        r.path_length,
        r.collision_count,
        r.min_clearance,
        r.disturbance,
        r.ticks.len(),
        r.follow_ticks().count()
    )
}

fn aggregate_row(mode: NavMode, runs: &[&SimResult]) -> String {
    let n = runs.len() as f64;
    let mut collisions: Vec<f64> = runs.iter().map(|r| r.collision_count as f64).collect();
    collisions.sort_by(f64::total_cmp);
    let mean = |f: fn(&SimResult) -> f64| runs.iter().map(|r| f(r)).sum::<f64>() / n;
    format!(
        "{},{},{},{},{},{},{}\n",
        mode,
        runs.len(),
        median(&collisions),
        mean(|r| r.collision_count as f64),
        mean(|r| r.disturbance),
        mean(|r| r.path_length),
        mean(|r| if r.goal_reached { 1.0 } else { 0.0 }),
    )
}

/// Runs every (seed, mode) pair and renders the per-run and aggregate
/// tables.
pub fn sweep_tables(
    cfg: &ScenarioConfig,
    seeds: impl Iterator<Item = u64>,
) -> Result<(Vec<SimResult>, String, String), String> {
    let modes = [NavMode::WithSocialModel, NavMode::WithoutSocialModel];
    let jobs: Vec<ScenarioConfig> = seeds
        .flat_map(|seed| {
            modes.map(|mode| ScenarioConfig {
                seed,
                mode,
                ..cfg.clone()
            })
        })
        .collect();
    let results: Vec<SimResult> = jobs
        .par_iter()
        .map(|c| run_scenario(c).map_err(|e| format!("seed {} mode {}: {e}", c.seed, c.mode)))
        .collect::<Result<_, _>>()?;
    let mut runs = String::from(RUN_HEADER);
    for r in &results {
        runs += &run_row(r);
    }
    let mut agg =
        String::from("mode,runs,median_collisions,mean_collisions,mean_disturbance,mean_path_length,goal_rate\n");
    for mode in modes {
        let of_mode: Vec<&SimResult> = results.iter().filter(|r| r.mode == mode).collect();
        agg += &aggregate_row(mode, &of_mode);
    }
    Ok((results, runs, agg))
}

fn cmd_sweep(config: &Path, seeds: SeedRange, out: &Path) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let label = format!("{}..{}", seeds.start, seeds.end);
    write_manifest(out, "sweep", Some(config), &label)?;
    let (results, runs, agg) = sweep_tables(&cfg, seeds.seeds()).map_err(Failure::Runtime)?;
    let per_run = out.join("runs");
    create_dir(&per_run)?;
    for r in &results {
        write_file(
            &per_run.join(format!("seed{}_{}.txt", r.seed, r.mode)),
            &metrics_summary(r),
        )?;
    }
    write_file(&out.join("sweep_runs.csv"), &runs)?;
    write_file(&out.join("sweep_aggregate.csv"), &agg)?;
    print!("{agg}");
    Ok(())
}

fn eval_failure(path: &Path, e: EvalError) -> Failure {
    let msg = format!("{}: {e}", path.display());
    match e {
        EvalError::NoWindows(_) => Failure::Runtime(msg),
        _ => Failure::Usage(msg),
    }
}

fn cmd_evaluate(
    datasets: &[PathBuf],
    predictor: PredictorArg,
    cfg: EvalConfig,
    out: Option<&Path>,
) -> Result<(), Failure> {
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let name = match predictor {
        PredictorArg::Linear => "linear",
        PredictorArg::Flow => "flow",
    };
    let predictor = eval::predictor_by_name(name).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(dir) = out {
        write_manifest(dir, &format!("evaluate --predictor {name}"), None, "-")?;
    }
    let classifier = crate::groups::LinearClassifier::default();
    for path in datasets {
        let data = eval::load_dataset(path).map_err(|e| eval_failure(path, e))?;
        let report = eval::evaluate(&data, predictor.as_ref(), &cfg, &classifier).map_err(|e| eval_failure(path, e))?;
        print!("{}", report.to_text());
        if let Some(dir) = out {
            write_file(&dir.join(format!("{}_report.txt", data.name)), &report.to_text())?;
            write_file(&dir.join(format!("{}_windows.csv", data.name)), &report.windows_csv())?;
        }
    }
    Ok(())
}

fn cmd_export_primitives(config: Option<&Path>, out: &Path) -> Result<(), Failure> {
    let cfg = match config {
        Some(p) => load_config(p)?,
        None => ScenarioConfig::default(),
    };
    let lib =
        TrajectoryLibrary::from_params(&cfg.local, cfg.robot.radius).map_err(|e| Failure::Usage(e.to_string()))?;
    write_manifest(out, "export-primitives", config, "-")?;
    write_file(&out.join("primitives.csv"), &lib.to_csv())
}

/// Parses `args` (program name first) and runs the subcommand, returning
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match &cli.command {
        Command::Simulate {
            config,
            seed,
            mode,
            out,
        } => cmd_simulate(config, *seed, *mode, out),
        Command::Sweep { config, seeds, out } => cmd_sweep(config, *seeds, out),
        Command::Evaluate {
            datasets,
            predictor,
            t_obs,
            t_pred,
            frame_period,
            out,
        } => cmd_evaluate(
            datasets,
            *predictor,
            EvalConfig {
                t_obs: *t_obs,
                t_pred: *t_pred,
                frame_period: *frame_period,
            },
            out.as_deref(),
        ),
        Command::ExportPrimitives { config, out } => cmd_export_primitives(config.as_deref(), out),
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("0..20"), Ok(SeedRange { start: 0, end: 20 }));
        assert_eq!(parse_seeds("3..=3"), Ok(SeedRange { start: 3, end: 4 }));
        assert!(parse_seeds("5..5").is_err());
        assert!(parse_seeds("7").is_err());
        assert!(parse_seeds("a..3").is_err());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[1.0, 2.0, 9.0]), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 9.0]), 2.5);
    }
}
