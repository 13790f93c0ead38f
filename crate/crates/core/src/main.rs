//! Command-line experiment harness.
//!
//! Subcommands: `sweep-power`, `sweep-antennas`, `optimize`,
//! `verify-moments`, `gen-scenarios`. Flags may also be supplied through a
//! `key = value` config file (`--config`); explicit flags win.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use swipt_relay::experiments::{
    generate_scenarios, optimize_once, sweep, verify_moments, SweepSpec, SweepVariable,
};
use swipt_relay::optimizer::{build_grid, DEFAULT_RHO_STEP, DEFAULT_TILT_STEP};
use swipt_relay::propagation::db_to_linear;
use swipt_relay::rates::SystemParams;
use swipt_relay::scenario::{load_scenario, parse_key_values, PlacementConfig};

#[derive(Parser)]
#[command(
    name = "swipt-relay",
    about = "Rate analysis and tilt/power-splitting optimization for an energy-harvesting massive-MIMO relay",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the per-user transmit power (dB) at fixed antenna count
    SweepPower(SweepArgs),
    /// Sweep the relay antenna count at fixed user power
    SweepAntennas(SweepArgs),
    /// Grid-search tilt and splitting ratio for one scenario file
    Optimize(OptimizeArgs),
    /// Estimate the random-matrix moments behind the closed forms
    VerifyMoments(MomentArgs),
    /// Sample random scenarios and save them as text files
    GenScenarios(GenArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Config file with `key = value` defaults for the other flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed for all randomness
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (CSV, or a directory for gen-scenarios)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Swept values, comma separated (dB or antenna counts)
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Pair counts to evaluate, comma separated
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Number of random location sets per point
    #[arg(long)]
    locations: Option<usize>,
    /// Channel realizations per location set
    #[arg(long)]
    trials: Option<usize>,
    /// Antenna count, fixed during power sweeps
    #[arg(long)]
    antennas: Option<usize>,
    /// Per-user power in dB, fixed during antenna sweeps
    #[arg(long)]
    power_db: Option<f64>,
    /// Evaluate only the rho = 0.5, tilt = pi/4 design
    #[arg(long)]
    baseline_only: bool,
    /// Skip the Monte-Carlo verification columns (analytic only)
    #[arg(long = "no-mc")]
    no_mc: bool,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Scenario file to optimize
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    antennas: Option<usize>,
    #[arg(long)]
    power_db: Option<f64>,
}

#[derive(Args)]
struct MomentArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    antennas: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    k: Option<usize>,
    /// How many scenarios to generate
    #[arg(long)]
    locations: Option<usize>,
}

/// Defaults loaded from `--config`, keyed by flag name.
struct FileConfig {
    entries: HashMap<String, (usize, String)>,
}

const CONFIG_KEYS: &[&str] = &[
    "seed",
    "out",
    "values",
    "k",
    "locations",
    "trials",
    "antennas",
    "power_db",
    "baseline_only",
    "no_mc",
];

impl FileConfig {
    fn load(path: Option<&PathBuf>) -> anyhow::Result<Self> {
        let entries = match path {
            None => HashMap::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))?;
                let entries = parse_key_values(&text)?;
                for (key, (line, _)) in &entries {
                    if !CONFIG_KEYS.contains(&key.as_str()) {
                        bail!("config line {line}: unknown key `{key}`");
                    }
                }
                entries
            }
        };
        Ok(FileConfig { entries })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> anyhow::Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| anyhow::anyhow!("config line {line}: invalid value for `{key}`")),
        }
    }

    fn get_list<T: std::str::FromStr>(&self, key: &str) -> anyhow::Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw
                .split(',')
                .map(|s| s.trim().parse::<T>())
                .collect::<std::result::Result<Vec<T>, _>>()
                .map(Some)
                .map_err(|_| anyhow::anyhow!("config line {line}: invalid list for `{key}`")),
        }
    }

    fn get_flag(&self, key: &str) -> anyhow::Result<bool> {
        Ok(self.get::<bool>(key)?.unwrap_or(false))
    }
}

fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

fn open_out(path: &PathBuf) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path)
        .with_context(|| format!("cannot create output file {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn run_sweep(args: SweepArgs, variable: SweepVariable) -> anyhow::Result<()> {
    let cfg = FileConfig::load(args.common.config.as_ref())?;
    let seed = pick(args.common.seed, cfg.get("seed")?, 1);
    let default_out = match variable {
        SweepVariable::UserPowerDb => "sweep_power.csv",
        SweepVariable::NAntennas => "sweep_antennas.csv",
    };
    let out_path = pick(args.common.out, cfg.get("out")?, PathBuf::from(default_out));
    let default_values = match variable {
        SweepVariable::UserPowerDb => SweepSpec::power_values(),
        SweepVariable::NAntennas => SweepSpec::antenna_values(),
    };
    let values = pick(args.values, cfg.get_list("values")?, default_values);
    let k_pairs = pick(args.k, cfg.get_list("k")?, vec![5]);
    let locations = pick(args.locations, cfg.get("locations")?, 100);
    let trials = pick(args.trials, cfg.get("trials")?, 1000);
    let antennas = pick(args.antennas, cfg.get("antennas")?, 100);
    let power_db = pick(args.power_db, cfg.get("power_db")?, 15.0);
    let baseline_only = args.baseline_only || cfg.get_flag("baseline_only")?;
    let skip_mc = args.no_mc || cfg.get_flag("no_mc")?;

    let spec = SweepSpec {
        variable,
        values,
        k_pairs: k_pairs.clone(),
        n_location_sets: locations,
        n_channel_trials: trials,
        baseline_only,
        skip_mc,
        seed,
    };
    let first_k = *k_pairs.first().context("k list is empty")?;
    let placement = PlacementConfig::new(first_k)?;
    let params = SystemParams::reference(antennas, first_k, db_to_linear(power_db)?)?;
    let grid = build_grid(DEFAULT_RHO_STEP, DEFAULT_TILT_STEP, true)?;

    let mut out = open_out(&out_path)?;
    let rows = sweep(&spec, &placement, &params, &grid, &mut out)?;
    out.flush()?;
    println!("wrote {} rows to {}", rows.len(), out_path.display());
    Ok(())
}

fn run_optimize(args: OptimizeArgs) -> anyhow::Result<()> {
    let cfg = FileConfig::load(args.common.config.as_ref())?;
    let out_path = pick(args.common.out, cfg.get("out")?, PathBuf::from("surface.csv"));
    let antennas = pick(args.antennas, cfg.get("antennas")?, 100);
    let power_db = pick(args.power_db, cfg.get("power_db")?, 15.0);

    let scenario = load_scenario(&args.scenario)
        .with_context(|| format!("cannot load scenario {}", args.scenario.display()))?;
    let params =
        SystemParams::reference(antennas, scenario.k_pairs(), db_to_linear(power_db)?)?;
    let grid = build_grid(DEFAULT_RHO_STEP, DEFAULT_TILT_STEP, true)?;

    let mut out = open_out(&out_path)?;
    let result = optimize_once(&scenario, &params, &grid, &mut out)?;
    out.flush()?;
    println!(
        "best rho = {} tilt = {} sum_rate = {} ({} evaluations, surface in {})",
        result.best.rho,
        result.best.tilt,
        result.best_sum_rate,
        result.evaluations,
        out_path.display()
    );
    Ok(())
}

fn run_verify_moments(args: MomentArgs) -> anyhow::Result<()> {
    let cfg = FileConfig::load(args.common.config.as_ref())?;
    let seed = pick(args.common.seed, cfg.get("seed")?, 1);
    let out_path = pick(args.common.out, cfg.get("out")?, PathBuf::from("moments.csv"));
    let antennas = pick(args.antennas, cfg.get("antennas")?, 64);
    let k = pick(args.k, cfg.get("k")?, 4);
    let trials = pick(args.trials, cfg.get("trials")?, 10_000);

    let mut out = open_out(&out_path)?;
    let rows = verify_moments(antennas, k, trials, seed, &mut out)?;
    out.flush()?;
    let worst = rows
        .iter()
        .filter_map(|r| r.z_score.map(f64::abs))
        .fold(0.0, f64::max);
    println!(
        "wrote {} identities to {} (max |z| = {})",
        rows.len(),
        out_path.display(),
        worst
    );
    Ok(())
}

fn run_gen_scenarios(args: GenArgs) -> anyhow::Result<()> {
    let cfg = FileConfig::load(args.common.config.as_ref())?;
    let seed = pick(args.common.seed, cfg.get("seed")?, 1);
    let out_dir = pick(args.common.out, cfg.get("out")?, PathBuf::from("scenarios"));
    let k = pick(args.k, cfg.get("k")?, 5);
    let count = pick(args.locations, cfg.get("locations")?, 100);

    let config = PlacementConfig::new(k)?;
    let paths = generate_scenarios(&config, count, seed, &out_dir)?;
    println!("wrote {} scenarios under {}", paths.len(), out_dir.display());
    Ok(())
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::SweepPower(args) => run_sweep(args, SweepVariable::UserPowerDb),
        Command::SweepAntennas(args) => run_sweep(args, SweepVariable::NAntennas),
        Command::Optimize(args) => run_optimize(args),
        Command::VerifyMoments(args) => run_verify_moments(args),
        Command::GenScenarios(args) => run_gen_scenarios(args),
    };
    match outcome {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
