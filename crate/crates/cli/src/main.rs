//! `hetbandits` — seeded multi-agent bandit experiments from the command
//! line.
//!
//! Four subcommands: `simulate-cluster` and `simulate-personal` run the
//! synthetic scenarios, `replay-offline` replays an implicit-feedback log,
//! and `summarize` reduces previously written trace files to a comparison
//! table. Options resolve in precedence order: explicit flag, then
//! `--config` file entry (flat `key = value` lines mirroring the flag
//! names), then the `HETBANDITS_SEED` environment variable (seed only),
//! then the scenario's defaults.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on I/O errors.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use hetbandits_core::experiment::{
    config_warnings, run_experiment, summarize, ExperimentConfig, HarnessError, Scenario,
    SummaryRow,
};
use hetbandits_core::offline::OfflineError;
use hetbandits_core::trace::{RegretTrace, TraceError};

#[derive(Parser)]
#[command(
    name = "hetbandits",
    version,
    about = "Multi-agent linear bandit simulations: clustered and personalized \
             collaborative learners, baselines, and offline replay"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a clustered population (identical preferences per cluster).
    SimulateCluster(RunArgs),
    /// Simulate a personalized population (shared mean plus spread).
    SimulatePersonal(RunArgs),
    /// Replay an implicit-feedback log against a recommendation policy.
    ReplayOffline(ReplayArgs),
    /// Reduce trace CSV files to a per-algorithm comparison table.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Number of agents N (offline replay takes users from the dataset).
    #[arg(long)]
    agents: Option<usize>,
    /// Rounds T.
    #[arg(long)]
    horizon: Option<usize>,
    /// Arms per round K.
    #[arg(long)]
    arms: Option<usize>,
    /// Context dimension d (offline replay takes it from the dataset).
    #[arg(long)]
    dim: Option<usize>,
    /// Number of clusters L (cluster scenario).
    #[arg(long)]
    clusters: Option<usize>,
    /// Zipf skew z ≥ 0 for cluster sizes.
    #[arg(long = "zipf-z")]
    zipf_z: Option<f64>,
    /// Preference spread σ_spread (personal scenario).
    #[arg(long = "sigma-spread")]
    sigma_spread: Option<f64>,
    /// Separability exponent α.
    #[arg(long)]
    alpha: Option<f64>,
    /// Exploration-length constant C.
    #[arg(long = "c-explore")]
    c_explore: Option<f64>,
    /// Confidence level δ.
    #[arg(long)]
    delta: Option<f64>,
    /// Minimum relative cluster size p* (default 0).
    #[arg(long = "p-star")]
    p_star: Option<f64>,
    /// Clustering threshold γ (default 3/(NT)^α).
    #[arg(long)]
    gamma: Option<f64>,
    /// Reward noise σ.
    #[arg(long = "noise-sigma")]
    noise_sigma: Option<f64>,
    /// Independent repetitions.
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed (falls back to config file, then HETBANDITS_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Algorithm: sclb, cmlb, pmlb, linucb-ind, or random.
    #[arg(long)]
    algo: Option<String>,
    /// Output directory for trace and summary files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key = value config file mirroring these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Maximum concurrent repetitions.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Items file: `id,f1,…,fd` rows, no header.
    items: PathBuf,
    /// Interactions file: `user,item` rows (extra columns ignored).
    interactions: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Trace CSV files, or directories to scan for `*_rep*.csv`.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
}

/// CLI-level error carrying its process exit code.
#[derive(Debug)]
enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) => m,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match &e {
            HarnessError::Config(_) => CliError::Config(e.to_string()),
            HarnessError::Io(_) => CliError::Io(e.to_string()),
            HarnessError::Trace(TraceError::Io(_)) | HarnessError::Trace(TraceError::Parse { .. }) => {
                CliError::Io(e.to_string())
            }
            HarnessError::Offline(OfflineError::InvalidSpec(_)) => CliError::Config(e.to_string()),
            HarnessError::Offline(_) => CliError::Io(e.to_string()),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SimulateCluster(args) => simulate(Scenario::Cluster, &args),
        Command::SimulatePersonal(args) => simulate(Scenario::Personal, &args),
        Command::ReplayOffline(args) => replay(&args),
        Command::Summarize(args) => summarize_files(&args.paths),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}

/// Apply one `key = value` pair (config file or flag spelling) to a config.
fn apply_option(config: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), CliError> {
    fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        value
            .parse()
            .map_err(|e| CliError::Config(format!("bad value for {key}: {value:?} ({e})")))
    }
    match key {
        "agents" => config.n_agents = parse(key, value)?,
        "horizon" => config.horizon = parse(key, value)?,
        "arms" => config.k_arms = parse(key, value)?,
        "dim" => config.dim = parse(key, value)?,
        "clusters" => config.n_clusters = parse(key, value)?,
        "zipf-z" => config.zipf_z = parse(key, value)?,
        "sigma-spread" => config.sigma_spread = parse(key, value)?,
        "alpha" => config.alpha = parse(key, value)?,
        "c-explore" => config.c_explore = parse(key, value)?,
        "delta" => config.delta = parse(key, value)?,
        "p-star" => config.p_star = Some(parse(key, value)?),
        "gamma" => config.gamma = Some(parse(key, value)?),
        "noise-sigma" => config.noise_sigma = parse(key, value)?,
        "reps" => config.repetitions = parse(key, value)?,
        "seed" => config.master_seed = parse(key, value)?,
        "algo" => {
            config.algo = value
                .parse()
                .map_err(|e| CliError::Config(format!("bad value for algo: {e}")))?
        }
        "out" => config.out_dir = PathBuf::from(value),
        "jobs" => config.jobs = Some(parse(key, value)?),
        other => {
            return Err(CliError::Config(format!("unknown config key {other:?}")));
        }
    }
    Ok(())
}

/// Parse a flat config file into `(key, value)` pairs in file order.
fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config file {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!(
                "config file {}:{}: expected `key = value`, got {raw:?}",
                path.display(),
                idx + 1
            ))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Resolve the final configuration: defaults, then `HETBANDITS_SEED`, then
/// the config file, then explicit flags.
fn build_config(scenario: Scenario, args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::defaults(scenario);
    if let Ok(seed) = std::env::var("HETBANDITS_SEED") {
        config.master_seed = seed.parse().map_err(|_| {
            CliError::Config(format!("HETBANDITS_SEED must be an integer, got {seed:?}"))
        })?;
    }
    if let Some(path) = &args.config {
        for (key, value) in parse_config_file(path)? {
            apply_option(&mut config, &key, &value)?;
        }
    }
    let mut set = |key: &str, value: Option<String>| -> Result<(), CliError> {
        match value {
            Some(v) => apply_option(&mut config, key, &v),
            None => Ok(()),
        }
    };
    set("agents", args.agents.map(|v| v.to_string()))?;
    set("horizon", args.horizon.map(|v| v.to_string()))?;
    set("arms", args.arms.map(|v| v.to_string()))?;
    set("dim", args.dim.map(|v| v.to_string()))?;
    set("clusters", args.clusters.map(|v| v.to_string()))?;
    set("zipf-z", args.zipf_z.map(|v| v.to_string()))?;
    set("sigma-spread", args.sigma_spread.map(|v| v.to_string()))?;
    set("alpha", args.alpha.map(|v| v.to_string()))?;
    set("c-explore", args.c_explore.map(|v| v.to_string()))?;
    set("delta", args.delta.map(|v| v.to_string()))?;
    set("p-star", args.p_star.map(|v| v.to_string()))?;
    set("gamma", args.gamma.map(|v| v.to_string()))?;
    set("noise-sigma", args.noise_sigma.map(|v| v.to_string()))?;
    set("reps", args.reps.map(|v| v.to_string()))?;
    set("seed", args.seed.map(|v| v.to_string()))?;
    set("algo", args.algo.clone())?;
    set("out", args.out.as_ref().map(|p| p.display().to_string()))?;
    set("jobs", args.jobs.map(|v| v.to_string()))?;
    Ok(config)
}

fn run_and_report(config: &ExperimentConfig) -> Result<(), CliError> {
    for warning in config_warnings(config) {
        eprintln!("warning: {warning}");
    }
    let summary = run_experiment(config)?;
    println!(
        "{}: final mean per-agent cumulative regret {:.4} (95% band ±{:.4}) \
         over {} rep(s), wall-clock {:.2}s",
        summary.algo,
        summary.final_mean_cum_regret,
        summary.band_half_width,
        config.repetitions,
        summary.wall_clock.as_secs_f64()
    );
    println!(
        "wrote {} trace file(s) and {} under {}",
        summary.trace_files.len(),
        summary
            .summary_file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        config.out_dir.display()
    );
    Ok(())
}

fn simulate(scenario: Scenario, args: &RunArgs) -> Result<(), CliError> {
    let config = build_config(scenario, args)?;
    run_and_report(&config)
}

fn replay(args: &ReplayArgs) -> Result<(), CliError> {
    let mut config = build_config(Scenario::Offline, &args.run)?;
    config.items_path = Some(args.items.clone());
    config.interactions_path = Some(args.interactions.clone());
    run_and_report(&config)
}

/// Expand files-or-directories into trace files, grouped by algorithm label
/// (the file-stem prefix before `_rep`).
fn collect_trace_files(paths: &[PathBuf]) -> Result<BTreeMap<String, Vec<PathBuf>>, CliError> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(path)
                .map_err(|e| CliError::Io(format!("cannot list {}: {e}", path.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| {
                    p.extension().is_some_and(|ext| ext == "csv")
                        && p.file_stem()
                            .and_then(|s| s.to_str())
                            .is_some_and(|s| s.contains("_rep"))
                })
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    if files.is_empty() {
        return Err(CliError::Config("no trace files to summarize".into()));
    }
    let mut groups: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for file in files {
        let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
        let algo = stem.split("_rep").next().unwrap_or(stem).to_string();
        groups.entry(algo).or_default().push(file);
    }
    Ok(groups)
}

fn summarize_files(paths: &[PathBuf]) -> Result<(), CliError> {
    let start = Instant::now();
    let groups = collect_trace_files(paths)?;
    let mut inputs = Vec::new();
    for (algo, files) in groups {
        let mut traces = Vec::new();
        for file in files {
            let reader = BufReader::new(File::open(&file).map_err(|e| {
                CliError::Io(format!("cannot open {}: {e}", file.display()))
            })?);
            traces.push(RegretTrace::read_csv(reader).map_err(|e| {
                CliError::Io(format!("cannot parse {}: {e}", file.display()))
            })?);
        }
        inputs.push((algo, traces, start.elapsed()));
    }
    // Stamp every row with the shared summarization wall-clock.
    let elapsed = start.elapsed();
    for input in &mut inputs {
        input.2 = elapsed;
    }
    print_table(&summarize(&inputs));
    Ok(())
}

fn print_table(rows: &[SummaryRow]) {
    let width = rows.iter().map(|r| r.algo.len()).max().unwrap_or(4).max("algo".len());
    println!(
        "{:<width$}  {:>21}  {:>15}  {:>12}",
        "algo", "final_mean_cum_regret", "band_half_width", "wall_clock_s"
    );
    for row in rows {
        println!(
            "{:<width$}  {:>21.4}  {:>15.4}  {:>12.3}",
            row.algo,
            row.final_mean_cum_regret,
            row.band_half_width,
            row.wall_clock.as_secs_f64()
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hetbandits_core::experiment::Algo;
    use std::io::Write;

    fn no_flags() -> RunArgs {
        RunArgs {
            agents: None,
            horizon: None,
            arms: None,
            dim: None,
            clusters: None,
            zipf_z: None,
            sigma_spread: None,
            alpha: None,
            c_explore: None,
            delta: None,
            p_star: None,
            gamma: None,
            noise_sigma: None,
            reps: None,
            seed: None,
            algo: None,
            out: None,
            config: None,
            jobs: None,
        }
    }

    #[test]
    fn defaults_survive_empty_args() {
        let config = build_config(Scenario::Cluster, &no_flags()).unwrap();
        assert_eq!(config.n_agents, 40);
        assert_eq!(config.horizon, 1000);
        assert_eq!(config.k_arms, 25);
        assert_eq!(config.dim, 15);
        assert_eq!(config.delta, 0.4);
        assert_eq!(config.algo, Algo::Sclb);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "# comment\nhorizon = 10\nagents=3\nalgo = cmlb").unwrap();
        let args = RunArgs {
            horizon: Some(12),
            config: Some(path),
            ..no_flags()
        };
        let config = build_config(Scenario::Cluster, &args).unwrap();
        assert_eq!(config.horizon, 12); // flag wins
        assert_eq!(config.n_agents, 3); // file wins over default
        assert_eq!(config.algo, Algo::Cmlb);
    }

    #[test]
    fn unknown_config_key_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        File::create(&path).unwrap().write_all(b"horzion = 10\n").unwrap();
        let args = RunArgs { config: Some(path), ..no_flags() };
        match build_config(Scenario::Cluster, &args) {
            Err(e) => assert_eq!(e.exit_code(), 2),
            Ok(_) => panic!("want config error"),
        }
    }

    #[test]
    fn malformed_config_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        File::create(&path).unwrap().write_all(b"agents 3\n").unwrap();
        let args = RunArgs { config: Some(path), ..no_flags() };
        match build_config(Scenario::Cluster, &args) {
            Err(CliError::Config(msg)) => assert!(msg.contains(":1")),
            Err(CliError::Io(msg)) => panic!("want config error, got I/O: {msg}"),
            Ok(_) => panic!("want config error"),
        }
    }

    #[test]
    fn missing_config_file_is_io_error() {
        let args = RunArgs {
            config: Some(PathBuf::from("/nonexistent/run.conf")),
            ..no_flags()
        };
        match build_config(Scenario::Cluster, &args) {
            Err(e) => assert_eq!(e.exit_code(), 3),
            Ok(_) => panic!("want I/O error"),
        }
    }

    #[test]
    fn trace_files_group_by_algo_prefix() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["cmlb_rep000.csv", "cmlb_rep001.csv", "random_rep000.csv", "notes.txt"] {
            File::create(dir.path().join(name)).unwrap();
        }
        let groups = collect_trace_files(&[dir.path().to_path_buf()]).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups["cmlb"].len(), 2);
        assert_eq!(groups["random"].len(), 1);
    }
}
