//! Seeded experiment harness: configuration, repetition management, trace
//! persistence, and summary statistics.
//!
//! One experiment is `repetitions` independent runs of one algorithm on one
//! scenario. Replication `r` draws every random quantity from streams keyed
//! by `(master_seed, r)`, so reps are independent of each other, adding reps
//! never perturbs existing ones, and two algorithms run under the same
//! master seed face identical populations, contexts, and noise round for
//! round — regret differences are paired comparisons, not seed luck.
//!
//! Each rep's trace lands in `{out}/{algo}_rep{NNN}.csv`; the cross-rep
//! per-round mean and 95% percentile band land in `{out}/{algo}_summary.csv`.
//! Offline replays additionally write `{algo}_ratio_rep{NNN}.csv` with the
//! running regret ratio against the uniform-random normalizer.

use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::baselines::{independent_oful_run, uniform_random_run};
use crate::clustering::{cmlb_run, sclb_run, ClusterError, CmlbConfig, SclbConfig};
use crate::env::{
    build_population, tau_min, ContextMode, Environment, PopulationSpec, SyntheticEnv,
};
use crate::offline::{
    load_offline, regret_ratio, write_ratio_csv, OfflineDataset, OfflineError, RatioPoint,
    ReplayEnv,
};
use crate::personalization::{pmlb_run, PersonalizationError, PmlbConfig};
use crate::seeds::StreamKey;
use crate::trace::{per_round_band, write_summary_csv, RegretTrace, SummaryPoint, TraceError};

/// Errors from harness configuration and execution.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Offline(#[from] OfflineError),
}

impl From<ClusterError> for HarnessError {
    fn from(e: ClusterError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<PersonalizationError> for HarnessError {
    fn from(e: PersonalizationError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

/// What population the agents face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Synthetic clustered preferences (unit-sphere centers, Zipf sizes).
    Cluster,
    /// Synthetic personalized preferences (shared mean plus spread).
    Personal,
    /// Replay of an implicit-feedback log.
    Offline,
}

/// Which algorithm plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Sclb,
    Cmlb,
    Pmlb,
    LinucbInd,
    Random,
}

impl Algo {
    /// File-name-safe label, also the CLI spelling.
    pub fn label(&self) -> &'static str {
        match self {
            Algo::Sclb => "sclb",
            Algo::Cmlb => "cmlb",
            Algo::Pmlb => "pmlb",
            Algo::LinucbInd => "linucb-ind",
            Algo::Random => "random",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sclb" => Ok(Algo::Sclb),
            "cmlb" => Ok(Algo::Cmlb),
            "pmlb" => Ok(Algo::Pmlb),
            "linucb-ind" => Ok(Algo::LinucbInd),
            "random" => Ok(Algo::Random),
            other => Err(format!(
                "unknown algorithm {other:?} (expected sclb, cmlb, pmlb, linucb-ind, or random)"
            )),
        }
    }
}

/// Full description of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub algo: Algo,
    /// Number of agents N (synthetic scenarios; offline gets it from data).
    pub n_agents: usize,
    /// Rounds T.
    pub horizon: usize,
    /// Arms per round K.
    pub k_arms: usize,
    /// Context dimension d (synthetic scenarios; offline gets it from data).
    pub dim: usize,
    /// Number of clusters L (cluster scenario).
    pub n_clusters: usize,
    /// Zipf skew z ≥ 0 for cluster sizes (cluster scenario).
    pub zipf_z: f64,
    /// Preference spread σ_spread (personal scenario).
    pub sigma_spread: f64,
    /// Separability exponent α ∈ (0, ½]; the boundary value is admitted
    /// only for algorithms that do not consume α.
    pub alpha: f64,
    /// Exploration-length constant C > 0.
    pub c_explore: f64,
    /// Confidence level δ ∈ (0, 1).
    pub delta: f64,
    /// Clustering threshold override; default `3/(NT)^α`.
    pub gamma: Option<f64>,
    /// Minimum relative cluster size override; default 0.
    pub p_star: Option<f64>,
    /// Reward noise σ (synthetic) or the scale learners assume (offline).
    pub noise_sigma: f64,
    pub repetitions: usize,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    /// Concurrent repetitions cap; `None` uses all cores.
    pub jobs: Option<usize>,
    /// Offline scenario inputs.
    pub items_path: Option<PathBuf>,
    pub interactions_path: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Scenario defaults; cluster and offline values mirror the reference
    /// experimental setup.
    pub fn defaults(scenario: Scenario) -> Self {
        let base = ExperimentConfig {
            scenario,
            algo: Algo::Sclb,
            n_agents: 40,
            horizon: 1000,
            k_arms: 25,
            dim: 15,
            n_clusters: 4,
            zipf_z: 0.0,
            sigma_spread: 0.0,
            alpha: 0.2,
            c_explore: 0.2,
            delta: 0.4,
            gamma: None,
            p_star: None,
            noise_sigma: 1.0,
            repetitions: 30,
            master_seed: 0,
            out_dir: PathBuf::from("runs"),
            jobs: None,
            items_path: None,
            interactions_path: None,
        };
        match scenario {
            Scenario::Cluster => base,
            Scenario::Personal => ExperimentConfig {
                algo: Algo::Pmlb,
                n_agents: 50,
                sigma_spread: 0.1,
                ..base
            },
            Scenario::Offline => ExperimentConfig {
                algo: Algo::Random,
                horizon: 10_000,
                dim: 25,
                alpha: 0.5,
                c_explore: 0.5,
                delta: 0.3,
                noise_sigma: 0.5,
                repetitions: 1,
                ..base
            },
        }
    }

    /// Clustering threshold in effect: the override, else `3/(NT)^α`.
    pub fn effective_gamma(&self, n_agents: usize) -> f64 {
        self.gamma.unwrap_or_else(|| {
            3.0 / (n_agents as f64 * self.horizon as f64).powf(self.alpha)
        })
    }

    /// Size threshold in effect: the override, else 0.
    pub fn effective_p_star(&self) -> f64 {
        self.p_star.unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |msg: String| Err(HarnessError::Config(msg));
        if self.horizon == 0 {
            return err("horizon must be ≥ 1".into());
        }
        if self.k_arms == 0 {
            return err("arms must be ≥ 1".into());
        }
        if self.repetitions == 0 {
            return err("reps must be ≥ 1".into());
        }
        // The boundary value ½ is admitted here because the reference
        // offline setup uses α = ½ with the random policy; algorithms that
        // consume α enforce the strict α < ½ regime themselves.
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return err(format!("alpha must be in (0, 1/2], got {}", self.alpha));
        }
        if !(self.c_explore > 0.0) {
            return err(format!("c-explore must be positive, got {}", self.c_explore));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return err(format!("delta must be in (0, 1), got {}", self.delta));
        }
        if let Some(g) = self.gamma {
            if !(g >= 0.0) {
                return err(format!("gamma must be ≥ 0, got {g}"));
            }
        }
        if let Some(p) = self.p_star {
            if !(0.0..=1.0).contains(&p) {
                return err(format!("p-star must be in [0, 1], got {p}"));
            }
        }
        if !(self.noise_sigma >= 0.0) {
            return err(format!("noise-sigma must be ≥ 0, got {}", self.noise_sigma));
        }
        if !(self.zipf_z >= 0.0) {
            return err(format!("zipf-z must be ≥ 0, got {}", self.zipf_z));
        }
        if !(self.sigma_spread >= 0.0) {
            return err(format!("sigma-spread must be ≥ 0, got {}", self.sigma_spread));
        }
        if let Some(0) = self.jobs {
            return err("jobs must be ≥ 1".into());
        }
        match self.scenario {
            Scenario::Cluster | Scenario::Personal => {
                if self.n_agents == 0 {
                    return err("agents must be ≥ 1".into());
                }
                if self.dim == 0 {
                    return err("dim must be ≥ 1".into());
                }
                if self.scenario == Scenario::Cluster
                    && !(1..=self.n_agents).contains(&self.n_clusters)
                {
                    return err(format!(
                        "clusters must be in 1..={}, got {}",
                        self.n_agents, self.n_clusters
                    ));
                }
            }
            Scenario::Offline => {
                if self.items_path.is_none() || self.interactions_path.is_none() {
                    return err("offline replay needs items and interactions files".into());
                }
            }
        }
        Ok(())
    }
}

/// Analysis-side conditions the harness warns about but does not enforce.
pub fn config_warnings(config: &ExperimentConfig) -> Vec<String> {
    let mut warnings = Vec::new();
    if config.algo == Algo::Pmlb && config.scenario != Scenario::Offline {
        let rho = ContextMode::Cube.rho_min(config.dim);
        if let Ok(tau) = tau_min(config.delta, config.dim, config.horizon, rho) {
            if (config.horizon as f64) < tau * tau {
                warnings.push(format!(
                    "horizon {} is below the warm-up threshold τ_min² ≈ {:.3e}; \
                     personalized-phase guarantees need a longer run",
                    config.horizon,
                    tau * tau
                ));
            }
        }
        let need = (config.k_arms as f64 * config.k_arms as f64 * config.horizon as f64).ln();
        if (config.dim as f64) < need {
            warnings.push(format!(
                "dimension {} is below ln(K²T) ≈ {:.1}; \
                 the common-phase analysis assumes a larger dimension",
                config.dim, need
            ));
        }
    }
    warnings
}

/// Dispatch one algorithm run against one environment.
pub fn run_algo(config: &ExperimentConfig, env: &dyn Environment) -> Result<RegretTrace, HarnessError> {
    match config.algo {
        Algo::Sclb => Ok(sclb_run(
            &SclbConfig {
                alpha: config.alpha,
                c_explore: config.c_explore,
                delta: config.delta,
                horizon: config.horizon,
            },
            env,
        )?),
        Algo::Cmlb => Ok(cmlb_run(
            &CmlbConfig {
                alpha: config.alpha,
                c_explore: config.c_explore,
                delta: config.delta,
                gamma: config.effective_gamma(env.n_agents()),
                p_star: config.effective_p_star(),
                horizon: config.horizon,
            },
            env,
        )?
        .0),
        Algo::Pmlb => Ok(pmlb_run(
            &PmlbConfig { horizon: config.horizon, delta: config.delta },
            env,
        )?
        .0),
        Algo::LinucbInd => Ok(independent_oful_run(config.horizon, config.delta, env)),
        Algo::Random => Ok(uniform_random_run(config.horizon, env)),
    }
}

/// Replay `algo` against an offline dataset under one stream key, returning
/// its trace and the running ratio against the uniform-random normalizer on
/// the same candidate sequence.
pub fn offline_replay(
    dataset: Arc<OfflineDataset>,
    algo: Algo,
    config: &ExperimentConfig,
    key: StreamKey,
) -> Result<(RegretTrace, Vec<RatioPoint>), HarnessError> {
    let env = ReplayEnv::new(dataset, config.k_arms, config.noise_sigma, key)?;
    let mut algo_config = config.clone();
    algo_config.algo = algo;
    let trace = run_algo(&algo_config, &env)?;
    let random = uniform_random_run(config.horizon, &env.baseline_twin());
    let points = regret_ratio(&trace, &random);
    Ok((trace, points))
}

/// Result of [`run_experiment`].
#[derive(Debug)]
pub struct ExperimentSummary {
    pub algo: String,
    /// Per-round cross-rep mean and 95% band of per-agent cumulative regret.
    pub points: Vec<SummaryPoint>,
    /// Final-round mean per-agent cumulative regret.
    pub final_mean_cum_regret: f64,
    /// Half the final-round band width.
    pub band_half_width: f64,
    pub wall_clock: Duration,
    pub trace_files: Vec<PathBuf>,
    pub summary_file: PathBuf,
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// Execute all repetitions, persist traces and the summary, and report the
/// cross-rep statistics.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary, HarnessError> {
    config.validate()?;
    let start = Instant::now();
    fs::create_dir_all(&config.out_dir)?;

    let dataset = match config.scenario {
        Scenario::Offline => Some(Arc::new(load_offline(
            config.items_path.as_ref().expect("validated"),
            config.interactions_path.as_ref().expect("validated"),
        )?)),
        _ => None,
    };

    let run_one = |rep: usize| -> Result<(RegretTrace, Option<Vec<RatioPoint>>), HarnessError> {
        let key = StreamKey::new(config.master_seed, rep);
        match config.scenario {
            Scenario::Cluster | Scenario::Personal => {
                let spec = match config.scenario {
                    Scenario::Cluster => PopulationSpec::Clustered {
                        n_agents: config.n_agents,
                        dim: config.dim,
                        n_clusters: config.n_clusters,
                        zipf_z: config.zipf_z,
                    },
                    _ => PopulationSpec::Personalized {
                        n_agents: config.n_agents,
                        dim: config.dim,
                        sigma: config.sigma_spread,
                    },
                };
                let population = build_population(&spec, &mut key.population())
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                let env = SyntheticEnv::new(
                    population,
                    ContextMode::Cube,
                    config.k_arms,
                    config.noise_sigma,
                    key,
                );
                Ok((run_algo(config, &env)?, None))
            }
            Scenario::Offline => {
                let dataset = dataset.as_ref().expect("loaded above").clone();
                let (trace, points) = offline_replay(dataset, config.algo, config, key)?;
                Ok((trace, Some(points)))
            }
        }
    };

    let results: Result<Vec<_>, HarnessError> = with_pool(config.jobs, || {
        (0..config.repetitions).into_par_iter().map(run_one).collect()
    });
    let results = results?;

    // Single-writer collection, in replication order.
    let label = config.algo.label();
    let mut trace_files = Vec::with_capacity(results.len());
    let mut traces = Vec::with_capacity(results.len());
    for (rep, (trace, ratio)) in results.into_iter().enumerate() {
        let path = config.out_dir.join(format!("{label}_rep{rep:03}.csv"));
        trace.write_csv(&mut BufWriter::new(File::create(&path)?))?;
        if let Some(points) = ratio {
            let ratio_path = config.out_dir.join(format!("{label}_ratio_rep{rep:03}.csv"));
            write_ratio_csv(&points, &mut BufWriter::new(File::create(ratio_path)?))?;
        }
        trace_files.push(path);
        traces.push(trace);
    }

    let refs: Vec<&RegretTrace> = traces.iter().collect();
    let points = per_round_band(&refs);
    let summary_file = config.out_dir.join(format!("{label}_summary.csv"));
    write_summary_csv(label, &points, &mut BufWriter::new(File::create(&summary_file)?))?;

    let (final_mean, half_width) = points
        .last()
        .map(|p| (p.mean_cum_regret, (p.hi95 - p.lo95) / 2.0))
        .unwrap_or((0.0, 0.0));
    Ok(ExperimentSummary {
        algo: label.to_string(),
        points,
        final_mean_cum_regret: final_mean,
        band_half_width: half_width,
        wall_clock: start.elapsed(),
        trace_files,
        summary_file,
    })
}

/// One row of the cross-algorithm comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algo: String,
    pub final_mean_cum_regret: f64,
    pub band_half_width: f64,
    pub wall_clock: Duration,
}

/// Reduce per-algorithm trace collections to comparison-table rows.
pub fn summarize(groups: &[(String, Vec<RegretTrace>, Duration)]) -> Vec<SummaryRow> {
    groups
        .iter()
        .map(|(algo, traces, wall_clock)| {
            let refs: Vec<&RegretTrace> = traces.iter().collect();
            let points = per_round_band(&refs);
            let (final_mean, half_width) = points
                .last()
                .map(|p| (p.mean_cum_regret, (p.hi95 - p.lo95) / 2.0))
                .unwrap_or((0.0, 0.0));
            SummaryRow {
                algo: algo.clone(),
                final_mean_cum_regret: final_mean,
                band_half_width: half_width,
                wall_clock: *wall_clock,
            }
        })
        .collect()
}
