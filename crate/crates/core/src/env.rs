//! Ground-truth populations, per-round decision sets, and noisy rewards.
//!
//! The generative model: agent `i` carries an unknown preference vector
//! `θ*ᵢ` with `‖θ*ᵢ‖ ≤ 1`. In round `t` every agent sees the same batch of
//! `K` contexts `β₁..β_K`; playing arm `j` yields
//!
//! ```text
//! y = ⟨β_j, θ*ᵢ⟩ + ξ,          ξ ~ N(0, σ²) per (agent, round)
//! ```
//!
//! and the instantaneous regret is `max_j ⟨θ*ᵢ, β_j⟩ − ⟨θ*ᵢ, β_chosen⟩`.
//!
//! Context distributions are isotropic enough that the batch covariance is
//! bounded below: `E[ββᵀ] ⪰ ρ_min·I` with `ρ_min = 1/(3d)` for the cube mode
//! (per-coordinate variance of Unif[−1/√d, 1/√d] is (2/√d)²/12 = 1/(3d)) and
//! `ρ_min = 1/(d+2)` for the unit-ball mode (`E[r²]/d` with `E[r²] = d/(d+2)`).
//! That lower bound is what drives the `tau_min` warm-up diagnostic.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::dot;
use crate::seeds::StreamKey;

/// Errors from population construction and diagnostic formulas.
#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    /// The population spec fails validation.
    #[error("invalid population spec: {0}")]
    InvalidSpec(String),
    /// A diagnostic formula was called outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
}

/// How the ground-truth preference vectors are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum PopulationSpec {
    /// `n_clusters` centers drawn uniformly on the unit sphere; cluster `c`
    /// (1-based) receives a share of agents proportional to `c^(−zipf_z)`.
    Clustered { n_agents: usize, dim: usize, n_clusters: usize, zipf_z: f64 },
    /// One unit-norm center `μ`; each agent gets `μ + σ·g` (g standard
    /// normal), radially projected back into the unit ball when outside.
    Personalized { n_agents: usize, dim: usize, sigma: f64 },
    /// Caller-supplied parameter vectors.
    Explicit { thetas: Vec<Vec<f64>> },
}

/// The realized ground truth: one preference vector per agent, plus cluster
/// labels when the population has cluster structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    /// `θ*ᵢ` for each agent, in agent order.
    pub thetas: Vec<Vec<f64>>,
    /// Cluster label per agent (Clustered and Explicit populations only).
    pub labels: Option<Vec<usize>>,
}

impl Population {
    pub fn n_agents(&self) -> usize {
        self.thetas.len()
    }

    pub fn dim(&self) -> usize {
        self.thetas[0].len()
    }
}

/// One round's decision set, shared by every agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextBatch {
    /// Round number, 1-based.
    pub round: usize,
    /// The `K` context vectors `β_{1,t}..β_{K,t}`.
    pub contexts: Vec<Vec<f64>>,
}

impl ContextBatch {
    pub fn n_arms(&self) -> usize {
        self.contexts.len()
    }
}

/// Context distribution for synthetic runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextMode {
    /// Uniform on the unit ball `B^d(1)`.
    UnitBall,
    /// Coordinate-wise uniform on `[−1/√d, 1/√d]`.
    Cube,
}

impl ContextMode {
    /// Closed-form lower bound ρ_min on the context covariance eigenvalues.
    pub fn rho_min(&self, dim: usize) -> f64 {
        match self {
            ContextMode::Cube => 1.0 / (3.0 * dim as f64),
            ContextMode::UnitBall => 1.0 / (dim as f64 + 2.0),
        }
    }
}

/// Zipf cluster sizes: share of cluster `c` (1-based) proportional to
/// `c^(−z)`, rounded by largest remainder, every cluster keeping ≥ 1 agent.
fn zipf_sizes(n_agents: usize, n_clusters: usize, z: f64) -> Vec<usize> {
    let l = n_clusters;
    let weights: Vec<f64> = (1..=l).map(|c| (c as f64).powf(-z)).collect();
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| n_agents as f64 * w / total).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut assigned: usize = sizes.iter().sum();

    // Hand out what rounding left over, largest fractional part first,
    // ties to the lowest cluster index (keeps sizes non-increasing).
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let mut next = 0;
    while assigned < n_agents {
        sizes[order[next % l]] += 1;
        assigned += 1;
        next += 1;
    }

    // Heavily skewed weights can round a tail cluster to zero; refill it from
    // the largest cluster (ties to the highest index, preserving the
    // non-increasing shape).
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let donor = (0..l)
            .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(a.cmp(&b)))
            .expect("at least one cluster");
        sizes[donor] -= 1;
        sizes[empty] += 1;
    }
    sizes
}

/// Standard normal vector of length `dim`.
fn gaussian_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform direction on the unit sphere.
fn unit_sphere(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let g = gaussian_vector(dim, rng);
        let n = crate::linalg::norm(&g);
        if n > 1e-12 {
            return g.iter().map(|x| x / n).collect();
        }
    }
}

/// Materialize a population from its spec, deterministically in `rng`.
pub fn build_population(spec: &PopulationSpec, rng: &mut ChaCha8Rng) -> Result<Population, EnvError> {
    match spec {
        PopulationSpec::Clustered { n_agents, dim, n_clusters, zipf_z } => {
            if *n_agents == 0 || *dim == 0 || *n_clusters == 0 {
                return Err(EnvError::InvalidSpec("agents, dim, clusters must be positive".into()));
            }
            if *n_clusters > *n_agents {
                return Err(EnvError::InvalidSpec(format!(
                    "more clusters ({n_clusters}) than agents ({n_agents})"
                )));
            }
            if *zipf_z < 0.0 {
                return Err(EnvError::InvalidSpec(format!("zipf_z must be ≥ 0, got {zipf_z}")));
            }
            let centers: Vec<Vec<f64>> =
                (0..*n_clusters).map(|_| unit_sphere(*dim, rng)).collect();
            let sizes = zipf_sizes(*n_agents, *n_clusters, *zipf_z);
            let mut thetas = Vec::with_capacity(*n_agents);
            let mut labels = Vec::with_capacity(*n_agents);
            for (c, &size) in sizes.iter().enumerate() {
                for _ in 0..size {
                    thetas.push(centers[c].clone());
                    labels.push(c);
                }
            }
            Ok(Population { thetas, labels: Some(labels) })
        }
        PopulationSpec::Personalized { n_agents, dim, sigma } => {
            if *n_agents == 0 || *dim == 0 {
                return Err(EnvError::InvalidSpec("agents and dim must be positive".into()));
            }
            if *sigma < 0.0 {
                return Err(EnvError::InvalidSpec(format!("sigma must be ≥ 0, got {sigma}")));
            }
            let mu = unit_sphere(*dim, rng);
            let thetas = (0..*n_agents)
                .map(|_| {
                    let g = gaussian_vector(*dim, rng);
                    let mut theta: Vec<f64> =
                        mu.iter().zip(&g).map(|(m, gi)| m + sigma * gi).collect();
                    let n = crate::linalg::norm(&theta);
                    if n > 1.0 {
                        for x in &mut theta {
                            *x /= n;
                        }
                    }
                    theta
                })
                .collect();
            Ok(Population { thetas, labels: None })
        }
        PopulationSpec::Explicit { thetas } => {
            if thetas.is_empty() {
                return Err(EnvError::InvalidSpec("explicit population is empty".into()));
            }
            let dim = thetas[0].len();
            if dim == 0 || thetas.iter().any(|t| t.len() != dim) {
                return Err(EnvError::InvalidSpec("explicit vectors must share a positive dim".into()));
            }
            // Distinct vectors define the cluster structure.
            let mut distinct: Vec<&Vec<f64>> = Vec::new();
            let labels = thetas
                .iter()
                .map(|t| {
                    if let Some(c) = distinct.iter().position(|d| *d == t) {
                        c
                    } else {
                        distinct.push(t);
                        distinct.len() - 1
                    }
                })
                .collect();
            Ok(Population { thetas: thetas.clone(), labels: Some(labels) })
        }
    }
}

/// Draw one round's decision set of `k` contexts.
pub fn sample_contexts(
    mode: ContextMode,
    k: usize,
    dim: usize,
    round: usize,
    rng: &mut ChaCha8Rng,
) -> ContextBatch {
    let contexts = (0..k)
        .map(|_| match mode {
            ContextMode::Cube => {
                let b = 1.0 / (dim as f64).sqrt();
                (0..dim).map(|_| rng.random_range(-b..=b)).collect()
            }
            ContextMode::UnitBall => {
                let dir = unit_sphere(dim, rng);
                let r = rng.random::<f64>().powf(1.0 / dim as f64);
                dir.iter().map(|x| x * r).collect()
            }
        })
        .collect();
    ContextBatch { round, contexts }
}

/// One noisy reward draw: `⟨β, θ⟩ + σ·ξ`.
pub fn reward(theta: &[f64], context: &[f64], noise_sigma: f64, rng: &mut ChaCha8Rng) -> f64 {
    debug_assert_eq!(theta.len(), context.len());
    dot(theta, context) + noise_sigma * rng.sample::<f64, _>(StandardNormal)
}

/// `max_j ⟨θ, β_j⟩ − ⟨θ, β_chosen⟩`; zero iff the chosen arm is optimal.
pub fn instantaneous_regret(theta: &[f64], batch: &ContextBatch, chosen: usize) -> f64 {
    assert!(chosen < batch.n_arms(), "arm {chosen} out of range ({} arms)", batch.n_arms());
    let best = batch
        .contexts
        .iter()
        .map(|b| dot(theta, b))
        .fold(f64::NEG_INFINITY, f64::max);
    best - dot(theta, &batch.contexts[chosen])
}

/// Warm-up threshold `τ_min(δ) = [16/ρ_min² + 8/(3ρ_min)]·ln(2dT/δ)`: the
/// number of exploration rounds after which per-agent Gram matrices are well
/// conditioned with probability 1−δ. Diagnostic only — it gates harness
/// warnings, never execution.
pub fn tau_min(delta: f64, d: usize, horizon: usize, rho_min: f64) -> Result<f64, EnvError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(EnvError::Domain(format!("delta must be in (0,1), got {delta}")));
    }
    if rho_min <= 0.0 {
        return Err(EnvError::Domain(format!("rho_min must be positive, got {rho_min}")));
    }
    if d == 0 || horizon == 0 {
        return Err(EnvError::Domain("d and horizon must be positive".into()));
    }
    let lead = 16.0 / (rho_min * rho_min) + 8.0 / (3.0 * rho_min);
    Ok(lead * (2.0 * d as f64 * horizon as f64 / delta).ln())
}

/// A source of decision sets, rewards, and regret for the algorithm runners.
///
/// Implementations are keyed streams: `batch(t)` returns the same batch every
/// time it is asked for round `t`, and the reward noise for `(agent, t)` is a
/// fixed draw independent of which arm gets played — so two algorithms run
/// against the same environment face literally the same randomness,
/// round for round.
pub trait Environment {
    fn n_agents(&self) -> usize;
    fn dim(&self) -> usize;
    fn n_arms(&self) -> usize;
    /// Replicate index stamped into trace rows produced against this
    /// environment.
    fn rep_index(&self) -> usize {
        0
    }
    /// Noise standard deviation the learners should assume.
    fn noise_scale(&self) -> f64;
    /// The decision set of round `round` (1-based); deterministic per round.
    fn batch(&self, round: usize) -> ContextBatch;
    /// Realized reward for `agent` playing `arm` in `round`.
    fn realized_reward(&self, agent: usize, round: usize, batch: &ContextBatch, arm: usize) -> f64;
    /// Instantaneous regret of `arm` for `agent` against this batch.
    fn regret(&self, agent: usize, batch: &ContextBatch, arm: usize) -> f64;
    /// Generator for algorithm-internal randomness of `(agent, round)`.
    fn policy_rng(&self, agent: usize, round: usize) -> ChaCha8Rng;
}

/// The synthetic simulation environment: a fixed population, i.i.d. context
/// batches shared across agents, and Gaussian reward noise, all served from
/// splittable streams under one `StreamKey`.
#[derive(Debug, Clone)]
pub struct SyntheticEnv {
    population: Population,
    mode: ContextMode,
    n_arms: usize,
    noise_sigma: f64,
    key: StreamKey,
}

impl SyntheticEnv {
    pub fn new(
        population: Population,
        mode: ContextMode,
        n_arms: usize,
        noise_sigma: f64,
        key: StreamKey,
    ) -> Self {
        assert!(n_arms >= 1, "need at least one arm");
        assert!(noise_sigma >= 0.0, "noise sigma must be ≥ 0");
        Self { population, mode, n_arms, noise_sigma, key }
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn context_mode(&self) -> ContextMode {
        self.mode
    }

    /// True parameter of `agent`.
    pub fn theta(&self, agent: usize) -> &[f64] {
        &self.population.thetas[agent]
    }
}

impl Environment for SyntheticEnv {
    fn n_agents(&self) -> usize {
        self.population.n_agents()
    }

    fn dim(&self) -> usize {
        self.population.dim()
    }

    fn n_arms(&self) -> usize {
        self.n_arms
    }

    fn rep_index(&self) -> usize {
        self.key.rep
    }

    fn noise_scale(&self) -> f64 {
        self.noise_sigma
    }

    fn batch(&self, round: usize) -> ContextBatch {
        let mut rng = self.key.contexts(round);
        sample_contexts(self.mode, self.n_arms, self.dim(), round, &mut rng)
    }

    fn realized_reward(&self, agent: usize, round: usize, batch: &ContextBatch, arm: usize) -> f64 {
        let mut rng = self.key.noise(agent, round);
        reward(self.theta(agent), &batch.contexts[arm], self.noise_sigma, &mut rng)
    }

    fn regret(&self, agent: usize, batch: &ContextBatch, arm: usize) -> f64 {
        instantaneous_regret(self.theta(agent), batch, arm)
    }

    fn policy_rng(&self, agent: usize, round: usize) -> ChaCha8Rng {
        self.key.policy(agent, round)
    }
}
