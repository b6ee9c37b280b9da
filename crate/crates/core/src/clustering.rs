//! Cluster-then-collaborate learning.
//!
//! The one-shot algorithm runs three phases over a horizon `T`:
//!
//! 1. **Individual learning** — every agent runs its own optimistic learner
//!    for `T_explore = ⌈C·d·(NT)^{2α}·ln(1/δ)⌉` rounds (capped at `T`).
//! 2. **Clustering** — the `N` parameter estimates are clustered by the
//!    maximal-cluster rule: connect `i ∼ j` iff `‖θ̂ᵢ − θ̂ⱼ‖ ≤ γ`, take
//!    connected components, and collapse every component smaller than `p*·N`
//!    into one leftover block.
//! 3. **Collaborative learning** — each block gets one fresh learner; every
//!    member plays the block's arm, and the learner updates on the mean of
//!    the members' rewards, whose noise scale is `σ/√(block size)` — the
//!    variance reduction that makes collaboration pay.
//!
//! The phased variant re-runs the whole pipeline in dyadically growing
//! phases (lengths 1, 2, 4, … until the horizon is spent), with phase `i`
//! using `γ = 3/(N·2^i)^α`, `δᵢ = δ/2^i`, and `p* = 1/i²` — tightening the
//! clustering threshold as estimates sharpen, so no tuned `γ` is needed.
//!
//! A cluster structure with minimum inter-cluster gap `Δ` is α-separable at
//! scale `(N, T)` when `Δ ≥ 5/(NT)^α`; the diagnostic below flags which
//! clusters a given scale can hope to resolve.

use thiserror::Error;

use crate::bandit::{OfulParams, RidgeState};
use crate::env::Environment;
use crate::linalg::dist;
use crate::trace::{PhaseTag, RegretTrace};

/// Errors from clustering configuration and inputs.
#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("empty estimate list")]
    EmptyEstimates,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// A partition of the agent indices `{0..N-1}` into blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Disjoint, non-empty, covering blocks; members sorted ascending,
    /// blocks ordered by smallest member (collapsed block last).
    pub blocks: Vec<Vec<usize>>,
    /// Index into `blocks` of the block formed by collapsing small
    /// components, when any component fell below the size threshold.
    pub collapsed_block: Option<usize>,
}

impl Partition {
    /// Number of agents covered.
    pub fn n_agents(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }

    /// Block index containing `agent`.
    pub fn block_of(&self, agent: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&agent))
    }
}

/// Configuration of one cluster-then-collaborate run.
#[derive(Debug, Clone, PartialEq)]
pub struct CmlbConfig {
    /// Separability exponent α ∈ (0, ½).
    pub alpha: f64,
    /// Exploration-length constant C > 0.
    pub c_explore: f64,
    /// Confidence level δ ∈ (0, 1).
    pub delta: f64,
    /// Clustering threshold γ ≥ 0.
    pub gamma: f64,
    /// Minimum relative cluster size p* ∈ [0, 1].
    pub p_star: f64,
    /// Total rounds T ≥ 1.
    pub horizon: usize,
}

impl CmlbConfig {
    pub fn validate(&self) -> Result<(), ClusterError> {
        let err = |msg: String| Err(ClusterError::InvalidConfig(msg));
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return err(format!("alpha must be in (0, 1/2), got {}", self.alpha));
        }
        if !(self.c_explore > 0.0) {
            return err(format!("c_explore must be positive, got {}", self.c_explore));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return err(format!("delta must be in (0, 1), got {}", self.delta));
        }
        if !(self.gamma >= 0.0) {
            return err(format!("gamma must be ≥ 0, got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.p_star) {
            return err(format!("p_star must be in [0, 1], got {}", self.p_star));
        }
        if self.horizon == 0 {
            return err("horizon must be ≥ 1".into());
        }
        Ok(())
    }
}

/// Configuration of the phased variant.
#[derive(Debug, Clone, PartialEq)]
pub struct SclbConfig {
    /// Separability exponent α ∈ (0, ½).
    pub alpha: f64,
    /// Exploration-length constant C > 0.
    pub c_explore: f64,
    /// Base confidence level δ ∈ (0, 1).
    pub delta: f64,
    /// Total rounds T ≥ 1.
    pub horizon: usize,
}

impl SclbConfig {
    pub fn validate(&self) -> Result<(), ClusterError> {
        CmlbConfig {
            alpha: self.alpha,
            c_explore: self.c_explore,
            delta: self.delta,
            gamma: 0.0,
            p_star: 0.0,
            horizon: self.horizon,
        }
        .validate()
    }
}

/// Cluster estimates by thresholded connectivity with small-component
/// collapse: edge `i ∼ j` iff `‖θ̂ᵢ − θ̂ⱼ‖ ≤ γ`; components of size
/// `< p*·N` merge into one block.
pub fn maximal_cluster(
    estimates: &[Vec<f64>],
    gamma: f64,
    p_star: f64,
) -> Result<Partition, ClusterError> {
    let n = estimates.len();
    if n == 0 {
        return Err(ClusterError::EmptyEstimates);
    }
    // Connected components via union–find.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if dist(&estimates[i], &estimates[j]) <= gamma {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj] = ri;
                }
            }
        }
    }
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut root_to_comp: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        match root_to_comp[root] {
            Some(c) => components[c].push(i),
            None => {
                root_to_comp[root] = Some(components.len());
                components.push(vec![i]);
            }
        }
    }
    components.sort_by_key(|c| c[0]);

    // Collapse small components into one leftover block.
    let threshold = p_star * n as f64;
    let mut blocks = Vec::new();
    let mut collapsed: Vec<usize> = Vec::new();
    for comp in components {
        if (comp.len() as f64) < threshold {
            collapsed.extend(comp);
        } else {
            blocks.push(comp);
        }
    }
    let collapsed_block = if collapsed.is_empty() {
        None
    } else {
        collapsed.sort_unstable();
        blocks.push(collapsed);
        Some(blocks.len() - 1)
    };
    Ok(Partition { blocks, collapsed_block })
}

/// Individual-learning length `⌈C·d·(NT)^{2α}·ln(1/δ)⌉`, capped at `T`.
pub fn cmlb_explore_len(config: &CmlbConfig, n_agents: usize, dim: usize) -> usize {
    let nt = n_agents as f64 * config.horizon as f64;
    let raw = config.c_explore
        * dim as f64
        * nt.powf(2.0 * config.alpha)
        * (1.0 / config.delta).ln();
    (raw.ceil() as usize).min(config.horizon)
}

/// One cluster-then-collaborate pass starting after global round `offset`,
/// appending to `trace` with the given phase tags.
fn cmlb_phase(
    config: &CmlbConfig,
    env: &dyn Environment,
    offset: usize,
    explore_tag: PhaseTag,
    collab_tag: PhaseTag,
    trace: &mut RegretTrace,
) -> Partition {
    let n = env.n_agents();
    let d = env.dim();
    let rep = env.rep_index();
    let sigma = env.noise_scale();
    let t_explore = cmlb_explore_len(config, n, d);

    // Phase 1: every agent learns alone.
    let mut learners: Vec<RidgeState> = (0..n)
        .map(|_| RidgeState::new(d, OfulParams::new(config.delta).noise_scale(sigma)))
        .collect();
    for local in 1..=t_explore {
        let round = offset + local;
        let batch = env.batch(round);
        for (agent, learner) in learners.iter_mut().enumerate() {
            let arm = learner.select_arm(&batch).expect("non-empty batch");
            let y = env.realized_reward(agent, round, &batch, arm);
            learner.update(&batch.contexts[arm], y).expect("finite reward");
            trace.record(rep, agent, round, explore_tag, arm, env.regret(agent, &batch, arm));
        }
    }

    // Phase 2: cluster the estimates.
    let estimates: Vec<Vec<f64>> = learners.iter().map(|l| l.estimate()).collect();
    let partition =
        maximal_cluster(&estimates, config.gamma, config.p_star).expect("n ≥ 1 agents");

    // Phase 3: one learner per block on averaged rewards.
    let mut block_learners: Vec<RidgeState> = partition
        .blocks
        .iter()
        .map(|members| {
            let scale = sigma / (members.len() as f64).sqrt();
            RidgeState::new(d, OfulParams::new(config.delta).noise_scale(scale))
        })
        .collect();
    for local in (t_explore + 1)..=config.horizon {
        let round = offset + local;
        let batch = env.batch(round);
        for (learner, members) in block_learners.iter_mut().zip(&partition.blocks) {
            let arm = learner.select_arm(&batch).expect("non-empty batch");
            let mut mean_y = 0.0;
            for &agent in members {
                mean_y += env.realized_reward(agent, round, &batch, arm);
                trace.record(rep, agent, round, collab_tag, arm, env.regret(agent, &batch, arm));
            }
            learner
                .update(&batch.contexts[arm], mean_y / members.len() as f64)
                .expect("finite reward");
        }
    }
    partition
}

/// Run cluster-then-collaborate over the configured horizon.
pub fn cmlb_run(
    config: &CmlbConfig,
    env: &dyn Environment,
) -> Result<(RegretTrace, Partition), ClusterError> {
    config.validate()?;
    let mut trace = RegretTrace::new();
    let partition =
        cmlb_phase(config, env, 0, PhaseTag::Explore, PhaseTag::Collab, &mut trace);
    Ok((trace, partition))
}

/// One phase of the phased variant's schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SclbPhase {
    /// Phase index i ≥ 1.
    pub index: usize,
    /// Rounds played in this phase: `min(2^{i−1}, remaining)`.
    pub len: usize,
    /// Clustering threshold `3/(N·2^i)^α`.
    pub gamma: f64,
    /// Confidence level `δ/2^i`.
    pub delta: f64,
    /// Size threshold `1/i²`.
    pub p_star: f64,
}

/// The dyadic phase schedule: lengths 1, 2, 4, … truncated to sum to the
/// horizon, with per-phase clustering parameters.
pub fn sclb_phase_schedule(config: &SclbConfig, n_agents: usize) -> Vec<SclbPhase> {
    let mut phases = Vec::new();
    let mut remaining = config.horizon;
    let mut i = 1usize;
    while remaining > 0 {
        let nominal = 1usize.checked_shl(i as u32 - 1).unwrap_or(usize::MAX);
        let len = nominal.min(remaining);
        let pow2_i = 2f64.powi(i as i32);
        phases.push(SclbPhase {
            index: i,
            len,
            gamma: 3.0 / (n_agents as f64 * pow2_i).powf(config.alpha),
            delta: config.delta / pow2_i,
            p_star: 1.0 / (i as f64 * i as f64),
        });
        remaining -= len;
        i += 1;
    }
    phases
}

/// Run the phased variant: a fresh cluster-then-collaborate pass per phase,
/// traces concatenated under global round numbers.
pub fn sclb_run(config: &SclbConfig, env: &dyn Environment) -> Result<RegretTrace, ClusterError> {
    config.validate()?;
    let mut trace = RegretTrace::new();
    let mut offset = 0usize;
    for phase in sclb_phase_schedule(config, env.n_agents()) {
        let phase_cfg = CmlbConfig {
            alpha: config.alpha,
            c_explore: config.c_explore,
            delta: phase.delta,
            gamma: phase.gamma,
            p_star: phase.p_star,
            horizon: phase.len,
        };
        cmlb_phase(
            &phase_cfg,
            env,
            offset,
            PhaseTag::PhaseExplore(phase.index),
            PhaseTag::PhaseCollab(phase.index),
            &mut trace,
        );
        offset += phase.len;
    }
    Ok(trace)
}

/// Flag, per cluster, whether its minimum gap `Δᵢ` clears the separability
/// threshold `5/(NT)^α` (inclusive).
pub fn separability(deltas: &[f64], n: usize, t: usize, alpha: f64) -> Vec<bool> {
    let threshold = 5.0 / (n as f64 * t as f64).powf(alpha);
    deltas.iter().map(|&d| d >= threshold).collect()
}
