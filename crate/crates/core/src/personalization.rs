//! Personalized collaborative learning.
//!
//! When the agents' preference vectors are close but not equal — say
//! `θᵢ = μ + small deviation` — exact clustering is hopeless, yet most of
//! the signal is still shared. The pipeline here splits the horizon:
//!
//! 1. **Common phase** (`⌈√T⌉` rounds) — one optimistic learner treats the
//!    whole population as a single agent: it picks one arm per round, every
//!    agent plays it, and the learner updates on the mean of the `N`
//!    rewards, whose noise scale is `σ/√N`. Its estimate `θ̂*` is a fast,
//!    crude stand-in for the population mean.
//! 2. **Personal phase** (the remaining rounds) — `θ̂*` is frozen and each
//!    agent runs its own adaptive-norm learner on shifted rewards
//!    `ỹ = y − ⟨β, θ̂*⟩`, i.e. it learns only the correction `θᵢ − θ̂*`.
//!    Because the correction's norm is small, the adaptive norm bound
//!    shrinks the confidence radius far below what a cold-start learner
//!    would need.
//!
//! Regret is always measured against each agent's true `θᵢ` on the raw
//! rewards; the shift is internal to the learners. The quality of the
//! shared representative for agent `i` is `εᵢ = ‖θᵢ − θ̄‖`, the distance to
//! the population mean, reported by [`common_rep_factor`].

use thiserror::Error;

use crate::alb_norm::AlbNorm;
use crate::bandit::{shifted_reward, OfulParams, RidgeState, ShiftVector};
use crate::env::{Environment, Population};
use crate::linalg::dist;
use crate::trace::{PhaseTag, RegretTrace};

/// Errors from personalization configuration.
#[derive(Debug, Error, PartialEq)]
pub enum PersonalizationError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// Configuration of one personalized run.
#[derive(Debug, Clone, PartialEq)]
pub struct PmlbConfig {
    /// Total rounds T ≥ 1.
    pub horizon: usize,
    /// Confidence level δ ∈ (0, 1), used by both phases.
    pub delta: f64,
}

impl PmlbConfig {
    pub fn validate(&self) -> Result<(), PersonalizationError> {
        if self.horizon == 0 {
            return Err(PersonalizationError::InvalidConfig(
                "horizon must be ≥ 1".into(),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(PersonalizationError::InvalidConfig(format!(
                "delta must be in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// The frozen output of the common phase.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonEstimate {
    /// Shared representative θ̂*, the common learner's ridge estimate.
    pub theta_hat: Vec<f64>,
    /// Rounds the common phase consumed.
    pub rounds_used: usize,
}

/// Common-phase length `⌈√T⌉`, capped at `T`.
pub fn common_phase_len(horizon: usize) -> usize {
    ((horizon as f64).sqrt().ceil() as usize).min(horizon)
}

/// Per-agent distance to the population mean, `εᵢ = ‖θᵢ − θ̄‖`.
pub fn common_rep_factor(population: &Population) -> Vec<f64> {
    let n = population.n_agents();
    let d = population.dim();
    let mut mean = vec![0.0; d];
    for theta in &population.thetas {
        for (m, &x) in mean.iter_mut().zip(theta) {
            *m += x / n as f64;
        }
    }
    population.thetas.iter().map(|theta| dist(theta, &mean)).collect()
}

/// Run the two-phase personalized learner over the configured horizon.
pub fn pmlb_run(
    config: &PmlbConfig,
    env: &dyn Environment,
) -> Result<(RegretTrace, CommonEstimate), PersonalizationError> {
    config.validate()?;
    let n = env.n_agents();
    let d = env.dim();
    let rep = env.rep_index();
    let sigma = env.noise_scale();
    let t_common = common_phase_len(config.horizon);
    let mut trace = RegretTrace::new();

    // Common phase: one learner, everyone plays its arm, mean-reward update.
    let avg_scale = sigma / (n as f64).sqrt();
    let mut common =
        RidgeState::new(d, OfulParams::new(config.delta).noise_scale(avg_scale));
    for round in 1..=t_common {
        let batch = env.batch(round);
        let arm = common.select_arm(&batch).expect("non-empty batch");
        let mut mean_y = 0.0;
        for agent in 0..n {
            mean_y += env.realized_reward(agent, round, &batch, arm);
            trace.record(rep, agent, round, PhaseTag::Common, arm, env.regret(agent, &batch, arm));
        }
        common
            .update(&batch.contexts[arm], mean_y / n as f64)
            .expect("finite reward");
    }
    let estimate = CommonEstimate { theta_hat: common.estimate(), rounds_used: t_common };

    // Personal phase: per-agent adaptive-norm learners on shifted rewards.
    if t_common < config.horizon {
        let shift = ShiftVector { gamma: estimate.theta_hat.clone() };
        let personal_horizon = config.horizon - t_common;
        let mut learners: Vec<AlbNorm> = (0..n)
            .map(|_| AlbNorm::with_noise_scale(d, personal_horizon, config.delta, sigma))
            .collect();
        for round in (t_common + 1)..=config.horizon {
            let batch = env.batch(round);
            for (agent, learner) in learners.iter_mut().enumerate() {
                let arm = learner.select_arm(&batch).expect("non-empty batch");
                let y = env.realized_reward(agent, round, &batch, arm);
                let y_shifted = shifted_reward(y, &batch.contexts[arm], &shift);
                learner.update(&batch.contexts[arm], y_shifted).expect("finite reward");
                trace.record(
                    rep,
                    agent,
                    round,
                    PhaseTag::Personal,
                    arm,
                    env.regret(agent, &batch, arm),
                );
            }
        }
    }
    Ok((trace, estimate))
}
