//! The optimism-in-the-face-of-uncertainty linear learner and its shifted
//! variant.
//!
//! A learner keeps the ridge statistics `V = λI + Σ xxᵀ` and `u = Σ y·x`,
//! estimates `θ̂ = V⁻¹u`, and plays the arm maximizing the upper confidence
//! bound
//!
//! ```text
//! UCB(β) = ⟨β, θ̂⟩ + radius·‖β‖_{V⁻¹},
//! radius = noise_scale·√(2·ln(1/δ) + ln det V − d·ln λ) + √λ·norm_bound,
//! ```
//!
//! the standard self-normalized confidence width. `noise_scale` is the noise
//! standard deviation of the rewards fed in — σ for raw rewards, σ/√m when
//! each update carries the mean of m independent rewards (collaborative
//! cluster updates), which shrinks the radius accordingly. `norm_bound` is
//! the assumed bound on ‖θ*‖; the adaptive-norm learner re-estimates it per
//! epoch.
//!
//! The shifted variant learns on corrected rewards `ỹ = y − ⟨x, Γ⟩` for a
//! fixed shift `Γ` — equivalently, it faces the parameter `θ* − Γ`. Its
//! bookkeeping lives here too: for actions `X_t` against batches with
//! θ-optimal contexts `β*_t`,
//!
//! ```text
//! r_true ≤ r_shifted + Σ_t ⟨β*_t − X_t, Γ⟩
//! ```
//!
//! holds for every action sequence, which is what makes learning on shifted
//! rewards sound when the shift is close to θ*.

use thiserror::Error;

use crate::env::ContextBatch;
use crate::linalg::{dot, Cholesky, SpdMatrix};

/// Errors from learner operations.
#[derive(Debug, Error, PartialEq)]
pub enum BanditError {
    /// A decision was requested on an empty context batch.
    #[error("empty context batch")]
    EmptyBatch,
    /// A reward was NaN or infinite.
    #[error("non-finite reward: {0}")]
    NonFiniteReward(f64),
}

/// Configuration of one ridge learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfulParams {
    /// Ridge weight λ > 0.
    pub lambda: f64,
    /// Confidence level δ ∈ (0, 1).
    pub delta: f64,
    /// Noise standard deviation of the rewards fed to `update`.
    pub noise_scale: f64,
    /// Assumed bound on ‖θ*‖.
    pub norm_bound: f64,
}

impl OfulParams {
    /// λ = 1, unit noise, unit norm bound — the defaults everywhere.
    pub fn new(delta: f64) -> Self {
        Self { lambda: 1.0, delta, noise_scale: 1.0, norm_bound: 1.0 }
    }

    pub fn noise_scale(mut self, s: f64) -> Self {
        self.noise_scale = s;
        self
    }

    pub fn norm_bound(mut self, b: f64) -> Self {
        self.norm_bound = b;
        self
    }
}

/// Sufficient statistics of a ridge learner: `v = λI + Σ xxᵀ`, `xty = Σ y·x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeState {
    dim: usize,
    lambda: f64,
    v: SpdMatrix,
    xty: Vec<f64>,
    t: usize,
    noise_scale: f64,
    delta: f64,
    norm_bound: f64,
}

impl RidgeState {
    pub fn new(dim: usize, params: OfulParams) -> Self {
        assert!(dim >= 1, "dim must be positive");
        assert!(params.lambda > 0.0, "lambda must be positive");
        assert!(params.delta > 0.0 && params.delta < 1.0, "delta must be in (0,1)");
        assert!(params.noise_scale >= 0.0 && params.norm_bound >= 0.0);
        Self {
            dim,
            lambda: params.lambda,
            v: SpdMatrix::scaled_identity(dim, params.lambda),
            xty: vec![0.0; dim],
            t: 0,
            noise_scale: params.noise_scale,
            delta: params.delta,
            norm_bound: params.norm_bound,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Rounds observed so far.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The Gram matrix `λI + Σ xxᵀ`.
    pub fn v(&self) -> &SpdMatrix {
        &self.v
    }

    /// Ridge estimate `θ̂ = V⁻¹·Σ y·x`.
    pub fn estimate(&self) -> Vec<f64> {
        self.v.solve(&self.xty).expect("ridge Gram matrix is positive definite")
    }

    fn radius_from(&self, chol: &Cholesky) -> f64 {
        let log_det = chol.log_det();
        let arg = 2.0 * (1.0 / self.delta).ln() + log_det - self.dim as f64 * self.lambda.ln();
        self.noise_scale * arg.max(0.0).sqrt() + self.lambda.sqrt() * self.norm_bound
    }

    /// Current confidence radius.
    pub fn radius(&self) -> f64 {
        self.radius_from(&self.v.cholesky().expect("ridge Gram matrix is positive definite"))
    }

    /// Optimistic arm choice: `argmax_j ⟨β_j, θ̂⟩ + radius·‖β_j‖_{V⁻¹}`, ties
    /// to the lowest index.
    pub fn select_arm(&self, batch: &ContextBatch) -> Result<usize, BanditError> {
        if batch.n_arms() == 0 {
            return Err(BanditError::EmptyBatch);
        }
        let chol = self.v.cholesky().expect("ridge Gram matrix is positive definite");
        let theta = chol.solve(&self.xty);
        let radius = self.radius_from(&chol);
        let mut best = 0;
        let mut best_ucb = f64::NEG_INFINITY;
        for (j, beta) in batch.contexts.iter().enumerate() {
            debug_assert_eq!(beta.len(), self.dim);
            let vinv_beta = chol.solve(beta);
            let width = dot(beta, &vinv_beta).max(0.0).sqrt();
            let ucb = dot(beta, &theta) + radius * width;
            if ucb > best_ucb {
                best_ucb = ucb;
                best = j;
            }
        }
        Ok(best)
    }

    /// Absorb one observation: `v ← v + xxᵀ`, `xty ← xty + y·x`.
    pub fn update(&mut self, context: &[f64], reward: f64) -> Result<(), BanditError> {
        if !reward.is_finite() {
            return Err(BanditError::NonFiniteReward(reward));
        }
        assert_eq!(context.len(), self.dim, "context dim mismatch");
        self.v.rank_one_update(context).expect("dimension already checked");
        for (acc, x) in self.xty.iter_mut().zip(context) {
            *acc += reward * x;
        }
        self.t += 1;
        Ok(())
    }
}

/// A fixed reward shift Γ; the learner that carries one sees `y − ⟨x, Γ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftVector {
    pub gamma: Vec<f64>,
}

/// Corrected reward `ỹ = y − ⟨context, Γ⟩`.
pub fn shifted_reward(y: f64, context: &[f64], shift: &ShiftVector) -> f64 {
    y - dot(context, &shift.gamma)
}

/// Index of the arm maximizing `⟨β, w⟩`, ties to the lowest index.
fn argmax_inner(batch: &ContextBatch, w: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (j, beta) in batch.contexts.iter().enumerate() {
        let val = dot(beta, w);
        if val > best_val {
            best_val = val;
            best = j;
        }
    }
    best
}

/// Decompose the regret of an action sequence against the shift Γ.
///
/// Returns `(r_true, r_shifted, cross_term)` where
/// `r_true = Σ_t max_j ⟨β_j − X_t, θ⟩`,
/// `r_shifted = Σ_t max_j ⟨β_j − X_t, θ − Γ⟩`, and
/// `cross_term = Σ_t ⟨β*_t − X_t, Γ⟩` with `β*_t` the θ-optimal context.
/// The identity `max_j ⟨β_j − X_t, θ−Γ⟩ ≥ ⟨β*_t − X_t, θ−Γ⟩` gives
/// `r_true ≤ r_shifted + cross_term` on every instance.
pub fn shifted_regret_decomposition(
    theta: &[f64],
    gamma: &[f64],
    batches: &[ContextBatch],
    actions: &[usize],
) -> (f64, f64, f64) {
    assert_eq!(batches.len(), actions.len(), "one action per batch");
    let diff: Vec<f64> = theta.iter().zip(gamma).map(|(a, b)| a - b).collect();
    let mut r_true = 0.0;
    let mut r_shifted = 0.0;
    let mut cross = 0.0;
    for (batch, &chosen) in batches.iter().zip(actions) {
        assert!(chosen < batch.n_arms(), "action out of range");
        let x = &batch.contexts[chosen];
        let best = &batch.contexts[argmax_inner(batch, theta)];
        r_true += batch
            .contexts
            .iter()
            .map(|b| dot(b, theta))
            .fold(f64::NEG_INFINITY, f64::max)
            - dot(x, theta);
        r_shifted += batch
            .contexts
            .iter()
            .map(|b| dot(b, &diff))
            .fold(f64::NEG_INFINITY, f64::max)
            - dot(x, &diff);
        cross += dot(best, gamma) - dot(x, gamma);
    }
    (r_true, r_shifted, cross)
}

/// Do θ and Γ rank the same arm on top?
///
/// Guaranteed true whenever all ‖β_j‖ ≤ 2 and every pairwise gap satisfies
/// `|⟨β_i − β_j, θ⟩| ≥ 4·‖θ − Γ‖`.
pub fn argmax_invariant(theta: &[f64], gamma: &[f64], batch: &ContextBatch) -> bool {
    argmax_inner(batch, theta) == argmax_inner(batch, gamma)
}
