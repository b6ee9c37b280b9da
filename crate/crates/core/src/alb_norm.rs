//! Adaptive-norm linear bandit: doubling epochs of the optimistic learner
//! with the norm bound re-estimated at every epoch boundary.
//!
//! Epoch 1 lasts `T₁ = ⌈√T⌉` rounds and assumes `b₁ = 1`. When epoch `i`
//! ends, the learner extracts from its confidence ellipsoid a safe upper
//! bound on ‖θ*‖,
//!
//! ```text
//! b_{i+1} = ‖θ̂‖ + radius / √(min eigenvalue of V),
//! ```
//!
//! (the ellipsoid `{θ : ‖θ − θ̂‖_V ≤ radius}` fits inside the Euclidean ball
//! of that radius around θ̂), then doubles the epoch length, halves δ, and
//! restarts a fresh inner learner with the refined bound. Regret then scales
//! with the true ‖θ*‖ rather than the worst case over the unit ball: small
//! parameters earn smaller confidence widths from epoch 2 on.
//!
//! Pure-exploration bias estimation is deliberately absent — the learner is
//! bias-free, so epochs consist solely of optimistic play.

use crate::bandit::{BanditError, OfulParams, RidgeState};
use crate::env::ContextBatch;
use crate::linalg::norm;

/// Safe upper bound on ‖θ*‖ read off a learner's confidence ellipsoid.
pub fn norm_upper_bound(state: &RidgeState) -> f64 {
    let theta_hat = state.estimate();
    norm(&theta_hat) + state.radius() / state.v().min_eigenvalue().sqrt()
}

/// The adaptive-norm learner: epoch schedule plus the inner ridge learner.
#[derive(Debug, Clone)]
pub struct AlbNorm {
    epoch: usize,
    b: f64,
    epoch_len: usize,
    rounds_in_epoch: usize,
    delta: f64,
    noise_scale: f64,
    dim: usize,
    inner: RidgeState,
}

impl AlbNorm {
    /// Fresh learner: epoch 1 of length ⌈√horizon⌉, norm estimate b₁ = 1.
    pub fn new(dim: usize, horizon: usize, delta1: f64) -> Self {
        Self::with_noise_scale(dim, horizon, delta1, 1.0)
    }

    /// As `new`, with the reward noise scale the inner learner assumes.
    pub fn with_noise_scale(dim: usize, horizon: usize, delta1: f64, noise_scale: f64) -> Self {
        assert!(horizon >= 1, "horizon must be positive");
        let epoch_len = (horizon as f64).sqrt().ceil() as usize;
        let b = 1.0;
        Self {
            epoch: 1,
            b,
            epoch_len,
            rounds_in_epoch: 0,
            delta: delta1,
            noise_scale,
            dim,
            inner: RidgeState::new(
                dim,
                OfulParams::new(delta1).noise_scale(noise_scale).norm_bound(b),
            ),
        }
    }

    /// Current epoch index i ≥ 1.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Current norm estimate bᵢ.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Current epoch length Tᵢ.
    pub fn epoch_len(&self) -> usize {
        self.epoch_len
    }

    /// Current confidence level δᵢ.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The inner ridge learner of the running epoch.
    pub fn inner(&self) -> &RidgeState {
        &self.inner
    }

    /// Optimistic arm choice of the current epoch's learner.
    pub fn select_arm(&self, batch: &ContextBatch) -> Result<usize, BanditError> {
        self.inner.select_arm(batch)
    }

    /// Absorb one observation; closes the epoch when its rounds are spent.
    pub fn update(&mut self, context: &[f64], reward: f64) -> Result<(), BanditError> {
        self.inner.update(context, reward)?;
        self.rounds_in_epoch += 1;
        if self.rounds_in_epoch == self.epoch_len {
            self.epoch_boundary();
        }
        Ok(())
    }

    /// Close the current epoch: refine b, double the length, halve δ, and
    /// restart the inner learner.
    pub fn epoch_boundary(&mut self) {
        self.b = norm_upper_bound(&self.inner);
        self.epoch += 1;
        self.epoch_len *= 2;
        self.delta /= 2.0;
        self.rounds_in_epoch = 0;
        self.inner = RidgeState::new(
            self.dim,
            OfulParams::new(self.delta).noise_scale(self.noise_scale).norm_bound(self.b),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(contexts: Vec<Vec<f64>>) -> ContextBatch {
        ContextBatch { round: 1, contexts }
    }

    #[test]
    fn init_epoch_lengths() {
        assert_eq!(AlbNorm::new(2, 100, 0.4).epoch_len(), 10);
        assert_eq!(AlbNorm::new(2, 1, 0.4).epoch_len(), 1);
        assert_eq!(AlbNorm::new(2, 50, 0.4).epoch_len(), 8);
        let a = AlbNorm::new(2, 100, 0.4);
        assert_eq!(a.epoch(), 1);
        assert_eq!(a.b(), 1.0);
        assert_eq!(a.delta(), 0.4);
    }

    #[test]
    fn first_epoch_matches_plain_learner() {
        let alb = AlbNorm::new(2, 100, 0.1);
        let plain = RidgeState::new(2, OfulParams::new(0.1));
        let b = batch(vec![vec![0.9, 0.0], vec![0.1, 0.0], vec![0.3, 0.8]]);
        assert_eq!(alb.select_arm(&b).unwrap(), plain.select_arm(&b).unwrap());
    }

    #[test]
    fn single_arm_batch() {
        let alb = AlbNorm::new(2, 9, 0.1);
        assert_eq!(alb.select_arm(&batch(vec![vec![0.1, 0.1]])).unwrap(), 0);
    }

    #[test]
    fn norm_bound_formula_hand_cases() {
        // Radius 0 (no noise, no prior norm): bound collapses to ‖θ̂‖.
        let mut s = RidgeState::new(2, OfulParams::new(0.1).noise_scale(0.0).norm_bound(0.0));
        s.update(&[1.0, 0.0], 2.0).unwrap();
        assert_eq!(s.radius(), 0.0);
        let est = s.estimate();
        assert!((norm_upper_bound(&s) - norm(&est)).abs() < 1e-12);

        // Fresh state: θ̂ = 0 and V = λI, so the bound is radius/√λ.
        let s = RidgeState::new(3, OfulParams::new(0.1));
        assert!((norm_upper_bound(&s) - s.radius()).abs() < 1e-12);
    }

    #[test]
    fn norm_bound_dominates_estimate() {
        let mut s = RidgeState::new(2, OfulParams::new(0.3));
        for i in 0..20 {
            s.update(&[0.3, 0.1 * (i % 3) as f64], 0.5).unwrap();
        }
        assert!(norm_upper_bound(&s) >= norm(&s.estimate()));
    }

    #[test]
    fn epoch_schedule_doubles_and_halves() {
        let mut a = AlbNorm::new(2, 100, 0.4);
        let b = batch(vec![vec![0.5, 0.0], vec![0.0, 0.5]]);
        for round in 0..30 {
            let arm = a.select_arm(&b).unwrap();
            a.update(&b.contexts[arm], 0.1).unwrap();
            // Boundaries fall after rounds 10 and 30 (10 + 20).
            match round + 1 {
                r if r < 10 => assert_eq!((a.epoch(), a.epoch_len()), (1, 10)),
                r if r < 30 => assert_eq!((a.epoch(), a.epoch_len()), (2, 20)),
                _ => assert_eq!((a.epoch(), a.epoch_len()), (3, 40)),
            }
        }
        assert_eq!(a.delta(), 0.1);
        // The inner learner restarted at the last boundary.
        assert_eq!(a.inner().t(), 0);
        assert_eq!(a.inner().delta(), 0.1);
    }

    #[test]
    fn boundary_refines_b_and_resets_inner() {
        let mut a = AlbNorm::new(2, 100, 0.4);
        let b = batch(vec![vec![0.5, 0.0], vec![0.0, 0.5]]);
        for _ in 0..9 {
            let arm = a.select_arm(&b).unwrap();
            a.update(&b.contexts[arm], 0.05).unwrap();
        }
        // The boundary reads the inner state after the epoch's final update.
        let arm = a.select_arm(&b).unwrap();
        let mut probe = a.inner().clone();
        probe.update(&b.contexts[arm], 0.05).unwrap();
        let expected_b = norm_upper_bound(&probe);
        a.update(&b.contexts[arm], 0.05).unwrap();
        assert_eq!(a.epoch(), 2);
        assert_eq!(a.b(), expected_b);
        assert_eq!(a.inner().t(), 0);
    }

    #[test]
    fn schedule_after_k_boundaries() {
        let mut a = AlbNorm::new(3, 49, 0.8);
        let t1 = a.epoch_len();
        assert_eq!(t1, 7);
        for k in 1..=4 {
            a.epoch_boundary();
            assert_eq!(a.epoch_len(), t1 << k);
            assert_eq!(a.delta(), 0.8 / (1 << k) as f64);
            assert_eq!(a.epoch(), k + 1);
        }
    }

    #[test]
    fn equal_width_arms_ignore_norm_estimate() {
        // When all arms share one ellipsoid width, the radius term (and so
        // the norm estimate b) shifts every UCB equally: ranking is by
        // estimate alone, whatever b is.
        let arms = batch(vec![vec![0.6, 0.0], vec![0.0, 0.6]]);
        for bound in [0.1, 1.0, 10.0] {
            let mut s = RidgeState::new(2, OfulParams::new(0.1).norm_bound(bound));
            s.update(&[1.0, 0.0], 1.0).unwrap();
            s.update(&[0.0, 1.0], 0.0).unwrap();
            assert_eq!(s.select_arm(&arms).unwrap(), 0);
        }
    }
}
