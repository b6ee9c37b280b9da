//! Multi-agent stochastic linear bandits: clustered and personalized
//! collaborative learners, reference baselines, and a seeded experiment
//! harness.
//!
//! `N` agents face the same contextual bandit round after round, each with
//! its own unknown preference vector. When preferences coincide in clusters,
//! agents that pool their reward observations learn faster than they could
//! alone; when preferences are merely close, a shared representative can
//! still absorb most of the learning before small per-agent corrections take
//! over. This crate implements both regimes end to end:
//!
//! * [`bandit`] — the optimistic ridge learner (arm selection, confidence
//!   radius, reward shifting) that everything else builds on.
//! * [`clustering`] — cluster-then-collaborate: estimate every agent alone,
//!   cluster the estimates, then learn per cluster on averaged rewards; plus
//!   the phased variant that retunes its own hyper-parameters.
//! * [`alb_norm`] — the adaptive-norm learner with doubling epochs.
//! * [`personalization`] — common representative plus per-agent correction
//!   on shifted rewards.
//! * [`baselines`] — independent learners and uniform random play.
//! * [`env`](mod@env) — synthetic populations, context distributions,
//!   reward noise.
//! * [`trace`], [`offline`], [`experiment`] — regret bookkeeping, replay of
//!   implicit-feedback logs, and the repetition/summary harness.
//!
//! Determinism is a first-class contract: every random draw is addressed by
//! `(master seed, replication, domain, agent, round)` (see [`seeds`]), so
//! runs are bit-reproducible and algorithms can be compared pairwise on
//! identical randomness.

pub mod alb_norm;
pub mod bandit;
pub mod baselines;
pub mod clustering;
pub mod env;
pub mod experiment;
pub mod linalg;
pub mod offline;
pub mod personalization;
pub mod seeds;
pub mod trace;

pub use alb_norm::AlbNorm;
pub use bandit::{OfulParams, RidgeState, ShiftVector};
pub use clustering::{maximal_cluster, CmlbConfig, Partition, SclbConfig};
pub use env::{ContextBatch, ContextMode, Environment, Population, PopulationSpec, SyntheticEnv};
pub use experiment::{Algo, ExperimentConfig, ExperimentSummary, HarnessError, Scenario};
pub use linalg::SpdMatrix;
pub use offline::{OfflineDataset, ReplayEnv};
pub use personalization::{CommonEstimate, PmlbConfig};
pub use seeds::StreamKey;
pub use trace::{PhaseTag, RegretTrace, TraceRow};
