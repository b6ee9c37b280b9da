//! Reference baselines.
//!
//! Two ends of the spectrum every collaborative learner is judged against:
//! fully independent optimistic learners (no sharing, the strongest honest
//! single-agent baseline) and uniform random play (the floor any learning
//! at all must beat). Both run against the same keyed environment streams
//! as the collaborative algorithms, so comparisons are paired round for
//! round.

use rand::Rng;

use crate::bandit::{OfulParams, RidgeState};
use crate::env::Environment;
use crate::trace::{PhaseTag, RegretTrace};

/// Every agent runs its own optimistic ridge learner for the whole horizon.
pub fn independent_oful_run(horizon: usize, delta: f64, env: &dyn Environment) -> RegretTrace {
    assert!(horizon >= 1, "horizon must be ≥ 1");
    assert!(delta > 0.0 && delta < 1.0, "delta must be in (0, 1)");
    let n = env.n_agents();
    let rep = env.rep_index();
    let sigma = env.noise_scale();
    let mut learners: Vec<RidgeState> = (0..n)
        .map(|_| RidgeState::new(env.dim(), OfulParams::new(delta).noise_scale(sigma)))
        .collect();
    let mut trace = RegretTrace::new();
    for round in 1..=horizon {
        let batch = env.batch(round);
        for (agent, learner) in learners.iter_mut().enumerate() {
            let arm = learner.select_arm(&batch).expect("non-empty batch");
            let y = env.realized_reward(agent, round, &batch, arm);
            learner.update(&batch.contexts[arm], y).expect("finite reward");
            trace.record(
                rep,
                agent,
                round,
                PhaseTag::Independent,
                arm,
                env.regret(agent, &batch, arm),
            );
        }
    }
    trace
}

/// Every agent plays a uniformly random arm each round.
pub fn uniform_random_run(horizon: usize, env: &dyn Environment) -> RegretTrace {
    assert!(horizon >= 1, "horizon must be ≥ 1");
    let n = env.n_agents();
    let rep = env.rep_index();
    let mut trace = RegretTrace::new();
    for round in 1..=horizon {
        let batch = env.batch(round);
        for agent in 0..n {
            let arm = env.policy_rng(agent, round).random_range(0..batch.n_arms());
            trace.record(
                rep,
                agent,
                round,
                PhaseTag::Random,
                arm,
                env.regret(agent, &batch, arm),
            );
        }
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_population, ContextMode, PopulationSpec, SyntheticEnv};
    use crate::seeds::StreamKey;

    fn env_for(thetas: Vec<Vec<f64>>, n_arms: usize, sigma: f64, master: u64) -> SyntheticEnv {
        let key = StreamKey::new(master, 0);
        let pop =
            build_population(&PopulationSpec::Explicit { thetas }, &mut key.population()).unwrap();
        SyntheticEnv::new(pop, ContextMode::Cube, n_arms, sigma, key)
    }

    #[test]
    fn single_agent_matches_plain_learner() {
        let env = env_for(vec![vec![0.7, 0.2]], 4, 0.5, 60);
        let trace = independent_oful_run(30, 0.3, &env);

        let mut learner = RidgeState::new(2, OfulParams::new(0.3).noise_scale(0.5));
        for round in 1..=30 {
            let batch = env.batch(round);
            let arm = learner.select_arm(&batch).unwrap();
            let row = &trace.rows()[round - 1];
            assert_eq!(row.arm, arm);
            assert_eq!(row.inst_regret, env.regret(0, &batch, arm));
            learner
                .update(&batch.contexts[arm], env.realized_reward(0, round, &batch, arm))
                .unwrap();
        }
    }

    #[test]
    fn agents_do_not_interact() {
        // Agent 0's whole trajectory is unchanged by adding more agents.
        let theta0 = vec![0.6, -0.3];
        let solo = env_for(vec![theta0.clone()], 5, 0.4, 61);
        let crowd = env_for(
            vec![theta0, vec![0.1, 0.9], vec![-0.5, 0.5]],
            5,
            0.4,
            61,
        );
        let a = independent_oful_run(40, 0.3, &solo);
        let b = independent_oful_run(40, 0.3, &crowd);
        let solo_rows: Vec<_> =
            a.rows().iter().map(|r| (r.round, r.arm, r.inst_regret)).collect();
        let crowd_rows: Vec<_> = b
            .rows()
            .iter()
            .filter(|r| r.agent == 0)
            .map(|r| (r.round, r.arm, r.inst_regret))
            .collect();
        assert_eq!(solo_rows, crowd_rows);
    }

    #[test]
    fn noiseless_two_arm_hand_simulation() {
        // d = 1 intuition carried to d = 2: with zero noise and zero norm
        // bound the learner is greedy after one exploratory step; regret on
        // the second-best arm equals the gap.
        let env = env_for(vec![vec![1.0, 0.0]], 2, 0.0, 62);
        let trace = independent_oful_run(10, 0.3, &env);
        for row in trace.rows() {
            let batch = env.batch(row.round);
            let regret = env.regret(0, &batch, row.arm);
            assert!(regret >= 0.0);
            assert_eq!(row.inst_regret, regret);
        }
        // Cumulative regret column is consistent.
        let mut cum = 0.0;
        for row in trace.rows() {
            cum += row.inst_regret;
            assert!((row.cum_regret - cum).abs() < 1e-12);
        }
    }

    #[test]
    fn random_play_is_uniform() {
        // χ² over K = 5 arms with 10⁴ draws: compare against the 99th
        // percentile of χ²₄ ≈ 13.28.
        let env = env_for(vec![vec![0.5, 0.5]], 5, 1.0, 63);
        let trace = uniform_random_run(10_000, &env);
        let mut counts = [0usize; 5];
        for row in trace.rows() {
            counts[row.arm] += 1;
        }
        let expected = 10_000.0 / 5.0;
        let chi2: f64 =
            counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 13.28, "χ² = {chi2}, counts {counts:?}");
    }

    #[test]
    fn random_regret_grows_linearly() {
        let env = env_for(vec![vec![0.8, 0.1, 0.4]], 6, 1.0, 64);
        let t = 5000usize;
        let trace = uniform_random_run(2 * t, &env);
        let cum_at = |round: usize| {
            trace
                .rows()
                .iter()
                .filter(|r| r.round <= round)
                .map(|r| r.inst_regret)
                .sum::<f64>()
        };
        let ratio = cum_at(2 * t) / cum_at(t);
        assert!(
            (1.8..=2.2).contains(&ratio),
            "cum(2T)/cum(T) = {ratio}, want ≈ 2"
        );
    }

    #[test]
    fn single_arm_has_zero_regret() {
        let env = env_for(vec![vec![0.9, 0.0]], 1, 1.0, 65);
        let trace = uniform_random_run(50, &env);
        assert!(trace.rows().iter().all(|r| r.arm == 0 && r.inst_regret == 0.0));
    }

    #[test]
    fn runs_are_deterministic() {
        let mk = || env_for(vec![vec![0.3, 0.6], vec![0.6, 0.3]], 4, 0.7, 66);
        let a = uniform_random_run(100, &mk());
        let b = uniform_random_run(100, &mk());
        assert_eq!(a.rows().len(), b.rows().len());
        for (x, y) in a.rows().iter().zip(b.rows()) {
            assert_eq!(x.arm, y.arm);
            assert_eq!(x.inst_regret, y.inst_regret);
        }
        let c = independent_oful_run(100, 0.3, &mk());
        let d = independent_oful_run(100, 0.3, &mk());
        for (x, y) in c.rows().iter().zip(d.rows()) {
            assert_eq!(x.arm, y.arm);
            assert_eq!(x.inst_regret, y.inst_regret);
        }
    }
}
