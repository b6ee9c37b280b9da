//! Offline replay of implicit-feedback logs.
//!
//! Real interaction logs carry no counterfactual rewards, so algorithms are
//! evaluated by replay: each round a candidate set of `K` items is sampled
//! uniformly without replacement and shown to every user; a user's reward
//! is 1 if the chosen item is one of their positives and 0 otherwise, and
//! their regret is the best achievable reward in the candidate set minus
//! the obtained one. Because absolute regret depends on how dense each
//! user's positives are, the reported metric is the running ratio of the
//! algorithm's cumulative regret to that of a uniform-random recommender on
//! the *same* candidate sequence — a self-normalizing score where 1.0 means
//! "no better than random" and lower is better.
//!
//! Dataset files are plain CSV without headers: items as `id,f1,…,fd` and
//! interactions as `user,item` (extra columns beyond the first two are
//! ignored). Users and items are indexed in sorted-id order so that replay
//! is independent of file row order.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::env::{ContextBatch, Environment};
use crate::seeds::StreamKey;
use crate::trace::RegretTrace;

/// Errors from dataset loading and replay setup.
#[derive(Debug, Error)]
pub enum OfflineError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("interaction at line {line} references unknown item {item:?}")]
    MissingItem { item: String, line: usize },
    #[error("invalid replay setup: {0}")]
    InvalidSpec(String),
}

/// An implicit-feedback dataset: item embeddings plus per-user positives.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineDataset {
    item_ids: Vec<String>,
    embeddings: Vec<Vec<f64>>,
    user_ids: Vec<String>,
    positives: Vec<BTreeSet<usize>>,
    dim: usize,
}

impl OfflineDataset {
    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn item_id(&self, item: usize) -> &str {
        &self.item_ids[item]
    }

    pub fn user_id(&self, user: usize) -> &str {
        &self.user_ids[user]
    }

    pub fn embedding(&self, item: usize) -> &[f64] {
        &self.embeddings[item]
    }

    /// Whether `item` is a positive for `user` (both by index).
    pub fn is_positive(&self, user: usize, item: usize) -> bool {
        self.positives[user].contains(&item)
    }

    pub fn positives(&self, user: usize) -> &BTreeSet<usize> {
        &self.positives[user]
    }
}

/// Load a dataset from an items file (`id,f1,…,fd` rows) and an
/// interactions file (`user,item` rows; further columns ignored).
pub fn load_offline(
    items_path: &Path,
    interactions_path: &Path,
) -> Result<OfflineDataset, OfflineError> {
    // Items: collect into a sorted map so ids get stable indices.
    let mut by_id: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in BufReader::new(File::open(items_path)?).lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id = fields.next().unwrap().trim().to_string();
        if id.is_empty() {
            return Err(OfflineError::Parse { line: lineno, msg: "empty item id".into() });
        }
        let embedding: Vec<f64> = fields
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| OfflineError::Parse {
                    line: lineno,
                    msg: format!("bad embedding value {:?}: {e}", f.trim()),
                })
            })
            .collect::<Result<_, _>>()?;
        if embedding.is_empty() {
            return Err(OfflineError::Parse {
                line: lineno,
                msg: format!("item {id:?} has no embedding values"),
            });
        }
        if embedding.iter().any(|x| !x.is_finite()) {
            return Err(OfflineError::Parse {
                line: lineno,
                msg: format!("item {id:?} has a non-finite embedding value"),
            });
        }
        match dim {
            None => dim = Some(embedding.len()),
            Some(d) if d != embedding.len() => {
                return Err(OfflineError::Parse {
                    line: lineno,
                    msg: format!(
                        "item {id:?} has {} embedding values, expected {d}",
                        embedding.len()
                    ),
                });
            }
            _ => {}
        }
        if by_id.insert(id.clone(), embedding).is_some() {
            return Err(OfflineError::Parse {
                line: lineno,
                msg: format!("duplicate item id {id:?}"),
            });
        }
    }
    let dim = dim.ok_or(OfflineError::Parse { line: 0, msg: "items file is empty".into() })?;
    let item_ids: Vec<String> = by_id.keys().cloned().collect();
    let embeddings: Vec<Vec<f64>> = by_id.values().cloned().collect();
    let item_index: BTreeMap<&str, usize> =
        item_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();

    // Interactions: user id, item id; anything after the second column ignored.
    let mut user_positives: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for (lineno, line) in BufReader::new(File::open(interactions_path)?).lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let user = fields.next().unwrap().trim().to_string();
        let item = fields
            .next()
            .ok_or(OfflineError::Parse {
                line: lineno,
                msg: "interaction row needs user and item columns".into(),
            })?
            .trim()
            .to_string();
        if user.is_empty() || item.is_empty() {
            return Err(OfflineError::Parse {
                line: lineno,
                msg: "empty user or item id".into(),
            });
        }
        let &idx = item_index
            .get(item.as_str())
            .ok_or(OfflineError::MissingItem { item: item.clone(), line: lineno })?;
        user_positives.entry(user).or_default().insert(idx);
    }
    let user_ids: Vec<String> = user_positives.keys().cloned().collect();
    let positives: Vec<BTreeSet<usize>> = user_positives.into_values().collect();

    Ok(OfflineDataset { item_ids, embeddings, user_ids, positives, dim })
}

/// Replay environment: keyed candidate sampling over a fixed item catalog,
/// click rewards, best-achievable-click regret.
#[derive(Debug, Clone)]
pub struct ReplayEnv {
    dataset: Arc<OfflineDataset>,
    n_arms: usize,
    noise_sigma: f64,
    key: StreamKey,
    baseline_policy: bool,
}

impl ReplayEnv {
    pub fn new(
        dataset: Arc<OfflineDataset>,
        n_arms: usize,
        noise_sigma: f64,
        key: StreamKey,
    ) -> Result<Self, OfflineError> {
        if dataset.n_users() == 0 {
            return Err(OfflineError::InvalidSpec("dataset has no users".into()));
        }
        if n_arms == 0 || n_arms > dataset.n_items() {
            return Err(OfflineError::InvalidSpec(format!(
                "candidate size {} must be in 1..={} (number of items)",
                n_arms,
                dataset.n_items()
            )));
        }
        if !(noise_sigma >= 0.0) {
            return Err(OfflineError::InvalidSpec(format!(
                "noise sigma must be ≥ 0, got {noise_sigma}"
            )));
        }
        Ok(Self { dataset, n_arms, noise_sigma, key, baseline_policy: false })
    }

    /// A twin of this environment whose policy stream is the disjoint
    /// baseline domain — the normalizing random run uses it so that an
    /// algorithm that happens to also randomize never plays lock-step with
    /// its own denominator.
    pub fn baseline_twin(&self) -> Self {
        Self { baseline_policy: true, ..self.clone() }
    }

    pub fn dataset(&self) -> &OfflineDataset {
        &self.dataset
    }

    /// The item indices offered in `round`, sampled uniformly without
    /// replacement; deterministic per round.
    pub fn candidate_items(&self, round: usize) -> Vec<usize> {
        let mut rng = self.key.contexts(round);
        let n = self.dataset.n_items();
        let mut pool: Vec<usize> = (0..n).collect();
        for slot in 0..self.n_arms {
            let pick = rng.random_range(slot..n);
            pool.swap(slot, pick);
        }
        pool.truncate(self.n_arms);
        pool
    }
}

impl Environment for ReplayEnv {
    fn n_agents(&self) -> usize {
        self.dataset.n_users()
    }

    fn dim(&self) -> usize {
        self.dataset.dim()
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
        let contexts = self
            .candidate_items(round)
            .into_iter()
            .map(|item| self.dataset.embedding(item).to_vec())
            .collect();
        ContextBatch { round, contexts }
    }

    fn realized_reward(&self, agent: usize, round: usize, _batch: &ContextBatch, arm: usize) -> f64 {
        let item = self.candidate_items(round)[arm];
        if self.dataset.is_positive(agent, item) {
            1.0
        } else {
            0.0
        }
    }

    fn regret(&self, agent: usize, batch: &ContextBatch, arm: usize) -> f64 {
        let candidates = self.candidate_items(batch.round);
        let best = if candidates.iter().any(|&i| self.dataset.is_positive(agent, i)) {
            1.0
        } else {
            0.0
        };
        let got = if self.dataset.is_positive(agent, candidates[arm]) { 1.0 } else { 0.0 };
        best - got
    }

    fn policy_rng(&self, agent: usize, round: usize) -> ChaCha8Rng {
        if self.baseline_policy {
            self.key.baseline(agent, round)
        } else {
            self.key.policy(agent, round)
        }
    }
}

/// One point of the self-normalized replay metric.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioPoint {
    pub round: usize,
    /// Algorithm cumulative regret, summed over users, through this round.
    pub algo_cum: f64,
    /// Same for the normalizing random run on the same candidate sequence.
    pub random_cum: f64,
    /// `algo_cum / random_cum`, with 0/0 defined as 1.
    pub ratio: f64,
}

/// Running ratio of two regret traces on the same candidate sequence.
pub fn regret_ratio(algo: &RegretTrace, random: &RegretTrace) -> Vec<RatioPoint> {
    let horizon = algo.horizon().max(random.horizon());
    let mut per_round_algo = vec![0.0; horizon + 1];
    let mut per_round_random = vec![0.0; horizon + 1];
    for row in algo.rows() {
        per_round_algo[row.round] += row.inst_regret;
    }
    for row in random.rows() {
        per_round_random[row.round] += row.inst_regret;
    }
    let mut points = Vec::with_capacity(horizon);
    let (mut a_cum, mut r_cum) = (0.0, 0.0);
    for round in 1..=horizon {
        a_cum += per_round_algo[round];
        r_cum += per_round_random[round];
        let ratio = if r_cum == 0.0 {
            if a_cum == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            a_cum / r_cum
        };
        points.push(RatioPoint { round, algo_cum: a_cum, random_cum: r_cum, ratio });
    }
    points
}

/// Write ratio points as CSV with header
/// `round,algo_cum_regret,random_cum_regret,ratio`.
pub fn write_ratio_csv<W: std::io::Write>(
    points: &[RatioPoint],
    w: &mut W,
) -> std::io::Result<()> {
    writeln!(w, "round,algo_cum_regret,random_cum_regret,ratio")?;
    for p in points {
        writeln!(w, "{},{},{},{}", p.round, p.algo_cum, p.random_cum, p.ratio)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::uniform_random_run;
    use crate::trace::PhaseTag;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    fn toy_dataset(dir: &Path) -> OfflineDataset {
        let items = write_file(
            dir,
            "items.csv",
            "b2,0.5,0.1\na7,0.1,0.2\nc1,-0.3,0.9\n",
        );
        let inter = write_file(
            dir,
            "inter.csv",
            "u2,a7\nu1,b2,extra,columns\nu1,a7\nu1,a7\n",
        );
        load_offline(&items, &inter).unwrap()
    }

    #[test]
    fn load_sorts_and_indexes() {
        let dir = tempfile::tempdir().unwrap();
        let ds = toy_dataset(dir.path());
        assert_eq!(ds.n_items(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.item_id(0), "a7");
        assert_eq!(ds.item_id(1), "b2");
        assert_eq!(ds.embedding(0), &[0.1, 0.2]);
        // Users sorted; duplicates collapse; extra columns ignored.
        assert_eq!(ds.n_users(), 2);
        assert_eq!(ds.user_id(0), "u1");
        assert!(ds.is_positive(0, 0) && ds.is_positive(0, 1));
        assert!(ds.is_positive(1, 0) && !ds.is_positive(1, 1));
    }

    #[test]
    fn empty_interactions_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let items = write_file(dir.path(), "items.csv", "x,1.0\n");
        let inter = write_file(dir.path(), "inter.csv", "");
        let ds = load_offline(&items, &inter).unwrap();
        assert_eq!(ds.n_users(), 0);
        assert_eq!(ds.n_items(), 1);
    }

    #[test]
    fn missing_item_names_the_id() {
        let dir = tempfile::tempdir().unwrap();
        let items = write_file(dir.path(), "items.csv", "a,1.0\n");
        let inter = write_file(dir.path(), "inter.csv", "u1,a\nu1,ghost\n");
        match load_offline(&items, &inter) {
            Err(OfflineError::MissingItem { item, line }) => {
                assert_eq!(item, "ghost");
                assert_eq!(line, 2);
            }
            other => panic!("want MissingItem, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let items = write_file(dir.path(), "items.csv", "a,1.0\nb,oops\n");
        let inter = write_file(dir.path(), "inter.csv", "");
        match load_offline(&items, &inter) {
            Err(OfflineError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("want Parse, got {other:?}"),
        }
        // Ragged embedding length.
        let items = write_file(dir.path(), "items2.csv", "a,1.0,2.0\nb,1.0\n");
        match load_offline(&items, &inter) {
            Err(OfflineError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("want Parse, got {other:?}"),
        }
        // Duplicate id.
        let items = write_file(dir.path(), "items3.csv", "a,1.0\na,2.0\n");
        match load_offline(&items, &inter) {
            Err(OfflineError::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("duplicate"));
            }
            other => panic!("want Parse, got {other:?}"),
        }
        // Interaction row with a single column.
        let items = write_file(dir.path(), "items4.csv", "a,1.0\n");
        let inter = write_file(dir.path(), "inter4.csv", "lonely\n");
        match load_offline(&items, &inter) {
            Err(OfflineError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("want Parse, got {other:?}"),
        }
    }

    fn grid_dataset(n_items: usize, dim: usize) -> (tempfile::TempDir, Arc<OfflineDataset>) {
        let dir = tempfile::tempdir().unwrap();
        let mut items = String::new();
        for i in 0..n_items {
            items.push_str(&format!("i{i:04}"));
            for j in 0..dim {
                items.push_str(&format!(",{}", ((i * dim + j) % 7) as f64 / 7.0 - 0.5));
            }
            items.push('\n');
        }
        // Two users: u0 likes even items, u1 likes none.
        let mut inter = String::new();
        for i in (0..n_items).step_by(2) {
            inter.push_str(&format!("u0,i{i:04}\n"));
        }
        inter.push_str("u1,i0001\n");
        let items = write_file(dir.path(), "items.csv", &items);
        let inter = write_file(dir.path(), "inter.csv", &inter);
        let ds = Arc::new(load_offline(&items, &inter).unwrap());
        (dir, ds)
    }

    #[test]
    fn candidates_are_distinct_and_deterministic() {
        let (_dir, ds) = grid_dataset(30, 2);
        let env = ReplayEnv::new(ds, 8, 0.5, StreamKey::new(9, 0)).unwrap();
        for round in 1..=50 {
            let c1 = env.candidate_items(round);
            let c2 = env.candidate_items(round);
            assert_eq!(c1, c2);
            assert_eq!(c1.len(), 8);
            let mut sorted = c1.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 8, "duplicates in round {round}");
            assert!(sorted.iter().all(|&i| i < 30));
        }
        // Different rounds produce different sets (overwhelmingly).
        assert_ne!(env.candidate_items(1), env.candidate_items(2));
    }

    #[test]
    fn full_catalog_candidate_set() {
        let (_dir, ds) = grid_dataset(6, 2);
        let env = ReplayEnv::new(ds, 6, 0.5, StreamKey::new(10, 0)).unwrap();
        let mut c = env.candidate_items(3);
        c.sort_unstable();
        assert_eq!(c, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn oversized_candidate_set_rejected() {
        let (_dir, ds) = grid_dataset(5, 2);
        assert!(matches!(
            ReplayEnv::new(ds, 6, 0.5, StreamKey::new(11, 0)),
            Err(OfflineError::InvalidSpec(_))
        ));
    }

    #[test]
    fn click_rewards_and_regret() {
        let (_dir, ds) = grid_dataset(10, 2);
        let env = ReplayEnv::new(ds.clone(), 4, 0.5, StreamKey::new(12, 0)).unwrap();
        for round in 1..=20 {
            let batch = env.batch(round);
            let candidates = env.candidate_items(round);
            let any_even = candidates.iter().any(|&i| i % 2 == 0);
            for arm in 0..4 {
                // u0 (index 0) likes even item indices.
                let y = env.realized_reward(0, round, &batch, arm);
                let want = if candidates[arm] % 2 == 0 { 1.0 } else { 0.0 };
                assert_eq!(y, want);
                let r = env.regret(0, &batch, arm);
                let best = if any_even { 1.0 } else { 0.0 };
                assert_eq!(r, best - want);
                assert!(r >= 0.0);
                // u1 (index 1) likes only item 1.
                let y1 = env.realized_reward(1, round, &batch, arm);
                assert_eq!(y1, if candidates[arm] == 1 { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn ratio_hand_case_with_zero_prefix() {
        let mut algo = RegretTrace::new();
        let mut random = RegretTrace::new();
        // Round 1: both zero → 0/0 = 1. Round 2: algo 0, random 2 → 0.
        // Round 3: algo 3, random 1 → 3/3 = 1.
        for (round, (a, r)) in [(0.0, 0.0), (0.0, 2.0), (3.0, 1.0)].iter().enumerate() {
            algo.record(0, 0, round + 1, PhaseTag::Independent, 0, *a);
            random.record(0, 0, round + 1, PhaseTag::Random, 0, *r);
        }
        let points = regret_ratio(&algo, &random);
        assert_eq!(points.len(), 3);
        assert_eq!(points[0].ratio, 1.0);
        assert_eq!(points[1].ratio, 0.0);
        assert_eq!(points[2].ratio, 1.0);
        assert_eq!(points[2].algo_cum, 3.0);
        assert_eq!(points[2].random_cum, 3.0);
    }

    #[test]
    fn baseline_twin_differs_but_shares_candidates() {
        let (_dir, ds) = grid_dataset(40, 3);
        let env = ReplayEnv::new(ds, 10, 0.5, StreamKey::new(13, 0)).unwrap();
        let twin = env.baseline_twin();
        assert_eq!(env.candidate_items(5), twin.candidate_items(5));
        let a = uniform_random_run(200, &env);
        let b = uniform_random_run(200, &twin);
        let arms_a: Vec<usize> = a.rows().iter().map(|r| r.arm).collect();
        let arms_b: Vec<usize> = b.rows().iter().map(|r| r.arm).collect();
        assert_ne!(arms_a, arms_b);
    }

    #[test]
    fn ratio_csv_format() {
        let points = vec![
            RatioPoint { round: 1, algo_cum: 0.0, random_cum: 0.0, ratio: 1.0 },
            RatioPoint { round: 2, algo_cum: 1.5, random_cum: 2.0, ratio: 0.75 },
        ];
        let mut buf = Vec::new();
        write_ratio_csv(&points, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "round,algo_cum_regret,random_cum_regret,ratio\n1,0,0,1\n2,1.5,2,0.75\n"
        );
    }

    #[test]
    fn replay_is_deterministic() {
        let (_dir, ds) = grid_dataset(25, 2);
        let mk = || ReplayEnv::new(ds.clone(), 5, 0.5, StreamKey::new(14, 1)).unwrap();
        let a = uniform_random_run(300, &mk());
        let b = uniform_random_run(300, &mk());
        let rows = |t: &RegretTrace| {
            t.rows().iter().map(|r| (r.agent, r.round, r.arm, r.inst_regret)).collect::<Vec<_>>()
        };
        assert_eq!(rows(&a), rows(&b));
    }
}
