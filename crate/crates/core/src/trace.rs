//! Regret traces: per-(replication, agent, round) records, their CSV
//! serialization, and the cross-replication summary statistics.
//!
//! The trace file format is the crate's stable external interface:
//!
//! ```text
//! rep,agent,round,phase,arm,inst_regret,cum_regret
//! ```
//!
//! one row per (replication, agent, round), rounds 1-based, cumulative
//! regret the running per-agent sum. Floats are written in Rust's shortest
//! round-trip form, so `parse(write(trace))` reproduces the trace exactly.
//!
//! Summaries aggregate the per-agent mean cumulative regret within each
//! replication, then report across replications the mean and an empirical
//! 95% band (2.5th/97.5th percentiles, linear interpolation):
//!
//! ```text
//! algo,round,mean_cum_regret,lo95,hi95
//! ```

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

/// Errors from trace parsing and persistence.
#[derive(Debug, Error)]
pub enum TraceError {
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Which stage of its algorithm an agent was in when a row was recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseTag {
    /// Per-agent exploration (cluster-then-collaborate, phase 1).
    Explore,
    /// Collaborative play on averaged rewards (cluster-then-collaborate).
    Collab,
    /// Exploration inside phase `i` of the phased variant.
    PhaseExplore(usize),
    /// Collaboration inside phase `i` of the phased variant.
    PhaseCollab(usize),
    /// Common-representative phase of the personalization algorithm.
    Common,
    /// Per-agent corrected play of the personalization algorithm.
    Personal,
    /// Independent per-agent learner baseline.
    Independent,
    /// Uniform random baseline.
    Random,
}

impl fmt::Display for PhaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseTag::Explore => write!(f, "explore"),
            PhaseTag::Collab => write!(f, "collab"),
            PhaseTag::PhaseExplore(i) => write!(f, "p{i}.explore"),
            PhaseTag::PhaseCollab(i) => write!(f, "p{i}.collab"),
            PhaseTag::Common => write!(f, "common"),
            PhaseTag::Personal => write!(f, "personal"),
            PhaseTag::Independent => write!(f, "ind"),
            PhaseTag::Random => write!(f, "rand"),
        }
    }
}

impl FromStr for PhaseTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "explore" => return Ok(PhaseTag::Explore),
            "collab" => return Ok(PhaseTag::Collab),
            "common" => return Ok(PhaseTag::Common),
            "personal" => return Ok(PhaseTag::Personal),
            "ind" => return Ok(PhaseTag::Independent),
            "rand" => return Ok(PhaseTag::Random),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix('p') {
            if let Some((num, kind)) = rest.split_once('.') {
                let i: usize =
                    num.parse().map_err(|_| format!("bad phase index in {s:?}"))?;
                return match kind {
                    "explore" => Ok(PhaseTag::PhaseExplore(i)),
                    "collab" => Ok(PhaseTag::PhaseCollab(i)),
                    _ => Err(format!("unknown phase label {s:?}")),
                };
            }
        }
        Err(format!("unknown phase label {s:?}"))
    }
}

/// One (replication, agent, round) record.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub rep: usize,
    pub agent: usize,
    /// Round number, 1-based.
    pub round: usize,
    pub phase: PhaseTag,
    pub arm: usize,
    pub inst_regret: f64,
    pub cum_regret: f64,
}

/// An append-only regret trace; cumulative sums are maintained per
/// (replication, agent) as rows are recorded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretTrace {
    rows: Vec<TraceRow>,
}

impl RegretTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Append one observation; the cumulative column continues the running
    /// sum of the same (rep, agent).
    pub fn record(
        &mut self,
        rep: usize,
        agent: usize,
        round: usize,
        phase: PhaseTag,
        arm: usize,
        inst_regret: f64,
    ) {
        debug_assert!(inst_regret >= -1e-12, "negative instantaneous regret");
        let prev = self
            .rows
            .iter()
            .rev()
            .find(|r| r.rep == rep && r.agent == agent)
            .map_or(0.0, |r| r.cum_regret);
        self.rows.push(TraceRow {
            rep,
            agent,
            round,
            phase,
            arm,
            inst_regret,
            cum_regret: prev + inst_regret,
        });
    }

    /// Append all rows of `other` (used when merging per-rep traces).
    pub fn extend(&mut self, other: RegretTrace) {
        self.rows.extend(other.rows);
    }

    /// The agents present, in ascending order.
    pub fn agents(&self) -> Vec<usize> {
        let mut a: Vec<usize> = self.rows.iter().map(|r| r.agent).collect();
        a.sort_unstable();
        a.dedup();
        a
    }

    /// The replications present, in ascending order.
    pub fn reps(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.rows.iter().map(|r| r.rep).collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    /// Largest round number present (0 for an empty trace).
    pub fn horizon(&self) -> usize {
        self.rows.iter().map(|r| r.round).max().unwrap_or(0)
    }

    /// Per-agent mean of `cum_regret` at each round within one replication.
    pub fn mean_cum_by_round(&self, rep: usize) -> Vec<f64> {
        let horizon = self.horizon();
        let mut sums = vec![0.0; horizon + 1];
        let mut counts = vec![0usize; horizon + 1];
        for r in self.rows.iter().filter(|r| r.rep == rep) {
            sums[r.round] += r.cum_regret;
            counts[r.round] += 1;
        }
        (1..=horizon)
            .map(|t| if counts[t] == 0 { f64::NAN } else { sums[t] / counts[t] as f64 })
            .collect()
    }

    /// Serialize with the exact header
    /// `rep,agent,round,phase,arm,inst_regret,cum_regret`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<(), TraceError> {
        writeln!(w, "rep,agent,round,phase,arm,inst_regret,cum_regret")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.rep, r.agent, r.round, r.phase, r.arm, r.inst_regret, r.cum_regret
            )?;
        }
        Ok(())
    }

    /// Parse a trace file; `parse(write(t)) == t` exactly.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, TraceError> {
        let mut rows = Vec::new();
        let mut lines = r.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => {
                return Err(TraceError::Parse { line: 1, msg: "empty file".into() });
            }
        };
        if header.trim_end() != "rep,agent,round,phase,arm,inst_regret,cum_regret" {
            return Err(TraceError::Parse { line: 1, msg: format!("bad header {header:?}") });
        }
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(TraceError::Parse {
                    line: lineno,
                    msg: format!("expected 7 fields, got {}", fields.len()),
                });
            }
            let parse_usize = |s: &str, what: &str| -> Result<usize, TraceError> {
                s.parse().map_err(|_| TraceError::Parse {
                    line: lineno,
                    msg: format!("bad {what} {s:?}"),
                })
            };
            let parse_f64 = |s: &str, what: &str| -> Result<f64, TraceError> {
                s.parse().map_err(|_| TraceError::Parse {
                    line: lineno,
                    msg: format!("bad {what} {s:?}"),
                })
            };
            rows.push(TraceRow {
                rep: parse_usize(fields[0], "rep")?,
                agent: parse_usize(fields[1], "agent")?,
                round: parse_usize(fields[2], "round")?,
                phase: fields[3]
                    .parse()
                    .map_err(|msg| TraceError::Parse { line: lineno, msg })?,
                arm: parse_usize(fields[4], "arm")?,
                inst_regret: parse_f64(fields[5], "inst_regret")?,
                cum_regret: parse_f64(fields[6], "cum_regret")?,
            });
        }
        Ok(Self { rows })
    }
}

/// Empirical percentile with linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty sample");
    assert!((0.0..=100.0).contains(&q));
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// One summary row: cross-replication statistics of the per-agent mean
/// cumulative regret at a round.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryPoint {
    pub round: usize,
    pub mean_cum_regret: f64,
    pub lo95: f64,
    pub hi95: f64,
}

/// Per-round mean and 95% band across every replication in `traces`.
pub fn per_round_band(traces: &[&RegretTrace]) -> Vec<SummaryPoint> {
    let horizon = traces.iter().map(|t| t.horizon()).max().unwrap_or(0);
    // Collect each replication's per-round curve.
    let mut curves: Vec<Vec<f64>> = Vec::new();
    for t in traces {
        for rep in t.reps() {
            curves.push(t.mean_cum_by_round(rep));
        }
    }
    let mut out = Vec::with_capacity(horizon);
    for round in 1..=horizon {
        let mut vals: Vec<f64> = curves
            .iter()
            .filter_map(|c| c.get(round - 1).copied())
            .filter(|v| v.is_finite())
            .collect();
        if vals.is_empty() {
            continue;
        }
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        out.push(SummaryPoint {
            round,
            mean_cum_regret: mean,
            lo95: percentile(&vals, 2.5),
            hi95: percentile(&vals, 97.5),
        });
    }
    out
}

/// Serialize summary points with the exact header
/// `algo,round,mean_cum_regret,lo95,hi95`.
pub fn write_summary_csv<W: Write>(
    algo: &str,
    points: &[SummaryPoint],
    w: &mut W,
) -> Result<(), TraceError> {
    writeln!(w, "algo,round,mean_cum_regret,lo95,hi95")?;
    for p in points {
        writeln!(w, "{},{},{},{},{}", algo, p.round, p.mean_cum_regret, p.lo95, p.hi95)?;
    }
    Ok(())
}

/// Group trace rows by replication into per-rep traces (used by tests).
pub fn split_by_rep(trace: &RegretTrace) -> HashMap<usize, RegretTrace> {
    let mut out: HashMap<usize, RegretTrace> = HashMap::new();
    for row in trace.rows() {
        out.entry(row.rep).or_default().rows.push(row.clone());
    }
    out
}
