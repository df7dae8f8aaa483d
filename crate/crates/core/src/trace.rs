//! Per-iteration records of a run and their CSV forms.
//!
//! `trace.csv` has header `k,node,x,lambda,v` with one line per
//! `(iteration, node)`; `summary.csv` has header `k,residual,lagrangian,spread`.
//! Numbers are written with 17 significant digits so they parse back exactly.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dlm::AgentState;
use crate::objectives::{dual_value, LocalProblem};
use crate::schedule::StepSchedule;

pub const TRACE_HEADER: &str = "k,node,x,lambda,v";
pub const SUMMARY_HEADER: &str = "k,residual,lagrangian,spread";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("trace has {got} nodes per row, problem set has {expected}")]
    NodeCount { expected: usize, got: usize },
}

/// State at iteration `k`. For `k = 0`, `v` holds `λ(0)` since no consensus
/// step has happened yet.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub x: Vec<f64>,
    pub lam: Vec<f64>,
    pub v: Vec<f64>,
}

impl TraceRow {
    pub fn mean_lambda(&self) -> f64 {
        self.lam.iter().sum::<f64>() / self.lam.len() as f64
    }

    /// `max_i |λ_i − λ̄|`.
    pub fn spread(&self) -> f64 {
        let mean = self.mean_lambda();
        self.lam
            .iter()
            .map(|l| (l - mean).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub k: usize,
    /// `Σ_i (x_i(k) − b_i)`.
    pub residual: f64,
    /// `L(x(k), λ(k−1))`; for `k = 0` the pairing is `L(x(0), λ(0))`.
    pub lagrangian: f64,
    /// `q(λ̄(k)·1)`.
    pub dual: f64,
    pub spread: f64,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    schedule: StepSchedule,
    shares: Vec<f64>,
    rows: Vec<TraceRow>,
    alphas: Vec<f64>,
    summary: Vec<SummaryRow>,
    final_agents: Vec<AgentState>,
}

impl RunTrace {
    pub(crate) fn new(
        problems: &[LocalProblem],
        schedule: StepSchedule,
        rows: Vec<TraceRow>,
        alphas: Vec<f64>,
        final_agents: Vec<AgentState>,
    ) -> Self {
        let summary = summarize(problems, &rows);
        Self {
            schedule,
            shares: problems.iter().map(|p| p.share).collect(),
            rows,
            alphas,
            summary,
            final_agents,
        }
    }

    /// Rebuilds a trace from `trace.csv` text. Step sizes and accumulators are
    /// recomputed from `schedule`.
    pub fn from_csv(
        text: &str,
        problems: &[LocalProblem],
        schedule: StepSchedule,
    ) -> Result<Self, TraceError> {
        let rows = parse_trace_csv(text)?;
        for row in &rows {
            if row.x.len() != problems.len() {
                return Err(TraceError::NodeCount {
                    expected: problems.len(),
                    got: row.x.len(),
                });
            }
        }
        let iters = rows.len().saturating_sub(1);
        let alphas: Vec<f64> = (0..iters).map(|k| schedule.alpha(k)).collect();
        let final_agents = (0..problems.len())
            .map(|i| {
                let last = rows.last().expect("trace has at least one row");
                let mut a = AgentState::new(last.x[i], last.lam[i]);
                a.v = last.v[i];
                for (k, alpha) in alphas.iter().enumerate() {
                    a.wsum += alpha * rows[k].lam[i];
                    a.asum += alpha;
                }
                a
            })
            .collect();
        Ok(Self::new(problems, schedule, rows, alphas, final_agents))
    }

    pub fn schedule(&self) -> &StepSchedule {
        &self.schedule
    }

    pub fn node_count(&self) -> usize {
        self.shares.len()
    }

    pub fn shares(&self) -> &[f64] {
        &self.shares
    }

    /// Number of rounds run; `rows().len() == iterations() + 1`.
    pub fn iterations(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    /// `α(k)` used in round `k`.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn summary(&self) -> &[SummaryRow] {
        &self.summary
    }

    pub fn final_agents(&self) -> &[AgentState] {
        &self.final_agents
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("trace has at least one row")
    }

    pub fn lemma1_admissible(&self) -> bool {
        self.schedule.lemma1_admissible()
    }

    pub fn lemma2_normalized(&self) -> bool {
        self.schedule.lemma2_normalized()
    }

    pub fn to_trace_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * self.node_count() * 80);
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for row in &self.rows {
            for i in 0..row.x.len() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    row.k,
                    i,
                    fmt_num(row.x[i]),
                    fmt_num(row.lam[i]),
                    fmt_num(row.v[i])
                );
            }
        }
        out
    }

    pub fn to_summary_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(SUMMARY_HEADER);
        out.push('\n');
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                s.k,
                fmt_num(s.residual),
                fmt_num(s.lagrangian),
                fmt_num(s.spread)
            );
        }
        out
    }
}

/// 17 significant digits in scientific notation.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn residual(row: &TraceRow, problems: &[LocalProblem]) -> f64 {
    row.x
        .iter()
        .zip(problems)
        .map(|(x, p)| x - p.share)
        .sum()
}

fn summarize(problems: &[LocalProblem], rows: &[TraceRow]) -> Vec<SummaryRow> {
    rows.iter()
        .enumerate()
        .map(|(idx, row)| {
            let mults = if idx == 0 { &row.lam } else { &rows[idx - 1].lam };
            let lagrangian = problems
                .iter()
                .zip(&row.x)
                .zip(mults)
                .map(|((p, &x), &m)| p.cost.value(x) + m * (x - p.share))
                .sum();
            let mean = row.mean_lambda();
            SummaryRow {
                k: row.k,
                residual: residual(row, problems),
                lagrangian,
                dual: problems.iter().map(|p| dual_value(p, mean)).sum(),
                spread: row.spread(),
            }
        })
        .collect()
}

/// Parses `trace.csv` back into rows. Rows must be grouped by `k` with nodes
/// listed `0..n` in order.
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>, TraceError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => {
            return Err(TraceError::Parse {
                line: 1,
                reason: format!("expected header {TRACE_HEADER:?}"),
            })
        }
    }
    let mut rows: Vec<TraceRow> = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| TraceError::Parse {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let k: usize = fields[0]
            .parse()
            .map_err(|_| err(format!("invalid iteration {:?}", fields[0])))?;
        let node: usize = fields[1]
            .parse()
            .map_err(|_| err(format!("invalid node {:?}", fields[1])))?;
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| err(format!("invalid number {s:?}")))
        };
        let (x, lam, v) = (num(fields[2])?, num(fields[3])?, num(fields[4])?);
        if node == 0 {
            if k != rows.len() {
                return Err(err(format!("expected iteration {}, found {k}", rows.len())));
            }
            rows.push(TraceRow {
                k,
                x: Vec::new(),
                lam: Vec::new(),
                v: Vec::new(),
            });
        }
        let row = match rows.last_mut() {
            Some(r) if r.k == k && r.x.len() == node => r,
            _ => return Err(err(format!("out-of-order entry k={k} node={node}"))),
        };
        row.x.push(x);
        row.lam.push(lam);
        row.v.push(v);
    }
    if rows.is_empty() {
        return Err(TraceError::Parse {
            line: 1,
            reason: "trace has no rows".into(),
        });
    }
    let n = rows[0].x.len();
    if let Some(bad) = rows.iter().find(|r| r.x.len() != n) {
        return Err(TraceError::NodeCount {
            expected: n,
            got: bad.x.len(),
        });
    }
    Ok(rows)
}
