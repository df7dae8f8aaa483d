//! Evaluation of the consensus-error and dual-gap bounds against recorded
//! runs.
//!
//! With `C` the largest node subgradient bound and `σ₂` the second singular
//! value of the weights, for a schedule with `α(0) = 1` that is nonincreasing:
//!
//! ```text
//! |λ_i(k) − λ̄(k)| ≤ σ₂ᵏ‖λ(0)‖₁ + √n·C·Σ_{t<k} α(t)·σ₂^{k−1−t}
//! ```
//!
//! and for `α(k) = 1/√k`, at every checkpoint `K ≥ 1`:
//!
//! ```text
//! Σ_{k≤K} α(k)|λ_i(k) − λ̄(k)| ≤ (‖λ(0)‖₁ + √n·C·(2 + ln K)) / (1 − σ₂)
//! q(λ̂_i(K)·1) − q(λ*·1) ≤ ‖λ(0) − λ*·1‖² / (4√K)
//!                          + (4√n·C‖λ(0)‖₁ + 5n·C²(2 + ln K)) / (4(1 − σ₂)√K)
//! ```
//!
//! where `λ̂_i(K)` is node `i`'s step-weighted multiplier average. `λ*` is
//! always supplied by the caller (see [`crate::oracle`]).

use std::fmt::Write as _;

use thiserror::Error;

use crate::objectives::{dual_value, subgradient_bound, LocalProblem};
use crate::schedule::StepSchedule;
use crate::trace::{fmt_num, RunTrace};
use crate::weights::WeightMatrix;

/// Absolute floor below which a negative dual gap is attributed to rounding.
pub const GAP_NONNEGATIVITY_TOLERANCE: f64 = 1e-9;

/// Relative rounding allowance when comparing an observed value to a bound.
const COMPARE_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl AnalysisError {
    pub fn kind(&self) -> &'static str {
        match self {
            AnalysisError::HypothesisViolation(_) => "HypothesisViolation",
            AnalysisError::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

/// Neumaier-compensated sum of the values in ascending magnitude order.
fn sum_smallest_first(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// `C = max_i C_i`.
pub fn global_subgradient_bound(problems: &[LocalProblem]) -> f64 {
    problems.iter().map(subgradient_bound).fold(0.0, f64::max)
}

fn require_normalized(sched: &StepSchedule) -> Result<(), AnalysisError> {
    let a0 = sched.alpha(0);
    if a0 != 1.0 {
        return Err(AnalysisError::HypothesisViolation(format!(
            "consensus bounds need alpha(0) = 1, schedule {sched} has alpha(0) = {a0}"
        )));
    }
    Ok(())
}

fn require_recip_sqrt(sched: &StepSchedule) -> Result<(), AnalysisError> {
    if !sched.is_recip_sqrt() {
        return Err(AnalysisError::HypothesisViolation(format!(
            "bound holds for alpha(k) = 1/sqrt(k) only, got schedule {sched}"
        )));
    }
    Ok(())
}

fn require_sigma2(sigma2: f64) -> Result<(), AnalysisError> {
    if !(0.0..1.0).contains(&sigma2) {
        return Err(AnalysisError::HypothesisViolation(format!(
            "sigma2 = {sigma2} is outside [0, 1)"
        )));
    }
    Ok(())
}

/// Per-iteration consensus-error bound, summed term by term.
pub fn consensus_error_bound(
    k: usize,
    sched: &StepSchedule,
    sigma2: f64,
    lam0_l1: f64,
    c: f64,
    n: usize,
) -> Result<f64, AnalysisError> {
    require_normalized(sched)?;
    require_sigma2(sigma2)?;
    let terms: Vec<f64> = (0..k)
        .map(|t| sched.alpha(t) * sigma2.powi((k - 1 - t) as i32))
        .collect();
    Ok(sigma2.powi(k as i32) * lam0_l1 + (n as f64).sqrt() * c * sum_smallest_first(terms))
}

/// Consensus-error bounds for `k = 0..=last`, evaluated by the recursion
/// `S_k = σ₂·S_{k−1} + α(k−1)` with a compensation term. The recursion is a
/// contraction, so rounding errors do not grow.
pub fn consensus_error_bounds(
    last: usize,
    sched: &StepSchedule,
    sigma2: f64,
    lam0_l1: f64,
    c: f64,
    n: usize,
) -> Result<Vec<f64>, AnalysisError> {
    require_normalized(sched)?;
    require_sigma2(sigma2)?;
    let scale = (n as f64).sqrt() * c;
    let mut out = Vec::with_capacity(last + 1);
    let (mut s, mut err) = (0.0f64, 0.0f64);
    let mut power = 1.0f64;
    for k in 0..=last {
        if k > 0 {
            let a = sched.alpha(k - 1);
            let scaled = sigma2 * s;
            let next = scaled + a;
            // TwoSum rounding error of scaled + a
            let bb = next - scaled;
            let e = (scaled - (next - bb)) + (a - bb);
            err = sigma2 * err + e;
            s = next;
            power *= sigma2;
        }
        out.push(power * lam0_l1 + scale * (s + err));
    }
    Ok(out)
}

/// Bound on the step-weighted cumulative consensus error up to `K`.
pub fn weighted_consensus_bound(
    big_k: usize,
    sched: &StepSchedule,
    sigma2: f64,
    lam0_l1: f64,
    c: f64,
    n: usize,
) -> Result<f64, AnalysisError> {
    require_recip_sqrt(sched)?;
    require_sigma2(sigma2)?;
    if big_k == 0 {
        return Err(AnalysisError::InvalidArgument("K must be at least 1".into()));
    }
    let gap = 1.0 - sigma2;
    Ok(lam0_l1 / gap + (n as f64).sqrt() * c * (2.0 + (big_k as f64).ln()) / gap)
}

/// Dual-gap bound at checkpoint `K` for the `1/√k` schedule.
pub fn rate_bound(
    big_k: usize,
    n: usize,
    sigma2: f64,
    c: f64,
    lam0: &[f64],
    lamstar: f64,
) -> Result<f64, AnalysisError> {
    require_sigma2(sigma2)?;
    if big_k == 0 {
        return Err(AnalysisError::InvalidArgument("K must be at least 1".into()));
    }
    let nf = n as f64;
    let sqrt_k = (big_k as f64).sqrt();
    let dist_sq: f64 = lam0.iter().map(|l| (l - lamstar).powi(2)).sum();
    let l1: f64 = lam0.iter().map(|l| l.abs()).sum();
    let log_term = 2.0 + (big_k as f64).ln();
    Ok(dist_sq / (4.0 * sqrt_k)
        + (4.0 * nf.sqrt() * c * l1 + 5.0 * nf * c * c * log_term)
            / (4.0 * (1.0 - sigma2) * sqrt_k))
}

/// Powers of ten not exceeding `iterations`.
pub fn default_checkpoints(iterations: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |k| k.checked_mul(10))
        .take_while(|&k| k <= iterations)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub k: usize,
    pub observed: f64,
    pub bound: f64,
    pub slack: f64,
    pub satisfied: bool,
}

impl BoundCheck {
    fn new(k: usize, observed: f64, bound: f64) -> Self {
        let satisfied = observed <= bound + COMPARE_SLACK * bound.abs().max(1.0);
        Self {
            k,
            observed,
            bound,
            slack: bound - observed,
            satisfied,
        }
    }
}

/// Dual gap at one checkpoint, worst and best over nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCheck {
    pub check: BoundCheck,
    pub min_gap: f64,
    pub nonnegative: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub sigma2: f64,
    pub c: f64,
    pub lam0_l1: f64,
    pub lamstar: f64,
    /// One entry per recorded iteration; `observed` is the worst node.
    pub consensus: Vec<BoundCheck>,
    /// Cumulative step-weighted consensus error at checkpoints (`1/√k` only).
    pub weighted_consensus: Option<Vec<BoundCheck>>,
    /// Dual gap of the step-weighted averages at checkpoints (`1/√k` only).
    pub dual_gap: Option<Vec<GapCheck>>,
}

impl BoundReport {
    fn all_checks(&self) -> impl Iterator<Item = &BoundCheck> {
        self.consensus
            .iter()
            .chain(self.weighted_consensus.iter().flatten())
            .chain(self.dual_gap.iter().flatten().map(|g| &g.check))
    }

    pub fn satisfied(&self) -> bool {
        self.all_checks().all(|c| c.satisfied)
            && self.dual_gap.iter().flatten().all(|g| g.nonnegative)
    }

    pub fn worst_slack(&self) -> f64 {
        self.all_checks()
            .map(|c| c.slack)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn violations(&self) -> usize {
        self.all_checks().filter(|c| !c.satisfied).count()
    }

    /// CSV with header `k,observed,bound,slack,satisfied`. The three bound
    /// families are separated by `# <name>` lines; the last line is a JSON
    /// summary prefixed by `# `.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,observed,bound,slack,satisfied\n");
        let mut section = |name: &str, checks: &mut dyn Iterator<Item = &BoundCheck>| {
            let _ = writeln!(out, "# {name}");
            for c in checks {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    c.k,
                    fmt_num(c.observed),
                    fmt_num(c.bound),
                    fmt_num(c.slack),
                    c.satisfied
                );
            }
        };
        section("consensus_error", &mut self.consensus.iter());
        if let Some(w) = &self.weighted_consensus {
            section("weighted_consensus", &mut w.iter());
        }
        if let Some(g) = &self.dual_gap {
            section("dual_gap", &mut g.iter().map(|g| &g.check));
        }
        let _ = writeln!(out, "# {}", self.summary_json());
        out
    }

    pub fn summary_json(&self) -> String {
        format!(
            "{{\"n\":{},\"sigma2\":{},\"C\":{},\"lambda0_l1\":{},\"lambda_star\":{},\"worst_slack\":{},\"violations\":{},\"satisfied\":{}}}",
            self.n,
            fmt_num(self.sigma2),
            fmt_num(self.c),
            fmt_num(self.lam0_l1),
            fmt_num(self.lamstar),
            fmt_num(self.worst_slack()),
            self.violations(),
            self.satisfied()
        )
    }
}

/// `q(λ·1) = Σ_i q_i(λ)`.
pub fn network_dual(problems: &[LocalProblem], lam: f64) -> f64 {
    problems.iter().map(|p| dual_value(p, lam)).sum()
}

/// Checks every applicable bound on `trace`. The per-iteration consensus bound
/// needs `α(0) = 1` and a nonincreasing schedule; the checkpoint bounds
/// additionally need `α(k) = 1/√k` and are skipped otherwise.
pub fn check_bounds(
    trace: &RunTrace,
    problems: &[LocalProblem],
    weights: &WeightMatrix,
    lamstar: f64,
    checkpoints: &[usize],
) -> Result<BoundReport, AnalysisError> {
    let n = problems.len();
    if trace.node_count() != n || weights.dim() != n {
        return Err(AnalysisError::InvalidArgument(format!(
            "trace has {} nodes, weights {}, problems {n}",
            trace.node_count(),
            weights.dim()
        )));
    }
    let sched = trace.schedule();
    require_normalized(sched)?;
    if !sched.is_positive_nonincreasing(trace.iterations() + 1) {
        return Err(AnalysisError::HypothesisViolation(format!(
            "schedule {sched} is not positive and nonincreasing"
        )));
    }
    let sigma2 = weights.sigma2();
    require_sigma2(sigma2)?;
    let c = global_subgradient_bound(problems);
    let rows = trace.rows();
    let lam0 = &rows[0].lam;
    let lam0_l1: f64 = lam0.iter().map(|l| l.abs()).sum();

    let bounds = consensus_error_bounds(trace.iterations(), sched, sigma2, lam0_l1, c, n)?;
    let consensus = rows
        .iter()
        .zip(bounds)
        .map(|(row, b)| BoundCheck::new(row.k, row.spread(), b))
        .collect();

    let (weighted_consensus, dual_gap) = if sched.is_recip_sqrt() {
        let last = trace.iterations();
        let mut checkpoints: Vec<usize> = checkpoints
            .iter()
            .copied()
            .filter(|&k| k >= 1 && k <= last)
            .collect();
        checkpoints.sort_unstable();
        checkpoints.dedup();
        let q_star = network_dual(problems, lamstar);
        let mut weighted = Vec::new();
        let mut gaps = Vec::new();
        // running per-node sums over k = 0..=K
        let mut cum_err = vec![0.0; n];
        let mut wsum = vec![0.0; n];
        let mut asum = 0.0;
        let mut next = 0;
        for (k, row) in rows.iter().enumerate() {
            if next >= checkpoints.len() {
                break;
            }
            let a = sched.alpha(k);
            let mean = row.mean_lambda();
            for i in 0..n {
                cum_err[i] += a * (row.lam[i] - mean).abs();
                wsum[i] += a * row.lam[i];
            }
            asum += a;
            while next < checkpoints.len() && checkpoints[next] == k {
                let worst_err = cum_err.iter().copied().fold(0.0, f64::max);
                weighted.push(BoundCheck::new(
                    k,
                    worst_err,
                    weighted_consensus_bound(k, sched, sigma2, lam0_l1, c, n)?,
                ));
                let node_gaps: Vec<f64> = wsum
                    .iter()
                    .map(|w| network_dual(problems, w / asum) - q_star)
                    .collect();
                let worst = node_gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min_gap = node_gaps.iter().copied().fold(f64::INFINITY, f64::min);
                gaps.push(GapCheck {
                    check: BoundCheck::new(k, worst, rate_bound(k, n, sigma2, c, lam0, lamstar)?),
                    min_gap,
                    nonnegative: min_gap >= -GAP_NONNEGATIVITY_TOLERANCE,
                });
                next += 1;
            }
        }
        (Some(weighted), Some(gaps))
    } else {
        (None, None)
    };

    Ok(BoundReport {
        n,
        sigma2,
        c,
        lam0_l1,
        lamstar,
        consensus,
        weighted_consensus,
        dual_gap,
    })
}
