//! Centralized reference solver: bisection on the shared multiplier.
//!
//! `g(λ) = Σ_i x̂_i(λ)` is nonincreasing in `λ`, so the price that balances
//! supply against the total `b` is found by bracketing and bisection. Once the
//! bracket collapses to adjacent floats, the allocation is interpolated
//! between the two endpoint allocations to hit `b` exactly, which also covers
//! flat stretches of `g` caused by linear costs.

use thiserror::Error;

use crate::objectives::{primal_argmin, CostFunction, LocalProblem};

/// Feasibility slack on `Σlo ≤ b ≤ Σhi`.
const FEASIBILITY_TOLERANCE: f64 = 1e-9;
const MAX_BRACKET_DOUBLINGS: usize = 200;
const MAX_BISECTIONS: usize = 4096;
const KKT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("total {total} outside achievable range [{min}, {max}]")]
    InfeasibleTotal { total: f64, min: f64, max: f64 },
    #[error("no sign change of the supply mismatch within |lambda| <= {0}")]
    BracketFailure(f64),
    #[error("problem list is empty")]
    Empty,
}

impl OracleError {
    pub fn kind(&self) -> &'static str {
        match self {
            OracleError::InfeasibleTotal { .. } => "InfeasibleTotal",
            OracleError::BracketFailure(_) => "BracketFailure",
            OracleError::Empty => "InvalidArgument",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub lam_star: f64,
    /// `|Σx* − b|`.
    pub residual: f64,
    pub total: f64,
}

/// Total allocation induced by a common price.
pub fn supply(problems: &[LocalProblem], lam: f64) -> f64 {
    problems.iter().map(|p| primal_argmin(p, lam)).sum()
}

fn initial_bracket(problems: &[LocalProblem]) -> f64 {
    let spread = problems
        .iter()
        .map(|p| match p.cost {
            CostFunction::Quadratic { gamma, beta, .. } => {
                let reach = p.interval.lo().abs().max(p.interval.hi().abs());
                beta.abs() + 2.0 * gamma * reach
            }
            CostFunction::GenericConvex(_) => 0.0,
        })
        .fold(0.0, f64::max);
    1.0 + spread
}

pub fn solve_centralized(problems: &[LocalProblem], total: f64) -> Result<OracleSolution, OracleError> {
    if problems.is_empty() {
        return Err(OracleError::Empty);
    }
    let min: f64 = problems.iter().map(|p| p.interval.lo()).sum();
    let max: f64 = problems.iter().map(|p| p.interval.hi()).sum();
    if !(total >= min - FEASIBILITY_TOLERANCE && total <= max + FEASIBILITY_TOLERANCE) {
        return Err(OracleError::InfeasibleTotal { total, min, max });
    }

    // low price: supply at least `total`; high price: at most `total`
    let mut m = initial_bracket(problems);
    let mut doublings = 0;
    let (mut lo, mut hi) = loop {
        let (lo, hi) = (-m, m);
        if supply(problems, lo) >= total && supply(problems, hi) <= total {
            break (lo, hi);
        }
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS || !m.is_finite() {
            return Err(OracleError::BracketFailure(m));
        }
        m *= 2.0;
    };

    let mut g_lo = supply(problems, lo);
    let mut g_hi = supply(problems, hi);
    for _ in 0..MAX_BISECTIONS {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = supply(problems, mid);
        debug_assert!(g_lo >= g_mid && g_mid >= g_hi, "supply must be nonincreasing");
        if g_mid >= total {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
        if g_lo == total || g_hi == total {
            break;
        }
    }

    let x_lo: Vec<f64> = problems.iter().map(|p| primal_argmin(p, lo)).collect();
    let x_hi: Vec<f64> = problems.iter().map(|p| primal_argmin(p, hi)).collect();
    let (lam_star, x_star) = if g_lo == total {
        (lo, x_lo)
    } else if g_hi == total {
        (hi, x_hi)
    } else {
        // g_lo > total > g_hi: blend the two allocations
        let theta = (total - g_hi) / (g_lo - g_hi);
        let blended = x_lo
            .iter()
            .zip(&x_hi)
            .zip(problems)
            .map(|((a, b), p)| p.interval.clamp(theta * a + (1.0 - theta) * b))
            .collect();
        let lam = if theta >= 0.5 { lo } else { hi };
        (lam, blended)
    };
    Ok(finish(problems, total, lam_star, x_star))
}

fn finish(problems: &[LocalProblem], total: f64, lam_star: f64, x_star: Vec<f64>) -> OracleSolution {
    let f_star = problems
        .iter()
        .zip(&x_star)
        .map(|(p, &x)| p.cost.value(x))
        .sum();
    let residual = (x_star.iter().sum::<f64>() - total).abs();
    OracleSolution {
        x_star,
        f_star,
        lam_star,
        residual,
        total,
    }
}

/// Saddle-point check: every `x*_i` minimizes `f_i(x) + λ*·x` over its
/// interval (compared in value against [`primal_argmin`]) and the allocation
/// sums to the total, both within `1e-8`.
pub fn verify_kkt(problems: &[LocalProblem], sol: &OracleSolution) -> bool {
    if sol.x_star.len() != problems.len() {
        return false;
    }
    let lam = sol.lam_star;
    let stationary = problems.iter().zip(&sol.x_star).all(|(p, &x)| {
        if !p.interval.contains(x) {
            return false;
        }
        let best = primal_argmin(p, lam);
        let at_x = p.cost.value(x) + lam * x;
        let at_best = p.cost.value(best) + lam * best;
        at_x - at_best <= KKT_TOLERANCE * (1.0 + at_best.abs())
    });
    stationary && (sol.x_star.iter().sum::<f64>() - sol.total).abs() <= KKT_TOLERANCE
}
