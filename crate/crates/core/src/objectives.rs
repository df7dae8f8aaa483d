//! Per-node convex costs, the local primal minimization and the node dual.
//!
//! Each node solves `min_{x ∈ [lo, hi]} f(x) + v·(x − b)`. The node dual is
//! `q(λ) = −min_x [f(x) + λ·(x − b)]`, convex in `λ`, with subgradient
//! `b − x̂(λ)`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("interval [{lo}, {hi}] is empty or not finite")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("quadratic coefficient gamma = {0} must be finite and nonnegative")]
    NonConvex(f64),
    #[error("resource share {0} is not finite")]
    InvalidShare(f64),
}

/// Compact interval `X_i = [lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibleInterval {
    lo: f64,
    hi: f64,
}

impl FeasibleInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, ObjectiveError> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(ObjectiveError::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn midpoint(&self) -> f64 {
        self.lo + 0.5 * (self.hi - self.lo)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// A convex cost supplied as oracles.
///
/// `argmin_linear` must be deterministic. The default runs golden-section
/// search, which is exact enough for convex `value`.
pub trait ConvexCost: Send + Sync {
    fn value(&self, x: f64) -> f64;

    /// Minimizer of `value(x) + slope·x` over `interval`.
    fn argmin_linear(&self, slope: f64, interval: FeasibleInterval) -> f64 {
        golden_section_argmin(|x| self.value(x) + slope * x, interval, GOLDEN_TOLERANCE)
    }
}

const GOLDEN_TOLERANCE: f64 = 1e-10;

/// Golden-section search on a convex function, followed by a comparison with
/// both endpoints so boundary optima are returned exactly. Ties go to the
/// smaller point.
pub fn golden_section_argmin(
    f: impl Fn(f64) -> f64,
    interval: FeasibleInterval,
    tolerance: f64,
) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (interval.lo, interval.hi);
    if b - a <= tolerance {
        return a;
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tolerance {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = interval.clamp(0.5 * (a + b));
    let mut best = (interval.lo, f(interval.lo));
    for x in [mid, interval.hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best.0
}

#[derive(Clone)]
pub enum CostFunction {
    /// `gamma·x² + beta·x + mu`.
    Quadratic { gamma: f64, beta: f64, mu: f64 },
    GenericConvex(Arc<dyn ConvexCost>),
}

impl fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostFunction::Quadratic { gamma, beta, mu } => f
                .debug_struct("Quadratic")
                .field("gamma", gamma)
                .field("beta", beta)
                .field("mu", mu)
                .finish(),
            CostFunction::GenericConvex(_) => f.write_str("GenericConvex(..)"),
        }
    }
}

impl CostFunction {
    pub fn quadratic(gamma: f64, beta: f64, mu: f64) -> Result<Self, ObjectiveError> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(ObjectiveError::NonConvex(gamma));
        }
        Ok(CostFunction::Quadratic { gamma, beta, mu })
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            CostFunction::Quadratic { gamma, beta, mu } => gamma * x * x + beta * x + mu,
            CostFunction::GenericConvex(c) => c.value(x),
        }
    }
}

/// Data held by one node: its cost, its box and its share `b_i` of the total.
#[derive(Debug, Clone)]
pub struct LocalProblem {
    pub cost: CostFunction,
    pub interval: FeasibleInterval,
    pub share: f64,
}

impl LocalProblem {
    pub fn new(
        cost: CostFunction,
        interval: FeasibleInterval,
        share: f64,
    ) -> Result<Self, ObjectiveError> {
        if !share.is_finite() {
            return Err(ObjectiveError::InvalidShare(share));
        }
        Ok(Self {
            cost,
            interval,
            share,
        })
    }

    pub fn quadratic(
        gamma: f64,
        beta: f64,
        mu: f64,
        lo: f64,
        hi: f64,
        share: f64,
    ) -> Result<Self, ObjectiveError> {
        Self::new(
            CostFunction::quadratic(gamma, beta, mu)?,
            FeasibleInterval::new(lo, hi)?,
            share,
        )
    }
}

/// Minimizer of `f(x) + v·(x − b)` over the node interval. The `−v·b` term is
/// constant, so the result does not depend on the share. When the optimal set
/// is an interval, the lowest minimizer is returned.
pub fn primal_argmin(p: &LocalProblem, v: f64) -> f64 {
    match &p.cost {
        CostFunction::Quadratic { gamma, beta, .. } => {
            let slope = v + beta;
            if *gamma > 0.0 {
                p.interval.clamp(-slope / (2.0 * gamma))
            } else if slope < 0.0 {
                p.interval.hi
            } else {
                p.interval.lo
            }
        }
        CostFunction::GenericConvex(c) => p.interval.clamp(c.argmin_linear(v, p.interval)),
    }
}

/// `q_i(λ) = −[f(x̂) + λ·(x̂ − b)]` with `x̂ = primal_argmin(p, λ)`.
pub fn dual_value(p: &LocalProblem, lam: f64) -> f64 {
    let x = primal_argmin(p, lam);
    -(p.cost.value(x) + lam * (x - p.share))
}

/// `b − x̂(v)`, a subgradient of `q_i` at `v`.
pub fn dual_subgradient(p: &LocalProblem, v: f64) -> f64 {
    p.share - primal_argmin(p, v)
}

/// Tight bound on `|b − x|` over the node interval.
pub fn subgradient_bound(p: &LocalProblem) -> f64 {
    (p.share - p.interval.lo)
        .abs()
        .max((p.share - p.interval.hi).abs())
}
