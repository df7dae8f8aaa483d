//! Synchronous-round simulator for the distributed Lagrangian method.
//!
//! Every round `k` each node
//! 1. averages its neighbors' multipliers, `v_i = Σ_j a_ij λ_j(k)`;
//! 2. solves its local problem at price `v_i` to get `x_i(k+1)`;
//! 3. takes a dual subgradient step, `λ_i(k+1) = v_i − α(k)·(b_i − x_i(k+1))`.
//!
//! All reductions run in ascending node order, so traces are bitwise
//! reproducible.

use thiserror::Error;

use crate::objectives::{primal_argmin, LocalProblem};
use crate::schedule::StepSchedule;
use crate::trace::{RunTrace, TraceRow};
use crate::weights::WeightMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("iteration count must be at least 1")]
    ZeroIterations,
    #[error("step size alpha({k}) = {alpha} is not positive and finite")]
    InvalidStep { k: usize, alpha: f64 },
    #[error("no iterations accumulated; weighted average undefined")]
    EmptyAccumulator,
}

/// Iterates held by one node plus the running sums for its time-weighted
/// multiplier average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub x: f64,
    pub lam: f64,
    pub v: f64,
    /// `Σ α(k)·λ_i(k)` over the rounds run so far.
    pub wsum: f64,
    /// `Σ α(k)`.
    pub asum: f64,
}

impl AgentState {
    pub fn new(x: f64, lam: f64) -> Self {
        Self {
            x,
            lam,
            v: lam,
            wsum: 0.0,
            asum: 0.0,
        }
    }
}

/// `A·λ`. Row `i` only touches `i` and its neighbors since `A` shares the
/// graph's sparsity.
pub fn consensus_step(a: &WeightMatrix, lams: &[f64]) -> Result<Vec<f64>, SimError> {
    if lams.len() != a.dim() {
        return Err(SimError::DimensionMismatch {
            expected: a.dim(),
            got: lams.len(),
        });
    }
    Ok((0..a.dim())
        .map(|i| {
            a.row(i)
                .iter()
                .zip(lams)
                .filter(|(w, _)| **w != 0.0)
                .map(|(w, l)| w * l)
                .sum()
        })
        .collect())
}

/// Moves `v` a distance `alpha` against the node dual subgradient `b − x`.
pub fn dual_step(v: f64, alpha: f64, x: f64, b: f64) -> f64 {
    v - alpha * (b - x)
}

/// `Σ_i f_i(x_i) + m_i·(x_i − b_i)`.
pub fn lagrangian_value(
    problems: &[LocalProblem],
    x: &[f64],
    mults: &[f64],
) -> Result<f64, SimError> {
    for len in [x.len(), mults.len()] {
        if len != problems.len() {
            return Err(SimError::DimensionMismatch {
                expected: problems.len(),
                got: len,
            });
        }
    }
    Ok(problems
        .iter()
        .zip(x)
        .zip(mults)
        .map(|((p, &xi), &m)| p.cost.value(xi) + m * (xi - p.share))
        .sum())
}

pub fn weighted_dual_average(state: &AgentState) -> Result<f64, SimError> {
    if state.asum <= 0.0 {
        return Err(SimError::EmptyAccumulator);
    }
    Ok(state.wsum / state.asum)
}

/// A running network: problems, weights, schedule and the agents' state.
#[derive(Debug, Clone)]
pub struct DlmNetwork<'a> {
    problems: &'a [LocalProblem],
    weights: &'a WeightMatrix,
    schedule: &'a StepSchedule,
    agents: Vec<AgentState>,
    round: usize,
}

impl<'a> DlmNetwork<'a> {
    /// Starts from `λ(0) = init_lams` and `x(0)` at the interval midpoints.
    pub fn new(
        problems: &'a [LocalProblem],
        weights: &'a WeightMatrix,
        schedule: &'a StepSchedule,
        init_lams: &[f64],
    ) -> Result<Self, SimError> {
        let n = problems.len();
        if n < 2 {
            return Err(SimError::TooFewNodes(n));
        }
        for got in [weights.dim(), init_lams.len()] {
            if got != n {
                return Err(SimError::DimensionMismatch { expected: n, got });
            }
        }
        let agents = problems
            .iter()
            .zip(init_lams)
            .map(|(p, &l)| AgentState::new(p.interval.midpoint(), l))
            .collect();
        Ok(Self {
            problems,
            weights,
            schedule,
            agents,
            round: 0,
        })
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Executes round `k = self.round()` and returns the step size used.
    pub fn step(&mut self) -> Result<f64, SimError> {
        let k = self.round;
        let alpha = self.schedule.alpha(k);
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(SimError::InvalidStep { k, alpha });
        }
        let lams: Vec<f64> = self.agents.iter().map(|a| a.lam).collect();
        let v = consensus_step(self.weights, &lams)?;
        for ((agent, p), vi) in self.agents.iter_mut().zip(self.problems).zip(v) {
            agent.wsum += alpha * agent.lam;
            agent.asum += alpha;
            agent.v = vi;
            agent.x = primal_argmin(p, vi);
            agent.lam = dual_step(vi, alpha, agent.x, p.share);
        }
        self.round += 1;
        Ok(alpha)
    }

    fn snapshot(&self) -> TraceRow {
        TraceRow {
            k: self.round,
            x: self.agents.iter().map(|a| a.x).collect(),
            lam: self.agents.iter().map(|a| a.lam).collect(),
            v: self.agents.iter().map(|a| a.v).collect(),
        }
    }
}

/// Runs `iters` rounds and records every state, row 0 being the initial one.
pub fn run_dlm(
    problems: &[LocalProblem],
    weights: &WeightMatrix,
    schedule: &StepSchedule,
    iters: usize,
    init_lams: &[f64],
) -> Result<RunTrace, SimError> {
    if iters == 0 {
        return Err(SimError::ZeroIterations);
    }
    let mut net = DlmNetwork::new(problems, weights, schedule, init_lams)?;
    let mut rows = Vec::with_capacity(iters + 1);
    let mut alphas = Vec::with_capacity(iters);
    rows.push(net.snapshot());
    for _ in 0..iters {
        alphas.push(net.step()?);
        rows.push(net.snapshot());
    }
    Ok(RunTrace::new(
        problems,
        schedule.clone(),
        rows,
        alphas,
        net.agents.clone(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphTopology;
    use crate::weights::{metropolis_weights, validate_weight_matrix};

    fn averaging() -> WeightMatrix {
        validate_weight_matrix(
            &[vec![0.5, 0.5], vec![0.5, 0.5]],
            &GraphTopology::new(2, &[(0, 1)]).unwrap(),
        )
        .unwrap()
    }

    fn half_square(share: f64) -> LocalProblem {
        LocalProblem::quadratic(0.5, 0.0, 0.0, -10.0, 10.0, share).unwrap()
    }

    #[test]
    fn consensus_examples() {
        assert_eq!(consensus_step(&averaging(), &[2.0, 4.0]).unwrap(), vec![3.0, 3.0]);
        let path = metropolis_weights(&GraphTopology::path(3).unwrap()).unwrap();
        let v = consensus_step(&path, &[3.0, 0.0, -3.0]).unwrap();
        // dense product
        let dense: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| path.get(i, j) * [3.0, 0.0, -3.0][j]).sum())
            .collect();
        for (a, b) in v.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((v[0] - 2.0).abs() < 1e-15 && v[1].abs() < 1e-15 && (v[2] + 2.0).abs() < 1e-15);
        let c = consensus_step(&path, &[1.25; 3]).unwrap();
        assert!(c.iter().all(|&x| (x - 1.25).abs() < 1e-15));
        assert!(matches!(
            consensus_step(&path, &[1.0]),
            Err(SimError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dual_step_moves_against_subgradient() {
        // subgradient b − x = −10, so the multiplier rises
        assert_eq!(dual_step(1.0, 0.5, 30.0, 20.0), 6.0);
        assert_eq!(dual_step(2.5, 0.3, 7.0, 7.0), 2.5);
        assert_eq!(dual_step(0.0, 1.0, 0.0, 4.0), -4.0);
    }

    #[test]
    fn first_round_by_hand() {
        let problems = [half_square(2.0), half_square(2.0)];
        let a = averaging();
        let trace = run_dlm(&problems, &a, &StepSchedule::RecipSqrt, 1, &[0.0, 0.0]).unwrap();
        let row = &trace.rows()[1];
        assert_eq!(row.v, vec![0.0, 0.0]);
        assert_eq!(row.x, vec![0.0, 0.0]);
        assert_eq!(row.lam, vec![-2.0, -2.0]);
    }

    #[test]
    fn optimal_multiplier_is_fixed_point() {
        // argmin 0.5x² − 2(x − 2) is x = 2 = b
        let problems = [half_square(2.0), half_square(2.0)];
        let trace = run_dlm(&problems, &averaging(), &StepSchedule::RecipSqrt, 5, &[-2.0, -2.0])
            .unwrap();
        for row in &trace.rows()[1..] {
            assert_eq!(row.v, vec![-2.0, -2.0]);
            assert_eq!(row.x, vec![2.0, 2.0]);
            assert_eq!(row.lam, vec![-2.0, -2.0]);
        }
    }

    #[test]
    fn symmetric_start_stays_in_consensus() {
        let problems = vec![half_square(1.0); 4];
        let a = metropolis_weights(&GraphTopology::cycle(4).unwrap()).unwrap();
        let trace = run_dlm(&problems, &a, &StepSchedule::Recip, 50, &[0.7; 4]).unwrap();
        for row in trace.rows() {
            assert!(row.lam.iter().all(|&l| l == row.lam[0]));
        }
    }

    #[test]
    fn lagrangian_examples() {
        let sq = LocalProblem::quadratic(1.0, 0.0, 0.0, -5.0, 5.0, 2.0).unwrap();
        assert_eq!(lagrangian_value(std::slice::from_ref(&sq), &[2.0], &[3.0]).unwrap(), 4.0);
        let two = [sq.clone(), sq];
        assert_eq!(lagrangian_value(&two, &[1.0, 3.0], &[1.0, 1.0]).unwrap(), 10.0);
        assert_eq!(lagrangian_value(&two, &[2.0, 2.0], &[-7.0, 9.0]).unwrap(), 8.0);
    }

    #[test]
    fn weighted_average_examples() {
        let mut s = AgentState::new(0.0, 0.0);
        for (a, l) in [(1.0, 0.0), (1.0, 4.0)] {
            s.wsum += a * l;
            s.asum += a;
        }
        assert_eq!(weighted_dual_average(&s).unwrap(), 2.0);

        let mut s = AgentState::new(0.0, 0.0);
        let sched = StepSchedule::RecipSqrt;
        for (k, l) in [0.0, 4.0, 10.0].into_iter().enumerate() {
            s.wsum += sched.alpha(k) * l;
            s.asum += sched.alpha(k);
        }
        let expected = (4.0 + 10.0 / 2f64.sqrt()) / (2.0 + 1.0 / 2f64.sqrt());
        assert!((weighted_dual_average(&s).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 4.0896).abs() < 1e-4);

        assert_eq!(
            weighted_dual_average(&AgentState::new(1.0, 1.0)),
            Err(SimError::EmptyAccumulator)
        );
    }

    #[test]
    fn accumulators_track_constant_multiplier() {
        let problems = [half_square(2.0), half_square(2.0)];
        let a = averaging();
        let mut net =
            DlmNetwork::new(&problems, &a, &StepSchedule::RecipSqrt, &[-2.0, -2.0]).unwrap();
        for _ in 0..10 {
            net.step().unwrap();
        }
        for a in net.agents() {
            assert!((weighted_dual_average(a).unwrap() + 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let problems = [half_square(2.0), half_square(2.0)];
        let a = averaging();
        assert_eq!(
            run_dlm(&problems, &a, &StepSchedule::Recip, 0, &[0.0, 0.0]).unwrap_err(),
            SimError::ZeroIterations
        );
        assert!(matches!(
            run_dlm(&problems, &a, &StepSchedule::Recip, 3, &[0.0]),
            Err(SimError::DimensionMismatch { .. })
        ));
        assert_eq!(
            run_dlm(&problems[..1], &a, &StepSchedule::Recip, 3, &[0.0]).unwrap_err(),
            SimError::TooFewNodes(1)
        );
    }
}
