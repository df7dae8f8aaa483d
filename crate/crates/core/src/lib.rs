//! Distributed Lagrangian method for network resource allocation.
//!
//! Nodes on a connected graph jointly solve
//!
//! ```text
//! min Σ_i f_i(x_i)   s.t.  Σ_i x_i = b,  x_i ∈ [lo_i, hi_i]
//! ```
//!
//! by keeping local copies of the coupling multiplier, averaging them with
//! neighbors through a doubly stochastic matrix and taking local dual
//! subgradient steps. The crate provides the graph and weight machinery, the
//! per-node primal/dual oracles, a deterministic round-based simulator, bound
//! checks for the consensus error and the dual gap, a centralized reference
//! solver and economic-dispatch case handling.

pub mod analysis;
pub mod case_io;
pub mod dlm;
pub mod error;
pub mod graph;
pub mod objectives;
pub mod oracle;
pub mod schedule;
pub mod spectral;
pub mod trace;
pub mod weights;

pub use analysis::{check_bounds, BoundReport};
pub use case_io::{builtin_ieee14, parse_case, synth_ieee118_style, to_problems, DispatchCase, ShareSplit};
pub use dlm::{run_dlm, AgentState};
pub use error::{Error, Result};
pub use graph::GraphTopology;
pub use objectives::{CostFunction, FeasibleInterval, LocalProblem};
pub use oracle::{solve_centralized, OracleSolution};
pub use schedule::StepSchedule;
pub use trace::RunTrace;
pub use weights::{metropolis_weights, WeightMatrix};
