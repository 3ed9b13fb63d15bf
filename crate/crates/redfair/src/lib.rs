//! Fair redundant assignment of agents to tasks under uncertain costs.
//!
//! Given agents, tasks and a random cost per agent-task pairing, this crate
//! assigns *redundant* agents on top of an existing one-agent-per-task
//! assignment so that the worst-off task's expected cost is minimized. Tasks
//! are completed by the first assigned agent to arrive, so a task's cost is
//! the expected minimum over its agents' costs, and extra agents always help.
//!
//! The solver ([`solve_fair`]) runs a half-interval search over a cost budget,
//! classifying each candidate budget with a greedy sub-solver
//! ([`greedy_redundant_assignment`]) that exploits the supermodularity of the
//! truncated average cost. Relaxing the number of redundant agents by the
//! factor [`alpha_bound`] buys a guarantee: the returned assignment's worst
//! task cost is no worse than any assignment that respects the original size.
//!
//! ```
//! use redfair::{
//!     bottleneck_initial_assignment, sample_cost_matrix, solve_fair, CostEvaluator,
//! };
//!
//! # fn main() -> redfair::Result<()> {
//! let instance = redfair::random_bipartite(8, 2, (15.0, 20.0), (5.0, 10.0), 5.0, 7)?;
//! let initial = bottleneck_initial_assignment(&instance.mean_costs())?;
//! let matrix = sample_cost_matrix(&instance, 100, 13)?;
//! let ev = CostEvaluator::from_samples(&instance, matrix, initial)?;
//!
//! let result = solve_fair(&ev, 4, 1.0)?;
//! assert!(ev.worst_task_cost(&result.assignment)? <= ev.worst_task_cost(&Default::default())?);
//! # Ok(())
//! # }
//! ```
//!
//! The `redfair` CLI (see the workspace's `redfair-cli` crate) exposes the
//! instance generators, the solver, the baselines and a benchmark harness on
//! top of this library; the book under `book/` walks through the concepts.

pub mod baselines;
pub mod bench;
pub mod dist;
pub mod error;
pub mod greedy;
pub mod netgen;
pub mod problem;
pub mod solver;

pub use baselines::{
    bottleneck_initial_assignment, brute_force_optimal, brute_force_optimal_capped,
    min_sum_initial_assignment, random_redundant, repeated_threshold, utilitarian_redundant,
    OracleResult,
};
pub use bench::{
    derive_seed, run_experiment, summarize, ExperimentConfig, GeneratorConfig, InitialPolicy,
    Policy, ReportRow, SummaryRow,
};
pub use dist::{exact_min_expectation, sample_cost_matrix, Distribution, SampleMatrix};
pub use error::{Error, Result};
pub use greedy::{
    greedy_redundant_assignment, greedy_redundant_assignment_with, BudgetSolveOutcome,
    BudgetStatus, GreedyStrategy,
};
pub use netgen::{
    network_to_instance, random_bipartite, random_transport_network, TransportNetwork,
};
pub use problem::{
    check_supermodular, max_cost_counterexample, Assignment, CostEvaluator, ProblemInstance,
};
pub use solver::{alpha_bound, iteration_budget, solve_fair, AlphaBound, AlphaMode, SolveResult};
