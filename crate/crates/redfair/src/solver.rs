//! Half-interval search over the cost budget around the budgeted greedy.
//!
//! Each midpoint budget is classified by running the greedy sub-solver: a
//! candidate that meets the budget with at most `alpha * (N_d - M)` redundant
//! agents certifies the budget feasible for the relaxed problem and moves the
//! upper bound; anything else certifies it infeasible for the original problem
//! and moves the lower bound. With `alpha = 1 + ln(max_j J_j(empty) - 1)` the
//! returned assignment costs no more than the optimum that uses at most
//! `N_d - M` redundant agents, in exchange for using up to `alpha` times more
//! of them.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::{greedy_redundant_assignment_with, GreedyStrategy};
use crate::problem::{Assignment, CostEvaluator, COST_TOL};

/// The instance-dependent cardinality relaxation factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaBound {
    pub value: f64,
    /// Set when the worst initial cost is too small for the log formula to be
    /// meaningful; the value is clamped to 1 (no relaxation).
    pub degenerate: bool,
}

/// `1 + ln(max_j J_j(empty) - 1)`, the relaxation factor under which the
/// solver's cost guarantee holds. Clamped to 1 with `degenerate` set when the
/// worst initial task cost is at most 1 (or so close that the formula dips
/// below 1).
pub fn alpha_bound(ev: &CostEvaluator) -> Result<AlphaBound> {
    let worst = ev.worst_task_cost(&Assignment::new())?;
    if worst <= 1.0 {
        return Ok(AlphaBound { value: 1.0, degenerate: true });
    }
    let raw = 1.0 + (worst - 1.0).ln();
    if raw < 1.0 {
        Ok(AlphaBound { value: 1.0, degenerate: true })
    } else {
        Ok(AlphaBound { value: raw, degenerate: false })
    }
}

/// How to pick the relaxation factor.
///
/// In JSON this is the token `"eq6"` (log bound), `"one"`, or a bare number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlphaModeRepr", into = "AlphaModeRepr")]
pub enum AlphaMode {
    /// The instance-dependent log bound from [`alpha_bound`].
    Bound,
    /// `alpha = 1`: respect the deployment size, no cost guarantee.
    One,
    /// A caller-chosen value `>= 1`.
    Explicit(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AlphaModeRepr {
    Token(String),
    Value(f64),
}

impl From<AlphaMode> for AlphaModeRepr {
    fn from(mode: AlphaMode) -> Self {
        match mode {
            AlphaMode::Bound => AlphaModeRepr::Token("eq6".into()),
            AlphaMode::One => AlphaModeRepr::Token("one".into()),
            AlphaMode::Explicit(v) => AlphaModeRepr::Value(v),
        }
    }
}

impl TryFrom<AlphaModeRepr> for AlphaMode {
    type Error = Error;

    fn try_from(repr: AlphaModeRepr) -> Result<Self> {
        match repr {
            AlphaModeRepr::Token(s) => s.parse(),
            AlphaModeRepr::Value(v) => Ok(AlphaMode::Explicit(v)),
        }
    }
}

impl AlphaMode {
    /// Resolves the mode to a concrete factor for `ev`'s instance.
    pub fn resolve(&self, ev: &CostEvaluator) -> Result<f64> {
        match self {
            AlphaMode::Bound => Ok(alpha_bound(ev)?.value),
            AlphaMode::One => Ok(1.0),
            AlphaMode::Explicit(v) => {
                if !v.is_finite() || *v < 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "alpha must be >= 1, got {v}"
                    )));
                }
                Ok(*v)
            }
        }
    }
}

impl FromStr for AlphaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eq6" => Ok(AlphaMode::Bound),
            "one" | "1" => Ok(AlphaMode::One),
            other => other
                .parse::<f64>()
                .map(AlphaMode::Explicit)
                .map_err(|_| {
                    Error::InvalidParameter(format!(
                        "alpha must be `eq6`, `1` or a real number, got `{other}`"
                    ))
                }),
        }
    }
}

impl std::fmt::Display for AlphaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AlphaMode::Bound => write!(f, "eq6"),
            AlphaMode::One => write!(f, "1"),
            AlphaMode::Explicit(v) => write!(f, "{v}"),
        }
    }
}

/// One bisection iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    /// Budget tried at this iteration.
    pub xi: f64,
    /// Size of the redundant assignment the greedy produced.
    pub subset_size: usize,
    /// Whether the greedy met the budget at all.
    pub greedy_feasible: bool,
    /// Whether the step was accepted (budget met within the relaxed
    /// cardinality), moving the upper bound; rejections move the lower bound.
    pub accepted: bool,
}

/// Final solver output, including the full bisection trace for auditability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// The redundant assignment of the last accepted iteration.
    pub assignment: Assignment,
    /// Final upper budget bound; the assignment's worst task cost is at most
    /// this.
    pub xi: f64,
    pub trace: Vec<BisectionStep>,
    pub iterations: usize,
    pub alpha_used: f64,
    /// Total agents used: redundant plus initial.
    pub deployment_used: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Upper bound on the number of bisection iterations for `tasks` tasks and an
/// initial interval width of `xi_max`: the interval halves until its width
/// drops below `1/tasks`.
pub fn iteration_budget(tasks: usize, xi_max: f64) -> usize {
    assert!(tasks >= 1 && xi_max > 0.0);
    let raw = (tasks as f64 * xi_max).log2().ceil() as i64;
    (raw.max(0) + 1) as usize
}

/// Minimizes the worst task cost by bisection over the budget, accepting a
/// midpoint when the greedy meets it with at most `alpha * (deployment - M)`
/// redundant agents. Uses lazy greedy scans.
pub fn solve_fair(ev: &CostEvaluator, deployment: usize, alpha: f64) -> Result<SolveResult> {
    solve_fair_with(ev, deployment, alpha, GreedyStrategy::Lazy)
}

/// [`solve_fair`] with an explicit greedy scan strategy.
pub fn solve_fair_with(
    ev: &CostEvaluator,
    deployment: usize,
    alpha: f64,
    strategy: GreedyStrategy,
) -> Result<SolveResult> {
    if !alpha.is_finite() || alpha < 1.0 {
        return Err(Error::InvalidParameter(format!("alpha must be >= 1, got {alpha}")));
    }
    let tasks = ev.tasks();
    let agents = ev.agents();
    if deployment < tasks || deployment > agents {
        return Err(Error::InfeasibleInstance(format!(
            "deployment {deployment} must satisfy {tasks} <= N_d <= {agents}"
        )));
    }
    for j in 0..tasks {
        if ev.initial().agents_for(j).next().is_none() {
            return Err(Error::UncoveredTask(j));
        }
    }

    let mut warnings = Vec::new();
    let budget = deployment - tasks;
    let relaxed = alpha * budget as f64;
    if relaxed > (agents - tasks) as f64 + COST_TOL {
        warnings.push(format!(
            "relaxed cardinality {relaxed:.3} exceeds the {} available agents; \
             the relaxation is capped by agent supply",
            agents - tasks
        ));
    }

    let mut xi_min = 0.0;
    let mut xi_max = ev.worst_task_cost(&Assignment::new())?;
    let mut best = Assignment::new();
    let mut trace = Vec::new();
    let threshold = 1.0 / tasks as f64;

    while xi_max - xi_min >= threshold {
        let xi = 0.5 * (xi_min + xi_max);
        let outcome = greedy_redundant_assignment_with(ev, xi, strategy)?;
        let size = outcome.assignment.len();
        let accepted = outcome.is_feasible() && (size as f64) <= relaxed + COST_TOL;
        trace.push(BisectionStep {
            xi,
            subset_size: size,
            greedy_feasible: outcome.is_feasible(),
            accepted,
        });
        if accepted {
            xi_max = xi;
            best = outcome.assignment;
        } else {
            xi_min = xi;
        }
    }

    let iterations = trace.len();
    let deployment_used = best.len() + tasks;
    Ok(SolveResult {
        assignment: best,
        xi: xi_max,
        trace,
        iterations,
        alpha_used: alpha,
        deployment_used,
        warnings,
    })
}
