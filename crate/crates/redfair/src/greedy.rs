//! The budgeted greedy sub-solver: build the smallest redundant assignment
//! whose every task cost is at most a given budget.
//!
//! Each step adds the pair with the largest marginal decrease of the truncated
//! average cost `(1/M) sum_j max(J_j, budget)`. Bringing that average down to
//! the budget is equivalent to bringing every task cost within budget, which
//! turns the per-task constraints into a single supermodular objective the
//! greedy can chase.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Assignment, CostEvaluator, COST_TOL};

/// Whether the budget was met.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetStatus {
    /// Every task cost is at most the budget.
    Feasible,
    /// Agents ran out, or no pair improved the truncated average, while some
    /// task still exceeds the budget.
    Infeasible,
}

/// One accepted greedy step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub pair: (usize, usize),
    /// Marginal decrease of the truncated average achieved by the step.
    pub decrease: f64,
    /// Truncated average cost after the step.
    pub truncated_avg: f64,
}

/// Result of one budgeted greedy run. The partial assignment is returned even
/// when infeasible so callers can inspect how far the greedy got.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSolveOutcome {
    pub status: BudgetStatus,
    pub assignment: Assignment,
    pub steps: Vec<GreedyStep>,
}

impl BudgetSolveOutcome {
    pub fn is_feasible(&self) -> bool {
        self.status == BudgetStatus::Feasible
    }
}

/// Candidate-scan strategy. Both produce identical step sequences; `Lazy`
/// re-evaluates only stale heap tops, which supermodularity makes safe because
/// marginal decreases can only shrink as the assignment grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyStrategy {
    Naive,
    Lazy,
}

/// Greedily builds the smallest redundant assignment with every task cost at
/// most `budget`, using lazy candidate evaluation.
pub fn greedy_redundant_assignment(
    ev: &CostEvaluator,
    budget: f64,
) -> Result<BudgetSolveOutcome> {
    greedy_redundant_assignment_with(ev, budget, GreedyStrategy::Lazy)
}

/// [`greedy_redundant_assignment`] with an explicit scan strategy.
pub fn greedy_redundant_assignment_with(
    ev: &CostEvaluator,
    budget: f64,
    strategy: GreedyStrategy,
) -> Result<BudgetSolveOutcome> {
    if !(budget >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cost budget must be >= 0, got {budget}"
        )));
    }
    for j in 0..ev.tasks() {
        if ev.initial().agents_for(j).next().is_none() {
            return Err(Error::UncoveredTask(j));
        }
    }
    match strategy {
        GreedyStrategy::Naive => run_naive(ev, budget),
        GreedyStrategy::Lazy => run_lazy(ev, budget),
    }
}

struct GreedyState {
    assignment: Assignment,
    costs: Vec<f64>,
    used: Vec<bool>,
    steps: Vec<GreedyStep>,
    tasks: usize,
}

impl GreedyState {
    fn init(ev: &CostEvaluator) -> Result<Self> {
        let assignment = Assignment::new();
        let costs = ev.task_costs(&assignment)?;
        let mut used = vec![false; ev.agents()];
        for (a, _) in ev.initial().pairs() {
            used[a] = true;
        }
        Ok(GreedyState { assignment, costs, used, steps: Vec::new(), tasks: ev.tasks() })
    }

    fn within_budget(&self, budget: f64) -> bool {
        self.costs.iter().all(|&c| c <= budget + COST_TOL)
    }

    /// Scores assigning `agent` to `task`: the marginal decrease of the
    /// truncated average (only that task's term changes), the raw untruncated
    /// decrease used to break ties, and the task's new cost.
    fn decrease(
        &self,
        ev: &CostEvaluator,
        agent: usize,
        task: usize,
        budget: f64,
    ) -> Result<(f64, f64, f64)> {
        let new_cost = ev.task_cost_with(task, &self.assignment, agent)?;
        let dec =
            (self.costs[task].max(budget) - new_cost.max(budget)) / self.tasks as f64;
        let raw = (self.costs[task] - new_cost) / self.tasks as f64;
        Ok((dec, raw, new_cost))
    }

    fn apply(&mut self, agent: usize, task: usize, dec: f64, new_cost: f64, budget: f64) {
        self.assignment.insert(agent, task).expect("agent already checked unused");
        self.used[agent] = true;
        self.costs[task] = new_cost;
        let truncated_avg =
            self.costs.iter().map(|&c| c.max(budget)).sum::<f64>() / self.tasks as f64;
        self.steps.push(GreedyStep { pair: (agent, task), decrease: dec, truncated_avg });
    }

    fn finish(self, status: BudgetStatus) -> BudgetSolveOutcome {
        BudgetSolveOutcome { status, assignment: self.assignment, steps: self.steps }
    }
}

fn run_naive(ev: &CostEvaluator, budget: f64) -> Result<BudgetSolveOutcome> {
    let mut state = GreedyState::init(ev)?;
    loop {
        if state.within_budget(budget) {
            return Ok(state.finish(BudgetStatus::Feasible));
        }
        // Best pair by (largest truncated decrease, largest raw decrease,
        // lowest agent, lowest task).
        let mut best: Option<(Candidate, f64)> = None;
        for agent in 0..ev.agents() {
            if state.used[agent] {
                continue;
            }
            for task in 0..ev.tasks() {
                let (decrease, raw, new_cost) = state.decrease(ev, agent, task, budget)?;
                let cand = Candidate { decrease, raw, agent, task };
                if best.as_ref().map_or(true, |(b, _)| cand > *b) {
                    best = Some((cand, new_cost));
                }
            }
        }
        match best {
            Some((c, new_cost)) if c.decrease > COST_TOL => {
                state.apply(c.agent, c.task, c.decrease, new_cost, budget);
            }
            _ => return Ok(state.finish(BudgetStatus::Infeasible)),
        }
    }
}

/// Heap entry ordered by truncated decrease, ties broken toward the larger
/// raw (untruncated) decrease, then the lowest agent id, then the lowest task
/// id. Every pair clearing the budget ties on the truncated key, so the raw
/// key steers the greedy toward the deepest improvement among them.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    decrease: f64,
    raw: f64,
    agent: usize,
    task: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.decrease
            .partial_cmp(&other.decrease)
            .expect("marginal decreases are finite")
            .then_with(|| {
                self.raw.partial_cmp(&other.raw).expect("marginal decreases are finite")
            })
            .then_with(|| other.agent.cmp(&self.agent))
            .then_with(|| other.task.cmp(&self.task))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn run_lazy(ev: &CostEvaluator, budget: f64) -> Result<BudgetSolveOutcome> {
    let mut state = GreedyState::init(ev)?;
    let mut heap = BinaryHeap::new();
    for agent in 0..ev.agents() {
        if state.used[agent] {
            continue;
        }
        for task in 0..ev.tasks() {
            let (decrease, raw, _) = state.decrease(ev, agent, task, budget)?;
            heap.push(Candidate { decrease, raw, agent, task });
        }
    }

    loop {
        if state.within_budget(budget) {
            return Ok(state.finish(BudgetStatus::Feasible));
        }
        // Certify the true argmax: both key components of a stale entry are
        // upper bounds (the truncated and raw averages are supermodular), so
        // a refreshed top that still dominates the next stale entry dominates
        // that entry's true value too.
        let certified = loop {
            let Some(top) = heap.pop() else { break None };
            if state.used[top.agent] {
                continue;
            }
            let (decrease, raw, new_cost) = state.decrease(ev, top.agent, top.task, budget)?;
            let fresh = Candidate { decrease, raw, ..top };
            match heap.peek() {
                Some(next) if fresh < *next => heap.push(fresh),
                _ => break Some((fresh, new_cost)),
            }
        };
        match certified {
            Some((c, new_cost)) if c.decrease > COST_TOL => {
                state.apply(c.agent, c.task, c.decrease, new_cost, budget);
            }
            _ => return Ok(state.finish(BudgetStatus::Infeasible)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{sample_cost_matrix, Distribution};
    use crate::problem::ProblemInstance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn derived_evaluator() -> CostEvaluator {
        let pm = |v: f64| Distribution::point_mass(v).unwrap();
        let edges = vec![
            vec![pm(10.0), pm(99.0)],
            vec![pm(99.0), pm(14.0)],
            vec![pm(20.0), Distribution::discrete(vec![(10.0, 0.5), (30.0, 0.5)]).unwrap()],
        ];
        let instance = ProblemInstance::new(edges, 3).unwrap();
        let initial = Assignment::from_pairs([(0, 0), (1, 1)]).unwrap();
        CostEvaluator::exact_discrete(&instance, initial).unwrap()
    }

    #[test]
    fn met_budget_needs_no_agents() {
        let ev = derived_evaluator();
        let out = greedy_redundant_assignment(&ev, 14.0).unwrap();
        assert!(out.is_feasible());
        assert!(out.assignment.is_empty());
        assert!(out.steps.is_empty());
    }

    #[test]
    fn single_helpful_pair_is_found() {
        let ev = derived_evaluator();
        let out = greedy_redundant_assignment(&ev, 12.0).unwrap();
        assert!(out.is_feasible());
        assert_eq!(
            out.assignment,
            Assignment::from_pairs([(2, 1)]).unwrap()
        );
        assert_eq!(out.steps.len(), 1);
        assert_eq!(out.steps[0].pair, (2, 1));
    }

    #[test]
    fn unreachable_budget_reports_infeasible() {
        let ev = derived_evaluator();
        let out = greedy_redundant_assignment(&ev, 11.0).unwrap();
        assert_eq!(out.status, BudgetStatus::Infeasible);
        // The greedy still hands back what it built before stalling.
        assert_eq!(out.assignment, Assignment::from_pairs([(2, 1)]).unwrap());
    }

    #[test]
    fn uncovered_initial_assignment_is_rejected() {
        let pm = |v: f64| Distribution::point_mass(v).unwrap();
        let edges = vec![vec![pm(1.0), pm(2.0)], vec![pm(3.0), pm(4.0)]];
        let instance = ProblemInstance::new(edges, 2).unwrap();
        let initial = Assignment::from_pairs([(0, 0)]).unwrap();
        let ev = CostEvaluator::exact_discrete(&instance, initial).unwrap();
        assert!(matches!(
            greedy_redundant_assignment(&ev, 5.0),
            Err(Error::UncoveredTask(1))
        ));
    }

    #[test]
    fn steps_strictly_decrease_truncated_average() {
        let ev = random_evaluator(99, 8, 3);
        let out = greedy_redundant_assignment(&ev, 6.0).unwrap();
        let mut prev = f64::INFINITY;
        for step in &out.steps {
            assert!(step.decrease > COST_TOL);
            assert!(step.truncated_avg < prev);
            prev = step.truncated_avg;
        }
    }

    fn random_evaluator(seed: u64, agents: usize, tasks: usize) -> CostEvaluator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges: Vec<Vec<Distribution>> = (0..agents)
            .map(|_| {
                (0..tasks)
                    .map(|_| {
                        let mean = 10.0 + 10.0 * rng.gen::<f64>();
                        let std = 2.0 + 6.0 * rng.gen::<f64>();
                        Distribution::truncated_gaussian(mean, std, 2.0).unwrap()
                    })
                    .collect()
            })
            .collect();
        let instance = ProblemInstance::new(edges, tasks).unwrap();
        let initial =
            Assignment::from_pairs((0..tasks).map(|j| (j, j))).unwrap();
        let matrix = sample_cost_matrix(&instance, 60, seed ^ 0xabcd).unwrap();
        CostEvaluator::from_samples(&instance, matrix, initial).unwrap()
    }

    #[test]
    fn lazy_matches_naive_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..100u64 {
            let agents = 4 + (trial as usize % 6);
            let tasks = 2 + (trial as usize % 3);
            let ev = random_evaluator(trial, agents.max(tasks), tasks);
            let max0 = ev.worst_task_cost(&Assignment::new()).unwrap();
            let budget = rng.gen::<f64>() * max0;
            let naive =
                greedy_redundant_assignment_with(&ev, budget, GreedyStrategy::Naive).unwrap();
            let lazy =
                greedy_redundant_assignment_with(&ev, budget, GreedyStrategy::Lazy).unwrap();
            assert_eq!(naive.status, lazy.status, "trial {trial} budget {budget}");
            assert_eq!(naive.assignment, lazy.assignment);
            assert_eq!(naive.steps.len(), lazy.steps.len());
            for (a, b) in naive.steps.iter().zip(&lazy.steps) {
                assert_eq!(a.pair, b.pair);
                assert_eq!(a.decrease.to_bits(), b.decrease.to_bits());
            }
        }
    }

    #[test]
    fn output_respects_uniqueness_and_agent_budget() {
        for seed in 0..20u64 {
            let ev = random_evaluator(seed, 7, 2);
            let out = greedy_redundant_assignment(&ev, 3.0).unwrap();
            // Joint uniqueness with the initial assignment.
            for (agent, _) in out.assignment.pairs() {
                assert!(!ev.initial().contains_agent(agent));
            }
            assert!(out.assignment.len() <= ev.agents() - ev.tasks());
            if out.is_feasible() {
                let worst = ev.worst_task_cost(&out.assignment).unwrap();
                assert!(worst <= 3.0 + COST_TOL);
            }
        }
    }
}
