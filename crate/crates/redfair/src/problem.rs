//! The assignment problem model and its task-cost set functions.
//!
//! A task's cost is the expected minimum cost among the agents assigned to it
//! (first-come first-to-serve): redundant agents can only help. Under a frozen
//! [`SampleMatrix`](crate::dist::SampleMatrix) every task cost is a
//! deterministic, monotone nonincreasing, supermodular set function of the
//! redundant assignment, which is what the greedy machinery in
//! [`greedy`](crate::greedy) and [`solver`](crate::solver) relies on.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{exact_min_expectation_capped, Distribution, SampleMatrix, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};

/// Absolute tolerance for cost comparisons. Costs are O(10-100) and all
/// stochastic noise is frozen by the shared sample matrix, so only
/// floating-point error remains.
pub const COST_TOL: f64 = 1e-9;

/// Optional display names for agents and tasks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub agents: Vec<String>,
    pub tasks: Vec<String>,
}

/// An assignment problem: `N` agents, `M` tasks, a cost distribution on every
/// `(agent, task)` edge, and a deployment size `N_d` with `M <= N_d <= N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct ProblemInstance {
    agents: usize,
    tasks: usize,
    deployment: usize,
    edges: Vec<Vec<Distribution>>,
    labels: Option<Labels>,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    agents: usize,
    tasks: usize,
    deployment: usize,
    edges: Vec<Vec<Distribution>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Labels>,
}

impl From<ProblemInstance> for RawInstance {
    fn from(p: ProblemInstance) -> Self {
        RawInstance {
            agents: p.agents,
            tasks: p.tasks,
            deployment: p.deployment,
            edges: p.edges,
            labels: p.labels,
        }
    }
}

impl TryFrom<RawInstance> for ProblemInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        let mut inst = ProblemInstance::new(raw.edges, raw.deployment)?;
        if raw.agents != inst.agents || raw.tasks != inst.tasks {
            return Err(Error::IncompleteInstance(format!(
                "declared {}x{} but edges describe {}x{}",
                raw.agents, raw.tasks, inst.agents, inst.tasks
            )));
        }
        if let Some(labels) = raw.labels {
            inst = inst.with_labels(labels)?;
        }
        Ok(inst)
    }
}

impl ProblemInstance {
    /// Builds an instance from a dense `agents x tasks` grid of edge
    /// distributions. `deployment` is the total number of agents the solver
    /// may use (initial plus redundant).
    pub fn new(edges: Vec<Vec<Distribution>>, deployment: usize) -> Result<Self> {
        let agents = edges.len();
        let tasks = edges.first().map(|r| r.len()).unwrap_or(0);
        if tasks == 0 {
            return Err(Error::IncompleteInstance(
                "instance needs at least one agent and one task".into(),
            ));
        }
        if agents < tasks {
            return Err(Error::InfeasibleInstance(format!(
                "{agents} agents cannot cover {tasks} tasks"
            )));
        }
        for (i, row) in edges.iter().enumerate() {
            if row.len() != tasks {
                return Err(Error::IncompleteInstance(format!(
                    "agent {i} has {} edge distributions, expected {tasks}",
                    row.len()
                )));
            }
            for (j, d) in row.iter().enumerate() {
                d.validate().map_err(|e| {
                    Error::IncompleteInstance(format!("edge ({i}, {j}): {e}"))
                })?;
            }
        }
        if deployment < tasks || deployment > agents {
            return Err(Error::InfeasibleInstance(format!(
                "deployment {deployment} must satisfy {tasks} <= N_d <= {agents}"
            )));
        }
        Ok(ProblemInstance { agents, tasks, deployment, edges, labels: None })
    }

    pub fn with_deployment(mut self, deployment: usize) -> Result<Self> {
        if deployment < self.tasks || deployment > self.agents {
            return Err(Error::InfeasibleInstance(format!(
                "deployment {deployment} must satisfy {} <= N_d <= {}",
                self.tasks, self.agents
            )));
        }
        self.deployment = deployment;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        if labels.agents.len() != self.agents || labels.tasks.len() != self.tasks {
            return Err(Error::IncompleteInstance(
                "label counts must match agent and task counts".into(),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn tasks(&self) -> usize {
        self.tasks
    }

    pub fn deployment(&self) -> usize {
        self.deployment
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    pub fn edge(&self, agent: usize, task: usize) -> &Distribution {
        &self.edges[agent][task]
    }

    /// The exact mean cost of every edge, row-major `(agent, task)`.
    pub fn mean_costs(&self) -> Vec<Vec<f64>> {
        self.edges
            .iter()
            .map(|row| row.iter().map(Distribution::mean).collect())
            .collect()
    }
}

/// A set of `(agent, task)` pairs with at most one task per agent.
///
/// Used both for the initial non-redundant assignment and for redundant
/// assignments on top of it. Serializes as a JSON array of `[agent, task]`
/// pairs sorted by agent.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, usize)>", into = "Vec<(usize, usize)>")]
pub struct Assignment {
    by_agent: BTreeMap<usize, usize>,
}

impl From<Assignment> for Vec<(usize, usize)> {
    fn from(a: Assignment) -> Self {
        a.by_agent.into_iter().collect()
    }
}

impl TryFrom<Vec<(usize, usize)>> for Assignment {
    type Error = Error;

    fn try_from(pairs: Vec<(usize, usize)>) -> Result<Self> {
        Assignment::from_pairs(pairs)
    }
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Result<Self> {
        let mut a = Assignment::new();
        for (agent, task) in pairs {
            a.insert(agent, task)?;
        }
        Ok(a)
    }

    /// Adds a pair; an agent may appear at most once.
    pub fn insert(&mut self, agent: usize, task: usize) -> Result<()> {
        if let Some(&t) = self.by_agent.get(&agent) {
            return Err(Error::InvalidAugmentation(format!(
                "agent {agent} is already assigned to task {t}"
            )));
        }
        self.by_agent.insert(agent, task);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.by_agent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_agent.is_empty()
    }

    pub fn contains_agent(&self, agent: usize) -> bool {
        self.by_agent.contains_key(&agent)
    }

    pub fn task_of(&self, agent: usize) -> Option<usize> {
        self.by_agent.get(&agent).copied()
    }

    /// Pairs in ascending agent order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.by_agent.iter().map(|(&a, &t)| (a, t))
    }

    pub fn agents_for(&self, task: usize) -> impl Iterator<Item = usize> + '_ {
        self.by_agent
            .iter()
            .filter(move |(_, &t)| t == task)
            .map(|(&a, _)| a)
    }

    /// True if every task in `0..tasks` has at least one agent.
    pub fn covers_all_tasks(&self, tasks: usize) -> bool {
        let mut covered = vec![false; tasks];
        for (_, &t) in &self.by_agent {
            if t < tasks {
                covered[t] = true;
            }
        }
        covered.into_iter().all(|c| c)
    }
}

enum Backend {
    Samples(SampleMatrix),
    ExactDiscrete { edges: Vec<Vec<Distribution>>, cap: usize },
}

/// Evaluates per-task costs `J_j(A)` for redundant assignments `A` on top of a
/// fixed initial assignment.
///
/// Evaluations are pure: the backend is frozen at construction, so identical
/// arguments always return identical values. Per-task values are cached keyed
/// by the set of agents serving that task (a task's cost depends only on its
/// own column); the cache is internally synchronized, so a `CostEvaluator` can
/// be shared across threads.
pub struct CostEvaluator {
    agents: usize,
    tasks: usize,
    backend: Backend,
    initial: Assignment,
    integer_costs: bool,
    cache: Mutex<HashMap<(usize, Vec<usize>), f64>>,
}

impl CostEvaluator {
    /// An evaluator backed by a frozen scenario tensor.
    pub fn from_samples(
        instance: &ProblemInstance,
        matrix: SampleMatrix,
        initial: Assignment,
    ) -> Result<Self> {
        if matrix.agents() != instance.agents() || matrix.tasks() != instance.tasks() {
            return Err(Error::InvalidParameter(format!(
                "sample matrix is {}x{}, instance is {}x{}",
                matrix.agents(),
                matrix.tasks(),
                instance.agents(),
                instance.tasks()
            )));
        }
        Self::check_initial(instance, &initial)?;
        Ok(CostEvaluator {
            agents: instance.agents(),
            tasks: instance.tasks(),
            backend: Backend::Samples(matrix),
            initial,
            integer_costs: false,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// An evaluator that computes expectations by exact enumeration. Every
    /// edge must carry a discrete distribution.
    pub fn exact_discrete(instance: &ProblemInstance, initial: Assignment) -> Result<Self> {
        for i in 0..instance.agents() {
            for j in 0..instance.tasks() {
                if !matches!(instance.edge(i, j), Distribution::Discrete { .. }) {
                    return Err(Error::InvalidParameter(format!(
                        "edge ({i}, {j}) is not discrete; the exact backend needs finite supports"
                    )));
                }
            }
        }
        Self::check_initial(instance, &initial)?;
        Ok(CostEvaluator {
            agents: instance.agents(),
            tasks: instance.tasks(),
            backend: Backend::ExactDiscrete {
                edges: instance.edge_grid(),
                cap: DEFAULT_ENUMERATION_CAP,
            },
            initial,
            integer_costs: false,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Rounds every task cost to the nearest integer. This realizes the
    /// integer-valued-costs mode under which the cardinality bound is exact;
    /// off by default.
    pub fn with_integer_costs(mut self) -> Self {
        self.integer_costs = true;
        self.cache = Mutex::new(HashMap::new());
        self
    }

    fn check_initial(instance: &ProblemInstance, initial: &Assignment) -> Result<()> {
        for (a, t) in initial.pairs() {
            if a >= instance.agents() || t >= instance.tasks() {
                return Err(Error::InvalidParameter(format!(
                    "initial pair ({a}, {t}) is out of range for a {}x{} instance",
                    instance.agents(),
                    instance.tasks()
                )));
            }
        }
        Ok(())
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn tasks(&self) -> usize {
        self.tasks
    }

    /// The initial non-redundant assignment the evaluator was built with.
    pub fn initial(&self) -> &Assignment {
        &self.initial
    }

    /// Agents serving `task` under `assignment` plus the initial assignment,
    /// sorted ascending.
    fn serving_agents(&self, task: usize, assignment: &Assignment) -> Vec<usize> {
        let mut agents: Vec<usize> = assignment
            .agents_for(task)
            .chain(self.initial.agents_for(task))
            .collect();
        agents.sort_unstable();
        agents.dedup();
        agents
    }

    fn column_cost(&self, task: usize, agents: &[usize]) -> Result<f64> {
        let key = (task, agents.to_vec());
        if let Some(&v) = self.cache.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let raw = match &self.backend {
            Backend::Samples(matrix) => matrix.mean_min_cost(agents, task),
            Backend::ExactDiscrete { edges, cap } => {
                let dists: Vec<&Distribution> =
                    agents.iter().map(|&i| &edges[i][task]).collect();
                exact_min_expectation_capped(&dists, *cap)?
            }
        };
        let value = if self.integer_costs { raw.round() } else { raw };
        self.cache.lock().unwrap().insert(key, value);
        Ok(value)
    }

    /// The expected cost of `task`: the mean over scenarios (or exact
    /// expectation) of the minimum cost among its serving agents.
    pub fn task_cost(&self, task: usize, assignment: &Assignment) -> Result<f64> {
        if task >= self.tasks {
            return Err(Error::InvalidParameter(format!(
                "task {task} out of range 0..{}",
                self.tasks
            )));
        }
        let agents = self.serving_agents(task, assignment);
        if agents.is_empty() {
            return Err(Error::UncoveredTask(task));
        }
        self.column_cost(task, &agents)
    }

    /// `task_cost` as if `extra` were also assigned to `task`. Lets the greedy
    /// loops score candidates without building throwaway assignments.
    pub fn task_cost_with(
        &self,
        task: usize,
        assignment: &Assignment,
        extra: usize,
    ) -> Result<f64> {
        if task >= self.tasks || extra >= self.agents {
            return Err(Error::InvalidParameter(format!(
                "pair ({extra}, {task}) out of range for a {}x{} instance",
                self.agents, self.tasks
            )));
        }
        let mut agents = self.serving_agents(task, assignment);
        match agents.binary_search(&extra) {
            Ok(_) => {}
            Err(pos) => agents.insert(pos, extra),
        }
        self.column_cost(task, &agents)
    }

    pub fn task_costs(&self, assignment: &Assignment) -> Result<Vec<f64>> {
        (0..self.tasks).map(|j| self.task_cost(j, assignment)).collect()
    }

    pub fn worst_task_cost(&self, assignment: &Assignment) -> Result<f64> {
        Ok(self
            .task_costs(assignment)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn mean_task_cost(&self, assignment: &Assignment) -> Result<f64> {
        Ok(self.task_costs(assignment)?.iter().sum::<f64>() / self.tasks as f64)
    }

    /// The average of per-task costs each floored at `budget`:
    /// `(1/M) sum_j max(J_j(A), budget)`. Always `>= budget`, with equality
    /// exactly when every task cost is within budget.
    pub fn truncated_avg_cost(&self, assignment: &Assignment, budget: f64) -> Result<f64> {
        if !(budget >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cost budget must be >= 0, got {budget}"
            )));
        }
        let costs = self.task_costs(assignment)?;
        Ok(costs.iter().map(|&c| c.max(budget)).sum::<f64>() / self.tasks as f64)
    }

    /// `base` plus `pair`, checking the one-task-per-agent constraint against
    /// both `base` and the initial assignment.
    pub fn augment(&self, base: &Assignment, pair: (usize, usize)) -> Result<Assignment> {
        let (agent, task) = pair;
        if agent >= self.agents || task >= self.tasks {
            return Err(Error::InvalidAugmentation(format!(
                "pair ({agent}, {task}) out of range for a {}x{} instance",
                self.agents, self.tasks
            )));
        }
        if self.initial.contains_agent(agent) {
            return Err(Error::InvalidAugmentation(format!(
                "agent {agent} is consumed by the initial assignment"
            )));
        }
        let mut out = base.clone();
        out.insert(agent, task)?;
        Ok(out)
    }

    /// The marginal decrease `f(A) - f(A + pair)` of a set function `f`.
    /// Nonnegative for any monotone nonincreasing cost such as a task cost or
    /// the truncated average.
    pub fn marginal_decrease<F>(
        &self,
        f: F,
        pair: (usize, usize),
        base: &Assignment,
    ) -> Result<f64>
    where
        F: Fn(&Assignment) -> Result<f64>,
    {
        let augmented = self.augment(base, pair)?;
        Ok(f(base)? - f(&augmented)?)
    }

    /// Agents used by neither `assignment` nor the initial assignment, sorted.
    pub fn unused_agents(&self, assignment: &Assignment) -> Vec<usize> {
        (0..self.agents)
            .filter(|&i| !assignment.contains_agent(i) && !self.initial.contains_agent(i))
            .collect()
    }
}

impl ProblemInstance {
    fn edge_grid(&self) -> Vec<Vec<Distribution>> {
        self.edges.clone()
    }
}

/// One diminishing-returns counterexample found by [`check_supermodular`]:
/// a chain `base subset-of superset` and a pair whose marginal decrease grew.
#[derive(Debug, Clone)]
pub struct SupermodularViolation {
    pub base: Assignment,
    pub superset: Assignment,
    pub pair: (usize, usize),
    pub delta_base: f64,
    pub delta_superset: f64,
}

/// Outcome of a randomized diminishing-returns check.
#[derive(Debug, Default)]
pub struct SupermodularReport {
    /// Trials requested.
    pub trials: usize,
    /// Trials that produced a valid chain and were actually compared.
    pub checked: usize,
    pub violations: Vec<SupermodularViolation>,
}

impl SupermodularReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples random chains `A ⊆ B ⊆ ground` and pairs `x ∉ B` (respecting
/// one-task-per-agent against the evaluator's initial assignment) and records
/// every case where the marginal decrease of `f` grows along the chain:
/// `Δ(x|A) < Δ(x|B) - 1e-9`. An empty violation list means no counterexample
/// was found; supermodular functions always produce an empty list.
pub fn check_supermodular<F>(
    ev: &CostEvaluator,
    f: F,
    ground: &[(usize, usize)],
    trials: usize,
    seed: u64,
) -> Result<SupermodularReport>
where
    F: Fn(&Assignment) -> Result<f64>,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let mut report = SupermodularReport { trials, ..Default::default() };
    if ground.is_empty() {
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = ground.to_vec();

    for _ in 0..trials {
        shuffled.shuffle(&mut rng);

        let mut superset = Assignment::new();
        for &(agent, task) in &shuffled {
            if rng.gen_bool(0.5)
                && !superset.contains_agent(agent)
                && !ev.initial().contains_agent(agent)
            {
                superset.insert(agent, task)?;
            }
        }
        let mut base = Assignment::new();
        for (agent, task) in superset.pairs() {
            if rng.gen_bool(0.5) {
                base.insert(agent, task)?;
            }
        }
        let candidates: Vec<(usize, usize)> = ground
            .iter()
            .copied()
            .filter(|&(agent, _)| {
                !superset.contains_agent(agent) && !ev.initial().contains_agent(agent)
            })
            .collect();
        let Some(&pair) = candidates.choose(&mut rng) else {
            continue;
        };

        let delta_base = ev.marginal_decrease(&f, pair, &base)?;
        let delta_superset = ev.marginal_decrease(&f, pair, &superset)?;
        report.checked += 1;
        if delta_base < delta_superset - COST_TOL {
            report.violations.push(SupermodularViolation {
                base,
                superset,
                pair,
                delta_base,
                delta_superset,
            });
        }
    }
    Ok(report)
}

/// A four-agent, two-task instance on which the *maximum* of the per-task
/// costs violates diminishing returns, even though each task cost alone is
/// supermodular.
///
/// Agents 0 and 1 form the initial assignment (costs 14 and 10). Agent 2 can
/// improve task 1, but while task 0 dominates the maximum that improvement is
/// invisible; once agent 3 (returned in the ground set) improves task 0, the
/// same pair suddenly has a positive marginal decrease.
pub fn max_cost_counterexample() -> (ProblemInstance, Assignment, Vec<(usize, usize)>) {
    let pm = |v: f64| Distribution::point_mass(v).unwrap();
    let edges = vec![
        vec![pm(14.0), pm(99.0)],
        vec![pm(99.0), pm(10.0)],
        vec![pm(99.0), pm(6.0)],
        vec![pm(7.0), pm(99.0)],
    ];
    let instance = ProblemInstance::new(edges, 4).unwrap();
    let initial = Assignment::from_pairs([(0, 0), (1, 1)]).unwrap();
    let ground = vec![(2, 1), (3, 0)];
    (instance, initial, ground)
}
