//! Initial-assignment constructors and comparison policies.
//!
//! Initial assignments are one-agent-per-task matchings on mean costs, either
//! bottleneck-optimal (threshold algorithm) or sum-optimal (Hungarian).
//! Redundancy baselines mirror the policies the solver is benchmarked
//! against: uniform random placement, repeated bottleneck rounds, greedy
//! sum-of-costs ("utilitarian") placement, and an exhaustive oracle.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Assignment, CostEvaluator, ProblemInstance, COST_TOL};

/// Default cap on oracle set evaluations.
pub const DEFAULT_ORACLE_CAP: u64 = 10_000_000;

/// Kuhn's augmenting-path maximum bipartite matching.
/// `adj[l]` lists the right vertices reachable from left vertex `l`.
/// Returns the matching size and, per right vertex, its matched left vertex.
fn max_matching(n_right: usize, adj: &[Vec<usize>]) -> (usize, Vec<Option<usize>>) {
    fn augment(
        l: usize,
        adj: &[Vec<usize>],
        matched: &mut [Option<usize>],
        visited: &mut [bool],
    ) -> bool {
        for &r in &adj[l] {
            if visited[r] {
                continue;
            }
            visited[r] = true;
            if matched[r].map_or(true, |prev| augment(prev, adj, matched, visited)) {
                matched[r] = Some(l);
                return true;
            }
        }
        false
    }

    let mut matched = vec![None; n_right];
    let mut size = 0;
    for l in 0..adj.len() {
        let mut visited = vec![false; n_right];
        if augment(l, adj, &mut matched, &mut visited) {
            size += 1;
        }
    }
    (size, matched)
}

/// Bottleneck matching that covers every row (`rows <= cols` required):
/// binary search over the sorted distinct costs, testing each threshold with
/// a maximum-cardinality matching restricted to edges at or below it.
/// Returns the matched column per row.
fn bottleneck_full_matching(cost: &[Vec<f64>]) -> Result<Vec<usize>> {
    let rows = cost.len();
    let cols = cost.first().map(|r| r.len()).unwrap_or(0);
    debug_assert!(rows >= 1 && rows <= cols);

    let mut thresholds: Vec<f64> = cost.iter().flatten().copied().collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).expect("costs are finite"));
    thresholds.dedup();

    let matching_at = |t: f64| {
        let adj: Vec<Vec<usize>> = cost
            .iter()
            .map(|row| (0..cols).filter(|&c| row[c] <= t).collect())
            .collect();
        max_matching(cols, &adj)
    };

    let mut lo = 0usize;
    let mut hi = thresholds.len() - 1;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if matching_at(thresholds[mid]).0 == rows {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let (size, matched) = matching_at(thresholds[lo]);
    if size != rows {
        return Err(Error::InfeasibleInstance(
            "no complete matching exists even at the largest cost".into(),
        ));
    }
    let mut row_to_col = vec![usize::MAX; rows];
    for (c, l) in matched.into_iter().enumerate() {
        if let Some(l) = l {
            row_to_col[l] = c;
        }
    }
    Ok(row_to_col)
}

/// Minimum-sum matching covering every row (`rows <= cols` required), by the
/// potentials form of the Hungarian algorithm. Returns the column per row.
fn min_sum_matching(cost: &[Vec<f64>]) -> Vec<usize> {
    let rows = cost.len();
    let cols = cost[0].len();
    debug_assert!(rows >= 1 && rows <= cols);

    let inf = f64::INFINITY;
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut matched = vec![0usize; cols + 1]; // column -> row, 1-based, 0 = free
    let mut way = vec![0usize; cols + 1];

    for i in 1..=rows {
        matched[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        // Flip the augmenting path.
        while j0 != 0 {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
        }
    }

    let mut row_to_col = vec![usize::MAX; rows];
    for j in 1..=cols {
        if matched[j] != 0 {
            row_to_col[matched[j] - 1] = j - 1;
        }
    }
    row_to_col
}

fn check_mean_matrix(mean_costs: &[Vec<f64>]) -> Result<(usize, usize)> {
    let agents = mean_costs.len();
    let tasks = mean_costs.first().map(|r| r.len()).unwrap_or(0);
    if tasks == 0 {
        return Err(Error::InvalidParameter("empty mean-cost matrix".into()));
    }
    if mean_costs.iter().any(|r| r.len() != tasks) {
        return Err(Error::InvalidParameter("ragged mean-cost matrix".into()));
    }
    if mean_costs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("mean costs must be finite".into()));
    }
    if agents < tasks {
        return Err(Error::InfeasibleInstance(format!(
            "{agents} agents cannot cover {tasks} tasks"
        )));
    }
    Ok((agents, tasks))
}

/// One agent per task minimizing the *maximum* selected mean cost
/// (linear bottleneck assignment via the threshold algorithm).
pub fn bottleneck_initial_assignment(mean_costs: &[Vec<f64>]) -> Result<Assignment> {
    let (agents, tasks) = check_mean_matrix(mean_costs)?;
    // Rows must be the fully matched side: transpose to tasks x agents.
    let transposed: Vec<Vec<f64>> = (0..tasks)
        .map(|j| (0..agents).map(|i| mean_costs[i][j]).collect())
        .collect();
    let task_to_agent = bottleneck_full_matching(&transposed)?;
    Assignment::from_pairs(task_to_agent.into_iter().enumerate().map(|(j, i)| (i, j)))
}

/// One agent per task minimizing the *sum* of selected mean costs
/// (rectangular minimum-cost assignment).
pub fn min_sum_initial_assignment(mean_costs: &[Vec<f64>]) -> Result<Assignment> {
    let (agents, tasks) = check_mean_matrix(mean_costs)?;
    let transposed: Vec<Vec<f64>> = (0..tasks)
        .map(|j| (0..agents).map(|i| mean_costs[i][j]).collect())
        .collect();
    let task_to_agent = min_sum_matching(&transposed);
    Assignment::from_pairs(task_to_agent.into_iter().enumerate().map(|(j, i)| (i, j)))
}

/// Uniformly selects `deployment - M` agents unused by `initial` and assigns
/// each to a uniformly random task. Deterministic given the seed.
pub fn random_redundant(
    instance: &ProblemInstance,
    initial: &Assignment,
    deployment: usize,
    seed: u64,
) -> Result<Assignment> {
    let (n, m) = (instance.agents(), instance.tasks());
    if deployment < m || deployment > n {
        return Err(Error::InfeasibleInstance(format!(
            "deployment {deployment} must satisfy {m} <= N_d <= {n}"
        )));
    }
    let mut unused: Vec<usize> = (0..n).filter(|i| !initial.contains_agent(*i)).collect();
    let take = (deployment - m).min(unused.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (chosen, _) = unused.partial_shuffle(&mut rng, take);
    let mut out = Assignment::new();
    for &mut agent in chosen {
        out.insert(agent, rng.gen_range(0..m))?;
    }
    Ok(out)
}

/// Rounds of bottleneck matching over the remaining unused agents: each round
/// gives every task at most one extra agent. A round that would exceed the
/// budget is truncated to its cheapest pairs by mean cost.
pub fn repeated_threshold(
    mean_costs: &[Vec<f64>],
    initial: &Assignment,
    deployment: usize,
) -> Result<Assignment> {
    let (agents, tasks) = check_mean_matrix(mean_costs)?;
    if deployment < tasks || deployment > agents {
        return Err(Error::InfeasibleInstance(format!(
            "deployment {deployment} must satisfy {tasks} <= N_d <= {agents}"
        )));
    }
    let mut unused: Vec<usize> =
        (0..agents).filter(|i| !initial.contains_agent(*i)).collect();
    let mut budget = deployment - tasks;
    let mut out = Assignment::new();

    while budget > 0 && !unused.is_empty() {
        let round: Vec<(usize, usize)> = if unused.len() >= tasks {
            // Match every task to a distinct unused agent.
            let sub: Vec<Vec<f64>> = (0..tasks)
                .map(|j| unused.iter().map(|&i| mean_costs[i][j]).collect())
                .collect();
            bottleneck_full_matching(&sub)?
                .into_iter()
                .enumerate()
                .map(|(j, k)| (unused[k], j))
                .collect()
        } else {
            // Fewer agents than tasks left: match every agent instead.
            let sub: Vec<Vec<f64>> = unused
                .iter()
                .map(|&i| (0..tasks).map(|j| mean_costs[i][j]).collect())
                .collect();
            bottleneck_full_matching(&sub)?
                .into_iter()
                .enumerate()
                .map(|(k, j)| (unused[k], j))
                .collect()
        };

        if round.len() <= budget {
            budget -= round.len();
            for &(agent, task) in &round {
                out.insert(agent, task)?;
            }
            unused.retain(|i| !round.iter().any(|&(a, _)| a == *i));
        } else {
            let mut by_cost = round;
            by_cost.sort_by(|&(a1, t1), &(a2, t2)| {
                mean_costs[a1][t1]
                    .partial_cmp(&mean_costs[a2][t2])
                    .expect("costs are finite")
                    .then(a1.cmp(&a2))
                    .then(t1.cmp(&t2))
            });
            for &(agent, task) in by_cost.iter().take(budget) {
                out.insert(agent, task)?;
            }
            budget = 0;
        }
    }
    Ok(out)
}

/// Greedily adds the pair with the largest decrease of the summed task costs
/// until `deployment - M` pairs are placed or no pair helps. Ties break toward
/// the lowest agent id, then the lowest task id.
pub fn utilitarian_redundant(ev: &CostEvaluator, deployment: usize) -> Result<Assignment> {
    let (n, m) = (ev.agents(), ev.tasks());
    if deployment < m || deployment > n {
        return Err(Error::InfeasibleInstance(format!(
            "deployment {deployment} must satisfy {m} <= N_d <= {n}"
        )));
    }
    for j in 0..m {
        if ev.initial().agents_for(j).next().is_none() {
            return Err(Error::UncoveredTask(j));
        }
    }
    let budget = deployment - m;
    let mut out = Assignment::new();
    let mut costs = ev.task_costs(&out)?;
    let mut used: Vec<bool> = (0..n).map(|i| ev.initial().contains_agent(i)).collect();

    for _ in 0..budget {
        let mut best: Option<(f64, usize, usize, f64)> = None;
        for agent in 0..n {
            if used[agent] {
                continue;
            }
            for task in 0..m {
                let new_cost = ev.task_cost_with(task, &out, agent)?;
                let dec = costs[task] - new_cost;
                if best.map_or(true, |(b, ..)| dec > b) {
                    best = Some((dec, agent, task, new_cost));
                }
            }
        }
        match best {
            Some((dec, agent, task, new_cost)) if dec > COST_TOL => {
                out.insert(agent, task)?;
                used[agent] = true;
                costs[task] = new_cost;
            }
            _ => break,
        }
    }
    Ok(out)
}

/// Exhaustive-search optimum over redundant assignments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub assignment: Assignment,
    pub max_cost: f64,
    pub sets_examined: u64,
}

/// Enumerates every redundant assignment of size at most `deployment - M`
/// over unused agents and all tasks, returning one that minimizes the worst
/// task cost. Ties break toward smaller assignments, then lexicographically
/// smaller pair lists. Uses the default evaluation cap.
pub fn brute_force_optimal(ev: &CostEvaluator, deployment: usize) -> Result<OracleResult> {
    brute_force_optimal_capped(ev, deployment, DEFAULT_ORACLE_CAP)
}

/// [`brute_force_optimal`] with an explicit cap on set evaluations.
pub fn brute_force_optimal_capped(
    ev: &CostEvaluator,
    deployment: usize,
    cap: u64,
) -> Result<OracleResult> {
    let (n, m) = (ev.agents(), ev.tasks());
    if deployment < m || deployment > n {
        return Err(Error::InfeasibleInstance(format!(
            "deployment {deployment} must satisfy {m} <= N_d <= {n}"
        )));
    }
    for j in 0..m {
        if ev.initial().agents_for(j).next().is_none() {
            return Err(Error::UncoveredTask(j));
        }
    }
    let unused = ev.unused_agents(&Assignment::new());
    let budget = (deployment - m).min(unused.len());

    let mut total: u128 = 0;
    for k in 0..=budget {
        total += binomial(unused.len() as u128, k as u128) * (m as u128).pow(k as u32);
        if total > cap as u128 {
            return Err(Error::TooLarge(format!(
                "oracle would evaluate more than {cap} sets"
            )));
        }
    }

    let mut best: Option<(f64, Assignment)> = None;
    let mut examined: u64 = 0;
    let mut combo = Vec::new();
    for k in 0..=budget {
        for_each_combination(unused.len(), k, &mut combo, &mut |chosen| {
            let mut tasks = vec![0usize; chosen.len()];
            loop {
                let assignment = Assignment::from_pairs(
                    chosen.iter().zip(&tasks).map(|(&c, &t)| (unused[c], t)),
                )?;
                let cost = ev.worst_task_cost(&assignment)?;
                examined += 1;
                if best.as_ref().map_or(true, |(b, _)| cost < *b) {
                    best = Some((cost, assignment));
                }
                // Odometer over task tuples.
                let mut pos = tasks.len();
                loop {
                    if pos == 0 {
                        return Ok(());
                    }
                    pos -= 1;
                    tasks[pos] += 1;
                    if tasks[pos] < m {
                        break;
                    }
                    tasks[pos] = 0;
                }
            }
        })?;
    }

    let (max_cost, assignment) = best.expect("the empty assignment is always examined");
    Ok(OracleResult { assignment, max_cost, sets_examined: examined })
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out: u128 = 1;
    for i in 0..k {
        out = out * (n - i) / (i + 1);
    }
    out
}

/// Lexicographic k-combinations of `0..n`.
fn for_each_combination(
    n: usize,
    k: usize,
    scratch: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if k > n {
        return Ok(());
    }
    scratch.clear();
    scratch.extend(0..k);
    loop {
        f(scratch)?;
        // Advance to the next combination.
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            if scratch[i] != i + n - k {
                break;
            }
            if i == 0 {
                return Ok(());
            }
        }
        scratch[i] += 1;
        for j in i + 1..k {
            scratch[j] = scratch[j - 1] + 1;
        }
    }
}
