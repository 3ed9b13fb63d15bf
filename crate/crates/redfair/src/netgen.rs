//! Random instance generators: fully connected bipartite cost graphs and
//! transport networks with stochastic edge travel times.
//!
//! Transport networks turn into assignment instances by scenario sampling:
//! every scenario draws one travel time per network edge and takes shortest
//! paths from each agent's node to each task's node. Costs induced this way
//! are correlated across agent-task pairs through shared edges, unlike the
//! independent edges of the bipartite generator; the cost model permits both.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{scenario_rng, Distribution, SampleMatrix};
use crate::error::{Error, Result};
use crate::problem::ProblemInstance;

/// Default node count for generated transport networks.
pub const DEFAULT_NETWORK_NODES: usize = 50;
/// Default probability of adding each non-tree edge.
pub const DEFAULT_EXTRA_EDGE_DENSITY: f64 = 0.2;

/// An undirected travel network with stochastic edge times and fixed agent
/// and task locations.
///
/// Serializes as
/// `{"nodes":...,"edges":[[u,v,{dist}],...],"agents":[...],"tasks":[...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork", into = "RawNetwork")]
pub struct TransportNetwork {
    nodes: usize,
    edges: Vec<(usize, usize, Distribution)>,
    agents: Vec<usize>,
    tasks: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawNetwork {
    nodes: usize,
    edges: Vec<(usize, usize, Distribution)>,
    agents: Vec<usize>,
    tasks: Vec<usize>,
}

impl From<TransportNetwork> for RawNetwork {
    fn from(n: TransportNetwork) -> Self {
        RawNetwork { nodes: n.nodes, edges: n.edges, agents: n.agents, tasks: n.tasks }
    }
}

impl TryFrom<RawNetwork> for TransportNetwork {
    type Error = Error;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        TransportNetwork::new(raw.nodes, raw.edges, raw.agents, raw.tasks)
    }
}

impl TransportNetwork {
    pub fn new(
        nodes: usize,
        edges: Vec<(usize, usize, Distribution)>,
        agents: Vec<usize>,
        tasks: Vec<usize>,
    ) -> Result<Self> {
        if nodes == 0 || agents.is_empty() || tasks.is_empty() {
            return Err(Error::InvalidParameter(
                "a network needs nodes, agents and tasks".into(),
            ));
        }
        for &(u, v, ref d) in &edges {
            if u >= nodes || v >= nodes {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) references a node outside 0..{nodes}"
                )));
            }
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at node {u}")));
            }
            d.validate()?;
        }
        for class in [&agents, &tasks] {
            let mut seen = HashSet::new();
            for &loc in class {
                if loc >= nodes {
                    return Err(Error::InvalidParameter(format!(
                        "location {loc} outside 0..{nodes}"
                    )));
                }
                if !seen.insert(loc) {
                    return Err(Error::InvalidParameter(format!(
                        "duplicate location {loc} within one class"
                    )));
                }
            }
        }
        let net = TransportNetwork { nodes, edges, agents, tasks };
        if !net.is_connected() {
            return Err(Error::Disconnected(
                "the edge set does not connect all nodes".into(),
            ));
        }
        Ok(net)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize, Distribution)] {
        &self.edges
    }

    pub fn agent_locations(&self) -> &[usize] {
        &self.agents
    }

    pub fn task_locations(&self) -> &[usize] {
        &self.tasks
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.nodes];
        for (idx, &(u, v, _)) in self.edges.iter().enumerate() {
            adj[u].push((v, idx));
            adj[v].push((u, idx));
        }
        adj
    }

    fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.nodes];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.nodes
    }
}

/// A fully connected bipartite instance with independent truncated-Gaussian
/// edges: per edge, the mean is drawn uniformly from `mean_range`, the
/// standard deviation from `std_range`, and the distribution is truncated
/// below at `truncation`. The deployment size defaults to the task count;
/// override it with [`ProblemInstance::with_deployment`].
pub fn random_bipartite(
    agents: usize,
    tasks: usize,
    mean_range: (f64, f64),
    std_range: (f64, f64),
    truncation: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    check_range("mean", mean_range)?;
    check_range("std", std_range)?;
    if std_range.0 <= 0.0 {
        return Err(Error::InvalidParameter(
            "standard deviations must be strictly positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |(lo, hi): (f64, f64)| lo + rng.gen::<f64>() * (hi - lo);
    let edges: Vec<Vec<Distribution>> = (0..agents)
        .map(|_| {
            (0..tasks)
                .map(|_| {
                    let mean = uniform(mean_range);
                    let std = uniform(std_range);
                    Distribution::truncated_gaussian(mean, std, truncation)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    ProblemInstance::new(edges, tasks)
}

/// A connected random transport network: a uniform random spanning tree plus
/// each remaining node pair independently with probability
/// `extra_edge_density`. Edge travel times are Gaussians truncated at zero
/// with means from `mean_range` and standard deviations from `std_range`.
/// Agent and task locations are drawn without replacement within each class;
/// an agent may share a node with a task.
pub fn random_transport_network(
    nodes: usize,
    agents: usize,
    tasks: usize,
    mean_range: (f64, f64),
    std_range: (f64, f64),
    extra_edge_density: f64,
    seed: u64,
) -> Result<TransportNetwork> {
    if nodes < agents.max(tasks) || nodes < 2 {
        return Err(Error::InvalidParameter(format!(
            "{nodes} nodes cannot host {agents} agents and {tasks} tasks"
        )));
    }
    if !(0.0..=1.0).contains(&extra_edge_density) {
        return Err(Error::InvalidParameter(format!(
            "extra edge density must lie in [0, 1], got {extra_edge_density}"
        )));
    }
    check_range("mean", mean_range)?;
    check_range("std", std_range)?;
    if std_range.0 <= 0.0 {
        return Err(Error::InvalidParameter(
            "standard deviations must be strictly positive".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Random spanning tree over a random node order.
    let mut order: Vec<usize> = (0..nodes).collect();
    order.shuffle(&mut rng);
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut tree = HashSet::new();
    for k in 1..nodes {
        let parent = order[rng.gen_range(0..k)];
        let (u, v) = (order[k].min(parent), order[k].max(parent));
        pairs.push((u, v));
        tree.insert((u, v));
    }
    for u in 0..nodes {
        for v in u + 1..nodes {
            if !tree.contains(&(u, v)) && rng.gen::<f64>() < extra_edge_density {
                pairs.push((u, v));
            }
        }
    }

    let mut uniform = |(lo, hi): (f64, f64)| lo + rng.gen::<f64>() * (hi - lo);
    let mut edges = Vec::with_capacity(pairs.len());
    for (u, v) in pairs {
        let mean = uniform(mean_range);
        let std = uniform(std_range);
        edges.push((u, v, Distribution::truncated_gaussian(mean, std, 0.0)?));
    }

    let pick_locations = |count: usize, rng: &mut ChaCha8Rng| {
        let mut all: Vec<usize> = (0..nodes).collect();
        let (chosen, _) = all.partial_shuffle(rng, count);
        chosen.to_vec()
    };
    let agent_locs = pick_locations(agents, &mut rng);
    let task_locs = pick_locations(tasks, &mut rng);

    TransportNetwork::new(nodes, edges, agent_locs, task_locs)
}

#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance via reversed comparison.
        other
            .dist
            .partial_cmp(&self.dist)
            .expect("distances are finite")
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(usize, usize)>], weights: &[f64], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem { dist: 0.0, node: source });
    while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, e) in &adj[u] {
            let nd = d + weights[e];
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapItem { dist: nd, node: v });
            }
        }
    }
    dist
}

/// Realizes an assignment instance from a transport network by scenario
/// sampling: for each scenario, every edge time is drawn once (stream derived
/// from `(seed, scenario)`) and `matrix[s][i][j]` is the shortest-path time
/// from agent `i`'s node to task `j`'s node under those weights. The returned
/// instance carries the per-edge empirical distributions of those times, and
/// its deployment size defaults to the task count.
pub fn network_to_instance(
    net: &TransportNetwork,
    scenarios: usize,
    seed: u64,
) -> Result<(ProblemInstance, SampleMatrix)> {
    if scenarios == 0 {
        return Err(Error::InvalidParameter(
            "at least one scenario is required".into(),
        ));
    }
    let n = net.agent_locations().len();
    let m = net.task_locations().len();
    if n < m {
        return Err(Error::InfeasibleInstance(format!(
            "{n} agents cannot cover {m} tasks"
        )));
    }
    let adj = net.adjacency();
    let mut samples = vec![0.0; scenarios * n * m];

    for s in 0..scenarios {
        let mut rng = scenario_rng(seed, s);
        let weights: Vec<f64> = net.edges().iter().map(|(_, _, d)| d.sample(&mut rng)).collect();
        for (j, &task_node) in net.task_locations().iter().enumerate() {
            let dist = dijkstra(&adj, &weights, task_node);
            for (i, &agent_node) in net.agent_locations().iter().enumerate() {
                let d = dist[agent_node];
                if !d.is_finite() {
                    return Err(Error::Disconnected(format!(
                        "task node {task_node} cannot reach agent node {agent_node}"
                    )));
                }
                samples[(s * n + i) * m + j] = d;
            }
        }
    }

    let mut edges = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(m);
        for j in 0..m {
            let values: Vec<f64> =
                (0..scenarios).map(|s| samples[(s * n + i) * m + j]).collect();
            row.push(Distribution::empirical(&values)?);
        }
        edges.push(row);
    }
    let instance = ProblemInstance::new(edges, m)?;
    let matrix = SampleMatrix::from_samples(samples, scenarios, n, m, seed)?;
    Ok((instance, matrix))
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::InvalidParameter(format!(
            "invalid {name} range [{lo}, {hi}]"
        )));
    }
    Ok(())
}
