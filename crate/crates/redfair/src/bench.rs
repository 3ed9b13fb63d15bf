//! Experiment harness: run trial batches across policies and emit
//! machine-readable rows for external plotting.
//!
//! Reproducibility contract: every random choice derives from the config's
//! master seed through [`derive_seed`], trials run independently (they may be
//! scheduled on any number of threads), and rows come back ordered by trial.
//! The CSV emitted by [`rows_to_csv`] contains no timing data, so identical
//! configs produce byte-identical CSV; wall times appear only in the JSON
//! mirror of the rows.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    bottleneck_initial_assignment, brute_force_optimal, min_sum_initial_assignment,
    random_redundant, repeated_threshold, utilitarian_redundant, OracleResult,
};
use crate::dist::sample_cost_matrix;
use crate::error::{Error, Result};
use crate::netgen::{
    network_to_instance, random_bipartite, random_transport_network, DEFAULT_EXTRA_EDGE_DENSITY,
    DEFAULT_NETWORK_NODES,
};
use crate::problem::{Assignment, CostEvaluator, ProblemInstance, COST_TOL};
use crate::solver::{alpha_bound, solve_fair, AlphaMode};

/// SplitMix64-style counter derivation: the seed for sub-stream `index` of
/// `master`. Documented so that any trial (or any generator call inside it)
/// can be reproduced in isolation.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Which instances a batch draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorConfig {
    /// Fully connected bipartite graphs with independent truncated-Gaussian
    /// edges.
    Bipartite {
        agents: usize,
        tasks: usize,
        mean_range: (f64, f64),
        std_range: (f64, f64),
        truncation: f64,
    },
    /// Random transport networks; costs are per-scenario shortest-path times.
    Transport {
        #[serde(default = "default_nodes")]
        nodes: usize,
        agents: usize,
        tasks: usize,
        mean_range: (f64, f64),
        std_range: (f64, f64),
        #[serde(default = "default_density")]
        extra_edge_density: f64,
    },
}

fn default_nodes() -> usize {
    DEFAULT_NETWORK_NODES
}

fn default_density() -> f64 {
    DEFAULT_EXTRA_EDGE_DENSITY
}

impl GeneratorConfig {
    pub fn agents(&self) -> usize {
        match self {
            GeneratorConfig::Bipartite { agents, .. }
            | GeneratorConfig::Transport { agents, .. } => *agents,
        }
    }

    pub fn tasks(&self) -> usize {
        match self {
            GeneratorConfig::Bipartite { tasks, .. }
            | GeneratorConfig::Transport { tasks, .. } => *tasks,
        }
    }

    /// Generates the trial's frozen world from two derived seeds.
    fn realize(
        &self,
        samples: usize,
        instance_seed: u64,
        matrix_seed: u64,
    ) -> Result<(ProblemInstance, crate::dist::SampleMatrix)> {
        match *self {
            GeneratorConfig::Bipartite { agents, tasks, mean_range, std_range, truncation } => {
                let instance =
                    random_bipartite(agents, tasks, mean_range, std_range, truncation, instance_seed)?;
                let matrix = sample_cost_matrix(&instance, samples, matrix_seed)?;
                Ok((instance, matrix))
            }
            GeneratorConfig::Transport {
                nodes,
                agents,
                tasks,
                mean_range,
                std_range,
                extra_edge_density,
            } => {
                let net = random_transport_network(
                    nodes,
                    agents,
                    tasks,
                    mean_range,
                    std_range,
                    extra_edge_density,
                    instance_seed,
                )?;
                network_to_instance(&net, samples, matrix_seed)
            }
        }
    }
}

/// Assignment policies selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Bisection solver with the configured alpha mode.
    Fair,
    /// Bisection solver with the instance-dependent log relaxation.
    FairAlpha,
    /// Greedy sum-of-costs placement.
    Utilitarian,
    /// Uniform random placement.
    Random,
    /// Repeated bottleneck rounds.
    RepeatThreshold,
    /// Exhaustive search.
    Oracle,
}

impl Policy {
    pub const ALL: [Policy; 6] = [
        Policy::Fair,
        Policy::FairAlpha,
        Policy::Utilitarian,
        Policy::Random,
        Policy::RepeatThreshold,
        Policy::Oracle,
    ];

    pub fn token(&self) -> &'static str {
        match self {
            Policy::Fair => "fair",
            Policy::FairAlpha => "fair-alpha",
            Policy::Utilitarian => "utilitarian",
            Policy::Random => "random",
            Policy::RepeatThreshold => "repeat-threshold",
            Policy::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.token() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown policy `{s}`")))
    }
}

/// How the initial one-agent-per-task assignment is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialPolicy {
    #[default]
    Bottleneck,
    MinSum,
}

impl InitialPolicy {
    pub fn token(&self) -> &'static str {
        match self {
            InitialPolicy::Bottleneck => "bottleneck",
            InitialPolicy::MinSum => "min-sum",
        }
    }

    pub fn build(&self, mean_costs: &[Vec<f64>]) -> Result<Assignment> {
        match self {
            InitialPolicy::Bottleneck => bottleneck_initial_assignment(mean_costs),
            InitialPolicy::MinSum => min_sum_initial_assignment(mean_costs),
        }
    }
}

impl fmt::Display for InitialPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for InitialPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bottleneck" => Ok(InitialPolicy::Bottleneck),
            "min-sum" => Ok(InitialPolicy::MinSum),
            other => Err(Error::InvalidParameter(format!(
                "unknown initial policy `{other}`"
            ))),
        }
    }
}

/// A full experiment description; JSON configs deserialize into this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generator: GeneratorConfig,
    pub trials: usize,
    /// Scenario count for the frozen sample tensor.
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub policies: Vec<Policy>,
    /// Deployment sizes to sweep.
    pub deployments: Vec<usize>,
    /// Alpha mode for the `fair` policy (`fair-alpha` always uses the log
    /// bound).
    #[serde(default = "default_alpha")]
    pub alpha: AlphaMode,
    #[serde(default)]
    pub initial: InitialPolicy,
    pub seed: u64,
}

fn default_samples() -> usize {
    100
}

fn default_alpha() -> AlphaMode {
    AlphaMode::One
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be >= 1".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidParameter("no policies selected".into()));
        }
        if self.deployments.is_empty() {
            return Err(Error::InvalidParameter("no deployment sizes given".into()));
        }
        let (n, m) = (self.generator.agents(), self.generator.tasks());
        for &nd in &self.deployments {
            if nd < m || nd > n {
                return Err(Error::InvalidParameter(format!(
                    "deployment {nd} must satisfy {m} <= N_d <= {n}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Ok,
    /// The oracle enumeration exceeded its cap; the row carries no costs.
    OracleSkipped,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowStatus::Ok => "ok",
            RowStatus::OracleSkipped => "oracle-skipped",
        })
    }
}

/// One (trial, deployment, policy) measurement. Percent differences are
/// `100 * (policy - reference) / reference`, so negative values of the
/// `vs_initial` columns mean the policy improved on the initial assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub trial: usize,
    pub policy: Policy,
    pub deployment: usize,
    pub alpha: Option<f64>,
    /// Redundant pairs placed.
    pub size: Option<usize>,
    /// Redundant pairs plus the initial assignment.
    pub deployment_used: Option<usize>,
    pub max_before: f64,
    pub max_after: Option<f64>,
    pub mean_before: f64,
    pub mean_after: Option<f64>,
    pub pct_max_vs_initial: Option<f64>,
    pub pct_mean_vs_initial: Option<f64>,
    pub pct_max_vs_oracle: Option<f64>,
    /// Worst task cost equals the oracle optimum within tolerance.
    pub at_oracle: Option<bool>,
    /// The task that was worst under the initial assignment strictly improved.
    pub worst_improved: Option<bool>,
    /// Per-task strict-improvement flags, task 0 first.
    pub task_improved: Option<String>,
    pub status: RowStatus,
    pub wall_time_ms: f64,
}

/// Runs every trial of the batch (in parallel) and returns rows ordered by
/// trial, then deployment, then the config's policy order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    config.validate()?;
    let per_trial: Vec<Vec<ReportRow>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, trial))
        .collect::<Result<_>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<Vec<ReportRow>> {
    let trial_seed = derive_seed(config.seed, trial as u64);
    let (instance, matrix) = config.generator.realize(
        config.samples,
        derive_seed(trial_seed, 0),
        derive_seed(trial_seed, 1),
    )?;
    let means = instance.mean_costs();
    let initial = config.initial.build(&means)?;
    let ev = CostEvaluator::from_samples(&instance, matrix, initial.clone())?;

    let costs_before = ev.task_costs(&Assignment::new())?;
    let max_before = costs_before.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_before = costs_before.iter().sum::<f64>() / costs_before.len() as f64;
    let worst_task = costs_before
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.partial_cmp(b).expect("costs are finite"))
        .map(|(j, _)| j)
        .expect("at least one task");

    let needs_bound = config.policies.contains(&Policy::FairAlpha)
        || config.alpha == AlphaMode::Bound;
    let bound = if needs_bound { Some(alpha_bound(&ev)?.value) } else { None };
    let fair_alpha = match config.alpha {
        AlphaMode::Bound => bound.expect("bound computed above"),
        mode => mode.resolve(&ev)?,
    };

    let mut rows = Vec::new();
    for &nd in &config.deployments {
        let oracle: Option<std::result::Result<OracleResult, ()>> =
            if config.policies.contains(&Policy::Oracle) {
                match brute_force_optimal(&ev, nd) {
                    Ok(r) => Some(Ok(r)),
                    Err(Error::TooLarge(_)) => Some(Err(())),
                    Err(e) => return Err(e),
                }
            } else {
                None
            };

        for &policy in &config.policies {
            let started = Instant::now();
            let outcome: Option<(Assignment, Option<f64>)> = match policy {
                Policy::Fair => {
                    let res = solve_fair(&ev, nd, fair_alpha)?;
                    Some((res.assignment, Some(fair_alpha)))
                }
                Policy::FairAlpha => {
                    let alpha = bound.expect("bound computed above");
                    let res = solve_fair(&ev, nd, alpha)?;
                    Some((res.assignment, Some(alpha)))
                }
                Policy::Utilitarian => Some((utilitarian_redundant(&ev, nd)?, None)),
                Policy::Random => {
                    let seed = derive_seed(trial_seed, 1000 + nd as u64);
                    Some((random_redundant(&instance, &initial, nd, seed)?, None))
                }
                Policy::RepeatThreshold => {
                    Some((repeated_threshold(&means, &initial, nd)?, None))
                }
                Policy::Oracle => match oracle.as_ref().expect("oracle requested") {
                    Ok(r) => Some((r.assignment.clone(), None)),
                    Err(()) => None,
                },
            };
            let wall_time_ms = started.elapsed().as_secs_f64() * 1000.0;

            let row = match outcome {
                None => ReportRow {
                    trial,
                    policy,
                    deployment: nd,
                    alpha: None,
                    size: None,
                    deployment_used: None,
                    max_before,
                    max_after: None,
                    mean_before,
                    mean_after: None,
                    pct_max_vs_initial: None,
                    pct_mean_vs_initial: None,
                    pct_max_vs_oracle: None,
                    at_oracle: None,
                    worst_improved: None,
                    task_improved: None,
                    status: RowStatus::OracleSkipped,
                    wall_time_ms,
                },
                Some((assignment, alpha)) => {
                    let costs_after = ev.task_costs(&assignment)?;
                    let max_after =
                        costs_after.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mean_after =
                        costs_after.iter().sum::<f64>() / costs_after.len() as f64;
                    let oracle_ref = oracle.as_ref().and_then(|o| o.as_ref().ok());
                    let flags: String = costs_after
                        .iter()
                        .zip(&costs_before)
                        .map(|(a, b)| if *a < b - COST_TOL { '1' } else { '0' })
                        .collect();
                    ReportRow {
                        trial,
                        policy,
                        deployment: nd,
                        alpha,
                        size: Some(assignment.len()),
                        deployment_used: Some(assignment.len() + ev.tasks()),
                        max_before,
                        max_after: Some(max_after),
                        mean_before,
                        mean_after: Some(mean_after),
                        pct_max_vs_initial: percent(max_after, max_before),
                        pct_mean_vs_initial: percent(mean_after, mean_before),
                        pct_max_vs_oracle: oracle_ref
                            .and_then(|o| percent(max_after, o.max_cost)),
                        at_oracle: oracle_ref
                            .map(|o| (max_after - o.max_cost).abs() <= COST_TOL),
                        worst_improved: Some(
                            costs_after[worst_task] < costs_before[worst_task] - COST_TOL,
                        ),
                        task_improved: Some(flags),
                        status: RowStatus::Ok,
                        wall_time_ms,
                    }
                }
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

fn percent(value: f64, reference: f64) -> Option<f64> {
    if reference.abs() < 1e-300 {
        None
    } else {
        Some(100.0 * (value - reference) / reference)
    }
}

/// Per-(policy, deployment) aggregate of a row batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub policy: Policy,
    pub deployment: usize,
    pub rows: usize,
    pub median_pct_max: Option<f64>,
    pub q1_pct_max: Option<f64>,
    pub q3_pct_max: Option<f64>,
    pub median_pct_mean: Option<f64>,
    pub q1_pct_mean: Option<f64>,
    pub q3_pct_mean: Option<f64>,
    /// Fraction of rows whose initially-worst task strictly improved.
    pub frac_worst_improved: Option<f64>,
    /// Fraction of rows whose worst cost matches the oracle optimum, among
    /// rows where the oracle was computed.
    pub frac_at_oracle: Option<f64>,
}

/// Linear-interpolation quantile of pre-extracted values.
fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Aggregates rows per (policy, deployment): quartiles of the percent
/// differences plus improvement and optimality fractions.
pub fn summarize(rows: &[ReportRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("no rows to summarize".into()));
    }
    let mut groups: std::collections::BTreeMap<(Policy, usize), Vec<&ReportRow>> =
        std::collections::BTreeMap::new();
    for row in rows {
        groups.entry((row.policy, row.deployment)).or_default().push(row);
    }

    let mut out = Vec::new();
    for ((policy, deployment), group) in groups {
        let mut pct_max: Vec<f64> = group.iter().filter_map(|r| r.pct_max_vs_initial).collect();
        let mut pct_mean: Vec<f64> =
            group.iter().filter_map(|r| r.pct_mean_vs_initial).collect();
        pct_max.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        pct_mean.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

        let worst: Vec<bool> = group.iter().filter_map(|r| r.worst_improved).collect();
        let at_oracle: Vec<bool> = group.iter().filter_map(|r| r.at_oracle).collect();
        let frac = |v: &[bool]| {
            if v.is_empty() {
                None
            } else {
                Some(v.iter().filter(|b| **b).count() as f64 / v.len() as f64)
            }
        };

        out.push(SummaryRow {
            policy,
            deployment,
            rows: group.len(),
            median_pct_max: quantile(&pct_max, 0.5),
            q1_pct_max: quantile(&pct_max, 0.25),
            q3_pct_max: quantile(&pct_max, 0.75),
            median_pct_mean: quantile(&pct_mean, 0.5),
            q1_pct_mean: quantile(&pct_mean, 0.25),
            q3_pct_mean: quantile(&pct_mean, 0.75),
            frac_worst_improved: frac(&worst),
            frac_at_oracle: frac(&at_oracle),
        });
    }
    Ok(out)
}

fn opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

/// Fixed, versioned CSV schema for rows. Wall times are deliberately omitted
/// so reruns of the same config are byte-identical.
pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("# redfair rows v1\n");
    out.push_str(
        "trial,policy,nd,alpha,size,deployment_used,max_before,max_after,mean_before,\
         mean_after,pct_max_vs_initial,pct_mean_vs_initial,pct_max_vs_oracle,at_oracle,\
         worst_improved,task_improved,status\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.trial,
            r.policy,
            r.deployment,
            opt(&r.alpha),
            opt(&r.size),
            opt(&r.deployment_used),
            r.max_before,
            opt(&r.max_after),
            r.mean_before,
            opt(&r.mean_after),
            opt(&r.pct_max_vs_initial),
            opt(&r.pct_mean_vs_initial),
            opt(&r.pct_max_vs_oracle),
            opt(&r.at_oracle),
            opt(&r.worst_improved),
            opt(&r.task_improved),
            r.status,
        ));
    }
    out
}

/// Fixed, versioned CSV schema for summaries.
pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("# redfair summary v1\n");
    out.push_str(
        "policy,nd,rows,median_pct_max,q1_pct_max,q3_pct_max,median_pct_mean,q1_pct_mean,\
         q3_pct_mean,frac_worst_improved,frac_at_oracle\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.policy,
            r.deployment,
            r.rows,
            opt(&r.median_pct_max),
            opt(&r.q1_pct_max),
            opt(&r.q3_pct_max),
            opt(&r.median_pct_mean),
            opt(&r.q1_pct_mean),
            opt(&r.q3_pct_mean),
            opt(&r.frac_worst_improved),
            opt(&r.frac_at_oracle),
        ));
    }
    out
}
