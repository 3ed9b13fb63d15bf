//! Acceptance suite: one test per release criterion, each printing a one-line
//! verdict (run with `cargo test --test acceptance -- --nocapture` to see the
//! lines for passing criteria).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use redfair::bench::{rows_to_csv, summary_to_csv};
use redfair::greedy::greedy_redundant_assignment;
use redfair::problem::COST_TOL;
use redfair::{
    alpha_bound, bottleneck_initial_assignment, brute_force_optimal, check_supermodular,
    derive_seed, iteration_budget, max_cost_counterexample, min_sum_initial_assignment,
    random_bipartite, run_experiment, solve_fair, summarize, AlphaMode, Assignment,
    CostEvaluator, Distribution, ExperimentConfig, GeneratorConfig, InitialPolicy, Policy,
    ProblemInstance,
};

fn pass(criterion: usize, label: &str, detail: &str, started: Instant, budget_s: u64) {
    let elapsed = started.elapsed().as_secs_f64();
    println!("criterion {criterion} ({label}): PASS [{detail}; {elapsed:.1}s]");
    assert!(
        elapsed <= budget_s as f64,
        "criterion {criterion} exceeded its {budget_s}s runtime budget ({elapsed:.1}s)"
    );
}

/// A fully connected instance with small random discrete supports, so the
/// exact-expectation backend applies.
fn random_discrete_instance(agents: usize, tasks: usize, seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<Vec<Distribution>> = (0..agents)
        .map(|_| {
            (0..tasks)
                .map(|_| {
                    let atoms = 2 + (rng.gen::<f64>() < 0.5) as usize;
                    let values: Vec<f64> =
                        (0..atoms).map(|_| 5.0 + 20.0 * rng.gen::<f64>()).collect();
                    let weights: Vec<f64> =
                        (0..atoms).map(|_| 0.05 + rng.gen::<f64>()).collect();
                    let total: f64 = weights.iter().sum();
                    Distribution::discrete(
                        values.into_iter().zip(weights.into_iter().map(|w| w / total)).collect(),
                    )
                    .unwrap()
                })
                .collect()
        })
        .collect();
    ProblemInstance::new(edges, tasks).unwrap()
}

/// Criterion 1: with the log relaxation, the solver's worst task cost never
/// exceeds the brute-force optimum at the deployment budget, and its size
/// never exceeds the relaxed cardinality, on 200 small exact instances.
///
/// The cardinality-relaxation guarantee is exact for integer-valued costs, so
/// this check runs the evaluator in guarantee-exact (integer rounding) mode;
/// without it, the final bisection granule of `1/M` can leave the achieved
/// cost a fraction above the optimum.
#[test]
fn criterion_1_cost_and_cardinality_guarantee() {
    let started = Instant::now();
    let mut cells = 0usize;
    let mut failures = Vec::new();

    for trial in 0..200u64 {
        let agents = 6 + (trial as usize % 5); // 6..=10
        let instance = random_discrete_instance(agents, 2, derive_seed(0xAC01, trial));
        let initial = bottleneck_initial_assignment(&instance.mean_costs()).unwrap();
        let ev = CostEvaluator::exact_discrete(&instance, initial)
            .unwrap()
            .with_integer_costs();
        let alpha = alpha_bound(&ev).unwrap().value;

        for nd in [3usize, 4, 5] {
            let res = solve_fair(&ev, nd, alpha).unwrap();
            let oracle = brute_force_optimal(&ev, nd).unwrap();
            let achieved = ev.worst_task_cost(&res.assignment).unwrap();
            cells += 1;
            if achieved > oracle.max_cost + 1e-9 {
                failures.push(format!(
                    "trial {trial} nd {nd}: cost {achieved} > oracle {}",
                    oracle.max_cost
                ));
            }
            if res.assignment.len() as f64 > alpha * (nd - 2) as f64 + 1e-9 {
                failures.push(format!(
                    "trial {trial} nd {nd}: size {} > alpha*(nd-M) = {}",
                    res.assignment.len(),
                    alpha * (nd - 2) as f64
                ));
            }
        }
    }

    assert!(
        failures.is_empty(),
        "criterion 1 (theorem guarantee): FAIL in {}/{cells} cells\n{}",
        failures.len(),
        failures.join("\n")
    );
    pass(1, "theorem guarantee", &format!("{cells}/{cells} cells"), started, 300);
}

/// Criterion 2: the 18-agent/2-task optimality study. The log relaxation must
/// be super-optimal with oversized deployments; alpha = 1 must sit at the
/// oracle optimum in at least 70% of cells and within 10% in at least 95%;
/// and the computed relaxation factors are checked against the band
/// [3.8, 4.2].
#[test]
fn criterion_2_small_instance_optimality_study() {
    let started = Instant::now();
    let config = ExperimentConfig {
        generator: GeneratorConfig::Bipartite {
            agents: 18,
            tasks: 2,
            mean_range: (15.0, 20.0),
            std_range: (5.0, 10.0),
            truncation: 5.0,
        },
        trials: 200,
        samples: 100,
        policies: vec![Policy::Fair, Policy::FairAlpha, Policy::Oracle],
        deployments: vec![3, 4, 5, 6, 7],
        alpha: AlphaMode::One,
        initial: InitialPolicy::Bottleneck,
        seed: 20260810,
    };
    let rows = run_experiment(&config).unwrap();
    let relaxed: Vec<_> = rows.iter().filter(|r| r.policy == Policy::FairAlpha).collect();
    let unit: Vec<_> = rows.iter().filter(|r| r.policy == Policy::Fair).collect();

    let mut clauses = Vec::new();

    let alphas: Vec<f64> = relaxed.iter().map(|r| r.alpha.unwrap()).collect();
    let (lo, hi) = alphas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)));
    let in_window = alphas.iter().filter(|a| (3.8..=4.2).contains(*a)).count();
    clauses.push((
        in_window == alphas.len(),
        format!(
            "alpha values in [3.8, 4.2]: {in_window}/{} (observed range [{lo:.4}, {hi:.4}])",
            alphas.len()
        ),
    ));

    let super_optimal =
        relaxed.iter().filter(|r| r.pct_max_vs_oracle.unwrap() <= 1e-7).count();
    clauses.push((
        super_optimal == relaxed.len(),
        format!("relaxed alpha super-optimal or equal vs oracle: {super_optimal}/{}", relaxed.len()),
    ));

    let oversized =
        relaxed.iter().filter(|r| r.deployment_used.unwrap() > r.deployment).count();
    clauses.push((
        oversized == relaxed.len(),
        format!("relaxed alpha deployment exceeds N_d: {oversized}/{}", relaxed.len()),
    ));

    let at_oracle =
        unit.iter().filter(|r| r.at_oracle.unwrap()).count() as f64 / unit.len() as f64;
    clauses.push((at_oracle >= 0.70, format!("alpha=1 at oracle optimum: {at_oracle:.3} >= 0.70")));

    let within10 = unit.iter().filter(|r| r.pct_max_vs_oracle.unwrap() <= 10.0 + 1e-9).count()
        as f64
        / unit.len() as f64;
    clauses.push((within10 >= 0.95, format!("alpha=1 within 10% of optimum: {within10:.3} >= 0.95")));

    let report: String = clauses
        .iter()
        .map(|(ok, msg)| format!("  [{}] {msg}\n", if *ok { "ok" } else { "FAIL" }))
        .collect();
    assert!(
        clauses.iter().all(|(ok, _)| *ok),
        "criterion 2 (optimality study): FAIL\n{report}"
    );
    pass(2, "optimality study", &report.replace('\n', "; "), started, 900);
}

/// Criterion 3: benchmark ordering on 40 agents / 10 tasks. The median
/// improvement in worst task cost must order fair > repeated-threshold >
/// random >= 0 strictly at each deployment size.
#[test]
fn criterion_3_benchmark_ordering() {
    let started = Instant::now();
    let config = ExperimentConfig {
        generator: GeneratorConfig::Bipartite {
            agents: 40,
            tasks: 10,
            mean_range: (15.0, 20.0),
            std_range: (5.0, 10.0),
            truncation: 5.0,
        },
        trials: 200,
        samples: 100,
        policies: vec![Policy::Fair, Policy::RepeatThreshold, Policy::Random],
        deployments: vec![15, 20, 25, 30],
        alpha: AlphaMode::One,
        initial: InitialPolicy::Bottleneck,
        seed: 31337,
    };
    let rows = run_experiment(&config).unwrap();
    let summary = summarize(&rows).unwrap();
    let median = |policy: Policy, nd: usize| -> f64 {
        summary
            .iter()
            .find(|s| s.policy == policy && s.deployment == nd)
            .and_then(|s| s.median_pct_max)
            .unwrap()
    };

    let mut failures = Vec::new();
    let mut detail = String::new();
    for nd in [15usize, 20, 25, 30] {
        // Percent differences are negative for improvements, so the required
        // improvement ordering is fair < repeat < random <= 0 here.
        let fair = median(Policy::Fair, nd);
        let repeat = median(Policy::RepeatThreshold, nd);
        let random = median(Policy::Random, nd);
        detail.push_str(&format!(
            "nd={nd}: fair {fair:+.3} repeat {repeat:+.3} random {random:+.3}; "
        ));
        if !(fair < repeat) {
            failures.push(format!("nd={nd}: fair ({fair}) not strictly better than repeat ({repeat})"));
        }
        if !(repeat < random) {
            failures.push(format!("nd={nd}: repeat ({repeat}) not strictly better than random ({random})"));
        }
        if !(random <= 1e-9) {
            failures.push(format!("nd={nd}: random median ({random}) worsens the max"));
        }
    }

    assert!(
        failures.is_empty(),
        "criterion 3 (benchmark ordering): FAIL\n{}\nmedians: {detail}",
        failures.join("\n")
    );
    pass(3, "benchmark ordering", &detail, started, 1200);
}

/// Criterion 4: transport-network case study (32 agents, 16 tasks, N_d = 20).
/// Fairness must always help the worst-off task while the utilitarian policy
/// misses it in at least 40% of trials; the utilitarian wins on median mean
/// improvement and loses strictly on median max improvement.
#[test]
fn criterion_4_transport_case_study() {
    let started = Instant::now();
    let config = ExperimentConfig {
        // Node count and extra-edge density are declared topology assumptions
        // of the case study (the reference behavior is qualitative).
        generator: GeneratorConfig::Transport {
            nodes: 100,
            agents: 32,
            tasks: 16,
            mean_range: (10.0, 20.0),
            std_range: (5.0, 10.0),
            extra_edge_density: 0.1,
        },
        trials: 100,
        samples: 100,
        policies: vec![Policy::Fair, Policy::Utilitarian],
        deployments: vec![20],
        alpha: AlphaMode::One,
        initial: InitialPolicy::MinSum,
        seed: 777,
    };
    let rows = run_experiment(&config).unwrap();
    let fair: Vec<_> = rows.iter().filter(|r| r.policy == Policy::Fair).collect();
    let util: Vec<_> = rows.iter().filter(|r| r.policy == Policy::Utilitarian).collect();

    let frac = |rows: &[&redfair::ReportRow], f: &dyn Fn(&redfair::ReportRow) -> bool| {
        rows.iter().filter(|r| f(r)).count() as f64 / rows.len() as f64
    };
    let median = |mut v: Vec<f64>| -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };

    let fair_worst = frac(&fair, &|r| r.worst_improved.unwrap());
    let util_fails_worst = frac(&util, &|r| !r.worst_improved.unwrap());
    let fair_med_mean = median(fair.iter().map(|r| r.pct_mean_vs_initial.unwrap()).collect());
    let util_med_mean = median(util.iter().map(|r| r.pct_mean_vs_initial.unwrap()).collect());
    let fair_med_max = median(fair.iter().map(|r| r.pct_max_vs_initial.unwrap()).collect());
    let util_med_max = median(util.iter().map(|r| r.pct_max_vs_initial.unwrap()).collect());

    let clauses = [
        (fair_worst == 1.0, format!("fair helps the worst-off task: {fair_worst:.3} == 1.0")),
        (util_fails_worst >= 0.40, format!("utilitarian misses the worst-off task: {util_fails_worst:.3} >= 0.40")),
        (util_med_mean <= fair_med_mean, format!("median mean improvement: utilitarian {util_med_mean:+.3} >= fair {fair_med_mean:+.3}")),
        (fair_med_max < util_med_max, format!("median max improvement: fair {fair_med_max:+.3} > utilitarian {util_med_max:+.3}")),
    ];
    let report: String = clauses
        .iter()
        .map(|(ok, msg)| format!("  [{}] {msg}\n", if *ok { "ok" } else { "FAIL" }))
        .collect();
    assert!(
        clauses.iter().all(|(ok, _)| *ok),
        "criterion 4 (transport case study): FAIL\n{report}"
    );
    pass(4, "transport case study", &report.replace('\n', "; "), started, 1200);
}

/// Criterion 5: every per-task cost and the truncated average pass a
/// 10^4-trial diminishing-returns sweep across 50 random instances with zero
/// violations, while the maximum of the task costs produces a violation on
/// the shipped counterexample.
#[test]
fn criterion_5_supermodularity_suite() {
    let started = Instant::now();
    let mut task_trials = 0usize;
    let mut avg_trials = 0usize;

    for trial in 0..50u64 {
        let tasks = 2 + (trial as usize % 2);
        let instance = random_bipartite(
            6 + (trial as usize % 3),
            tasks,
            (10.0, 20.0),
            (4.0, 9.0),
            2.0,
            derive_seed(0xAC05, trial),
        )
        .unwrap();
        let initial = bottleneck_initial_assignment(&instance.mean_costs()).unwrap();
        let matrix =
            redfair::sample_cost_matrix(&instance, 50, derive_seed(0xAC05, 1000 + trial)).unwrap();
        let ev = CostEvaluator::from_samples(&instance, matrix, initial).unwrap();
        let ground: Vec<(usize, usize)> = (0..instance.agents())
            .filter(|i| !ev.initial().contains_agent(*i))
            .flat_map(|i| (0..tasks).map(move |j| (i, j)))
            .collect();
        let max0 = ev.worst_task_cost(&Assignment::new()).unwrap();

        for j in 0..tasks {
            let report = check_supermodular(
                &ev,
                |a| ev.task_cost(j, a),
                &ground,
                100,
                derive_seed(0xAC05, 2000 + trial * 10 + j as u64),
            )
            .unwrap();
            task_trials += report.trials;
            assert!(
                report.is_clean(),
                "criterion 5: task cost {j} violated diminishing returns on instance {trial}: {:?}",
                report.violations[0]
            );
        }

        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(0xAC05, 3000 + trial));
        let budget = rng.gen::<f64>() * 1.2 * max0;
        let report = check_supermodular(
            &ev,
            |a| ev.truncated_avg_cost(a, budget),
            &ground,
            200,
            derive_seed(0xAC05, 4000 + trial),
        )
        .unwrap();
        avg_trials += report.trials;
        assert!(
            report.is_clean(),
            "criterion 5: truncated average violated diminishing returns on instance {trial}: {:?}",
            report.violations[0]
        );
    }
    assert!(task_trials >= 10_000, "only {task_trials} task-cost trials ran");
    assert!(avg_trials >= 10_000, "only {avg_trials} truncated-average trials ran");

    // The maximum of supermodular costs is not supermodular: the shipped
    // counterexample must be caught.
    let (instance, initial, ground) = max_cost_counterexample();
    let ev = CostEvaluator::exact_discrete(&instance, initial).unwrap();
    let report =
        check_supermodular(&ev, |a| ev.worst_task_cost(a), &ground, 10_000, 0xAC05).unwrap();
    assert!(
        !report.is_clean(),
        "criterion 5: no violation found for the max of task costs on the counterexample"
    );

    pass(
        5,
        "supermodularity suite",
        &format!(
            "{task_trials} task-cost trials, {avg_trials} truncated-average trials clean; \
             {} max-cost violations found",
            report.violations.len()
        ),
        started,
        120,
    );
}

/// Criterion 6: on 500 random instances the bisection stays within its
/// iteration budget and every trace step re-verifies (rejected budgets are
/// re-derived infeasible, accepted budgets re-derive feasible).
#[test]
fn criterion_6_bisection_contract() {
    let started = Instant::now();
    let mut steps_checked = 0usize;

    for trial in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(0xAC06, trial));
        let tasks = 2 + (trial as usize % 3);
        let agents = tasks + 3 + (trial as usize % 6);
        let instance = random_bipartite(
            agents,
            tasks,
            (12.0, 20.0),
            (4.0, 9.0),
            3.0,
            derive_seed(0xAC06, 1000 + trial),
        )
        .unwrap();
        let initial = bottleneck_initial_assignment(&instance.mean_costs()).unwrap();
        let matrix =
            redfair::sample_cost_matrix(&instance, 40, derive_seed(0xAC06, 2000 + trial)).unwrap();
        let ev = CostEvaluator::from_samples(&instance, matrix, initial).unwrap();

        let nd = tasks + rng.gen_range(0..=(agents - tasks));
        let alpha = if trial % 2 == 0 { 1.0 } else { alpha_bound(&ev).unwrap().value };
        let res = solve_fair(&ev, nd, alpha).unwrap();

        let max0 = ev.worst_task_cost(&Assignment::new()).unwrap();
        assert!(
            res.iterations <= iteration_budget(tasks, max0),
            "trial {trial}: {} iterations exceed the budget {}",
            res.iterations,
            iteration_budget(tasks, max0)
        );

        for step in &res.trace {
            let outcome = greedy_redundant_assignment(&ev, step.xi).unwrap();
            let accepted = outcome.is_feasible()
                && (outcome.assignment.len() as f64) <= alpha * (nd - tasks) as f64 + 1e-9;
            assert_eq!(
                accepted, step.accepted,
                "trial {trial}: step at xi={} does not re-verify",
                step.xi
            );
            assert_eq!(outcome.assignment.len(), step.subset_size);
            steps_checked += 1;
        }
        if !res.assignment.is_empty() {
            let achieved = ev.worst_task_cost(&res.assignment).unwrap();
            assert!(achieved <= res.xi + COST_TOL);
        }
    }
    pass(6, "bisection contract", &format!("{steps_checked} trace steps re-verified"), started, 300);
}

/// Criterion 7: the threshold bottleneck matcher and the min-sum matcher
/// agree with exhaustive enumeration on 500 random rectangular instances.
#[test]
fn criterion_7_baseline_optimality() {
    let started = Instant::now();

    fn enumerate_best(mean: &[Vec<f64>]) -> (f64, f64) {
        let (n, m) = (mean.len(), mean[0].len());
        let mut best_max = f64::INFINITY;
        let mut best_sum = f64::INFINITY;
        let mut chosen = Vec::new();
        fn rec(
            j: usize,
            n: usize,
            m: usize,
            mean: &[Vec<f64>],
            chosen: &mut Vec<usize>,
            best_max: &mut f64,
            best_sum: &mut f64,
        ) {
            if j == m {
                let mx = chosen
                    .iter()
                    .enumerate()
                    .map(|(j, &i)| mean[i][j])
                    .fold(f64::MIN, f64::max);
                let sm: f64 = chosen.iter().enumerate().map(|(j, &i)| mean[i][j]).sum();
                if mx < *best_max {
                    *best_max = mx;
                }
                if sm < *best_sum {
                    *best_sum = sm;
                }
                return;
            }
            for i in 0..n {
                if !chosen.contains(&i) {
                    chosen.push(i);
                    rec(j + 1, n, m, mean, chosen, best_max, best_sum);
                    chosen.pop();
                }
            }
        }
        rec(0, n, m, mean, &mut chosen, &mut best_max, &mut best_sum);
        (best_max, best_sum)
    }

    for trial in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(0xAC07, trial));
        let m = 1 + (trial as usize % 4);
        let n = m + rng.gen_range(0..=(8 - m));
        let mean: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| (100.0 * rng.gen::<f64>()).round() / 2.0).collect())
            .collect();

        let (best_max, best_sum) = enumerate_best(&mean);
        let bottleneck = bottleneck_initial_assignment(&mean).unwrap();
        let bn_value = bottleneck.pairs().map(|(i, j)| mean[i][j]).fold(f64::MIN, f64::max);
        assert_eq!(
            bn_value, best_max,
            "trial {trial}: bottleneck value {bn_value} != enumeration {best_max}\n{mean:?}"
        );

        let min_sum = min_sum_initial_assignment(&mean).unwrap();
        let ms_value: f64 = min_sum.pairs().map(|(i, j)| mean[i][j]).sum();
        assert!(
            (ms_value - best_sum).abs() <= 1e-9,
            "trial {trial}: min-sum value {ms_value} != enumeration {best_sum}\n{mean:?}"
        );
    }
    pass(7, "baseline optimality", "500/500 instances match enumeration", started, 120);
}

/// Criterion 8: identical configs produce byte-identical CSV output.
#[test]
fn criterion_8_reproducibility() {
    let started = Instant::now();
    let config = ExperimentConfig {
        generator: GeneratorConfig::Bipartite {
            agents: 10,
            tasks: 3,
            mean_range: (15.0, 20.0),
            std_range: (5.0, 10.0),
            truncation: 5.0,
        },
        trials: 5,
        samples: 60,
        policies: vec![
            Policy::Fair,
            Policy::FairAlpha,
            Policy::Utilitarian,
            Policy::Random,
            Policy::RepeatThreshold,
            Policy::Oracle,
        ],
        deployments: vec![4, 6],
        alpha: AlphaMode::One,
        initial: InitialPolicy::MinSum,
        seed: 0xBEEF,
    };
    let first = run_experiment(&config).unwrap();
    let second = run_experiment(&config).unwrap();
    let (csv_a, csv_b) = (rows_to_csv(&first), rows_to_csv(&second));
    assert_eq!(csv_a.as_bytes(), csv_b.as_bytes(), "row CSVs differ between runs");
    let (sum_a, sum_b) = (
        summary_to_csv(&summarize(&first).unwrap()),
        summary_to_csv(&summarize(&second).unwrap()),
    );
    assert_eq!(sum_a.as_bytes(), sum_b.as_bytes(), "summary CSVs differ between runs");
    pass(
        8,
        "reproducibility",
        &format!("{} rows byte-identical across runs", first.len()),
        started,
        120,
    );
}
