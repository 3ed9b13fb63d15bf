// scratch debug: dissect trial 6, nd 5
use redfair::*;
use redfair::greedy::greedy_redundant_assignment;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

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

fn main() {
    let trial = 6u64;
    let agents = 6 + (trial as usize % 5);
    let instance = random_discrete_instance(agents, 2, derive_seed(0xAC01, trial));
    let initial = bottleneck_initial_assignment(&instance.mean_costs()).unwrap();
    let ev = CostEvaluator::exact_discrete(&instance, initial.clone()).unwrap().with_integer_costs();
    let alpha = alpha_bound(&ev).unwrap().value;
    println!("agents={agents} initial={:?} alpha={alpha}", initial);
    println!("costs(empty) = {:?}", ev.task_costs(&Assignment::new()).unwrap());
    let nd = 5usize;
    let res = solve_fair(&ev, nd, alpha).unwrap();
    println!("solve: xi={} |A|={} achieved={}", res.xi, res.assignment.len(), ev.worst_task_cost(&res.assignment).unwrap());
    for s in &res.trace {
        println!("  step xi={:.4} size={} greedy_feasible={} accepted={}", s.xi, s.subset_size, s.greedy_feasible, s.accepted);
    }
    let oracle = brute_force_optimal(&ev, nd).unwrap();
    println!("oracle: max={} set={:?} examined={}", oracle.max_cost, oracle.assignment, oracle.sets_examined);
    // greedy at xi just above oracle
    for xi in [oracle.max_cost, oracle.max_cost + 0.25, oracle.max_cost + 0.75] {
        let out = greedy_redundant_assignment(&ev, xi).unwrap();
        println!("greedy at xi={xi}: feasible={} size={} steps={:?}", out.is_feasible(), out.assignment.len(),
            out.steps.iter().map(|s| (s.pair, s.decrease)).collect::<Vec<_>>());
    }
    // raw (unrounded) view
    let ev_raw = CostEvaluator::exact_discrete(&instance, initial).unwrap();
    println!("raw costs(empty) = {:?}", ev_raw.task_costs(&Assignment::new()).unwrap());
    println!("raw oracle set cost = {}", ev_raw.worst_task_cost(&oracle.assignment).unwrap());
}
