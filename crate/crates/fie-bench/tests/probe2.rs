use fie::solver::{solve_fie, DecisionVector};
use fie::{example_system, generate_scenario, CostSpec64, EstimationProblem64, ScenarioConfig64, SolveOptions64};

fn problem_at(scenario: &fie::Scenario64, t: usize) -> EstimationProblem64 {
    let (model, _) = example_system::<f64>();
    EstimationProblem64::new(
        model,
        scenario.y[..=t].iter().map(|&y| vec![y]).collect(),
        vec![scenario.config.prior_mean],
        scenario.config.w_bound(),
        scenario.config.v_bound(),
    )
    .unwrap()
}

#[test]
fn probe() {
    let spec = CostSpec64::exp_discount(2.0).unwrap();
    let pairs: &[(u64, usize, f64)] = &[
        (79, 20, 513847.4718),
        (83, 15, 426.9583),
        (83, 17, 1701.2204),
        (433, 5, 16.1031),
        (433, 7, 54.6210),
        (351, 16, 1062.0),
        (480, 18, 13007.0),
    ];
    for &(inst, t, old_cost) in pairs {
        let scenario = generate_scenario(&ScenarioConfig64::default(), inst).unwrap();
        let problem = problem_at(&scenario, t);
        let mut opts = SolveOptions64::default();
        opts.start_seed ^= 42;
        let a = solve_fie(&problem, &spec, &opts).unwrap();

        let mut heavy = opts.clone();
        heavy.restarts = 40;
        heavy.perturb_std = 3.0;
        let b = solve_fie(&problem, &spec, &heavy).unwrap();

        let mut truth_w = opts.clone();
        truth_w.warm = Some(DecisionVector {
            chi0: vec![scenario.x_true[0]],
            omega: scenario.w[..t].iter().map(|&w| vec![w]).collect(),
        });
        let c = solve_fie(&problem, &spec, &truth_w).unwrap();

        let xt = scenario.x_true[t];
        println!(
            "inst {inst:3} t {t:2} truth {xt:8.4} | old cost {old_cost:12.4} | new  {:12.4} x {:7.4} e {:7.4} f={} | heavy {:12.4} x {:7.4} e {:7.4} | truthwarm {:12.4} x {:7.4} e {:7.4}",
            a.cost, a.state_estimate()[0], xt - a.state_estimate()[0], a.feasible,
            b.cost, b.state_estimate()[0], xt - b.state_estimate()[0],
            c.cost, c.state_estimate()[0], xt - c.state_estimate()[0],
        );
    }
}
