//! Minimal end-to-end use: certify a cost, simulate a scenario, and run the
//! full-information estimator over the whole measurement sequence.

use fie::{
    example_system, generate_scenario, run_fie_sequence, validate_rgas, CostSpec64,
    ScenarioConfig64, SolveOptions64,
};

fn main() -> Result<(), fie::Error> {
    let spec = CostSpec64::exp_discount(0.81)?;
    let (_, certificate) = example_system::<f64>();
    assert!(validate_rgas(&spec, &certificate)?.pass);

    let scenario = generate_scenario(&ScenarioConfig64::default(), 0)?;
    let estimates = run_fie_sequence(&scenario, &spec, &SolveOptions64::default())?;
    for (t, r) in estimates.iter().enumerate() {
        let xhat = r.state_estimate()[0];
        println!("t={t} xhat={xhat:.4} cost={:.4} feasible={}", r.cost, r.feasible);
    }
    Ok(())
}
