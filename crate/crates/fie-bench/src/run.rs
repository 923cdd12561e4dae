//! Monte-Carlo execution and error statistics.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fie::solver::{rollout, run_fie_sequence, DecisionVector};
use fie::{ekf, evaluate_cost, example_system, generate_scenario, Error, Result, Scenario64};

use crate::config::RunConfig;

/// One `(instance, t)` row of the error table.
///
/// `e = x_true - xhat` exactly. Estimator fields are `None` when the
/// estimator was not run or its instance failed; `feasible` reports the
/// estimator's own feasibility flag for the row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub instance: u64,
    pub t: usize,
    pub x_true: f64,
    pub xhat_fie: Option<f64>,
    pub xhat_ekf: Option<f64>,
    pub e_fie: Option<f64>,
    pub e_ekf: Option<f64>,
    pub cost: Option<f64>,
    pub feasible: bool,
}

/// Pooled statistics for one estimator over all usable `(instance, t)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: String,
    /// Population (divide-by-N) standard deviation of the signed errors.
    pub pooled_std: f64,
    /// Sample (divide-by-(N-1)) alternative; `None` for a single sample.
    pub pooled_std_sample: Option<f64>,
    pub pooled_mean_abs: f64,
    pub n_samples: usize,
    pub failed_instances: usize,
}

/// Per-time-step statistics row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerTRow {
    pub t: usize,
    pub mean_fie: Option<f64>,
    pub std_fie: Option<f64>,
    pub mean_abs_fie: Option<f64>,
    pub mean_ekf: Option<f64>,
    pub std_ekf: Option<f64>,
    pub mean_abs_ekf: Option<f64>,
}

/// One step of an empirical CDF of absolute errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfPoint {
    pub abs_error: f64,
    pub cum_prob: f64,
}

/// All statistics derived from one batch of records.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub estimators: Vec<EstimatorSummary>,
    pub per_t: Vec<PerTRow>,
    /// Keyed by estimator name (`"fie"`, `"ekf"`).
    pub ecdf: BTreeMap<String, Vec<EcdfPoint>>,
}

/// Records plus derived statistics for one Monte-Carlo run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<ErrorRecord>,
    pub summary: RunSummary,
}

/// Result of one instance before pooling.
struct InstanceRun {
    records: Vec<ErrorRecord>,
}

fn ekf_estimates(scenario: &Scenario64) -> Option<Vec<f64>> {
    let (model, _) = example_system::<f64>();
    ekf::run_ekf(scenario, &model)
        .ok()
        .map(|states| states.iter().map(|s| s.mean[0]).collect())
}

/// Cost of the true `(x(0), w)` trajectory under the run's cost function.
fn truth_cost(config: &RunConfig, scenario: &Scenario64, t: usize) -> Result<f64> {
    let (model, _) = example_system::<f64>();
    let problem = fie::EstimationProblem64::new(
        model,
        scenario.y[..=t].iter().map(|&y| vec![y]).collect(),
        vec![scenario.config.prior_mean],
        scenario.config.w_bound(),
        scenario.config.v_bound(),
    )?;
    let decision = DecisionVector {
        chi0: vec![scenario.x_true[0]],
        omega: scenario.w[..t].iter().map(|&w| vec![w]).collect(),
    };
    let (_, nu) = rollout(&problem, &decision)?;
    let breakdown = evaluate_cost(
        &config.spec,
        &decision.chi0,
        &problem.prior,
        &decision.omega,
        &nu,
        t,
    )?;
    Ok(breakdown.total)
}

fn run_instance(config: &RunConfig, instance: u64) -> Result<InstanceRun> {
    let scenario = generate_scenario(&config.scenario, instance)?;
    let t_len = scenario.y.len();

    let ekf_means = config.estimators.ekf.then(|| ekf_estimates(&scenario)).flatten();

    // The optimality sandwich `cost <= V(truth)` must hold at every feasible
    // solve (the truth is feasible by construction); a violation means the
    // solver missed badly and the instance is discarded as failed.
    let mut fie_rows: Option<Vec<(f64, f64, bool)>> = None;
    if config.estimators.fie {
        let mut opts = config.solve.clone();
        opts.start_seed ^= config.scenario.seed;
        if let Ok(results) = run_fie_sequence(&scenario, &config.spec, &opts) {
            let mut rows = Vec::with_capacity(t_len);
            let mut sound = true;
            for (t, r) in results.iter().enumerate() {
                if r.feasible {
                    let bound = truth_cost(config, &scenario, t)?;
                    if r.cost > bound * (1.0 + 1e-12) + 1e-9 {
                        sound = false;
                    }
                }
                rows.push((r.state_estimate()[0], r.cost, r.feasible));
            }
            if sound {
                fie_rows = Some(rows);
            }
        }
    }

    let records = (0..t_len)
        .map(|t| {
            let x_true = scenario.x_true[t];
            let (xhat_fie, cost, feasible) = match &fie_rows {
                Some(rows) => (Some(rows[t].0), Some(rows[t].1), rows[t].2),
                None => (None, None, !config.estimators.fie),
            };
            let xhat_ekf = ekf_means.as_ref().map(|m| m[t]);
            ErrorRecord {
                instance,
                t,
                x_true,
                xhat_fie,
                xhat_ekf,
                e_fie: xhat_fie.map(|x| x_true - x),
                e_ekf: xhat_ekf.map(|x| x_true - x),
                cost,
                feasible,
            }
        })
        .collect();
    Ok(InstanceRun { records })
}

/// Runs every instance (in parallel when configured), pools statistics, and
/// returns records sorted by `(instance, t)` — identical output for any
/// thread count.
pub fn run_monte_carlo(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;

    let instances: Vec<u64> = (0..config.instances).collect();
    let runs: Vec<(u64, Result<InstanceRun>)> = if config.threads == 1 {
        instances
            .iter()
            .map(|&i| (i, run_instance(config, i)))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
        pool.install(|| {
            instances
                .par_iter()
                .map(|&i| (i, run_instance(config, i)))
                .collect()
        })
    };

    let mut records = Vec::new();
    for (instance, run) in runs {
        match run {
            Ok(r) => records.extend(r.records),
            Err(e) => return Err(Error::Numerical(format!("instance {instance}: {e}"))),
        }
    }
    records.sort_by_key(|r| (r.instance, r.t));

    let summary = summarize(&records)?;
    Ok(RunOutcome { records, summary })
}

/// True when the instance produced a usable, feasible estimate at every `t`
/// for the given estimator column.
fn instance_usable(rows: &[&ErrorRecord], fie: bool) -> bool {
    rows.iter().all(|r| {
        if fie {
            r.e_fie.is_some() && r.feasible
        } else {
            r.e_ekf.is_some()
        }
    })
}

fn population_std(errors: &[f64]) -> f64 {
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    (errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n).sqrt()
}

fn stats(errors: &[f64]) -> (f64, Option<f64>, f64) {
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let ss = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>();
    let sample = (errors.len() > 1).then(|| (ss / (n - 1.0)).sqrt());
    let mean_abs = errors.iter().map(|e| e.abs()).sum::<f64>() / n;
    ((ss / n).sqrt(), sample, mean_abs)
}

fn ecdf(mut abs_errors: Vec<f64>) -> Vec<EcdfPoint> {
    abs_errors.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
    let n = abs_errors.len() as f64;
    abs_errors
        .iter()
        .enumerate()
        .map(|(i, &e)| EcdfPoint {
            abs_error: e,
            cum_prob: (i + 1) as f64 / n,
        })
        .collect()
}

/// Pools records into per-estimator, per-t, and ECDF statistics.
///
/// Instances with any missing or infeasible row for an estimator are
/// excluded from that estimator's pools and counted as failed.
pub fn summarize(records: &[ErrorRecord]) -> Result<RunSummary> {
    if records.is_empty() {
        return Err(Error::Domain("no records to summarize".into()));
    }

    let mut by_instance: BTreeMap<u64, Vec<&ErrorRecord>> = BTreeMap::new();
    for r in records {
        by_instance.entry(r.instance).or_default().push(r);
    }
    let t_max = records.iter().map(|r| r.t).max().expect("nonempty");

    let has_fie = records.iter().any(|r| r.e_fie.is_some());
    let has_ekf = records.iter().any(|r| r.e_ekf.is_some());

    let mut estimators = Vec::new();
    let mut ecdf_map = BTreeMap::new();
    let mut pooled: BTreeMap<&str, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();

    for (name, selected) in [("fie", has_fie), ("ekf", has_ekf)] {
        if !selected {
            continue;
        }
        let fie = name == "fie";
        let mut usable: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        let mut failed = 0usize;
        for (&instance, rows) in &by_instance {
            if instance_usable(rows, fie) {
                let errors = rows
                    .iter()
                    .map(|r| if fie { r.e_fie } else { r.e_ekf }.expect("usable"))
                    .collect();
                usable.insert(instance, errors);
            } else {
                failed += 1;
            }
        }
        let all: Vec<f64> = usable.values().flatten().copied().collect();
        if all.is_empty() {
            return Err(Error::Domain(format!(
                "estimator {name} has no usable instances"
            )));
        }
        let (std, sample, mean_abs) = stats(&all);
        estimators.push(EstimatorSummary {
            estimator: name.to_string(),
            pooled_std: std,
            pooled_std_sample: sample,
            pooled_mean_abs: mean_abs,
            n_samples: all.len(),
            failed_instances: failed,
        });
        ecdf_map.insert(name.to_string(), ecdf(all.iter().map(|e| e.abs()).collect()));
        pooled.insert(name, usable);
    }
    if estimators.is_empty() {
        return Err(Error::Domain("records carry no estimator output".into()));
    }

    let column = |name: &str, t: usize| -> Option<Vec<f64>> {
        let usable = pooled.get(name)?;
        let vals: Vec<f64> = usable.values().filter_map(|errs| errs.get(t).copied()).collect();
        (!vals.is_empty()).then_some(vals)
    };
    let per_t = (0..=t_max)
        .map(|t| {
            let f = column("fie", t);
            let e = column("ekf", t);
            let triple = |v: &Option<Vec<f64>>| {
                v.as_ref().map(|vals| {
                    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                    let mean_abs = vals.iter().map(|x| x.abs()).sum::<f64>() / vals.len() as f64;
                    (mean, population_std(vals), mean_abs)
                })
            };
            let (tf, te) = (triple(&f), triple(&e));
            PerTRow {
                t,
                mean_fie: tf.map(|x| x.0),
                std_fie: tf.map(|x| x.1),
                mean_abs_fie: tf.map(|x| x.2),
                mean_ekf: te.map(|x| x.0),
                std_ekf: te.map(|x| x.1),
                mean_abs_ekf: te.map(|x| x.2),
            }
        })
        .collect();

    Ok(RunSummary {
        estimators,
        per_t,
        ecdf: ecdf_map,
    })
}
