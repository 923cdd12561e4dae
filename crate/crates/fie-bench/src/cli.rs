//! Command-line entry point.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;

use fie::{example_system, validate_rgas, CostSpec64, DiscountFamily};

use crate::config::{EstimatorSet, Preset, RunConfig};
use crate::report::{summary_table, write_outputs};
use crate::run::run_monte_carlo;

/// Fraction of failed instances beyond which a run is reported as unsound.
const FAILURE_RATE_LIMIT: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(
    name = "fie-bench",
    about = "Monte-Carlo benchmark for the fie state estimator",
    disable_version_flag = true
)]
struct Args {
    /// Experiment preset: paper-exp, paper-exp-b2-2, paper-poly, convergence, long-horizon.
    #[arg(long)]
    preset: String,

    /// Override the discount parameter b2.
    #[arg(long)]
    b2: Option<f64>,

    /// Mixing weight for the disturbance term, in [0, 1].
    #[arg(long)]
    lambda_w: Option<f64>,

    /// Mixing weight for the noise term, in [0, 1].
    #[arg(long)]
    lambda_v: Option<f64>,

    /// Number of Monte-Carlo instances.
    #[arg(long)]
    instances: Option<u64>,

    /// Scenario horizon T (estimates run for t = 0..=T).
    #[arg(long)]
    horizon: Option<usize>,

    /// Base RNG seed; instances use independent substreams.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (0 = library default).
    #[arg(long, default_value_t = 0)]
    threads: usize,

    /// Output directory (also settable via FIE_BENCH_OUT_DIR).
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// Estimators to run.
    #[arg(long, value_delimiter = ',', default_values_t = [String::from("fie"), String::from("ekf")])]
    estimators: Vec<String>,

    /// Run even when the cost fails its stability certificate.
    #[arg(long, default_value_t = false)]
    allow_uncertified: bool,
}

fn apply_overrides(mut config: RunConfig, args: &Args) -> Result<RunConfig, String> {
    if let Some(b2) = args.b2 {
        config.spec = match config.spec.family {
            DiscountFamily::Exp => CostSpec64::exp_discount(b2),
            DiscountFamily::Poly => CostSpec64::poly_discount(b2),
        }
        .map_err(|e| e.to_string())?
        .with_mixing(config.spec.lambda_w, config.spec.lambda_v)
        .map_err(|e| e.to_string())?;
    }
    let lw = args.lambda_w.unwrap_or(config.spec.lambda_w);
    let lv = args.lambda_v.unwrap_or(config.spec.lambda_v);
    config.spec = config
        .spec
        .with_mixing(lw, lv)
        .map_err(|e| e.to_string())?;
    if let Some(n) = args.instances {
        config.instances = n;
    }
    if let Some(t) = args.horizon {
        config.scenario.horizon = t;
    }
    if let Some(seed) = args.seed {
        config.scenario.seed = seed;
    }
    config.threads = args.threads;

    let mut set = EstimatorSet { fie: false, ekf: false };
    for e in &args.estimators {
        match e.as_str() {
            "fie" => set.fie = true,
            "ekf" => set.ekf = true,
            other => return Err(format!("unknown estimator {other:?} (expected fie or ekf)")),
        }
    }
    config.estimators = set;

    if let Some(dir) = &args.out_dir {
        config.out_dir = dir.clone();
    } else if let Some(dir) = std::env::var_os("FIE_BENCH_OUT_DIR") {
        config.out_dir = PathBuf::from(dir);
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

/// Runs the CLI and returns the process exit code.
///
/// Codes: 0 success, 2 usage error, 3 cost fails its stability certificate
/// (without `--allow-uncertified`), 4 more than 1% of instances failed,
/// 1 any other error.
pub fn cli_main<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(args) => args,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };

    let Some(preset) = Preset::from_name(&args.preset) else {
        eprintln!(
            "unknown preset {:?}; expected one of paper-exp, paper-exp-b2-2, paper-poly, convergence, long-horizon",
            args.preset
        );
        return 2;
    };
    let config = match apply_overrides(preset.config(), &args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("invalid configuration: {msg}");
            return 2;
        }
    };

    if config.estimators.fie {
        let (_, certificate) = example_system::<f64>();
        match validate_rgas(&config.spec, &certificate) {
            Ok(verdict) if verdict.pass => {
                eprintln!(
                    "certificate: pass ({:?}, margin {:+.6})",
                    verdict.condition, verdict.margin
                );
            }
            Ok(verdict) => {
                eprintln!(
                    "certificate: FAIL ({:?}, margin {:+.6})",
                    verdict.condition, verdict.margin
                );
                if !args.allow_uncertified {
                    eprintln!("stability is not certified for this cost; pass --allow-uncertified to run anyway");
                    return 3;
                }
            }
            Err(e) => {
                eprintln!("certificate check failed: {e}");
                if !args.allow_uncertified {
                    return 3;
                }
            }
        }
    }

    let outcome = match run_monte_carlo(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("run failed: {e}");
            return 1;
        }
    };
    if let Err(e) = write_outputs(&outcome, &config.out_dir) {
        eprintln!("writing outputs failed: {e}");
        return 1;
    }
    print!("{}", summary_table(&outcome));
    println!("outputs written to {}", config.out_dir.display());

    exit_code_for_failures(&outcome)
}

/// Applies the failed-instance threshold to a finished run.
fn exit_code_for_failures(outcome: &crate::run::RunOutcome) -> i32 {
    let instances = outcome
        .records
        .iter()
        .map(|r| r.instance)
        .max()
        .map_or(0, |m| m + 1);
    let worst = outcome
        .summary
        .estimators
        .iter()
        .map(|e| e.failed_instances)
        .max()
        .unwrap_or(0);
    if instances > 0 && worst as f64 > FAILURE_RATE_LIMIT * instances as f64 {
        return 4;
    }
    0
}
