//! Monte-Carlo scenario generation for the scalar benchmark system.
//!
//! Each instance draws an initial state from a Gaussian prior and truncated
//! Gaussian disturbance/noise sequences, simulates the benchmark dynamics and
//! produces the measurement sequence. Reproducibility contract: every
//! instance gets its own counter-derived substream of the base seed, so
//! instance `i` of a config is one fixed function of `(seed, i)` regardless
//! of how many instances run, in what order, or on how many threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::example_system;
use crate::{real, Error, Result, Scalar};

/// Optional envelope forcing disturbances to converge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayMode<T> {
    /// Stationary bounded disturbances.
    None,
    /// Multiply `w(k)` and `v(k)` by `rate^k`, `0 < rate <= 1`.
    Geometric { rate: T },
}

/// Configuration of one Monte-Carlo experiment.
///
/// Disturbances are truncated at `trunc_mult` standard deviations, so
/// `|w(k)| <= trunc_mult * sigma_w` and `|v(k)| <= trunc_mult * sigma_v`
/// always hold. `sigma_w`, `sigma_v` and `init_std` may be zero, which makes
/// the corresponding sequence exactly zero (noise-free limits) without
/// consuming random draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig<T> {
    pub sigma_w: T,
    pub sigma_v: T,
    pub trunc_mult: T,
    pub init_mean: T,
    pub init_std: T,
    /// Prior mean handed to the estimator (deliberately biased by default).
    pub prior_mean: T,
    pub horizon: usize,
    pub seed: u64,
    pub decay: DecayMode<T>,
}

impl<T: Scalar> Default for ScenarioConfig<T> {
    fn default() -> Self {
        Self {
            sigma_w: real(0.1),
            sigma_v: real(0.2),
            trunc_mult: real(3.0),
            init_mean: real(5.0),
            init_std: real(2.0),
            prior_mean: real(2.0),
            horizon: 20,
            seed: 42,
            decay: DecayMode::None,
        }
    }
}

impl<T: Scalar> ScenarioConfig<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_w", self.sigma_w),
            ("sigma_v", self.sigma_v),
            ("init_std", self.init_std),
        ] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::Domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !self.trunc_mult.is_finite() || self.trunc_mult <= T::zero() {
            return Err(Error::Domain(format!(
                "trunc_mult must be > 0, got {}",
                self.trunc_mult
            )));
        }
        if !self.init_mean.is_finite() || !self.prior_mean.is_finite() {
            return Err(Error::Domain("means must be finite".into()));
        }
        if let DecayMode::Geometric { rate } = self.decay {
            if !rate.is_finite() || rate <= T::zero() || rate > T::one() {
                return Err(Error::Domain(format!(
                    "geometric decay rate must be in (0, 1], got {rate}"
                )));
            }
        }
        Ok(())
    }

    /// Box half-width for the disturbance sequence.
    pub fn w_bound(&self) -> T {
        self.trunc_mult * self.sigma_w
    }

    /// Box half-width for the measurement noise sequence.
    pub fn v_bound(&self) -> T {
        self.trunc_mult * self.sigma_v
    }
}

/// One complete simulated instance of the benchmark system.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub instance: u64,
    pub config: ScenarioConfig<T>,
    /// True states `x(0..T)`.
    pub x_true: Vec<T>,
    /// Disturbances `w(0..T-1)`.
    pub w: Vec<T>,
    /// Measurement noise `v(0..T)`.
    pub v: Vec<T>,
    /// Measurements `y(0..T)`.
    pub y: Vec<T>,
}

impl<T: Scalar> Scenario<T> {
    pub fn horizon(&self) -> usize {
        self.x_true.len().saturating_sub(1)
    }
}

/// Draws from `N(0, sigma^2)` truncated to `[-bound, bound]` by rejection.
pub fn sample_truncated_normal<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    sigma: T,
    bound: T,
) -> Result<T> {
    let s = sigma.to_f64().filter(|s| s.is_finite() && *s > 0.0).ok_or_else(|| {
        Error::Domain(format!("sigma must be > 0, got {sigma}"))
    })?;
    let b = bound.to_f64().filter(|b| b.is_finite() && *b > 0.0).ok_or_else(|| {
        Error::Domain(format!("bound must be > 0, got {bound}"))
    })?;
    for _ in 0..100_000 {
        let z: f64 = rng.sample(StandardNormal);
        let d = z * s;
        if d.abs() <= b {
            return Ok(real(d));
        }
    }
    Err(Error::Numerical(format!(
        "rejection sampling failed to land in [-{b}, {b}] with sigma={s}"
    )))
}

/// Generates instance `instance` of the configured experiment.
///
/// Draw order within the per-instance substream: initial state, then the
/// disturbance sequence, then the noise sequence. All sampling runs in `f64`
/// and is converted at the end, so the realized randomness does not depend on
/// the working scalar type.
pub fn generate_scenario<T: Scalar>(config: &ScenarioConfig<T>, instance: u64) -> Result<Scenario<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(instance);

    let init_std = config.init_std.to_f64().expect("validated");
    let x0 = if init_std > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        real::<T>(config.init_mean.to_f64().expect("validated") + init_std * z)
    } else {
        config.init_mean
    };

    let rate = match config.decay {
        DecayMode::None => 1.0,
        DecayMode::Geometric { rate } => rate.to_f64().expect("validated"),
    };

    let mut draw_sequence = |sigma: T, bound: T, len: usize| -> Result<Vec<T>> {
        let mut seq = Vec::with_capacity(len);
        for k in 0..len {
            let base = if sigma > T::zero() {
                sample_truncated_normal(&mut rng, sigma, bound)?
                    .to_f64()
                    .expect("finite draw")
            } else {
                0.0
            };
            seq.push(real::<T>(base * rate.powi(k as i32)));
        }
        Ok(seq)
    };

    let w = draw_sequence(config.sigma_w, config.w_bound(), config.horizon)?;
    let v = draw_sequence(config.sigma_v, config.v_bound(), config.horizon + 1)?;

    let (model, _) = example_system::<T>();
    let w_vecs: Vec<Vec<T>> = w.iter().map(|&wk| vec![wk]).collect();
    let v_vecs: Vec<Vec<T>> = v.iter().map(|&vk| vec![vk]).collect();
    let traj = model.simulate(&[x0], &w_vecs)?;
    let y = model
        .observe(&traj, &v_vecs)?
        .into_iter()
        .map(|yk| yk[0])
        .collect();

    Ok(Scenario {
        instance,
        config: *config,
        x_true: traj.states.into_iter().map(|x| x[0]).collect(),
        w,
        v,
        y,
    })
}
