//! Estimation cost families with certified stability properties.
//!
//! The full-information cost penalizes the initial-state guess error with a
//! time-discounted power term and the disturbance/noise sequences with a
//! `lambda`-mix of an averaged quadratic sum and a worst-case (max) quadratic
//! term. The discount family and its parameters decide whether the resulting
//! estimator is robustly stable for a given detectability certificate;
//! [`validate_rgas`] runs that check.

use crate::comparison::{
    check_exp_condition, check_poly_condition, check_sensitivity_profiles, CertificateVerdict,
    DecayProfile, KFunc, LFunc, SensitivityGrid,
};
use crate::linalg::sq_norm;
use crate::model::IossCertificate;
use crate::{real, Error, Result, Scalar};

/// Time-discount family for the initial-state term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscountFamily {
    /// `discount(t) = b2^t`. `b2 >= 1` is allowed (a growing weight).
    Exp,
    /// `discount(t) = (t+1)^(-b2)`.
    Poly,
}

/// Parameters of the estimation cost
///
/// ```text
/// V_t = c2 * |chi0 - prior|^a2 * discount(t)
///     + (lambda_w * ww * sum_i |omega(i)|^2 + lambda_v * vw * sum_i |nu(i)|^2) / (t+1)
///     + (1 - lambda_w) * ww * max_i |omega(i)|^2
///     + (1 - lambda_v) * vw * max_i |nu(i)|^2
/// ```
///
/// with `ww = w_weight`, `vw = v_weight`. The benchmark defaults weight each
/// quadratic stage by the reciprocal noise variance. `tau` is the temperature
/// of the log-sum-exp surrogate used by [`evaluate_smoothed_cost`].
///
/// For `lambda < 1` the max terms give disturbance lower bounds that do not
/// depend on the horizon; at the `lambda = 1` boundary only the averaged sum
/// remains and its lower bound decays like `1/(t+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSpec<T> {
    pub family: DiscountFamily,
    pub a2: T,
    pub b2: T,
    pub c2: T,
    pub lambda_w: T,
    pub lambda_v: T,
    pub w_weight: T,
    pub v_weight: T,
    pub tau: T,
}

impl<T: Scalar> CostSpec<T> {
    /// Exponential-discount cost with the benchmark defaults: quadratic terms
    /// (`a2 = 2`), `c2 = 1/sigma_x0^2 = 0.25`, stage weights `1/sigma_w^2 =
    /// 100` and `1/sigma_v^2 = 25`, pure averaged penalty (`lambda = 1`).
    pub fn exp_discount(b2: T) -> Result<Self> {
        let spec = Self {
            family: DiscountFamily::Exp,
            a2: real(2.0),
            b2,
            c2: real(0.25),
            lambda_w: T::one(),
            lambda_v: T::one(),
            w_weight: real(100.0),
            v_weight: real(25.0),
            tau: real(1e-3),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Polynomial-discount cost with the same defaults as [`exp_discount`].
    ///
    /// [`exp_discount`]: CostSpec::exp_discount
    pub fn poly_discount(b2: T) -> Result<Self> {
        let spec = Self {
            family: DiscountFamily::Poly,
            ..Self::exp_discount(T::one())?
        };
        let spec = Self { b2, ..spec };
        spec.validate()?;
        Ok(spec)
    }

    /// Replaces the mixing weights, keeping everything else.
    pub fn with_mixing(self, lambda_w: T, lambda_v: T) -> Result<Self> {
        let spec = Self {
            lambda_w,
            lambda_v,
            ..self
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Re-derives the quadratic weights from noise levels: stage weights
    /// `1/sigma^2` and initial coefficient `c2 = 1/sigma_x0^2`. A zero sigma
    /// (noise-free experiment) falls back to weight 1 so the term stays
    /// defined.
    pub fn for_noise(self, sigma_w: T, sigma_v: T, sigma_x0: T) -> Result<Self> {
        let inv_var = |sigma: T| -> Result<T> {
            if !sigma.is_finite() || sigma < T::zero() {
                return Err(Error::Domain(format!("sigma must be >= 0, got {sigma}")));
            }
            Ok(if sigma > T::zero() {
                T::one() / (sigma * sigma)
            } else {
                T::one()
            })
        };
        let spec = Self {
            w_weight: inv_var(sigma_w)?,
            v_weight: inv_var(sigma_v)?,
            c2: inv_var(sigma_x0)?,
            ..self
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a2", self.a2),
            ("b2", self.b2),
            ("c2", self.c2),
            ("w_weight", self.w_weight),
            ("v_weight", self.v_weight),
            ("tau", self.tau),
        ] {
            if !v.is_finite() || v <= T::zero() {
                return Err(Error::Domain(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, l) in [("lambda_w", self.lambda_w), ("lambda_v", self.lambda_v)] {
            if !l.is_finite() || l < T::zero() || l > T::one() {
                return Err(Error::Domain(format!("{name} must be in [0, 1], got {l}")));
            }
        }
        Ok(())
    }

    /// Discount factor multiplying the initial-state term at horizon `t`.
    pub fn discount(&self, t: usize) -> T {
        match self.family {
            DiscountFamily::Exp => self.b2.powi(t as i32),
            DiscountFamily::Poly => real::<T>(t as f64 + 1.0).powf(-self.b2),
        }
    }
}

/// Additive decomposition of one cost evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown<T> {
    /// `c2 * |chi0 - prior|^a2 * discount(t)`.
    pub initial: T,
    /// Averaged quadratic sum over both sequences.
    pub averaged: T,
    /// `(1 - lambda_w) * w_weight * max_i |omega(i)|^2`.
    pub max_w: T,
    /// `(1 - lambda_v) * v_weight * max_i |nu(i)|^2`.
    pub max_v: T,
    pub total: T,
}

fn check_lengths<T>(
    chi0: &[T],
    prior: &[T],
    omega: &[Vec<T>],
    nu: &[Vec<T>],
    t: usize,
) -> Result<()> {
    if chi0.len() != prior.len() {
        return Err(Error::Dimension {
            expected: prior.len(),
            actual: chi0.len(),
        });
    }
    if omega.len() != t {
        return Err(Error::Dimension {
            expected: t,
            actual: omega.len(),
        });
    }
    if nu.len() != t + 1 {
        return Err(Error::Dimension {
            expected: t + 1,
            actual: nu.len(),
        });
    }
    Ok(())
}

fn prior_gap<T: Scalar>(chi0: &[T], prior: &[T]) -> T {
    chi0.iter()
        .zip(prior)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<T>()
        .sqrt()
}

/// Weighted squared stage norms for one sequence.
fn stage_values<T: Scalar>(seq: &[Vec<T>], weight: T) -> Vec<T> {
    seq.iter().map(|entry| weight * sq_norm(entry)).collect()
}

fn max_or_zero<T: Scalar>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |m, &z| m.max(z))
}

/// Shifted log-sum-exp: `tau * ln(sum_i exp(z_i / tau))`, exact max for a
/// singleton, 0 for an empty slice.
fn smoothed_max<T: Scalar>(values: &[T], tau: T) -> T {
    if values.is_empty() {
        return T::zero();
    }
    let m = max_or_zero(values);
    let sum: T = values.iter().map(|&z| ((z - m) / tau).exp()).sum();
    m + tau * sum.ln()
}

fn evaluate_parts<T: Scalar>(
    spec: &CostSpec<T>,
    chi0: &[T],
    prior: &[T],
    omega: &[Vec<T>],
    nu: &[Vec<T>],
    t: usize,
) -> Result<(T, T, Vec<T>, Vec<T>)> {
    spec.validate()?;
    check_lengths(chi0, prior, omega, nu, t)?;

    let initial = spec.c2 * prior_gap(chi0, prior).powf(spec.a2) * spec.discount(t);
    let zw = stage_values(omega, spec.w_weight);
    let zv = stage_values(nu, spec.v_weight);
    let averaged = (spec.lambda_w * zw.iter().copied().sum::<T>()
        + spec.lambda_v * zv.iter().copied().sum::<T>())
        / real::<T>(t as f64 + 1.0);
    Ok((initial, averaged, zw, zv))
}

/// Evaluates the exact cost at horizon `t` for an initial-state guess `chi0`,
/// disturbance sequence `omega` (length `t`) and noise sequence `nu` (length
/// `t + 1`, the current measurement's residual included).
pub fn evaluate_cost<T: Scalar>(
    spec: &CostSpec<T>,
    chi0: &[T],
    prior: &[T],
    omega: &[Vec<T>],
    nu: &[Vec<T>],
    t: usize,
) -> Result<CostBreakdown<T>> {
    let (initial, averaged, zw, zv) = evaluate_parts(spec, chi0, prior, omega, nu, t)?;
    let max_w = (T::one() - spec.lambda_w) * max_or_zero(&zw);
    let max_v = (T::one() - spec.lambda_v) * max_or_zero(&zv);
    Ok(CostBreakdown {
        initial,
        averaged,
        max_w,
        max_v,
        total: initial + averaged + max_w + max_v,
    })
}

/// Evaluates the cost with each max term replaced by its log-sum-exp
/// surrogate at temperature `spec.tau`.
///
/// Guarantee per term: `max <= smoothed <= max + tau * ln(count)`; with
/// `lambda = 1` the max terms vanish and the smoothed value equals the exact
/// one bit for bit.
pub fn evaluate_smoothed_cost<T: Scalar>(
    spec: &CostSpec<T>,
    chi0: &[T],
    prior: &[T],
    omega: &[Vec<T>],
    nu: &[Vec<T>],
    t: usize,
) -> Result<T> {
    let (initial, averaged, zw, zv) = evaluate_parts(spec, chi0, prior, omega, nu, t)?;
    let max_w = (T::one() - spec.lambda_w) * smoothed_max(&zw, spec.tau);
    let max_v = (T::one() - spec.lambda_v) * smoothed_max(&zv, spec.tau);
    Ok(initial + averaged + max_w + max_v)
}

/// Checks whether the cost parameters make the estimator robustly stable for
/// a system carrying the given detectability certificate.
///
/// Matching families dispatch to the exact closed-form conditions; a
/// cross-family pairing (polynomial discount against an exponential-decay
/// certificate or vice versa) runs the general sensitivity condition with the
/// cost's initial-state term as the bounding pair.
pub fn validate_rgas<T: Scalar>(
    spec: &CostSpec<T>,
    cert: &IossCertificate<T>,
) -> Result<CertificateVerdict<T>> {
    spec.validate()?;
    let a1 = cert.beta.k.a;
    match (spec.family, &cert.beta.l) {
        (DiscountFamily::Poly, LFunc::PolyDecay { b }) => {
            check_poly_condition(a1, *b, spec.a2, spec.b2)
        }
        (DiscountFamily::Exp, LFunc::ExpDecay { b }) => {
            check_exp_condition(a1, *b, spec.a2, spec.b2)
        }
        (family, l) => {
            let mu2 = KFunc::power(spec.c2, spec.a2)?;
            let phi2 = match family {
                DiscountFamily::Exp => DecayProfile::Exp { b: spec.b2 },
                DiscountFamily::Poly => DecayProfile::Poly { b: spec.b2 },
            };
            check_sensitivity_profiles(
                &cert.beta.k,
                &mu2,
                DecayProfile::from_lfunc(l),
                phi2,
                &KFunc::identity(),
                &SensitivityGrid::default(),
            )
        }
    }
}
