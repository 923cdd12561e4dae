//! Extended Kalman filter baseline.
//!
//! Standard predict/update with the model's Jacobian hooks. Convention: the
//! estimate at `t = 0` is the measurement update of the initial state with
//! `y(0)` (no predict), then predict/update alternate — so the filtered
//! estimate at every `t` has seen `y(t)`, aligned with how the estimator
//! above defines its error.

use crate::linalg::{chol_solve, cholesky, identity, mat_mul, mat_vec, transpose};
use crate::model::SystemModel;
use crate::scenario::Scenario;
use crate::{real, Error, Result, Scalar};

/// Filter state: mean and row-major `n x n` covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct EkfState<T> {
    pub mean: Vec<T>,
    pub cov: Vec<T>,
}

fn max_abs<T: Scalar>(m: &[T]) -> T {
    m.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

fn check_covariance<T: Scalar>(cov: &[T], n: usize) -> Result<()> {
    if cov.len() != n * n {
        return Err(Error::Dimension {
            expected: n * n,
            actual: cov.len(),
        });
    }
    let tol = real::<T>(1e-12) * T::one().max(max_abs(cov));
    for i in 0..n {
        for j in 0..i {
            if (cov[i * n + j] - cov[j * n + i]).abs() > tol {
                return Err(Error::Domain(format!(
                    "covariance is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    // positive semidefinite within tolerance: a shifted Cholesky must succeed
    let shift = real::<T>(1e-12) * T::one().max(max_abs(cov));
    let mut shifted = cov.to_vec();
    for i in 0..n {
        shifted[i * n + i] += shift;
    }
    cholesky(&shifted, n)
        .map_err(|_| Error::Domain("covariance is not positive semidefinite".into()))?;
    Ok(())
}

fn symmetrize<T: Scalar>(m: &mut [T], n: usize) {
    let half = real::<T>(0.5);
    for i in 0..n {
        for j in 0..i {
            let s = half * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
}

/// Builds the initial filter state, validating the covariance.
pub fn ekf_init<T: Scalar>(mean: Vec<T>, cov: Vec<T>) -> Result<EkfState<T>> {
    check_covariance(&cov, mean.len())?;
    Ok(EkfState { mean, cov })
}

/// Time update: `m <- f(m, 0)`, `P <- A P A^T + Q` with `A = df/dx`.
pub fn ekf_predict<T: Scalar>(
    state: &EkfState<T>,
    model: &SystemModel<T>,
    q: &[T],
) -> Result<EkfState<T>> {
    let n = model.n;
    if q.len() != n * n {
        return Err(Error::Dimension {
            expected: n * n,
            actual: q.len(),
        });
    }
    let zero_w = vec![T::zero(); model.g];
    let mean = model.step(&state.mean, &zero_w)?;
    let a = model.jacobian_fx(&state.mean, &zero_w)?;
    let mut cov = mat_mul(&mat_mul(&a, &state.cov, n, n, n), &transpose(&a, n, n), n, n, n);
    for (c, &qi) in cov.iter_mut().zip(q) {
        *c += qi;
    }
    symmetrize(&mut cov, n);
    Ok(EkfState { mean, cov })
}

/// Measurement update with `C = dh/dx` at the predicted mean.
pub fn ekf_update<T: Scalar>(
    state: &EkfState<T>,
    model: &SystemModel<T>,
    y: &[T],
    r: &[T],
) -> Result<EkfState<T>> {
    let (n, p) = (model.n, model.p);
    if y.len() != p {
        return Err(Error::Dimension {
            expected: p,
            actual: y.len(),
        });
    }
    if r.len() != p * p {
        return Err(Error::Dimension {
            expected: p * p,
            actual: r.len(),
        });
    }
    let c = model.jacobian_hx(&state.mean)?;
    // S = C P C^T + R
    let cp = mat_mul(&c, &state.cov, p, n, n);
    let mut s = mat_mul(&cp, &transpose(&c, p, n), p, n, p);
    for (si, &ri) in s.iter_mut().zip(r) {
        *si += ri;
    }
    let l = cholesky(&s, p).map_err(|_| {
        Error::Numerical("innovation covariance is not positive definite".into())
    })?;

    // K^T = S^{-1} C P (S symmetric), K is n x p
    let mut kt = vec![T::zero(); p * n];
    for j in 0..n {
        let col: Vec<T> = (0..p).map(|i| cp[i * n + j]).collect();
        let x = chol_solve(&l, &col, p);
        for i in 0..p {
            kt[i * n + j] = x[i];
        }
    }
    let k = transpose(&kt, p, n);

    let y_model = model.output(&state.mean)?;
    let innov: Vec<T> = y.iter().zip(&y_model).map(|(&a, &b)| a - b).collect();
    let correction = mat_vec(&k, &innov, n, p);
    let mean: Vec<T> = state
        .mean
        .iter()
        .zip(&correction)
        .map(|(&m, &dm)| m + dm)
        .collect();

    let kc = mat_mul(&k, &c, n, p, n);
    let mut ikc = identity::<T>(n);
    for (a, &b) in ikc.iter_mut().zip(&kc) {
        *a -= b;
    }
    let mut cov = mat_mul(&ikc, &state.cov, n, n, n);
    symmetrize(&mut cov, n);
    Ok(EkfState { mean, cov })
}

/// One filter step: predict, then update with `y`.
pub fn ekf_step<T: Scalar>(
    state: &EkfState<T>,
    model: &SystemModel<T>,
    y: &[T],
    q: &[T],
    r: &[T],
) -> Result<EkfState<T>> {
    let predicted = ekf_predict(state, model, q)?;
    ekf_update(&predicted, model, y, r)
}

/// Runs the filter over a scenario of the scalar benchmark system.
///
/// Tuning follows the scenario's own parameters: `Q = sigma_w^2`,
/// `R = sigma_v^2` (floored at `1e-12` so noise-free runs stay defined) and
/// `P0 = init_std^2`, with the mean started at the biased prior. Returns the
/// filtered state per time, `t = 0..=T`.
pub fn run_ekf<T: Scalar>(
    scenario: &Scenario<T>,
    model: &SystemModel<T>,
) -> Result<Vec<EkfState<T>>> {
    if model.n != 1 || model.p != 1 {
        return Err(Error::Domain(
            "scenario runs require the scalar benchmark dimensions".into(),
        ));
    }
    let cfg = &scenario.config;
    let q = vec![cfg.sigma_w * cfg.sigma_w];
    let r = vec![(cfg.sigma_v * cfg.sigma_v).max(real(1e-12))];
    let init = ekf_init(
        vec![cfg.prior_mean],
        vec![cfg.init_std * cfg.init_std],
    )?;

    let mut states = Vec::with_capacity(scenario.y.len());
    let mut current = ekf_update(&init, model, &[scenario.y[0]], &r)?;
    states.push(current.clone());
    for &y in &scenario.y[1..] {
        current = ekf_step(&current, model, &[y], &q, &r)?;
        states.push(current.clone());
    }
    Ok(states)
}

/// Filtered errors `e(t|t) = x(t) - xhat(t|t)` for one scenario run.
pub fn run_ekf_errors<T: Scalar>(
    scenario: &Scenario<T>,
    model: &SystemModel<T>,
) -> Result<Vec<T>> {
    let states = run_ekf(scenario, model)?;
    Ok(scenario
        .x_true
        .iter()
        .zip(&states)
        .map(|(&x, s)| x - s.mean[0])
        .collect())
}
