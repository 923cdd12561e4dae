//! Full-information estimation by single-shooting optimization.
//!
//! The decision variables are the initial state guess and the disturbance
//! sequence; states and output residuals follow from the shooting recursion.
//! The disturbance box is handled by exact projection, the residual box by a
//! ramped quadratic penalty with a terminal feasibility check. Descent uses
//! projected Barzilai-Borwein steps with a monotone Armijo backtrack, and
//! every solve is multi-started to cope with nonconvex output maps.

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cost::{evaluate_cost, CostSpec};
use crate::linalg::{mat_vec, sq_norm, transpose};
use crate::model::{example_system, SystemModel};
use crate::scenario::Scenario;
use crate::{real, Error, Result, Scalar};

/// One fixed-horizon estimation program.
#[derive(Debug, Clone)]
pub struct EstimationProblem<T> {
    pub model: SystemModel<T>,
    /// Measurements `y(0..=t)`.
    pub measurements: Vec<Vec<T>>,
    pub prior: Vec<T>,
    /// Componentwise disturbance bound (`0` collapses the box to the origin).
    pub w_bound: T,
    /// Componentwise residual bound.
    pub v_bound: T,
}

impl<T: Scalar> EstimationProblem<T> {
    pub fn new(
        model: SystemModel<T>,
        measurements: Vec<Vec<T>>,
        prior: Vec<T>,
        w_bound: T,
        v_bound: T,
    ) -> Result<Self> {
        if measurements.is_empty() {
            return Err(Error::Domain("need at least the measurement y(0)".into()));
        }
        for y in &measurements {
            if y.len() != model.p {
                return Err(Error::Dimension {
                    expected: model.p,
                    actual: y.len(),
                });
            }
        }
        if prior.len() != model.n {
            return Err(Error::Dimension {
                expected: model.n,
                actual: prior.len(),
            });
        }
        for (name, b) in [("w_bound", w_bound), ("v_bound", v_bound)] {
            if !b.is_finite() || b < T::zero() {
                return Err(Error::Domain(format!("{name} must be >= 0, got {b}")));
            }
        }
        Ok(Self {
            model,
            measurements,
            prior,
            w_bound,
            v_bound,
        })
    }

    /// Estimation horizon `t` (one less than the measurement count).
    pub fn horizon(&self) -> usize {
        self.measurements.len() - 1
    }
}

/// Decision variables of the shooting program.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector<T> {
    pub chi0: Vec<T>,
    /// Disturbance estimates `omega(0..t-1)`.
    pub omega: Vec<Vec<T>>,
}

impl<T: Scalar> DecisionVector<T> {
    pub fn zero_disturbance(chi0: Vec<T>, t: usize, g: usize) -> Self {
        Self {
            chi0,
            omega: vec![vec![T::zero(); g]; t],
        }
    }
}

/// Solver configuration.
#[derive(Debug, Clone)]
pub struct SolveOptions<T> {
    /// Iteration cap per penalty stage.
    pub max_iters: usize,
    /// Projected-gradient sup-norm stopping tolerance.
    pub grad_tol: T,
    /// Number of random prior-perturbed starts.
    pub restarts: usize,
    /// Multiplicative penalty ramp per stage.
    pub penalty_factor: T,
    /// Initial residual penalty weight, as a multiple of the stage weight.
    /// Kept deliberately small: a stiff first stage distorts the landscape
    /// before the multipliers settle, and an over-penalized descent can park
    /// in a worse basin than a gentle one that lets the ramp do the forcing.
    pub penalty_init_scale: T,
    /// Maximum number of penalty ramp stages.
    pub max_penalty_stages: usize,
    /// Feasibility slack on the residual bound.
    pub nu_feas_tol: T,
    /// Whether `warm` participates as a start.
    pub use_warm_start: bool,
    /// Previous solution to warm-start from (dimensions must match).
    pub warm: Option<DecisionVector<T>>,
    /// Standard deviation of the random initial-state perturbations.
    pub perturb_std: T,
    pub start_seed: u64,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 200,
            grad_tol: real(1e-8),
            restarts: 4,
            penalty_factor: real(10.0),
            penalty_init_scale: real(0.1),
            max_penalty_stages: 12,
            nu_feas_tol: real(1e-6),
            use_warm_start: true,
            warm: None,
            perturb_std: real(2.0),
            start_seed: 0x71E5,
        }
    }
}

/// Scalar diagnostics of one solve (always reported in `f64`).
#[derive(Debug, Clone, Copy, Default)]
pub struct Diagnostics {
    /// Descent iterations across all stages of the selected start.
    pub iterations: usize,
    /// Final projected-gradient sup-norm of the selected start.
    pub grad_norm: f64,
    /// Starts attempted.
    pub starts: usize,
    /// Penalty stages run for the selected start.
    pub penalty_stages: usize,
    /// Final residual-bound violation (0 when within the box).
    pub nu_violation: f64,
}

/// Result of one fixed-horizon solve.
#[derive(Debug, Clone)]
pub struct EstimateResult<T> {
    pub decision: DecisionVector<T>,
    /// Reconstructed states `xhat(k|t)`, `k = 0..=t`.
    pub states: Vec<Vec<T>>,
    /// Residuals `nuhat(k) = y(k) - h(xhat(k|t))`.
    pub nu: Vec<Vec<T>>,
    /// Exact (non-smoothed, penalty-free) cost at the decision.
    pub cost: T,
    pub feasible: bool,
    pub diagnostics: Diagnostics,
}

impl<T: Scalar> EstimateResult<T> {
    /// The filtered estimate `xhat(t|t)`.
    pub fn state_estimate(&self) -> &[T] {
        self.states.last().expect("states cover 0..=t").as_slice()
    }
}

/// Reconstructs states and residuals from a decision by the shooting
/// recursion: `x(k+1) = f(x(k), omega(k))`, `nu(k) = y(k) - h(x(k))`.
pub fn rollout<T: Scalar>(
    problem: &EstimationProblem<T>,
    decision: &DecisionVector<T>,
) -> Result<(Vec<Vec<T>>, Vec<Vec<T>>)> {
    let t = problem.horizon();
    if decision.chi0.len() != problem.model.n {
        return Err(Error::Dimension {
            expected: problem.model.n,
            actual: decision.chi0.len(),
        });
    }
    if decision.omega.len() != t {
        return Err(Error::Dimension {
            expected: t,
            actual: decision.omega.len(),
        });
    }
    let mut states = Vec::with_capacity(t + 1);
    states.push(decision.chi0.clone());
    for k in 0..t {
        let next = problem.model.step(&states[k], &decision.omega[k])?;
        states.push(next);
    }
    let mut nu = Vec::with_capacity(t + 1);
    for k in 0..=t {
        let y_model = problem.model.output(&states[k])?;
        nu.push(
            problem.measurements[k]
                .iter()
                .zip(&y_model)
                .map(|(&y, &hy)| y - hy)
                .collect(),
        );
    }
    Ok((states, nu))
}

fn pack<T: Scalar>(decision: &DecisionVector<T>) -> Vec<T> {
    let mut z = decision.chi0.clone();
    for w in &decision.omega {
        z.extend_from_slice(w);
    }
    z
}

fn unpack<T: Scalar>(z: &[T], n: usize, g: usize, t: usize) -> DecisionVector<T> {
    DecisionVector {
        chi0: z[..n].to_vec(),
        omega: (0..t).map(|k| z[n + k * g..n + (k + 1) * g].to_vec()).collect(),
    }
}

/// Log-sum-exp state of one max term: value and softmax weights.
struct LseTerm<T> {
    value: T,
    weights: Vec<T>,
}

fn lse<T: Scalar>(z: &[T], tau: T) -> LseTerm<T> {
    if z.is_empty() {
        return LseTerm {
            value: T::zero(),
            weights: Vec::new(),
        };
    }
    let m = z.iter().fold(z[0], |acc, &v| acc.max(v));
    let exps: Vec<T> = z.iter().map(|&v| ((v - m) / tau).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    LseTerm {
        value: m + tau * sum.ln(),
        weights: exps.into_iter().map(|e| e / sum).collect(),
    }
}

/// Shooting objective: smoothed cost plus an augmented-Lagrangian term for
/// the residual box.
///
/// `rho = 0` gives the pure (penalty-free) smoothed objective. For `rho > 0`
/// the constraint `|nu| <= v_bound` enters in Powell-Hestenes-Rockafellar
/// form, `(max(0, mu + rho*(|nu| - b))^2 - mu^2) / (2 rho)` per component:
/// the multiplier estimates `mu` carry the constraint force so `rho` can stay
/// moderate even when active constraints have very large multipliers.
/// Gradients are exact, computed by reverse accumulation through the
/// recursion.
/// Best feasible point observed across every evaluation of a solve attempt.
///
/// The multiplier outer loop can walk through the feasible region and settle
/// somewhere worse: a stage minimizes the augmented Lagrangian, not the cost,
/// so its path may visit a feasible point with a lower cost than the point the
/// ramp finally converges to. Remembering the best such visit makes the
/// returned estimate no worse than anything the solve actually evaluated.
struct Harvest<T> {
    tol: T,
    cost: T,
    z: Option<Vec<T>>,
}

struct Objective<'a, T> {
    problem: &'a EstimationProblem<T>,
    spec: &'a CostSpec<T>,
    tau: T,
    rho: T,
    /// Flattened `(t + 1) * p` multipliers, all zero when unused.
    mu: Vec<T>,
    harvest: Option<&'a RefCell<Harvest<T>>>,
}

impl<'a, T: Scalar> Objective<'a, T> {
    fn new(problem: &'a EstimationProblem<T>, spec: &'a CostSpec<T>, tau: T, rho: T) -> Self {
        let mu = vec![T::zero(); (problem.horizon() + 1) * problem.model.p];
        Self {
            problem,
            spec,
            tau,
            rho,
            mu,
            harvest: None,
        }
    }

    fn with_multipliers(mut self, mu: Vec<T>) -> Self {
        debug_assert_eq!(mu.len(), self.mu.len());
        self.mu = mu;
        self
    }

    fn with_harvest(mut self, harvest: &'a RefCell<Harvest<T>>) -> Self {
        self.harvest = Some(harvest);
        self
    }

    fn eval(&self, z: &[T], mut grad: Option<&mut [T]>) -> Result<T> {
        let (n, g, t) = (
            self.problem.model.n,
            self.problem.model.g,
            self.problem.horizon(),
        );
        let spec = self.spec;
        let decision = unpack(z, n, g, t);
        let (states, nu) = rollout(self.problem, &decision)?;

        let horizon_weight = real::<T>(t as f64 + 1.0);
        let disc = spec.discount(t);

        // initial-state term
        let gap: Vec<T> = decision
            .chi0
            .iter()
            .zip(&self.problem.prior)
            .map(|(&a, &b)| a - b)
            .collect();
        let gap_sq = sq_norm(&gap);
        let mut value = if gap_sq > T::zero() {
            spec.c2 * gap_sq.sqrt().powf(spec.a2) * disc
        } else {
            T::zero()
        };

        // averaged quadratic sum
        let zw: Vec<T> = decision.omega.iter().map(|w| spec.w_weight * sq_norm(w)).collect();
        let zv: Vec<T> = nu.iter().map(|v| spec.v_weight * sq_norm(v)).collect();
        value = value
            + (spec.lambda_w * zw.iter().copied().sum::<T>()
                + spec.lambda_v * zv.iter().copied().sum::<T>())
                / horizon_weight;

        // smoothed max terms (skipped entirely at the lambda = 1 boundary)
        let coeff_w = T::one() - spec.lambda_w;
        let coeff_v = T::one() - spec.lambda_v;
        let lse_w = (coeff_w > T::zero()).then(|| lse(&zw, self.tau));
        let lse_v = (coeff_v > T::zero()).then(|| lse(&zv, self.tau));
        if let Some(term) = &lse_w {
            value = value + coeff_w * term.value;
        }
        if let Some(term) = &lse_v {
            value = value + coeff_v * term.value;
        }

        // residual-box augmented Lagrangian
        let two = real::<T>(2.0);
        let p = self.problem.model.p;
        if self.rho > T::zero() {
            let unpenalized = value;
            let mut pen = T::zero();
            let mut viol = T::zero();
            for (k, v) in nu.iter().enumerate() {
                for (i, &c) in v.iter().enumerate() {
                    let mu = self.mu[k * p + i];
                    let excess = c.abs() - self.problem.v_bound;
                    viol = viol.max(excess.max(T::zero()));
                    let shifted = mu + self.rho * excess;
                    let active = shifted.max(T::zero());
                    pen += (active * active - mu * mu) / (two * self.rho);
                }
            }
            value = value + pen;
            if let Some(cell) = self.harvest {
                let mut h = cell.borrow_mut();
                if viol <= h.tol && unpenalized < h.cost && unpenalized.is_finite() {
                    h.cost = unpenalized;
                    h.z = Some(z.to_vec());
                }
            }
        }

        let Some(grad) = grad.as_deref_mut() else {
            return Ok(value);
        };

        // stage sensitivities
        let s_nu: Vec<Vec<T>> = (0..=t)
            .map(|k| {
                let mut base = spec.lambda_v * spec.v_weight / horizon_weight;
                if let Some(term) = &lse_v {
                    base += coeff_v * term.weights[k] * spec.v_weight;
                }
                nu[k]
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        let mut s = two * base * c;
                        if self.rho > T::zero() {
                            let mu = self.mu[k * p + i];
                            let shifted = mu + self.rho * (c.abs() - self.problem.v_bound);
                            if shifted > T::zero() {
                                s += shifted * c.signum();
                            }
                        }
                        s
                    })
                    .collect()
            })
            .collect();

        // adjoint sweep: a(k) = d value / d x(k)
        let hx_t = self.problem.model.jacobian_hx(&states[t])?;
        let mut adjoint = scaled_jt_v(&hx_t, &s_nu[t], self.problem.model.p, n);
        neg(&mut adjoint);
        for k in (0..t).rev() {
            let mut base = spec.lambda_w * spec.w_weight / horizon_weight;
            if let Some(term) = &lse_w {
                base += coeff_w * term.weights[k] * spec.w_weight;
            }
            let fw = self.problem.model.jacobian_fw(&states[k], &decision.omega[k])?;
            let chain = scaled_jt_v(&fw, &adjoint, n, g);
            for (i, &w) in decision.omega[k].iter().enumerate() {
                grad[n + k * g + i] = two * base * w + chain[i];
            }

            let fx = self.problem.model.jacobian_fx(&states[k], &decision.omega[k])?;
            let mut a_prev = scaled_jt_v(&fx, &adjoint, n, n);
            let hx = self.problem.model.jacobian_hx(&states[k])?;
            let h_term = scaled_jt_v(&hx, &s_nu[k], self.problem.model.p, n);
            for i in 0..n {
                a_prev[i] -= h_term[i];
            }
            adjoint = a_prev;
        }

        // initial-state gradient
        let phi_scale = if gap_sq > T::zero() {
            spec.c2 * disc * spec.a2 * gap_sq.sqrt().powf(spec.a2 - two)
        } else {
            T::zero()
        };
        for i in 0..n {
            grad[i] = phi_scale * gap[i] + adjoint[i];
        }
        Ok(value)
    }
}

/// `J^T v` for a row-major `rows x cols` Jacobian.
fn scaled_jt_v<T: Scalar>(j: &[T], v: &[T], rows: usize, cols: usize) -> Vec<T> {
    mat_vec(&transpose(j, rows, cols), v, cols, rows)
}

fn neg<T: Scalar>(v: &mut [T]) {
    for x in v {
        *x = -*x;
    }
}

/// Smoothed objective value and packed gradient `[chi0 | omega]` at a
/// decision, without the residual penalty. The smoothing temperature is the
/// spec's; with `lambda = 1` the value coincides with the exact cost.
pub fn objective_and_gradient<T: Scalar>(
    problem: &EstimationProblem<T>,
    spec: &CostSpec<T>,
    decision: &DecisionVector<T>,
) -> Result<(T, Vec<T>)> {
    spec.validate()?;
    let obj = Objective::new(problem, spec, spec.tau, T::zero());
    let z = pack(decision);
    let mut grad = vec![T::zero(); z.len()];
    let value = obj.eval(&z, Some(&mut grad))?;
    Ok((value, grad))
}

fn project<T: Scalar>(z: &mut [T], n: usize, w_bound: T) {
    for x in z[n..].iter_mut() {
        *x = x.min(w_bound).max(-w_bound);
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Projected Barzilai-Borwein descent with monotone Armijo backtracking.
///
/// Returns (iterations, final projected-gradient sup-norm).
fn spg<T: Scalar>(
    obj: &Objective<'_, T>,
    z: &mut Vec<T>,
    n: usize,
    w_bound: T,
    max_iters: usize,
    grad_tol: T,
) -> Result<(usize, T)> {
    let c1 = real::<T>(1e-4);
    let (alpha_min, alpha_max) = (real::<T>(1e-8), real::<T>(1e8));

    project(z, n, w_bound);
    let mut grad = vec![T::zero(); z.len()];
    let mut value = obj.eval(z, Some(&mut grad))?;
    if !value.is_finite() {
        return Err(Error::Numerical("objective is non-finite at the start".into()));
    }

    let proj_grad_norm = |z: &[T], grad: &[T]| -> T {
        let mut step: Vec<T> = z.iter().zip(grad).map(|(&x, &g)| x - g).collect();
        project(&mut step, n, w_bound);
        z.iter()
            .zip(&step)
            .map(|(&x, &p)| (x - p).abs())
            .fold(T::zero(), T::max)
    };

    let mut alpha = T::one();
    let mut pg = proj_grad_norm(z, &grad);
    let mut iters = 0;
    while iters < max_iters && pg > grad_tol {
        iters += 1;
        let mut trial_base: Vec<T> = z.iter().zip(&grad).map(|(&x, &g)| x - alpha * g).collect();
        project(&mut trial_base, n, w_bound);
        let d: Vec<T> = trial_base.iter().zip(z.iter()).map(|(&p, &x)| p - x).collect();
        let mut gd = dot(&grad, &d);
        let mut dir = d;
        if gd >= T::zero() {
            // stale BB step produced an ascent direction: fall back to the
            // unit projected-gradient step
            let mut fallback: Vec<T> = z.iter().zip(&grad).map(|(&x, &g)| x - g).collect();
            project(&mut fallback, n, w_bound);
            dir = fallback.iter().zip(z.iter()).map(|(&p, &x)| p - x).collect();
            gd = dot(&grad, &dir);
            if gd >= T::zero() {
                break;
            }
        }

        let mut lam = T::one();
        let mut accepted = None;
        for _ in 0..56 {
            let trial: Vec<T> = z.iter().zip(&dir).map(|(&x, &dx)| x + lam * dx).collect();
            let f_trial = obj.eval(&trial, None)?;
            if f_trial.is_finite() && f_trial <= value + c1 * lam * gd {
                accepted = Some((trial, f_trial));
                break;
            }
            lam = lam / real::<T>(2.0);
        }
        let Some((z_new, f_new)) = accepted else {
            break; // no acceptable step; z is as converged as it gets
        };

        let mut grad_new = vec![T::zero(); z.len()];
        let f_check = obj.eval(&z_new, Some(&mut grad_new))?;
        debug_assert_eq!(f_check, f_new);

        let s: Vec<T> = z_new.iter().zip(z.iter()).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = grad_new.iter().zip(&grad).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        alpha = if sy > T::zero() {
            (dot(&s, &s) / sy).max(alpha_min).min(alpha_max)
        } else {
            alpha_max
        };

        *z = z_new;
        value = f_new;
        grad = grad_new;
        pg = proj_grad_norm(z, &grad);
    }
    Ok((iters, pg))
}

fn max_violation<T: Scalar>(nu: &[Vec<T>], v_bound: T) -> T {
    nu.iter()
        .flat_map(|v| v.iter())
        .map(|&c| (c.abs() - v_bound).max(T::zero()))
        .fold(T::zero(), T::max)
}

struct Candidate<T> {
    z: Vec<T>,
    cost: T,
    feasible: bool,
    violation: T,
    iterations: usize,
    grad_norm: T,
    stages: usize,
}

/// Data-consistent start: greedy output tracking. The initial state is
/// pulled toward the first measurement and each disturbance is chosen, one
/// stage at a time, by a few damped Gauss-Newton steps on the next stage's
/// weighted cost — output residual plus disturbance-magnitude ridge —
/// projected onto the disturbance box. Zero-disturbance starts all descend
/// into the basin shaped by the initial-state term; when that term carries
/// a large discount weight it can eclipse the data-consistent basin
/// entirely, so one start is seeded inside it directly. The ridge keeps the
/// greedy fit from chasing measurement noise where the output map is flat
/// and barely informative.
fn tracking_start<T: Scalar>(
    problem: &EstimationProblem<T>,
    t: usize,
    ridge: T,
) -> Result<Vec<T>> {
    track_disturbances(problem, t, inverted_initial_state(problem)?, ridge)
}

/// Initial state pulled toward the first measurement by a few damped
/// Gauss-Newton steps on the output residual, starting from the prior.
fn inverted_initial_state<T: Scalar>(problem: &EstimationProblem<T>) -> Result<Vec<T>> {
    let model = &problem.model;
    let (n, p) = (model.n, model.p);
    let eps = real::<T>(1e-12);
    let gn_steps = 8;

    let mut chi0 = problem.prior.clone();
    for _ in 0..gn_steps {
        let out = model.output(&chi0)?;
        let r: Vec<T> = out.iter().zip(&problem.measurements[0]).map(|(&a, &b)| a - b).collect();
        let jac = model.jacobian_hx(&chi0)?;
        let grad = scaled_jt_v(&jac, &r, p, n);
        let denom = sq_norm(&jac) + eps;
        for i in 0..n {
            chi0[i] -= grad[i] / denom;
        }
    }
    Ok(chi0)
}

/// Anchored variant of the tracking start: the initial state stays exactly
/// at the prior and only the disturbances chase the measurements. When the
/// initial-state weight grows with the horizon, the minimizer is forced
/// into a neighborhood of the prior, and the best decision there is "prior
/// plus data-fitted disturbances" — a point the other starts reach only
/// across a wide non-convex valley.
fn anchored_tracking_start<T: Scalar>(
    problem: &EstimationProblem<T>,
    t: usize,
    ridge: T,
) -> Result<Vec<T>> {
    track_disturbances(problem, t, problem.prior.clone(), ridge)
}

/// Undisturbed rollout from the output-inverted initial state. With small
/// true disturbances this point approximates the true trajectory itself, so
/// descending from it reaches the basin that certifies the optimality
/// sandwich — one that greedy per-stage fitting can overshoot (it chases
/// measurement noise) and prior-centered starts may never enter.
fn inverted_rollout_start<T: Scalar>(
    problem: &EstimationProblem<T>,
    t: usize,
) -> Result<Vec<T>> {
    Ok(pack(&DecisionVector {
        chi0: inverted_initial_state(problem)?,
        omega: vec![vec![T::zero(); problem.model.g]; t],
    }))
}

/// Forward pass shared by the tracking starts: greedy per-stage disturbance
/// selection from a fixed initial state.
fn track_disturbances<T: Scalar>(
    problem: &EstimationProblem<T>,
    t: usize,
    chi0: Vec<T>,
    ridge: T,
) -> Result<Vec<T>> {
    let model = &problem.model;
    let (n, g, p) = (model.n, model.g, model.p);
    let eps = real::<T>(1e-12);
    let gn_steps = 8;

    let mut x = chi0.clone();
    let mut omega = Vec::with_capacity(t);
    for k in 0..t {
        let mut w = vec![T::zero(); g];
        for _ in 0..gn_steps {
            let x_next = model.step(&x, &w)?;
            let out = model.output(&x_next)?;
            let r: Vec<T> = out
                .iter()
                .zip(&problem.measurements[k + 1])
                .map(|(&a, &b)| a - b)
                .collect();
            let hx = model.jacobian_hx(&x_next)?;
            let fw = model.jacobian_fw(&x, &w)?;
            // stage objective ridge*|w|^2 + |r|^2; with J = Hx * Fw its
            // half-gradient is ridge*w + J^T r and the scalar curvature
            // proxy is ridge + ||J||^2
            let hr = scaled_jt_v(&hx, &r, p, n);
            let grad = scaled_jt_v(&fw, &hr, n, g);
            let mut denom = ridge + eps;
            for row in 0..p {
                let jrow = &hx[row * n..(row + 1) * n];
                let jw = mat_vec(&transpose(fw.as_slice(), n, g), jrow, g, n);
                denom += sq_norm(&jw);
            }
            for i in 0..g {
                w[i] = (w[i] - (ridge * w[i] + grad[i]) / denom)
                    .min(problem.w_bound)
                    .max(-problem.w_bound);
            }
        }
        x = model.step(&x, &w)?;
        omega.push(w);
    }
    Ok(pack(&DecisionVector { chi0, omega }))
}

/// Solves the estimation program: multi-start projected descent with a
/// ramped residual penalty, followed by an exact-cost evaluation and a hard
/// feasibility check. The best feasible candidate wins; if no start reaches
/// feasibility the least-violating one is returned with `feasible = false`.
pub fn solve_fie<T: Scalar>(
    problem: &EstimationProblem<T>,
    spec: &CostSpec<T>,
    options: &SolveOptions<T>,
) -> Result<EstimateResult<T>> {
    spec.validate()?;
    let (n, g, t) = (problem.model.n, problem.model.g, problem.horizon());
    let dim = n + t * g;

    // start list: prior-centered, output-tracking, anchored-tracking,
    // inverted-rollout, the warm start when present, then exactly `restarts`
    // random prior-perturbed starts (the random set must not shrink when a
    // warm start is supplied, or warm solves could do worse than cold ones)
    let mut starts: Vec<Vec<T>> = Vec::with_capacity(options.restarts + 5);
    starts.push(pack(&DecisionVector::zero_disturbance(
        problem.prior.clone(),
        t,
        g,
    )));
    // greedy-fit ridge from the stage weights: disturbance cost relative to
    // residual cost
    let ridge = spec.w_weight / spec.v_weight;
    starts.push(tracking_start(problem, t, ridge)?);
    starts.push(anchored_tracking_start(problem, t, ridge)?);
    starts.push(inverted_rollout_start(problem, t)?);
    if options.use_warm_start {
        if let Some(warm) = &options.warm {
            let z = pack(warm);
            if z.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: z.len(),
                });
            }
            starts.push(z);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.start_seed);
    for _ in 0..options.restarts {
        let mut z = vec![T::zero(); dim];
        for i in 0..n {
            let noise: f64 = rng.sample(StandardNormal);
            z[i] = problem.prior[i] + options.perturb_std * real::<T>(noise);
        }
        starts.push(z);
    }

    let needs_smoothing = spec.lambda_w < T::one() || spec.lambda_v < T::one();
    let mut best: Option<Candidate<T>> = None;
    let attempted = starts.len();

    for start in starts {
        let mut z = start;
        let mut iterations = 0;
        let mut grad_norm = T::nan();
        let mut stages = 0;
        // A growing discount inflates the initial-state term by disc(t); the
        // penalty has to start on a comparable scale or the ramp spends most
        // of its stages catching up. The cap keeps the augmented-Lagrangian
        // subproblems within line-search resolution; beyond it, multiplier
        // updates (not raw penalty weight) supply the remaining force.
        let disc_scale = T::one().max(spec.discount(t)).min(real::<T>(1e3));
        let mut rho = options.penalty_init_scale * spec.v_weight * disc_scale;
        let mut diverged = false;

        // Smoothing continuation: the target temperature concentrates all
        // max-term gradient on the single worst stage, which strands most
        // starts in poor basins. Approaching it from far softer objectives
        // first lets every stage pull on the iterate before the landscape
        // sharpens into its minimax shape.
        if needs_smoothing {
            for factor in [1000.0, 100.0, 10.0] {
                let obj = Objective::new(problem, spec, spec.tau * real::<T>(factor), rho);
                match spg(&obj, &mut z, n, problem.w_bound, options.max_iters, options.grad_tol) {
                    Ok((it, pg)) => {
                        iterations += it;
                        grad_norm = pg;
                    }
                    Err(Error::Numerical(_)) => {
                        diverged = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if diverged {
                continue;
            }
        }

        // Method-of-multipliers outer loop: each stage minimizes the
        // augmented Lagrangian, then performs the first-order multiplier
        // update. rho only ramps when the violation is not shrinking fast
        // enough on its own; active constraints with huge true multipliers
        // (a growing discount produces them) are then carried by mu rather
        // than by an unbounded penalty weight.
        let mu_len = (t + 1) * problem.model.p;
        let mut mu = vec![T::zero(); mu_len];
        let mut prev_violation = T::infinity();
        let harvest = RefCell::new(Harvest {
            tol: options.nu_feas_tol,
            cost: T::infinity(),
            z: None,
        });
        loop {
            stages += 1;
            let obj = Objective::new(problem, spec, spec.tau, rho)
                .with_multipliers(mu.clone())
                .with_harvest(&harvest);
            match spg(&obj, &mut z, n, problem.w_bound, options.max_iters, options.grad_tol) {
                Ok((it, pg)) => {
                    iterations += it;
                    grad_norm = pg;
                }
                Err(Error::Numerical(_)) => {
                    diverged = true;
                    break;
                }
                Err(e) => return Err(e),
            }
            let decision = unpack(&z, n, g, t);
            let (_, nu) = rollout(problem, &decision)?;
            let violation = max_violation(&nu, problem.v_bound);
            if violation <= options.nu_feas_tol || stages >= options.max_penalty_stages {
                break;
            }
            let pp = problem.model.p;
            for (k, v) in nu.iter().enumerate() {
                for (i, &c) in v.iter().enumerate() {
                    let m = &mut mu[k * pp + i];
                    *m = (*m + rho * (c.abs() - problem.v_bound)).max(T::zero());
                }
            }
            if violation > real::<T>(0.25) * prev_violation {
                rho = rho * options.penalty_factor;
            }
            prev_violation = violation;
        }
        if diverged && harvest.borrow().z.is_none() {
            continue;
        }

        if !diverged && needs_smoothing {
            // refinement pass at a tighter temperature to shrink the
            // log-sum-exp bias below the stage tolerances
            let obj = Objective::new(problem, spec, spec.tau / real::<T>(10.0), rho)
                .with_multipliers(mu)
                .with_harvest(&harvest);
            let (it, pg) = spg(&obj, &mut z, n, problem.w_bound, options.max_iters, options.grad_tol)?;
            iterations += it;
            grad_norm = pg;
        }

        // The ramp's end point competes against the best feasible visit the
        // evaluations recorded; the multiplier path may have walked through a
        // better feasible point than the one it settled on.
        let mut points: Vec<Vec<T>> = Vec::with_capacity(2);
        if !diverged {
            points.push(z);
        }
        if let Some(hz) = harvest.borrow_mut().z.take() {
            points.push(hz);
        }
        let mut chosen: Option<(Vec<T>, T, T)> = None;
        for pz in points {
            let decision = unpack(&pz, n, g, t);
            let (_, nu) = rollout(problem, &decision)?;
            let violation = max_violation(&nu, problem.v_bound);
            let cost =
                evaluate_cost(spec, &decision.chi0, &problem.prior, &decision.omega, &nu, t)?
                    .total;
            if !cost.is_finite() {
                continue;
            }
            let take = match &chosen {
                None => true,
                Some((_, best_cost, best_viol)) => {
                    match (violation <= options.nu_feas_tol, *best_viol <= options.nu_feas_tol) {
                        (true, false) => true,
                        (false, true) => false,
                        (true, true) => cost < *best_cost,
                        (false, false) => violation < *best_viol,
                    }
                }
            };
            if take {
                chosen = Some((pz, cost, violation));
            }
        }
        let Some((z, cost, violation)) = chosen else {
            continue;
        };
        let cand = Candidate {
            z,
            cost,
            feasible: violation <= options.nu_feas_tol,
            violation,
            iterations,
            grad_norm,
            stages,
        };
        let better = match &best {
            None => true,
            Some(b) => match (cand.feasible, b.feasible) {
                (true, false) => true,
                (false, true) => false,
                (true, true) => cand.cost < b.cost,
                (false, false) => cand.violation < b.violation
                    || (cand.violation == b.violation && cand.cost < b.cost),
            },
        };
        if better {
            best = Some(cand);
        }
    }

    let Some(best) = best else {
        return Err(Error::SolverFailure {
            t,
            reason: "all starts produced non-finite objectives".into(),
            diagnostics: Diagnostics {
                starts: attempted,
                ..Diagnostics::default()
            },
        });
    };

    let decision = unpack(&best.z, n, g, t);
    let (states, nu) = rollout(problem, &decision)?;
    Ok(EstimateResult {
        decision,
        states,
        nu,
        cost: best.cost,
        feasible: best.feasible,
        diagnostics: Diagnostics {
            iterations: best.iterations,
            grad_norm: best.grad_norm.to_f64().unwrap_or(f64::NAN),
            starts: attempted,
            penalty_stages: best.stages,
            nu_violation: best.violation.to_f64().unwrap_or(f64::NAN),
        },
    })
}

/// Grid specification for [`brute_force_oracle`].
#[derive(Debug, Clone)]
pub struct OracleGrid {
    /// Initial-state range half-width around the prior.
    pub chi0_half_width: f64,
    pub chi0_points: usize,
    /// Points per disturbance stage over `[-w_bound, w_bound]`.
    pub omega_points: usize,
    /// Enumeration budget.
    pub max_points: u128,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self {
            chi0_half_width: 8.0,
            chi0_points: 401,
            omega_points: 61,
            max_points: 10_000_000,
        }
    }
}

fn linspace<T: Scalar>(lo: T, hi: T, points: usize) -> Vec<T> {
    if points == 1 || lo == hi {
        return vec![(lo + hi) / real::<T>(2.0)];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * real::<T>(i as f64) / real::<T>((points - 1) as f64))
        .collect()
}

/// Exhaustive grid search over scalar short-horizon programs, with hard
/// rejection of residual-bound violations. Returns `None` when every grid
/// point violates the bound.
pub fn brute_force_oracle<T: Scalar>(
    problem: &EstimationProblem<T>,
    spec: &CostSpec<T>,
    grid: &OracleGrid,
) -> Result<Option<(DecisionVector<T>, T)>> {
    spec.validate()?;
    if problem.model.n != 1 || problem.model.g != 1 || problem.model.p != 1 {
        return Err(Error::Domain(
            "the brute-force oracle supports scalar systems only".into(),
        ));
    }
    let t = problem.horizon();
    if t > 3 {
        return Err(Error::Domain(format!(
            "the brute-force oracle supports horizons t <= 3, got {t}"
        )));
    }
    let points = (grid.chi0_points as u128)
        .saturating_mul((grid.omega_points as u128).saturating_pow(t as u32));
    if points > grid.max_points {
        return Err(Error::GridTooLarge {
            points,
            limit: grid.max_points,
        });
    }

    let hw = real::<T>(grid.chi0_half_width);
    let chi0_values = linspace(problem.prior[0] - hw, problem.prior[0] + hw, grid.chi0_points);
    let omega_values = if problem.w_bound > T::zero() {
        linspace(-problem.w_bound, problem.w_bound, grid.omega_points)
    } else {
        vec![T::zero()]
    };
    // absorb roundoff without admitting genuinely infeasible points
    let reject = problem.v_bound * (T::one() + real::<T>(1e-12)) + real::<T>(1e-12);
    let horizon_weight = real::<T>(t as f64 + 1.0);

    struct Dfs<'a, T: Scalar> {
        problem: &'a EstimationProblem<T>,
        spec: &'a CostSpec<T>,
        omega_values: &'a [T],
        reject: T,
        horizon_weight: T,
        t: usize,
        stack: Vec<T>,
        best_cost: T,
        best: Option<(T, Vec<T>)>,
    }

    impl<T: Scalar> Dfs<'_, T> {
        /// `x` is the state at stage `k`; the accumulators carry raw sums
        /// and maxima of the weighted squared stages seen so far.
        #[allow(clippy::too_many_arguments)]
        fn go(
            &mut self,
            k: usize,
            x: T,
            initial: T,
            sum_w: T,
            max_w: T,
            sum_v: T,
            max_v: T,
        ) -> Result<()> {
            let spec = self.spec;
            let y = self.problem.measurements[k][0];
            let hy = self.problem.model.output(&[x])?[0];
            let nu = y - hy;
            if nu.abs() > self.reject {
                return Ok(());
            }
            let zv = spec.v_weight * nu * nu;
            let sum_v = sum_v + zv;
            let max_v = max_v.max(zv);

            let partial = initial
                + (spec.lambda_w * sum_w + spec.lambda_v * sum_v) / self.horizon_weight
                + (T::one() - spec.lambda_w) * max_w
                + (T::one() - spec.lambda_v) * max_v;
            if partial >= self.best_cost {
                return Ok(()); // every remaining stage only adds cost
            }
            if k == self.t {
                self.best_cost = partial;
                self.best = Some((self.stack[0], self.stack[1..].to_vec()));
                return Ok(());
            }
            for i in 0..self.omega_values.len() {
                let w = self.omega_values[i];
                let next = self.problem.model.step(&[x], &[w])?[0];
                let zw = spec.w_weight * w * w;
                self.stack.push(w);
                self.go(k + 1, next, initial, sum_w + zw, max_w.max(zw), sum_v, max_v)?;
                self.stack.pop();
            }
            Ok(())
        }
    }

    let mut dfs = Dfs {
        problem,
        spec,
        omega_values: &omega_values,
        reject,
        horizon_weight,
        t,
        stack: Vec::with_capacity(t + 1),
        best_cost: T::infinity(),
        best: None,
    };
    for &chi0 in &chi0_values {
        let gap = (chi0 - problem.prior[0]).abs();
        let initial = if gap > T::zero() {
            spec.c2 * gap.powf(spec.a2) * spec.discount(t)
        } else {
            T::zero()
        };
        dfs.stack.push(chi0);
        dfs.go(0, chi0, initial, T::zero(), T::zero(), T::zero(), T::zero())?;
        dfs.stack.pop();
    }

    let Some((chi0, omega)) = dfs.best else {
        return Ok(None);
    };
    let decision = DecisionVector {
        chi0: vec![chi0],
        omega: omega.into_iter().map(|w| vec![w]).collect(),
    };
    let (_, nu) = rollout(problem, &decision)?;
    let cost = evaluate_cost(spec, &decision.chi0, &problem.prior, &decision.omega, &nu, t)?.total;
    Ok(Some((decision, cost)))
}

fn mix_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Solves the growing-horizon estimation sequence for one scenario of the
/// built-in benchmark system, warm-starting each solve from the previous
/// solution extended by a zero disturbance stage.
pub fn run_fie_sequence<T: Scalar>(
    scenario: &Scenario<T>,
    spec: &CostSpec<T>,
    options: &SolveOptions<T>,
) -> Result<Vec<EstimateResult<T>>> {
    let (model, _) = example_system::<T>();
    let prior = vec![scenario.config.prior_mean];
    let w_bound = scenario.config.w_bound();
    let v_bound = scenario.config.v_bound();
    let horizon = scenario.horizon();

    let mut results: Vec<EstimateResult<T>> = Vec::with_capacity(horizon + 1);
    let mut warm: Option<DecisionVector<T>> = None;
    for t in 0..=horizon {
        let measurements = scenario.y[..=t].iter().map(|&y| vec![y]).collect();
        let problem = EstimationProblem::new(model.clone(), measurements, prior.clone(), w_bound, v_bound)?;
        let mut opts = options.clone();
        opts.start_seed = mix_seed(options.start_seed, t);
        opts.warm = warm.take();
        let result = solve_fie(&problem, spec, &opts)?;
        if options.use_warm_start {
            let mut next = result.decision.clone();
            next.omega.push(vec![T::zero(); model.g]);
            warm = Some(next);
        }
        results.push(result);
    }
    Ok(results)
}
