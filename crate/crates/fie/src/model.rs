//! System abstraction: dynamics `x+ = f(x, w)`, output map `y = h(x) + v`,
//! optional Jacobian hooks for gradient-based estimation, trajectories, and
//! the built-in scalar benchmark system with its decay certificates.

use std::fmt;
use std::sync::Arc;

use crate::comparison::{KFunc, KLFunc, LFunc};
use crate::{real, Error, Result, Scalar};

type Map2<T> = Arc<dyn Fn(&[T], &[T]) -> Vec<T> + Send + Sync>;
type Map1<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// Discrete-time system `x+ = f(x, w)`, `y = h(x) + v` with state dimension
/// `n`, disturbance dimension `g` and output dimension `p`.
///
/// `f` and `h` must be deterministic (repeated evaluation is bit-identical).
/// Jacobian hooks are optional; operations that need them report
/// [`Error::UnsupportedModel`] when they are absent. Jacobians are dense
/// row-major: `fx` is `n x n`, `fw` is `n x g`, `hx` is `p x n`.
#[derive(Clone)]
pub struct SystemModel<T> {
    pub n: usize,
    pub g: usize,
    pub p: usize,
    f: Map2<T>,
    h: Map1<T>,
    fx: Option<Map2<T>>,
    fw: Option<Map2<T>>,
    hx: Option<Map1<T>>,
}

impl<T> fmt::Debug for SystemModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemModel")
            .field("n", &self.n)
            .field("g", &self.g)
            .field("p", &self.p)
            .field("has_jacobians", &self.hx.is_some())
            .finish()
    }
}

impl<T: Scalar> SystemModel<T> {
    /// Builds a model from user-provided maps, without Jacobian hooks.
    pub fn new(
        n: usize,
        g: usize,
        p: usize,
        f: impl Fn(&[T], &[T]) -> Vec<T> + Send + Sync + 'static,
        h: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Result<Self> {
        if n == 0 || g == 0 || p == 0 {
            return Err(Error::Domain("state, disturbance and output dimensions must be positive".into()));
        }
        Ok(Self {
            n,
            g,
            p,
            f: Arc::new(f),
            h: Arc::new(h),
            fx: None,
            fw: None,
            hx: None,
        })
    }

    /// Attaches the three Jacobian hooks.
    pub fn with_jacobians(
        mut self,
        fx: impl Fn(&[T], &[T]) -> Vec<T> + Send + Sync + 'static,
        fw: impl Fn(&[T], &[T]) -> Vec<T> + Send + Sync + 'static,
        hx: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        self.fx = Some(Arc::new(fx));
        self.fw = Some(Arc::new(fw));
        self.hx = Some(Arc::new(hx));
        self
    }

    pub fn has_jacobians(&self) -> bool {
        self.fx.is_some() && self.fw.is_some() && self.hx.is_some()
    }

    fn check_len(&self, name: &str, got: usize, expected: usize) -> Result<()> {
        if got != expected {
            return Err(Error::Dimension { expected, actual: got });
        }
        let _ = name;
        Ok(())
    }

    /// One dynamics step `f(x, w)`.
    pub fn step(&self, x: &[T], w: &[T]) -> Result<Vec<T>> {
        self.check_len("x", x.len(), self.n)?;
        self.check_len("w", w.len(), self.g)?;
        let next = (self.f)(x, w);
        self.check_len("f(x, w)", next.len(), self.n)?;
        Ok(next)
    }

    /// Noise-free output `h(x)`.
    pub fn output(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_len("x", x.len(), self.n)?;
        let y = (self.h)(x);
        self.check_len("h(x)", y.len(), self.p)?;
        Ok(y)
    }

    /// `df/dx` at `(x, w)`, row-major `n x n`.
    pub fn jacobian_fx(&self, x: &[T], w: &[T]) -> Result<Vec<T>> {
        let hook = self.fx.as_ref().ok_or_else(|| {
            Error::UnsupportedModel("dynamics state Jacobian hook is missing".into())
        })?;
        let j = hook(x, w);
        self.check_len("fx", j.len(), self.n * self.n)?;
        Ok(j)
    }

    /// `df/dw` at `(x, w)`, row-major `n x g`.
    pub fn jacobian_fw(&self, x: &[T], w: &[T]) -> Result<Vec<T>> {
        let hook = self.fw.as_ref().ok_or_else(|| {
            Error::UnsupportedModel("dynamics disturbance Jacobian hook is missing".into())
        })?;
        let j = hook(x, w);
        self.check_len("fw", j.len(), self.n * self.g)?;
        Ok(j)
    }

    /// `dh/dx` at `x`, row-major `p x n`.
    pub fn jacobian_hx(&self, x: &[T]) -> Result<Vec<T>> {
        let hook = self.hx.as_ref().ok_or_else(|| {
            Error::UnsupportedModel("output Jacobian hook is missing".into())
        })?;
        let j = hook(x);
        self.check_len("hx", j.len(), self.p * self.n)?;
        Ok(j)
    }

    /// Rolls the dynamics forward from `x0` under the disturbance sequence,
    /// returning the trajectory `x(0..T)` with `T = w_seq.len()`.
    pub fn simulate(&self, x0: &[T], w_seq: &[Vec<T>]) -> Result<Trajectory<T>> {
        self.check_len("x0", x0.len(), self.n)?;
        let mut states = Vec::with_capacity(w_seq.len() + 1);
        states.push(x0.to_vec());
        for w in w_seq {
            let next = self.step(states.last().expect("nonempty"), w)?;
            states.push(next);
        }
        Ok(Trajectory {
            states,
            disturbances: w_seq.to_vec(),
        })
    }

    /// Measurement sequence `y(k) = h(x(k)) + v(k)` along a trajectory.
    /// `v_seq` must provide one noise vector per state, i.e. `T + 1` of them.
    pub fn observe(&self, trajectory: &Trajectory<T>, v_seq: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
        if v_seq.len() != trajectory.states.len() {
            return Err(Error::Dimension {
                expected: trajectory.states.len(),
                actual: v_seq.len(),
            });
        }
        let mut ys = Vec::with_capacity(v_seq.len());
        for (x, v) in trajectory.states.iter().zip(v_seq) {
            self.check_len("v", v.len(), self.p)?;
            let mut y = self.output(x)?;
            for (yj, vj) in y.iter_mut().zip(v) {
                *yj = *yj + *vj;
            }
            ys.push(y);
        }
        Ok(ys)
    }
}

/// A state trajectory with the disturbance sequence that generated it.
///
/// `states` has length `T + 1` and `disturbances` length `T`; the defining
/// recursion `x(k+1) = f(x(k), w(k))` can be re-checked bit-exactly because
/// models are deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub states: Vec<Vec<T>>,
    pub disturbances: Vec<Vec<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn horizon(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    /// Re-evaluates the dynamics along the trajectory and confirms each stored
    /// state bit-exactly.
    pub fn is_consistent(&self, model: &SystemModel<T>) -> bool {
        if self.states.len() != self.disturbances.len() + 1 {
            return false;
        }
        for k in 0..self.disturbances.len() {
            match model.step(&self.states[k], &self.disturbances[k]) {
                Ok(next) => {
                    if next != self.states[k + 1] {
                        return false;
                    }
                }
                Err(_) => return false,
            }
        }
        true
    }
}

/// Incremental input/output-to-state stability certificate for a model: decay
/// bound `beta` on initial-state influence together with gain functions
/// `alpha1` (disturbance) and `alpha2` (output). `exp_ioss` records whether
/// `beta` decays exponentially.
#[derive(Debug, Clone, PartialEq)]
pub struct IossCertificate<T> {
    pub alpha1: KFunc<T>,
    pub alpha2: KFunc<T>,
    pub beta: KLFunc<T>,
    pub exp_ioss: bool,
}

impl<T: Scalar> IossCertificate<T> {
    /// Builds a certificate; the exponential flag is derived from `beta`.
    pub fn new(alpha1: KFunc<T>, alpha2: KFunc<T>, beta: KLFunc<T>) -> Self {
        let exp_ioss = matches!(beta.l, LFunc::ExpDecay { .. });
        Self {
            alpha1,
            alpha2,
            beta,
            exp_ioss,
        }
    }
}

/// The scalar benchmark system
///
/// ```text
/// x+ = 0.9 x + w,    y = x^3 + v
/// ```
///
/// with analytic Jacobians attached, plus its exponential decay certificate
/// `beta(s, t) = s * 0.9^t`. The contractive linear dynamics give the
/// disturbance gain directly: `|dx(t)| <= 0.9^t |dx(0)| + 10 ||dw||`, so
/// `alpha1(s) = 10 s`, and `alpha2(s) = s` is a valid (slack) output gain.
pub fn example_system<T: Scalar>() -> (SystemModel<T>, IossCertificate<T>) {
    let a = real::<T>(0.9);
    let three = real::<T>(3.0);
    let model = SystemModel::new(
        1,
        1,
        1,
        move |x: &[T], w: &[T]| vec![a * x[0] + w[0]],
        |x: &[T]| vec![x[0] * x[0] * x[0]],
    )
    .expect("valid dimensions")
    .with_jacobians(
        move |_x: &[T], _w: &[T]| vec![a],
        |_x: &[T], _w: &[T]| vec![T::one()],
        move |x: &[T]| vec![three * x[0] * x[0]],
    );
    let cert = IossCertificate::new(
        KFunc::power(real(10.0), T::one()).expect("valid"),
        KFunc::identity(),
        KLFunc::new(KFunc::identity(), LFunc::exp_decay(a).expect("0.9 in (0,1)")),
    );
    (model, cert)
}

/// The looser polynomial certificate for the same benchmark system:
/// `beta(s, t) = s * (t+1)^(ln 0.9)`, i.e. a polynomial decay with exponent
/// `b1 = -ln 0.9`. It upper-bounds the exponential certificate because
/// `0.9^t <= (t+1)^(ln 0.9)` for all `t >= 0`.
pub fn example_poly_certificate<T: Scalar>() -> IossCertificate<T> {
    let b1 = real::<T>(-(0.9_f64.ln()));
    IossCertificate::new(
        KFunc::power(real(10.0), T::one()).expect("valid"),
        KFunc::identity(),
        KLFunc::new(KFunc::identity(), LFunc::poly_decay(b1).expect("-ln 0.9 > 0")),
    )
}
