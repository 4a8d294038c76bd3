//! Exponential-Euler time steppers for the mild formulation.
//!
//! Every solver advances with the same propagators, `E = exp(dt A)` and
//! `P1 = int_0^dt exp(sA) ds`: the linear part is exact, the nonlinearity is
//! frozen at the left end of the step, and the jumps of step `m` are carried
//! by the full `E`. Solvers fed the same path are therefore coupled exactly.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::levy::{apply_sqrt_q, bin_increments, step_count, LevyPath, QOperator, StepIncrements};
use crate::math::{Field, OperatorBundle};
use crate::nonlinearity::PolynomialMap;

/// States with weighted norm above this abort the run.
pub const BLOW_UP_NORM: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Deterministic,
    Convolution,
    Stochastic,
    /// `k`-th coefficient of the small-noise expansion.
    Expansion(usize),
    Remainder,
    DividedDifference(usize),
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Deterministic => write!(f, "exp-euler/deterministic"),
            Scheme::Convolution => write!(f, "exp-euler/convolution"),
            Scheme::Stochastic => write!(f, "exp-euler/stochastic"),
            Scheme::Expansion(k) => write!(f, "exp-euler/expansion-{k}"),
            Scheme::Remainder => write!(f, "exp-euler/remainder"),
            Scheme::DividedDifference(k) => write!(f, "exp-euler/divided-difference-{k}"),
        }
    }
}

/// States on the uniform grid `t_m = m dt`, `m = 0..=M`, `t_M = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dt: f64,
    horizon: f64,
    scheme: Scheme,
    states: Vec<Field>,
}

impl Trajectory {
    pub fn new(dt: f64, horizon: f64, scheme: Scheme, states: Vec<Field>) -> Result<Self> {
        let steps = step_count(horizon, dt)?;
        if states.len() != steps + 1 {
            return Err(Error::GridMismatch(format!(
                "{} states for {} steps",
                states.len(),
                steps
            )));
        }
        if states.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("trajectory states"));
        }
        Ok(Self {
            dt,
            horizon,
            scheme,
            states,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn state(&self, m: usize) -> &Field {
        &self.states[m]
    }

    pub fn last(&self) -> &Field {
        self.states.last().expect("trajectory has at least one state")
    }

    pub fn time(&self, m: usize) -> f64 {
        if m == self.steps() {
            self.horizon
        } else {
            m as f64 * self.dt
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps()).map(|m| self.time(m)).collect()
    }

    pub fn same_grid(&self, other: &Trajectory) -> bool {
        self.dt == other.dt && self.horizon == other.horizon && self.steps() == other.steps()
    }

    /// `max_m |state_m|_w`
    pub fn sup_norm(&self) -> f64 {
        self.states.iter().map(Field::norm).fold(0.0, f64::max)
    }

    pub fn into_states(self) -> Vec<Field> {
        self.states
    }
}

fn check_inputs(
    bundle: &OperatorBundle,
    f: &PolynomialMap,
    u0: &Field,
    horizon: f64,
) -> Result<usize> {
    bundle.check_field(u0)?;
    f.check_layout(u0.layout())?;
    step_count(horizon, bundle.dt())
}

fn guard(bundle: &OperatorBundle, f: &PolynomialMap, step: usize, state: &DVector<f64>, x: &Field) -> Result<()> {
    let finite = state.iter().all(|v| v.is_finite());
    let norm = if finite {
        x.layout().inner(state.as_slice(), state.as_slice()).sqrt()
    } else {
        f64::INFINITY
    };
    if !finite || norm > BLOW_UP_NORM {
        return Err(Error::BlowUp {
            step,
            norm,
            omega: bundle.omega(),
            eta: f.eta(),
            gap: bundle.omega() - f.eta(),
        });
    }
    Ok(())
}

/// `E y + P1 g`
fn propagate(bundle: &OperatorBundle, y: &DVector<f64>, g: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(y.len());
    out.gemv(1.0, bundle.e_step(), y, 0.0);
    out.gemv(1.0, bundle.p1_step(), g, 1.0);
    out
}

/// `y_{m+1} = E y_m + P1 F(y_m)`
pub fn solve_deterministic(
    bundle: &OperatorBundle,
    f: &PolynomialMap,
    u0: &Field,
    horizon: f64,
) -> Result<Trajectory> {
    let steps = check_inputs(bundle, f, u0, horizon)?;
    let layout = u0.layout();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(u0.clone());
    for m in 0..steps {
        let y = &states[m];
        let fy = f.eval_unchecked(y);
        let next = propagate(bundle, y.values(), fy.values());
        guard(bundle, f, m + 1, &next, y)?;
        states.push(Field::from_vector_unchecked(layout, next));
    }
    Trajectory::new(bundle.dt(), horizon, Scheme::Deterministic, states)
}

/// `E sqrt(Q) dL_m` for each non-empty step.
pub fn propagated_kicks(
    bundle: &OperatorBundle,
    q: &QOperator,
    increments: &StepIncrements,
) -> Result<Vec<(usize, DVector<f64>)>> {
    increments
        .nonempty()
        .iter()
        .map(|(m, dl)| {
            let kick = apply_sqrt_q(q, dl)?;
            Ok((*m, bundle.e_step() * kick.values()))
        })
        .collect()
}

fn check_path(bundle: &OperatorBundle, path: &LevyPath) -> Result<StepIncrements> {
    if path.layout().dim() != bundle.layout().dim() {
        return Err(Error::DimensionMismatch {
            expected: bundle.layout().dim(),
            got: path.layout().dim(),
        });
    }
    bin_increments(path, bundle.dt())
}

/// `Z_{m+1} = E (Z_m + sqrt(Q) dL_m)`, `Z_0 = 0`.
pub fn stochastic_convolution(
    bundle: &OperatorBundle,
    q: &QOperator,
    path: &LevyPath,
) -> Result<Trajectory> {
    let increments = check_path(bundle, path)?;
    let layout = bundle.layout();
    let steps = increments.steps();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(Field::zeros(layout));
    let mut bins = increments.nonempty().iter().peekable();
    for m in 0..steps {
        let mut z = states[m].clone();
        if let Some((_, dl)) = bins.next_if(|(k, _)| *k == m) {
            z = &z + &apply_sqrt_q(q, dl)?;
        }
        states.push(z.transformed(bundle.e_step()));
    }
    Trajectory::new(bundle.dt(), path.horizon(), Scheme::Convolution, states)
}

/// `u_{m+1} = E u_m + P1 F(u_m) + eps E sqrt(Q) dL_m`.
///
/// With `eps = 0` the noise is never touched, so the result is bit-identical
/// to [`solve_deterministic`].
pub fn solve_sde(
    bundle: &OperatorBundle,
    f: &PolynomialMap,
    q: &QOperator,
    epsilon: f64,
    u0: &Field,
    path: &LevyPath,
) -> Result<Trajectory> {
    let increments = check_path(bundle, path)?;
    let kicks = propagated_kicks(bundle, q, &increments)?;
    solve_sde_with_kicks(bundle, f, epsilon, u0, path.horizon(), &kicks)
}

/// [`solve_sde`] with the propagated kicks precomputed, for reuse across
/// noise levels on one path.
pub fn solve_sde_with_kicks(
    bundle: &OperatorBundle,
    f: &PolynomialMap,
    epsilon: f64,
    u0: &Field,
    horizon: f64,
    kicks: &[(usize, DVector<f64>)],
) -> Result<Trajectory> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise level must be non-negative, got {epsilon}"
        )));
    }
    let steps = check_inputs(bundle, f, u0, horizon)?;
    let layout = u0.layout();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(u0.clone());
    let mut kicks = kicks.iter().peekable();
    for m in 0..steps {
        let y = &states[m];
        let fy = f.eval_unchecked(y);
        let mut next = propagate(bundle, y.values(), fy.values());
        if let Some((_, kick)) = kicks.next_if(|(k, _)| *k == m) {
            if epsilon != 0.0 {
                next.axpy(epsilon, kick, 1.0);
            }
        }
        guard(bundle, f, m + 1, &next, y)?;
        states.push(Field::from_vector_unchecked(layout, next));
    }
    Trajectory::new(bundle.dt(), horizon, Scheme::Stochastic, states)
}

pub(crate) fn propagate_linearized(
    bundle: &OperatorBundle,
    f: &PolynomialMap,
    phi_m: &Field,
    w: &Field,
    forcing: Option<&Field>,
) -> DVector<f64> {
    let mut g = f.frechet_unchecked(phi_m, &[w]).into_values();
    if let Some(extra) = forcing {
        g += extra.values();
    }
    propagate(bundle, w.values(), &g)
}

pub(crate) fn check_state(
    bundle: &OperatorBundle,
    f: &PolynomialMap,
    step: usize,
    state: &DVector<f64>,
    like: &Field,
) -> Result<()> {
    guard(bundle, f, step, state, like)
}
