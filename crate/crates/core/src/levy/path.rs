use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::levy::measure::JumpMeasureSpec;
use crate::math::{Field, FieldLayout};

/// One realization of a compound Poisson path on `(0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyPath {
    horizon: f64,
    layout: Arc<FieldLayout>,
    jump_times: Vec<f64>,
    marks: Vec<Field>,
}

impl LevyPath {
    /// Jump times must be sorted and lie in `(0, horizon]`.
    pub fn new(
        horizon: f64,
        layout: &Arc<FieldLayout>,
        jump_times: Vec<f64>,
        marks: Vec<Field>,
    ) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        if jump_times.len() != marks.len() {
            return Err(Error::InvalidInput("one mark per jump time required".into()));
        }
        if jump_times.iter().any(|t| !(*t > 0.0 && *t <= horizon)) {
            return Err(Error::InvalidInput(format!("jump times must lie in (0, {horizon}]")));
        }
        if jump_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("jump times must be sorted".into()));
        }
        for m in &marks {
            if m.len() != layout.dim() {
                return Err(Error::DimensionMismatch {
                    expected: layout.dim(),
                    got: m.len(),
                });
            }
        }
        Ok(Self {
            horizon,
            layout: Arc::clone(layout),
            jump_times,
            marks,
        })
    }

    pub fn empty(horizon: f64, layout: &Arc<FieldLayout>) -> Result<Self> {
        Self::new(horizon, layout, Vec::new(), Vec::new())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn layout(&self) -> &Arc<FieldLayout> {
        &self.layout
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn marks(&self) -> &[Field] {
        &self.marks
    }

    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    /// `L(t) = sum_{tau_i <= t} y_i` (right-continuous).
    pub fn value_at(&self, t: f64) -> Field {
        self.partial_sum(|tau| tau <= t)
    }

    /// `L(t-) = sum_{tau_i < t} y_i`.
    pub fn value_before(&self, t: f64) -> Field {
        self.partial_sum(|tau| tau < t)
    }

    pub fn total(&self) -> Field {
        self.partial_sum(|_| true)
    }

    fn partial_sum(&self, keep: impl Fn(f64) -> bool) -> Field {
        let mut acc = Field::zeros(&self.layout);
        for (tau, y) in self.jump_times.iter().zip(&self.marks) {
            if keep(*tau) {
                acc.axpy(1.0, y);
            }
        }
        acc
    }

    /// Paths with jumps in disjoint sets of times, superposed.
    pub fn merged(&self, other: &LevyPath) -> Result<LevyPath> {
        if self.horizon != other.horizon {
            return Err(Error::InvalidInput("paths have different horizons".into()));
        }
        let mut jumps: Vec<(f64, Field)> = self
            .jump_times
            .iter()
            .copied()
            .zip(self.marks.iter().cloned())
            .chain(other.jump_times.iter().copied().zip(other.marks.iter().cloned()))
            .collect();
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (times, marks) = jumps.into_iter().unzip();
        LevyPath::new(self.horizon, &self.layout, times, marks)
    }
}

/// Draws `N ~ Poisson(lambda T)` jumps with i.i.d. uniform times on `(0, T]`
/// and i.i.d. marks.
pub fn sample_path<R: Rng + ?Sized>(
    spec: &JumpMeasureSpec,
    horizon: f64,
    rng: &mut R,
) -> Result<LevyPath> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    let mean = spec.intensity() * horizon;
    let poisson = Poisson::new(mean)
        .map_err(|e| Error::InvalidInput(format!("Poisson mean {mean}: {e}")))?;
    let count = poisson.sample(rng) as usize;
    // 1 - U with U in [0, 1) lands in (0, 1].
    let mut times: Vec<f64> = (0..count)
        .map(|_| horizon * (1.0 - rng.random::<f64>()))
        .collect();
    times.sort_by(f64::total_cmp);
    let marks = (0..count).map(|_| spec.sample_mark(rng)).collect();
    LevyPath::new(horizon, spec.layout(), times, marks)
}

/// Sparse per-step increments `dL_m = sum_{tau_i in (t_m, t_{m+1}]} y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepIncrements {
    dt: f64,
    steps: usize,
    bins: Vec<(usize, Field)>,
}

impl StepIncrements {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Non-empty bins in increasing step order.
    pub fn nonempty(&self) -> &[(usize, Field)] {
        &self.bins
    }

    pub fn get(&self, step: usize) -> Option<&Field> {
        self.bins
            .binary_search_by_key(&step, |(m, _)| *m)
            .ok()
            .map(|i| &self.bins[i].1)
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn total(&self, layout: &Arc<FieldLayout>) -> Field {
        let mut acc = Field::zeros(layout);
        for (_, f) in &self.bins {
            acc.axpy(1.0, f);
        }
        acc
    }
}

/// Number of steps of size `dt` covering `[0, horizon]`; `dt` must divide
/// the horizon up to rounding.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0 && horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need positive horizon and step, got T = {horizon}, dt = {dt}"
        )));
    }
    let ratio = horizon / dt;
    let steps = ratio.round();
    if steps < 1.0 || (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "time step {dt} does not divide horizon {horizon}"
        )));
    }
    Ok(steps as usize)
}

/// Right-closed binning: a jump at `t_m = m dt` belongs to step `m - 1`.
pub fn bin_increments(path: &LevyPath, dt: f64) -> Result<StepIncrements> {
    let steps = step_count(path.horizon, dt)?;
    let mut bins: Vec<(usize, Field)> = Vec::new();
    for (tau, y) in path.jump_times.iter().zip(&path.marks) {
        if !(*tau > 0.0 && *tau <= path.horizon) {
            return Err(Error::Internal(format!(
                "jump time {tau} outside (0, {}]",
                path.horizon
            )));
        }
        let mut m = ((tau / dt).ceil() as usize).saturating_sub(1);
        // Reconcile with the grid points t_m = m * dt actually used.
        while m > 0 && *tau <= m as f64 * dt {
            m -= 1;
        }
        while *tau > (m + 1) as f64 * dt && m + 1 < steps {
            m += 1;
        }
        let m = m.min(steps - 1);
        match bins.last_mut() {
            Some((last, acc)) if *last == m => acc.axpy(1.0, y),
            _ => bins.push((m, y.clone())),
        }
    }
    Ok(StepIncrements { dt, steps, bins })
}
