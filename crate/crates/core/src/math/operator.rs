use std::sync::Arc;

use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::math::expm::expm;
use crate::math::field::{Field, FieldLayout};
use crate::math::grid::SpatialGrid;

/// Second-order conservative discretization of `d/dx (c d/dx)` on `[0, 1]`
/// with homogeneous Neumann conditions imposed through reflected ghost nodes.
///
/// Interface conductivities are arithmetic means of the nodal values, and the
/// ghost interface mirrors the first interior one, so every row sums to zero.
pub fn neumann_diffusion(grid: &SpatialGrid, c_nodes: &[f64]) -> Result<DMatrix<f64>> {
    let n = grid.n_nodes();
    check_profile("c", c_nodes, n, false)?;
    let h2 = grid.spacing() * grid.spacing();
    let flux: Vec<f64> = c_nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut a0 = DMatrix::<f64>::zeros(n, n);
    // Left boundary: ghost u_{-1} = u_1 and c_{-1/2} = c_{1/2}.
    a0[(0, 0)] = -2.0 * flux[0] / h2;
    a0[(0, 1)] = 2.0 * flux[0] / h2;
    for i in 1..n - 1 {
        let (west, east) = (flux[i - 1], flux[i]);
        a0[(i, i - 1)] = west / h2;
        a0[(i, i)] = -(west + east) / h2;
        a0[(i, i + 1)] = east / h2;
    }
    a0[(n - 1, n - 2)] = 2.0 * flux[n - 2] / h2;
    a0[(n - 1, n - 1)] = -2.0 * flux[n - 2] / h2;
    Ok(a0)
}

fn check_profile(name: &str, values: &[f64], n: usize, allow_zero: bool) -> Result<()> {
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: values.len(),
        });
    }
    for (i, v) in values.iter().enumerate() {
        let ok = v.is_finite() && if allow_zero { *v >= 0.0 } else { *v > 0.0 };
        if !ok {
            let bound = if allow_zero { "non-negative" } else { "positive" };
            return Err(Error::InvalidInput(format!(
                "{name} must be {bound} at every node, got {v} at node {i}"
            )));
        }
    }
    Ok(())
}

/// FitzHugh–Nagumo generator `[[A0 - diag(p), -I], [gamma I, -alpha I]]`
/// from nodal values of `c` and `p`.
///
/// `p` may vanish (the pure Neumann case); `c` must be strictly positive.
pub fn assemble_fhn_from_nodes(
    grid: &SpatialGrid,
    c_nodes: &[f64],
    p_nodes: &[f64],
    gamma: f64,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    let n = grid.n_nodes();
    check_profile("p", p_nodes, n, true)?;
    for (name, v) in [("gamma", gamma), ("alpha", alpha)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
        }
    }
    let a0 = neumann_diffusion(grid, c_nodes)?;
    let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
    a.view_mut((0, 0), (n, n)).copy_from(&a0);
    for i in 0..n {
        a[(i, i)] -= p_nodes[i];
        a[(i, n + i)] = -1.0;
        a[(n + i, i)] = gamma;
        a[(n + i, n + i)] = -alpha;
    }
    Ok(a)
}

/// Same as [`assemble_fhn_from_nodes`] with `c` and `p` sampled at the nodes.
pub fn assemble_fhn_operator(
    grid: &SpatialGrid,
    c: impl Fn(f64) -> f64,
    p: impl Fn(f64) -> f64,
    gamma: f64,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    let c_nodes: Vec<f64> = grid.nodes().map(&c).collect();
    let p_nodes: Vec<f64> = grid.nodes().map(&p).collect();
    assemble_fhn_from_nodes(grid, &c_nodes, &p_nodes, gamma, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativityRate {
    /// Largest `omega` with `<Ax, x>_w <= -omega |x|_w^2`; may be `<= 0`.
    pub omega: f64,
    pub strict: bool,
}

/// Minus the largest eigenvalue of the symmetric part of `a` in the weighted
/// inner product.
pub fn dissipativity_rate(a: &DMatrix<f64>, layout: &FieldLayout) -> Result<DissipativityRate> {
    if !a.is_square() || a.nrows() != layout.dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.dim(),
            got: a.nrows(),
        });
    }
    let b = layout.to_orthonormal(a);
    let sym = (&b + b.transpose()) * 0.5;
    let scale = sym.amax().max(1.0);
    let lambda_max = sym.symmetric_eigenvalues().max();
    let omega = -lambda_max;
    let strict = omega > 1e-10 * scale;
    if !strict {
        warn!("generator is not strictly dissipative (omega = {omega:e})");
    }
    Ok(DissipativityRate { omega, strict })
}

/// Generator together with its one-step propagators.
///
/// `e_step = exp(dt A)` and `p1_step = int_0^dt exp(sA) ds`; immutable after
/// construction and shared read-only between path workers.
#[derive(Debug, Clone)]
pub struct OperatorBundle {
    layout: Arc<FieldLayout>,
    a_matrix: DMatrix<f64>,
    dt: f64,
    e_step: DMatrix<f64>,
    p1_step: DMatrix<f64>,
    omega_est: f64,
    strict: bool,
}

/// Builds the step propagators. `p1_step` is read off the top-right block of
/// `exp(dt [[A, I], [0, 0]])`, which stays valid when `A` is singular.
pub fn build_propagators(
    a_matrix: DMatrix<f64>,
    dt: f64,
    layout: &Arc<FieldLayout>,
) -> Result<OperatorBundle> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    if a_matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("generator matrix"));
    }
    let rate = dissipativity_rate(&a_matrix, layout)?;
    let n = a_matrix.nrows();
    let e_step = expm(&(&a_matrix * dt))?;
    let mut aug = DMatrix::<f64>::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&a_matrix * dt));
    for i in 0..n {
        aug[(i, n + i)] = dt;
    }
    let p1_step = expm(&aug)?.view((0, n), (n, n)).into_owned();
    Ok(OperatorBundle {
        layout: Arc::clone(layout),
        a_matrix,
        dt,
        e_step,
        p1_step,
        omega_est: rate.omega.max(0.0),
        strict: rate.strict,
    })
}

impl OperatorBundle {
    pub fn layout(&self) -> &Arc<FieldLayout> {
        &self.layout
    }

    pub fn a_matrix(&self) -> &DMatrix<f64> {
        &self.a_matrix
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn e_step(&self) -> &DMatrix<f64> {
        &self.e_step
    }

    pub fn p1_step(&self) -> &DMatrix<f64> {
        &self.p1_step
    }

    pub fn omega(&self) -> f64 {
        self.omega_est
    }

    pub fn is_strictly_dissipative(&self) -> bool {
        self.strict
    }

    /// `|A P1 - (E - I)|_F / |E - I|_F`
    pub fn consistency_defect(&self) -> f64 {
        let n = self.a_matrix.nrows();
        let e_minus_i = &self.e_step - DMatrix::<f64>::identity(n, n);
        let denom = e_minus_i.norm();
        let defect = (&self.a_matrix * &self.p1_step - &e_minus_i).norm();
        if denom == 0.0 { defect } else { defect / denom }
    }

    pub fn check_field(&self, x: &Field) -> Result<()> {
        if x.len() != self.layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// `E^steps x`.
pub fn apply_semigroup(bundle: &OperatorBundle, x: &Field, steps: usize) -> Result<Field> {
    bundle.check_field(x)?;
    let mut v = x.values().clone();
    for _ in 0..steps {
        v = bundle.e_step() * v;
    }
    Ok(Field::from_vector_unchecked(x.layout(), v))
}
