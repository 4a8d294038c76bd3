//! Coefficients of the expansion `u = phi + eps u_1 + ... + eps^n u_n + R_n`
//! along one noise path. Nothing here depends on `eps`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::levy::{bin_increments, LevyPath, QOperator};
use crate::math::{Field, OperatorBundle};
use crate::nonlinearity::PolynomialMap;
use crate::solvers::{
    check_state, propagate_linearized, propagated_kicks, solve_deterministic, Scheme, Trajectory,
};

pub const MAX_COMPOSITION_ORDER: usize = 12;

/// An ordered composition `i_1 + ... + i_j = k` with weight `1/j!`.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    pub parts: Vec<usize>,
    pub coefficient: f64,
}

impl Composition {
    pub fn slots(&self) -> usize {
        self.parts.len()
    }
}

/// All compositions of `order` into at least two positive parts, grouped by
/// number of parts and lexicographic within a group.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionTable {
    order: usize,
    entries: Vec<Composition>,
}

impl CompositionTable {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entries(&self) -> &[Composition] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn enumerate_compositions(k: usize) -> Result<CompositionTable> {
    if !(2..=MAX_COMPOSITION_ORDER).contains(&k) {
        return Err(Error::InvalidInput(format!(
            "composition order must lie in 2..={MAX_COMPOSITION_ORDER}, got {k}"
        )));
    }
    let mut entries = Vec::with_capacity((1 << (k - 1)) - 1);
    let mut factorial = 1.0;
    for j in 2..=k {
        factorial *= j as f64;
        let mut parts = Vec::with_capacity(j);
        push_compositions(k, j, &mut parts, &mut |p| {
            entries.push(Composition {
                parts: p.to_vec(),
                coefficient: 1.0 / factorial,
            })
        });
    }
    Ok(CompositionTable { order: k, entries })
}

fn push_compositions(
    remaining: usize,
    slots: usize,
    prefix: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    if slots == 1 {
        prefix.push(remaining);
        emit(prefix);
        prefix.pop();
        return;
    }
    for first in 1..=remaining - (slots - 1) {
        prefix.push(first);
        push_compositions(remaining - first, slots - 1, prefix, emit);
        prefix.pop();
    }
}

/// `Phi_k = sum over the table of F^{(j)}(phi)[u_{i_1}, ..., u_{i_j}] / j!`.
/// `u_states[i - 1]` holds `u_i`.
pub fn phi_k_forcing(
    f: &PolynomialMap,
    table: &CompositionTable,
    phi_state: &Field,
    u_states: &[&Field],
) -> Result<Field> {
    let k = table.order();
    if u_states.len() < k - 1 {
        return Err(Error::InvalidInput(format!(
            "Phi_{k} needs u_1..u_{}, got {} states",
            k - 1,
            u_states.len()
        )));
    }
    f.check_layout(phi_state.layout())?;
    for u in u_states {
        phi_state.check_compatible(u)?;
    }
    Ok(phi_k_unchecked(f, table, phi_state, u_states))
}

fn phi_k_unchecked(
    f: &PolynomialMap,
    table: &CompositionTable,
    phi_state: &Field,
    u_states: &[&Field],
) -> Field {
    let degree = f.degree();
    let mut acc = Field::zeros(phi_state.layout());
    let mut hs: Vec<&Field> = Vec::with_capacity(table.order());
    for entry in table.entries().iter().filter(|e| e.slots() <= degree) {
        hs.clear();
        hs.extend(entry.parts.iter().map(|i| u_states[i - 1]));
        acc.axpy(entry.coefficient, &f.frechet_unchecked(phi_state, &hs));
    }
    acc
}

fn check_phi(bundle: &OperatorBundle, phi: &Trajectory) -> Result<()> {
    if phi.dt() != bundle.dt() {
        return Err(Error::GridMismatch(format!(
            "trajectory step {} differs from propagator step {}",
            phi.dt(),
            bundle.dt()
        )));
    }
    bundle.check_field(phi.state(0))
}

/// `v_{m+1} = E v_m + P1 F'(phi_m) v_m + E sqrt(Q) dL_m`, `v_0 = 0`.
pub fn solve_u1(
    bundle: &OperatorBundle,
    f: &PolynomialMap,
    q: &QOperator,
    phi: &Trajectory,
    path: &LevyPath,
) -> Result<Trajectory> {
    check_phi(bundle, phi)?;
    if path.horizon() != phi.horizon() {
        return Err(Error::GridMismatch(format!(
            "path horizon {} differs from trajectory horizon {}",
            path.horizon(),
            phi.horizon()
        )));
    }
    let increments = bin_increments(path, bundle.dt())?;
    let kicks = propagated_kicks(bundle, q, &increments)?;
    solve_u1_with_kicks(bundle, f, phi, &kicks)
}

pub fn solve_u1_with_kicks(
    bundle: &OperatorBundle,
    f: &PolynomialMap,
    phi: &Trajectory,
    kicks: &[(usize, DVector<f64>)],
) -> Result<Trajectory> {
    let layout = bundle.layout();
    let steps = phi.steps();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(Field::zeros(layout));
    let mut kicks = kicks.iter().peekable();
    for m in 0..steps {
        let mut next = propagate_linearized(bundle, f, phi.state(m), &states[m], None);
        if let Some((_, kick)) = kicks.next_if(|(k, _)| *k == m) {
            next += kick;
        }
        check_state(bundle, f, m + 1, &next, phi.state(m))?;
        states.push(Field::from_vector_unchecked(layout, next));
    }
    Trajectory::new(phi.dt(), phi.horizon(), Scheme::Expansion(1), states)
}

/// `w_{m+1} = E w_m + P1 (F'(phi_m) w_m + Phi_k(t_m))`, `w_0 = 0`.
/// `lower[i - 1]` holds `u_i` for `i < k`.
pub fn solve_uk(
    bundle: &OperatorBundle,
    f: &PolynomialMap,
    k: usize,
    phi: &Trajectory,
    lower: &[Trajectory],
) -> Result<Trajectory> {
    check_phi(bundle, phi)?;
    if k < 2 || lower.len() < k - 1 {
        return Err(Error::InvalidInput(format!(
            "u_{k} needs u_1..u_{} ({} given)",
            k.saturating_sub(1),
            lower.len()
        )));
    }
    if let Some(bad) = lower.iter().find(|t| !t.same_grid(phi)) {
        return Err(Error::GridMismatch(format!(
            "lower-order trajectory has {} steps, expected {}",
            bad.steps(),
            phi.steps()
        )));
    }
    let table = enumerate_compositions(k)?;
    let layout = bundle.layout();
    let steps = phi.steps();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(Field::zeros(layout));
    let mut us: Vec<&Field> = Vec::with_capacity(k - 1);
    for m in 0..steps {
        us.clear();
        us.extend(lower[..k - 1].iter().map(|t| t.state(m)));
        let forcing = phi_k_unchecked(f, &table, phi.state(m), &us);
        let next = propagate_linearized(bundle, f, phi.state(m), &states[m], Some(&forcing));
        check_state(bundle, f, m + 1, &next, phi.state(m))?;
        states.push(Field::from_vector_unchecked(layout, next));
    }
    Trajectory::new(phi.dt(), phi.horizon(), Scheme::Expansion(k), states)
}

/// `phi` together with `u_1, ..., u_n` on one path.
#[derive(Debug, Clone)]
pub struct ExpansionSet {
    phi: Trajectory,
    terms: Vec<Trajectory>,
}

impl ExpansionSet {
    pub fn order(&self) -> usize {
        self.terms.len()
    }

    pub fn phi(&self) -> &Trajectory {
        &self.phi
    }

    /// `term(k)` is `u_k`, `1 <= k <= order`.
    pub fn term(&self, k: usize) -> &Trajectory {
        &self.terms[k - 1]
    }

    pub fn terms(&self) -> &[Trajectory] {
        &self.terms
    }

    /// `phi_m + sum_k eps^k u_{k,m}`
    pub fn reconstruct(&self, epsilon: f64, m: usize) -> Field {
        let mut acc = self.phi.state(m).clone();
        let mut power = 1.0;
        for t in &self.terms {
            power *= epsilon;
            acc.axpy(power, t.state(m));
        }
        acc
    }
}

/// Runs `phi`, then `u_1`, then `u_2..u_n` in order.
pub fn expand(
    bundle: &OperatorBundle,
    f: &PolynomialMap,
    q: &QOperator,
    u0: &Field,
    path: &LevyPath,
    n: usize,
) -> Result<ExpansionSet> {
    if n == 0 {
        return Err(Error::InvalidInput("expansion order must be at least 1".into()));
    }
    let phi = solve_deterministic(bundle, f, u0, path.horizon())?;
    let u1 = solve_u1(bundle, f, q, &phi, path)?;
    expand_from(bundle, f, phi, u1, n)
}

/// Completes an expansion from precomputed `phi` and `u_1`, letting callers
/// share `phi` across paths.
pub fn expand_from(
    bundle: &OperatorBundle,
    f: &PolynomialMap,
    phi: Trajectory,
    u1: Trajectory,
    n: usize,
) -> Result<ExpansionSet> {
    if n == 0 {
        return Err(Error::InvalidInput("expansion order must be at least 1".into()));
    }
    let mut terms = vec![u1];
    for k in 2..=n {
        let uk = solve_uk(bundle, f, k, &phi, &terms)?;
        terms.push(uk);
    }
    Ok(ExpansionSet { phi, terms })
}
