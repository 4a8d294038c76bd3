use crate::error::{Error, Result};
use crate::expansion::ExpansionSet;
use crate::math::Field;
use crate::solvers::{Scheme, Trajectory};

pub(crate) fn remainder_state(
    u: &Field,
    phi: &Field,
    terms: &[&Field],
    epsilon: f64,
) -> Field {
    let mut r = u - phi;
    if epsilon != 0.0 {
        let mut power = 1.0;
        for t in terms {
            power *= epsilon;
            r.axpy(-power, t);
        }
    }
    r
}

/// `R_n(t_m) = u_m - phi_m - sum_k eps^k u_{k,m}`.
pub fn remainder(u_eps: &Trajectory, set: &ExpansionSet, epsilon: f64) -> Result<Trajectory> {
    check_grid(u_eps, set)?;
    let states = (0..=u_eps.steps())
        .map(|m| {
            let terms: Vec<&Field> = set.terms().iter().map(|t| t.state(m)).collect();
            remainder_state(u_eps.state(m), set.phi().state(m), &terms, epsilon)
        })
        .collect();
    Trajectory::new(u_eps.dt(), u_eps.horizon(), Scheme::Remainder, states)
}

/// `max_m |R_n(t_m)|_w` without materializing the remainder trajectory.
pub fn sup_remainder(u_eps: &Trajectory, set: &ExpansionSet, epsilon: f64) -> Result<f64> {
    check_grid(u_eps, set)?;
    let terms: Vec<&Trajectory> = set.terms().iter().collect();
    Ok(sup_remainder_parts(u_eps, set.phi(), &terms, epsilon))
}

pub(crate) fn sup_remainder_parts(
    u_eps: &Trajectory,
    phi: &Trajectory,
    terms: &[&Trajectory],
    epsilon: f64,
) -> f64 {
    let mut sup = 0.0f64;
    let mut at_m: Vec<&Field> = Vec::with_capacity(terms.len());
    for m in 0..=u_eps.steps() {
        at_m.clear();
        at_m.extend(terms.iter().map(|t| t.state(m)));
        let r = remainder_state(u_eps.state(m), phi.state(m), &at_m, epsilon);
        sup = sup.max(r.norm());
    }
    sup
}

fn check_grid(u_eps: &Trajectory, set: &ExpansionSet) -> Result<()> {
    if !u_eps.same_grid(set.phi()) {
        return Err(Error::GridMismatch(format!(
            "solution has {} steps of {}, expansion has {} steps of {}",
            u_eps.steps(),
            u_eps.dt(),
            set.phi().steps(),
            set.phi().dt()
        )));
    }
    Ok(())
}
