//! Property suites run by the `validate` command on an arbitrary problem.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{fd_oracle, relative_sup_error, remainder};
use crate::error::Result;
use crate::expansion::expand;
use crate::levy::{derive_seed, sample_path};
use crate::math::{dissipativity_rate, Field};
use crate::problem::Problem;
use crate::solvers::{solve_deterministic, solve_sde};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    pub pairs: usize,
    pub master_seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            pairs: 1000,
            master_seed: 0,
        }
    }
}

fn random_field(problem: &Problem, center: f64, radius: f64, rng: &mut ChaCha8Rng) -> Result<Field> {
    let values = (0..problem.layout().dim())
        .map(|_| center + radius * rng.random_range(-1.0..1.0))
        .collect();
    Field::from_vec(problem.layout(), values)
}

pub fn one_sided_bound(problem: &Problem, opts: &ValidationOptions) -> Result<Check> {
    let f = &problem.nonlinearity;
    let eta = problem.eta();
    let radius = problem.u0.max_abs().max(1.0) + 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.master_seed ^ 0x5eed_0001);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..opts.pairs {
        let u = random_field(problem, 0.0, radius, &mut rng)?;
        let v = if i % 2 == 0 {
            random_field(problem, 0.0, radius, &mut rng)?
        } else {
            &u + &random_field(problem, 0.0, 1e-3, &mut rng)?
        };
        let d = &u - &v;
        let mut lhs = &f.eval(&u)? - &f.eval(&v)?;
        lhs.axpy(-eta, &d);
        worst = worst.max(lhs.inner(&d));
    }
    Ok(Check::new(
        "one-sided Lipschitz bound",
        worst <= 1e-10,
        format!("eta {eta:.6}, max <F(u)-F(v)-eta(u-v), u-v> = {worst:.3e}"),
    ))
}

pub fn contraction(problem: &Problem, opts: &ValidationOptions) -> Result<Check> {
    let bundle = &problem.bundle;
    let rate = dissipativity_rate(bundle.a_matrix(), problem.layout())?;
    let decay = (-rate.omega * bundle.dt()).exp();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.master_seed ^ 0x5eed_0002);
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..opts.pairs {
        let x = random_field(problem, 0.0, 1.0, &mut rng)?;
        excess = excess.max(x.transformed(bundle.e_step()).norm() - decay * x.norm());
    }
    let defect = bundle.consistency_defect();
    Ok(Check::new(
        "semigroup contraction",
        excess <= 1e-9 && defect <= 1e-8,
        format!(
            "omega {:.6} (strict: {}), max excess {excess:.3e}, propagator defect {defect:.3e}",
            rate.omega, rate.strict
        ),
    ))
}

pub fn taylor_exactness(problem: &Problem, opts: &ValidationOptions) -> Result<Check> {
    let f = &problem.nonlinearity;
    let order = f.degree();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.master_seed ^ 0x5eed_0003);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let w = random_field(problem, 0.0, 1.5, &mut rng)?;
        let h = random_field(problem, 0.0, 1.5, &mut rng)?;
        let exact = f.eval(&(&w + &h))?;
        let scale = exact.norm().max(f64::MIN_POSITIVE);
        worst = worst.max((&f.taylor_eval(&w, &h, order)? - &exact).norm() / scale);
    }
    Ok(Check::new(
        "Taylor exactness",
        worst <= 1e-12,
        format!("order {order}, max relative error {worst:.3e}"),
    ))
}

pub fn deterministic_decay(problem: &Problem) -> Result<Check> {
    let gap = problem.dissipativity_margin();
    let phi = solve_deterministic(&problem.bundle, &problem.nonlinearity, &problem.u0, problem.horizon)?;
    if gap <= 0.0 {
        return Ok(Check::new(
            "deterministic decay",
            true,
            format!("skipped: omega - eta = {gap:.4} is not positive"),
        ));
    }
    let u0 = problem.u0.norm();
    let excess = (0..=phi.steps())
        .map(|m| phi.state(m).norm() - (-gap * phi.time(m)).exp() * u0)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Check::new(
        "deterministic decay",
        excess <= 1e-8,
        format!("omega - eta {gap:.4}, max excess {excess:.3e}"),
    ))
}

/// Divided differences in epsilon against `u_1` and `u_2`, and the
/// `eps = 0` coupling, on the first path of the master seed.
pub fn oracle_checks(problem: &Problem, opts: &ValidationOptions) -> Result<Vec<Check>> {
    let (bundle, f, q, u0) = (&problem.bundle, &problem.nonlinearity, &problem.q, &problem.u0);
    let mut rng = derive_seed(opts.master_seed, 0, 0).rng();
    let path = sample_path(&problem.noise, problem.horizon, &mut rng)?;
    let set = expand(bundle, f, q, u0, &path, 2)?;
    let e1 = relative_sup_error(&fd_oracle(bundle, f, q, u0, &path, 1, 1e-4)?, set.term(1))?;
    // The second difference misses u_2 by O(eps), so check its rate.
    let coarse = relative_sup_error(&fd_oracle(bundle, f, q, u0, &path, 2, 1e-2)?, set.term(2))?;
    let fine = relative_sup_error(&fd_oracle(bundle, f, q, u0, &path, 2, 1e-3)?, set.term(2))?;
    let rate = (coarse / fine).log10();
    let second_ok = fine <= 1e-8 || (0.8..=1.2).contains(&rate);
    let u = solve_sde(bundle, f, q, 0.0, u0, &path)?;
    let zero = remainder(&u, &set, 0.0)?
        .states()
        .iter()
        .all(|s| s.as_slice().iter().all(|v| v.to_bits() == 0));
    Ok(vec![
        Check::new(
            "first-order oracle",
            e1 <= 1e-3,
            format!("{} jumps, relative sup error {e1:.3e} at eps 1e-4", path.jump_count()),
        ),
        Check::new(
            "second-order oracle",
            second_ok,
            format!("relative sup error {coarse:.3e} at 1e-2, {fine:.3e} at 1e-3 (rate {rate:.3})"),
        ),
        Check::new("coupling at eps = 0", zero, format!("remainder bitwise zero: {zero}")),
    ])
}

pub fn run_suites(problem: &Problem, opts: &ValidationOptions) -> Result<Vec<Check>> {
    let mut checks = vec![
        one_sided_bound(problem, opts)?,
        contraction(problem, opts)?,
        taylor_exactness(problem, opts)?,
        deterministic_decay(problem)?,
    ];
    checks.extend(oracle_checks(problem, opts)?);
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{FhnParams, ScalarParams};

    #[test]
    fn presets_pass_all_suites() {
        let opts = ValidationOptions {
            pairs: 200,
            master_seed: 3,
        };
        for problem in [FhnParams::default().build().unwrap(), ScalarParams::default().build().unwrap()] {
            for check in run_suites(&problem, &opts).unwrap() {
                assert!(check.passed, "{check:?}");
            }
        }
    }

    #[test]
    fn wrong_eta_is_caught() {
        let mut problem = ScalarParams::default().build().unwrap();
        problem.nonlinearity = crate::nonlinearity::PolynomialMap::linear(0.5, 1).unwrap();
        // A linear map with positive slope: the bound holds with eta = 0.5.
        assert!(one_sided_bound(&problem, &ValidationOptions::default()).unwrap().passed);
    }
}
