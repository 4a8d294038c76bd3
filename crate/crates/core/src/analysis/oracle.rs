use crate::error::{Error, Result};
use crate::expansion::solve_u1;
use crate::levy::{LevyPath, QOperator};
use crate::math::{Field, OperatorBundle};
use crate::nonlinearity::PolynomialMap;
use crate::solvers::{solve_deterministic, solve_sde, Scheme, Trajectory};

/// Divided-difference approximation of `u_k` on a common path.
///
/// `k = 1`: `(u^eps0 - phi) / eps0`; `k = 2`: `(u^eps0 - phi - eps0 u_1) / eps0^2`.
pub fn fd_oracle(
    bundle: &OperatorBundle,
    f: &PolynomialMap,
    q: &QOperator,
    u0: &Field,
    path: &LevyPath,
    k: usize,
    eps0: f64,
) -> Result<Trajectory> {
    if !(eps0.is_finite() && eps0 > 0.0) {
        return Err(Error::InvalidInput(format!("eps0 must be positive, got {eps0}")));
    }
    let phi = solve_deterministic(bundle, f, u0, path.horizon())?;
    let u_eps = solve_sde(bundle, f, q, eps0, u0, path)?;
    let states: Vec<Field> = match k {
        1 => (0..=phi.steps())
            .map(|m| (u_eps.state(m) - phi.state(m)).scaled(1.0 / eps0))
            .collect(),
        2 => {
            let u1 = solve_u1(bundle, f, q, &phi, path)?;
            (0..=phi.steps())
                .map(|m| {
                    let mut d = u_eps.state(m) - phi.state(m);
                    d.axpy(-eps0, u1.state(m));
                    d.scaled(1.0 / (eps0 * eps0))
                })
                .collect()
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "divided-difference oracle supports k = 1 or 2, got {k}"
            )))
        }
    };
    Trajectory::new(phi.dt(), phi.horizon(), Scheme::DividedDifference(k), states)
}

/// `max_m |a_m - b_m|_w / max_m |b_m|_w`
pub fn relative_sup_error(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch(format!(
            "{} vs {} steps",
            a.steps(),
            b.steps()
        )));
    }
    let diff = (0..=a.steps())
        .map(|m| (a.state(m) - b.state(m)).norm())
        .fold(0.0, f64::max);
    let scale = b.sup_norm();
    if scale == 0.0 {
        return Ok(diff);
    }
    Ok(diff / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::expand;
    use crate::levy::{sample_path, Embedding, JumpMeasureSpec, MarkLaw};
    use crate::math::{build_propagators, FieldLayout};
    use crate::solvers::stochastic_convolution;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn scalar_setup(f: PolynomialMap) -> (OperatorBundle, PolynomialMap, QOperator, Field, LevyPath) {
        let layout = Arc::new(FieldLayout::scalar());
        let bundle = build_propagators(DMatrix::from_element(1, 1, -1.0), 1e-3, &layout).unwrap();
        let dir = Field::from_vec(&layout, vec![1.0]).unwrap();
        let spec = JumpMeasureSpec::new(5.0, MarkLaw::TwoPoint { a: 1.0 }, Embedding::fixed_profile(dir).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let path = sample_path(&spec, 1.0, &mut rng).unwrap();
        let u0 = Field::from_vec(&layout, vec![0.8]).unwrap();
        (bundle, f, QOperator::identity(1), u0, path)
    }

    #[test]
    fn zero_field_oracle_is_the_convolution() {
        let (bundle, f, q, u0, path) = scalar_setup(PolynomialMap::zero(1));
        let z = stochastic_convolution(&bundle, &q, &path).unwrap();
        for eps0 in [1e-3, 0.5] {
            let d = fd_oracle(&bundle, &f, &q, &u0, &path, 1, eps0).unwrap();
            let err = relative_sup_error(&d, &z).unwrap();
            assert!(err < 1e-10, "eps0 = {eps0}: {err}");
        }
    }

    #[test]
    fn oracle_matches_engine() {
        let (bundle, f, q, u0, path) = scalar_setup(PolynomialMap::fhn_cubic(0.5, 1).unwrap());
        let set = expand(&bundle, &f, &q, &u0, &path, 2).unwrap();
        let d1 = fd_oracle(&bundle, &f, &q, &u0, &path, 1, 1e-4).unwrap();
        assert!(relative_sup_error(&d1, set.term(1)).unwrap() <= 1e-3);
        let d2 = fd_oracle(&bundle, &f, &q, &u0, &path, 2, 1e-3).unwrap();
        assert!(relative_sup_error(&d2, set.term(2)).unwrap() <= 5e-3);
    }

    #[test]
    fn oracle_error_is_linear_in_eps0() {
        let (bundle, f, q, u0, path) = scalar_setup(PolynomialMap::fhn_cubic(0.5, 1).unwrap());
        let set = expand(&bundle, &f, &q, &u0, &path, 1).unwrap();
        let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| relative_sup_error(&fd_oracle(&bundle, &f, &q, &u0, &path, 1, e).unwrap(), set.term(1)).unwrap())
            .collect();
        for w in errs.windows(2) {
            let slope = (w[0] / w[1]).log10();
            assert!((slope - 1.0).abs() < 0.1, "{errs:?}");
        }
    }

    #[test]
    fn rejects_unsupported_order() {
        let (bundle, f, q, u0, path) = scalar_setup(PolynomialMap::zero(1));
        assert!(fd_oracle(&bundle, &f, &q, &u0, &path, 3, 1e-3).is_err());
        assert!(fd_oracle(&bundle, &f, &q, &u0, &path, 1, 0.0).is_err());
    }
}
