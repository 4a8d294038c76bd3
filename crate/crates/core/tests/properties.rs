use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smallnoise_core::analysis::{fit_order, remainder, FitPoint};
use smallnoise_core::expansion::{enumerate_compositions, expand, phi_k_forcing};
use smallnoise_core::levy::{derive_seed, sample_path, LevyPath, QOperator};
use smallnoise_core::math::{
    apply_semigroup, build_propagators, neumann_diffusion, Field, FieldLayout, SpatialGrid,
};
use smallnoise_core::nonlinearity::{Polynomial, PolynomialMap};
use smallnoise_core::problem::{FhnParams, Problem};
use smallnoise_core::solvers::{solve_deterministic, solve_sde, stochastic_convolution};

fn small_fhn(n_nodes: usize, xi: f64) -> Problem {
    FhnParams {
        n_nodes,
        xi,
        horizon: 0.1,
        ..FhnParams::default()
    }
    .build()
    .unwrap()
}

fn field_from(layout: &Arc<FieldLayout>, values: &[f64]) -> Field {
    Field::from_vec(layout, values[..layout.dim()].to_vec()).unwrap()
}

fn values(len: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..scale, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn semigroup_law(n in 3usize..8, j in 0usize..32, k in 0usize..32, xs in values(16, 1.0)) {
        let p = small_fhn(n, 0.5);
        let x = field_from(p.layout(), &xs);
        let split = apply_semigroup(&p.bundle, &apply_semigroup(&p.bundle, &x, j).unwrap(), k).unwrap();
        let joint = apply_semigroup(&p.bundle, &x, j + k).unwrap();
        prop_assert!((&split - &joint).max_abs() <= 1e-12);
    }

    #[test]
    fn weighted_contraction(n in 3usize..10, xs in values(20, 3.0)) {
        let p = small_fhn(n, 0.5);
        let x = field_from(p.layout(), &xs);
        let ex = x.transformed(p.bundle.e_step());
        prop_assert!(ex.norm() <= (-p.omega() * p.bundle.dt()).exp() * x.norm() + 1e-9);
    }

    #[test]
    fn neumann_constants_are_invariant(n in 3usize..12, c in prop::collection::vec(0.2f64..3.0, 12), level in -5.0f64..5.0) {
        let grid = SpatialGrid::new(n).unwrap();
        let a0 = neumann_diffusion(&grid, &c[..n]).unwrap();
        let layout = Arc::new(FieldLayout::on_grid(&grid, &[1.0]).unwrap());
        let bundle = build_propagators(a0, 0.01, &layout).unwrap();
        let x = Field::constant(&layout, &[level]).unwrap();
        let ex = x.transformed(bundle.e_step());
        prop_assert!((&ex - &x).max_abs() <= 1e-12 * level.abs().max(1.0));
    }

    #[test]
    fn one_sided_dissipativity(xi in 0.01f64..0.99, us in values(16, 3.0), vs in values(16, 3.0)) {
        let f = PolynomialMap::fhn_cubic(xi, 2).unwrap();
        let eta = (xi * xi - xi + 1.0) / 3.0;
        prop_assert!((f.eta() - eta).abs() < 1e-12);
        let layout = Arc::new(FieldLayout::on_grid(&SpatialGrid::new(8).unwrap(), &[1.0, 0.5]).unwrap());
        let (u, v) = (field_from(&layout, &us), field_from(&layout, &vs));
        let d = &u - &v;
        let mut g = &f.eval(&u).unwrap() - &f.eval(&v).unwrap();
        g.axpy(-eta, &d);
        prop_assert!(g.inner(&d) <= 1e-10);
    }

    #[test]
    fn frechet_is_symmetric_and_multilinear(
        coeffs in prop::collection::vec(-2.0f64..2.0, 5),
        w in values(6, 1.5), h1 in values(6, 1.0), h2 in values(6, 1.0), h3 in values(6, 1.0),
        a in -2.0f64..2.0,
    ) {
        let mut c = coeffs;
        c.push(-1.0);
        let f = PolynomialMap::new(vec![Some(Polynomial::new(c).unwrap())]).unwrap();
        let layout = Arc::new(FieldLayout::new(&[1.0; 6], &[1.0]).unwrap());
        let (w, h1, h2, h3) = (field_from(&layout, &w), field_from(&layout, &h1), field_from(&layout, &h2), field_from(&layout, &h3));
        let base = f.frechet(&w, &[&h1, &h2, &h3]).unwrap();
        for perm in [[&h2, &h1, &h3], [&h3, &h2, &h1], [&h1, &h3, &h2]] {
            let permuted = f.frechet(&w, &perm).unwrap();
            prop_assert_eq!(permuted.as_slice(), base.as_slice());
        }
        let mixed = &h1.scaled(a) + &h3;
        let lhs = f.frechet(&w, &[&mixed, &h2]).unwrap();
        let mut rhs = f.frechet(&w, &[&h3, &h2]).unwrap();
        rhs.axpy(a, &f.frechet(&w, &[&h1, &h2]).unwrap());
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-12 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn first_derivative_matches_central_difference(xi in 0.05f64..0.95, w in values(8, 1.5), h in values(8, 1.0)) {
        let f = PolynomialMap::fhn_cubic(xi, 1).unwrap();
        let layout = Arc::new(FieldLayout::new(&[0.125; 8], &[1.0]).unwrap());
        let (w, h) = (field_from(&layout, &w), field_from(&layout, &h));
        prop_assume!(h.norm() > 1e-3);
        let d = 1e-5;
        let fd = (&f.eval(&(&w + &h.scaled(d))).unwrap() - &f.eval(&(&w - &h.scaled(d))).unwrap()).scaled(0.5 / d);
        let exact = f.frechet(&w, &[&h]).unwrap();
        prop_assert!((&fd - &exact).norm() <= 1e-7 * exact.norm().max(1e-3));
    }

    #[test]
    fn path_is_deterministic_in_the_seed(master in any::<u64>(), index in 0u64..1000) {
        let p = small_fhn(4, 0.5);
        let a = sample_path(&p.noise, 1.0, &mut derive_seed(master, index, 0).rng()).unwrap();
        let b = sample_path(&p.noise, 1.0, &mut derive_seed(master, index, 7).rng()).unwrap();
        prop_assert_eq!(a.jump_times(), b.jump_times());
        for (x, y) in a.marks().iter().zip(b.marks()) {
            prop_assert_eq!(x.as_slice(), y.as_slice());
        }
    }

    #[test]
    fn cadlag_values(times in prop::collection::vec(0.01f64..1.0, 1..6)) {
        let layout = Arc::new(FieldLayout::scalar());
        let mut times = times;
        times.sort_by(f64::total_cmp);
        times.dedup();
        let marks: Vec<Field> = (0..times.len()).map(|i| Field::from_vec(&layout, vec![1.0 + i as f64]).unwrap()).collect();
        let path = LevyPath::new(1.0, &layout, times.clone(), marks.clone()).unwrap();
        for (i, t) in times.iter().enumerate() {
            let at = path.value_at(*t).as_slice()[0];
            let before = path.value_before(*t).as_slice()[0];
            prop_assert!((at - before - marks[i].as_slice()[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_coupling_is_exact(seed in any::<u64>(), e1 in 0.0f64..1.0, e2 in 0.0f64..1.0, slope in -2.0f64..0.5) {
        let p = small_fhn(6, 0.5);
        let f = PolynomialMap::linear(slope, 2).unwrap();
        let path = sample_path(&p.noise, p.horizon, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let u1 = solve_sde(&p.bundle, &f, &p.q, e1, &p.u0, &path).unwrap();
        let u2 = solve_sde(&p.bundle, &f, &p.q, e2, &p.u0, &path).unwrap();
        let set = expand(&p.bundle, &f, &p.q, &p.u0, &path, 1).unwrap();
        for m in 0..=u1.steps() {
            let mut d = u1.state(m) - u2.state(m);
            d.axpy(-(e1 - e2), set.term(1).state(m));
            prop_assert!(d.max_abs() <= 1e-12);
        }
    }

    #[test]
    fn deterministic_trajectories_contract(us in values(16, 1.0), vs in values(16, 1.0)) {
        let p = small_fhn(8, 0.5);
        let (u0, v0) = (field_from(p.layout(), &us), field_from(p.layout(), &vs));
        let a = solve_deterministic(&p.bundle, &p.nonlinearity, &u0, p.horizon).unwrap();
        let b = solve_deterministic(&p.bundle, &p.nonlinearity, &v0, p.horizon).unwrap();
        let gap = p.dissipativity_margin();
        let d0 = (&u0 - &v0).norm();
        for m in 0..=a.steps() {
            let d = (a.state(m) - b.state(m)).norm();
            prop_assert!(d <= (-gap * a.time(m)).exp() * d0 + 1e-8);
        }
    }

    #[test]
    fn inductive_zero(n in 2usize..6) {
        let p = small_fhn(5, 0.5);
        let empty = LevyPath::empty(p.horizon, p.layout()).unwrap();
        let set = expand(&p.bundle, &p.nonlinearity, &p.q, &p.u0, &empty, n).unwrap();
        for k in 1..=n {
            prop_assert_eq!(set.term(k).sup_norm(), 0.0);
        }
    }

    #[test]
    fn single_direction_forcing_is_a_taylor_coefficient(k in 2usize..5, phi in values(5, 1.5), u in values(5, 1.5), xi in 0.1f64..0.9) {
        let f = PolynomialMap::fhn_cubic(xi, 1).unwrap();
        let g = f.component(0).unwrap();
        let layout = Arc::new(FieldLayout::new(&[0.2; 5], &[1.0]).unwrap());
        let (phi, u) = (field_from(&layout, &phi), field_from(&layout, &u));
        let zero = Field::zeros(&layout);
        let mut us: Vec<&Field> = vec![&zero; k - 1];
        us[0] = &u;
        let table = enumerate_compositions(k).unwrap();
        let got = phi_k_forcing(&f, &table, &phi, &us).unwrap();
        let kf = (1..=k).map(|j| j as f64).product::<f64>();
        for (i, (x, h)) in phi.as_slice().iter().zip(u.as_slice()).enumerate() {
            let expected = g.derivative(k, *x) * h.powi(k as i32) / kf;
            prop_assert!((got.as_slice()[i] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn u1_is_additive(s1 in any::<u64>(), s2 in any::<u64>()) {
        let p = small_fhn(5, 0.5);
        let a = sample_path(&p.noise, p.horizon, &mut ChaCha8Rng::seed_from_u64(s1)).unwrap();
        let b = sample_path(&p.noise, p.horizon, &mut ChaCha8Rng::seed_from_u64(s2)).unwrap();
        let both = a.merged(&b).unwrap();
        let u = |path: &LevyPath| expand(&p.bundle, &p.nonlinearity, &p.q, &p.u0, path, 1).unwrap().term(1).clone();
        let (ua, ub, uab) = (u(&a), u(&b), u(&both));
        for m in 0..=ua.steps() {
            prop_assert!((&(ua.state(m) + ub.state(m)) - uab.state(m)).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_noise_remainder_vanishes(seed in any::<u64>(), n in 1usize..4) {
        let p = small_fhn(6, 0.5);
        let path = sample_path(&p.noise, p.horizon, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let set = expand(&p.bundle, &p.nonlinearity, &p.q, &p.u0, &path, n).unwrap();
        let u = solve_sde(&p.bundle, &p.nonlinearity, &p.q, 0.0, &p.u0, &path).unwrap();
        let r = remainder(&u, &set, 0.0).unwrap();
        prop_assert!(r.states().iter().all(|s| s.as_slice().iter().all(|v| v.to_bits() == 0)));
    }

    #[test]
    fn zero_field_u1_is_the_convolution(seed in any::<u64>()) {
        let p = small_fhn(5, 0.5);
        let path = sample_path(&p.noise, p.horizon, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let f = PolynomialMap::zero(2);
        let set = expand(&p.bundle, &f, &QOperator::identity(10), &p.u0, &path, 1).unwrap();
        let z = stochastic_convolution(&p.bundle, &QOperator::identity(10), &path).unwrap();
        for m in 0..=z.steps() {
            prop_assert!((set.term(1).state(m) - z.state(m)).max_abs() <= 1e-13);
        }
    }

    #[test]
    fn exact_power_law_fit(c in 0.01f64..100.0, order in 0.5f64..8.0) {
        let points: Vec<FitPoint> = [0.2, 0.1, 0.05, 0.025].iter()
            .map(|&e: &f64| FitPoint { epsilon: e, value: c * e.powf(order), std_error: None })
            .collect();
        let fit = fit_order(&points, false).unwrap();
        prop_assert!((fit.slope - order).abs() < 1e-9);
        prop_assert!((fit.r_squared - 1.0).abs() < 1e-9);
        prop_assert!(fit.leave_one_out_shift < 1e-9);
    }
}
