//! Pointwise polynomial nonlinearity, its Fréchet derivatives and its
//! one-sided Lipschitz constant.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Field, FieldLayout};

/// Scalar polynomial `a_0 + a_1 v + ... + a_d v^d` with cached derivative
/// coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    /// `derivs[j]` holds the coefficients of the j-th derivative.
    derivs: Vec<Vec<f64>>,
}

impl TryFrom<Vec<f64>> for Polynomial {
    type Error = Error;
    fn try_from(coeffs: Vec<f64>) -> Result<Self> {
        Polynomial::new(coeffs)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Vec<f64> {
        p.coefficients().to_vec()
    }
}

impl Polynomial {
    /// Trailing zero coefficients are dropped.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("polynomial coefficients"));
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        let mut derivs = vec![coeffs];
        loop {
            let last = derivs.last().unwrap();
            if last.len() <= 1 {
                break;
            }
            let next: Vec<f64> = last
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, a)| a * i as f64)
                .collect();
            derivs.push(next);
        }
        Ok(Self { derivs })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.derivs[0]
    }

    pub fn is_zero(&self) -> bool {
        self.derivs[0].is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.derivs[0].len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.derivs[0].last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, v: f64) -> f64 {
        horner(&self.derivs[0], v)
    }

    /// `g^{(j)}(v)`; zero beyond the degree.
    pub fn derivative(&self, j: usize, v: f64) -> f64 {
        self.derivs.get(j).map_or(0.0, |c| horner(c, v))
    }

    /// `sup_v g'(v)`; finite for odd degree with negative leading term, or
    /// degree at most one.
    pub fn max_slope(&self) -> Result<f64> {
        let d = self.degree();
        match d {
            0 => Ok(0.0),
            1 => Ok(self.derivs[0][1]),
            _ if d.is_multiple_of(2) || self.leading() >= 0.0 => Err(Error::InvalidInput(format!(
                "polynomial of degree {d} with leading coefficient {} is not one-sided Lipschitz",
                self.leading()
            ))),
            3 => {
                // g'(v) = a1 + 2 a2 v + 3 a3 v^2 peaks at v = -a2 / (3 a3).
                let c = &self.derivs[0];
                let v = -c[2] / (3.0 * c[3]);
                Ok(self.derivative(1, v))
            }
            _ => Ok(self.max_slope_numeric()),
        }
    }

    fn max_slope_numeric(&self) -> f64 {
        // Every critical point of g' is a root of g'', hence inside the
        // Cauchy bound of g''.
        let g2 = &self.derivs[2];
        let lead = *g2.last().unwrap();
        let radius = 1.0
            + g2[..g2.len() - 1]
                .iter()
                .map(|c| (c / lead).abs())
                .fold(0.0, f64::max);
        let samples = 4001;
        let slope = |v: f64| self.derivative(1, v);
        let step = 2.0 * radius / (samples - 1) as f64;
        let (best, _) = (0..samples)
            .map(|i| -radius + i as f64 * step)
            .map(|v| (v, slope(v)))
            .fold((0.0, f64::NEG_INFINITY), |acc, (v, s)| if s > acc.1 { (v, s) } else { acc });
        golden_section_max(slope, best - step, best + step, 1e-10)
    }
}

fn horner(coeffs: &[f64], v: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * v + c)
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    f(0.5 * (lo + hi)).max(f1).max(f2)
}

/// Nemytskii map acting componentwise through scalar polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialMap {
    per_component: Vec<Option<Polynomial>>,
    eta: f64,
}

impl PolynomialMap {
    /// `None` (or a zero polynomial) marks a component on which the map is 0.
    pub fn new(per_component: Vec<Option<Polynomial>>) -> Result<Self> {
        let per_component: Vec<Option<Polynomial>> = per_component
            .into_iter()
            .map(|p| p.filter(|p| !p.is_zero()))
            .collect();
        let mut eta: Option<f64> = None;
        for (c, poly) in per_component.iter().enumerate() {
            if let Some(poly) = poly {
                let slope = poly
                    .max_slope()
                    .map_err(|e| Error::InvalidInput(format!("component {c}: {e}")))?;
                eta = Some(eta.map_or(slope, |e| e.max(slope)));
            }
        }
        Ok(Self {
            per_component,
            eta: eta.unwrap_or(0.0),
        })
    }

    /// `g(v) = -v (v - 1)(v - xi)` on the first of `components` components.
    pub fn fhn_cubic(xi: f64, components: usize) -> Result<Self> {
        let cubic = Polynomial::new(vec![0.0, -xi, 1.0 + xi, -1.0])?;
        let mut per = vec![None; components.max(1)];
        per[0] = Some(cubic);
        Self::new(per)
    }

    /// `g(v) = slope * v` on every component.
    pub fn linear(slope: f64, components: usize) -> Result<Self> {
        let p = Polynomial::new(vec![0.0, slope])?;
        Self::new(vec![Some(p); components])
    }

    pub fn zero(components: usize) -> Self {
        Self {
            per_component: vec![None; components],
            eta: 0.0,
        }
    }

    pub fn components(&self) -> usize {
        self.per_component.len()
    }

    pub fn component(&self, c: usize) -> Option<&Polynomial> {
        self.per_component.get(c).and_then(|p| p.as_ref())
    }

    /// Highest degree over active components.
    pub fn degree(&self) -> usize {
        self.per_component
            .iter()
            .flatten()
            .map(Polynomial::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn is_affine(&self) -> bool {
        self.degree() <= 1
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn check_layout(&self, layout: &FieldLayout) -> Result<()> {
        if layout.components() != self.components() {
            return Err(Error::DimensionMismatch {
                expected: self.components(),
                got: layout.components(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, u: &Field) -> Result<Field> {
        self.check_layout(u.layout())?;
        Ok(self.eval_unchecked(u))
    }

    pub(crate) fn eval_unchecked(&self, u: &Field) -> Field {
        let mut out = Field::zeros(u.layout());
        for (c, poly) in self.per_component.iter().enumerate() {
            if let Some(poly) = poly {
                for (o, v) in out.component_mut(c).iter_mut().zip(u.component(c)) {
                    *o = poly.eval(*v);
                }
            }
        }
        out
    }

    /// `F^{(j)}(w)[h_1, ..., h_j]`, i.e. `g^{(j)}(w) h_1 ... h_j` pointwise.
    pub fn frechet(&self, w: &Field, hs: &[&Field]) -> Result<Field> {
        if hs.is_empty() {
            return Err(Error::InvalidInput(
                "Fréchet derivative order must be at least 1".into(),
            ));
        }
        self.check_layout(w.layout())?;
        for h in hs {
            w.check_compatible(h)?;
        }
        Ok(self.frechet_unchecked(w, hs))
    }

    pub(crate) fn frechet_unchecked(&self, w: &Field, hs: &[&Field]) -> Field {
        let j = hs.len();
        let mut out = Field::zeros(w.layout());
        for (c, poly) in self.per_component.iter().enumerate() {
            let Some(poly) = poly else { continue };
            if j > poly.degree() {
                continue;
            }
            let range = w.layout().component_range(c);
            let wc = &w.as_slice()[range.clone()];
            let mut factors = Vec::with_capacity(j);
            for (i, o) in out.component_mut(c).iter_mut().enumerate() {
                factors.clear();
                factors.extend(hs.iter().map(|h| h.as_slice()[range.start + i]));
                // Canonical order makes the result exactly symmetric in the h's.
                factors.sort_unstable_by(f64::total_cmp);
                let prod: f64 = factors.iter().product();
                *o = poly.derivative(j, wc[i]) * prod;
            }
        }
        out
    }

    /// `sum_{j=0}^{n} F^{(j)}(w)[h, ..., h] / j!`
    pub fn taylor_eval(&self, w: &Field, h: &Field, order: usize) -> Result<Field> {
        self.check_layout(w.layout())?;
        w.check_compatible(h)?;
        let mut out = Field::zeros(w.layout());
        for (c, poly) in self.per_component.iter().enumerate() {
            let Some(poly) = poly else { continue };
            let range = w.layout().component_range(c);
            let wc = &w.as_slice()[range.clone()];
            let hc = &h.as_slice()[range];
            let top = order.min(poly.degree());
            for (i, o) in out.component_mut(c).iter_mut().enumerate() {
                let mut acc = 0.0;
                let mut hp = 1.0;
                let mut fact = 1.0;
                for jj in 0..=top {
                    if jj > 0 {
                        hp *= hc[i];
                        fact *= jj as f64;
                    }
                    acc += poly.derivative(jj, wc[i]) * hp / fact;
                }
                *o = acc;
            }
        }
        Ok(out)
    }
}

/// One-sided Lipschitz constant of `f`: `<F(u) - F(v) - eta (u - v), u - v> <= 0`.
pub fn dissipativity_gap(f: &PolynomialMap) -> f64 {
    f.eta()
}

/// Discrete `L^q` norm of each component with the layout's quadrature, summed
/// over components.
pub fn quadrature_norm(u: &Field, q: f64) -> f64 {
    let layout: &Arc<FieldLayout> = u.layout();
    (0..layout.components())
        .map(|c| {
            let range = layout.component_range(c);
            let w = &layout.entry_weights()[range.clone()];
            let cw = layout.component_weights()[c];
            let s: f64 = u.as_slice()[range]
                .iter()
                .zip(w)
                .map(|(v, w)| (w / cw) * v.abs().powf(q))
                .sum();
            s.powf(1.0 / q)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::SpatialGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn layout(n: usize) -> Arc<FieldLayout> {
        let grid = SpatialGrid::new(n).unwrap();
        Arc::new(FieldLayout::on_grid(&grid, &[1.0, 1.0]).unwrap())
    }

    fn random_field(l: &Arc<FieldLayout>, rng: &mut ChaCha8Rng, scale: f64) -> Field {
        let v = (0..l.dim()).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        Field::from_vec(l, v).unwrap()
    }

    #[test]
    fn cubic_roots_map_to_zero() {
        let l = layout(5);
        let f = PolynomialMap::fhn_cubic(0.3, 2).unwrap();
        for v in [0.0, 1.0, 0.3] {
            let u = Field::constant(&l, &[v, 7.0]).unwrap();
            assert!(f.eval(&u).unwrap().max_abs() < 1e-15);
        }
    }

    #[test]
    fn cubic_hand_evaluation() {
        let l = layout(5);
        let f = PolynomialMap::fhn_cubic(0.5, 2).unwrap();
        let u = Field::constant(&l, &[2.0, 2.0]).unwrap();
        let out = f.eval(&u).unwrap();
        assert_eq!(out.component(0), &[-3.0; 5]);
        assert_eq!(out.component(1), &[0.0; 5]);
    }

    #[test]
    fn cubic_is_not_additive() {
        let l = layout(6);
        let f = PolynomialMap::fhn_cubic(0.5, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (u, v) = (random_field(&l, &mut rng, 1.0), random_field(&l, &mut rng, 1.0));
        let lhs = f.eval(&(&u + &v)).unwrap();
        let rhs = &f.eval(&u).unwrap() + &f.eval(&v).unwrap();
        assert!((&lhs - &rhs).max_abs() > 1e-3);
    }

    #[test]
    fn derivative_values_at_zero() {
        let xi = 0.5;
        let l = layout(4);
        let f = PolynomialMap::fhn_cubic(xi, 2).unwrap();
        let w = Field::zeros(&l);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h1 = random_field(&l, &mut rng, 1.0);
        let h2 = random_field(&l, &mut rng, 1.0);
        let d1 = f.frechet(&w, &[&h1]).unwrap();
        for i in 0..4 {
            assert!((d1.as_slice()[i] + xi * h1.as_slice()[i]).abs() < 1e-15);
        }
        let d2 = f.frechet(&w, &[&h1, &h2]).unwrap();
        for i in 0..4 {
            let expect = 2.0 * (1.0 + xi) * h1.as_slice()[i] * h2.as_slice()[i];
            assert!((d2.as_slice()[i] - expect).abs() < 1e-14);
        }
        let d4 = f.frechet(&w, &[&h1, &h1, &h2, &h2]).unwrap();
        assert_eq!(d4.max_abs(), 0.0);
        assert!(f.frechet(&w, &[]).is_err());
    }

    #[test]
    fn eta_closed_forms() {
        let f = PolynomialMap::fhn_cubic(0.5, 2).unwrap();
        assert!((f.eta() - 0.25).abs() < 1e-15);
        for xi in [0.1, 0.37, 0.9] {
            let f = PolynomialMap::fhn_cubic(xi, 1).unwrap();
            assert!((dissipativity_gap(&f) - (xi * xi - xi + 1.0) / 3.0).abs() < 1e-14);
        }
        assert_eq!(PolynomialMap::linear(-0.7, 1).unwrap().eta(), -0.7);
        assert_eq!(PolynomialMap::linear(2.0, 1).unwrap().eta(), 2.0);
        assert_eq!(PolynomialMap::zero(2).eta(), 0.0);
    }

    #[test]
    fn quintic_eta_matches_dense_scan() {
        // g(v) = -v^5 + 2 v^3 - v + 0.3 v^2: g' has two interior maxima.
        let p = Polynomial::new(vec![0.0, -1.0, 0.3, 2.0, 0.0, -1.0]).unwrap();
        let eta = p.max_slope().unwrap();
        let scan = (0..200_001)
            .map(|i| -3.0 + 6.0 * i as f64 / 200_000.0)
            .map(|v| p.derivative(1, v))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(eta >= scan - 1e-9 && eta - scan < 1e-6, "{eta} vs {scan}");
    }

    #[test]
    fn rejects_non_dissipative_polynomials() {
        let growing = Polynomial::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(PolynomialMap::new(vec![Some(growing)]).is_err());
        let even = Polynomial::new(vec![0.0, 0.0, -1.0]).unwrap();
        assert!(PolynomialMap::new(vec![Some(even)]).is_err());
    }

    #[test]
    fn taylor_exact_at_degree() {
        let l = layout(8);
        let f = PolynomialMap::fhn_cubic(0.5, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let w = random_field(&l, &mut rng, 2.0);
            let h = random_field(&l, &mut rng, 2.0);
            let exact = f.eval(&(&w + &h)).unwrap();
            let t3 = f.taylor_eval(&w, &h, 3).unwrap();
            assert!((&exact - &t3).norm() <= 1e-12 * exact.norm().max(1.0));
            assert_eq!(f.taylor_eval(&w, &h, 0).unwrap(), f.eval(&w).unwrap());
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let l = layout(8);
        let f = PolynomialMap::fhn_cubic(0.5, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_field(&l, &mut rng, 1.5);
        let h = random_field(&l, &mut rng, 1.0);
        let delta = 1e-5;
        let plus = f.eval(&(&w + &h.scaled(delta))).unwrap();
        let minus = f.eval(&(&w - &h.scaled(delta))).unwrap();
        let fd = (&plus - &minus).scaled(0.5 / delta);
        let d = f.frechet(&w, &[&h]).unwrap();
        assert!((&fd - &d).norm() <= 1e-7 * d.norm());
    }

    #[test]
    fn growth_slope_tracks_degree() {
        let l = layout(8);
        let f = PolynomialMap::fhn_cubic(0.5, 2).unwrap();
        let scales: Vec<f64> = (0..6).map(|k| 10f64.powi(3 + k)).collect();
        let logs: Vec<f64> = scales
            .iter()
            .map(|s| {
                let u = Field::constant(&l, &[*s, 0.0]).unwrap();
                quadrature_norm(&f.eval(&u).unwrap(), 2.0).ln()
            })
            .collect();
        let slope = (logs[5] - logs[0]) / (scales[5].ln() - scales[0].ln());
        assert!((slope - 3.0).abs() < 1e-2, "slope {slope}");
    }

    #[test]
    fn polynomial_serde_roundtrip_drops_trailing_zeros() {
        let p: Polynomial = Polynomial::try_from(vec![1.0, 2.0, 0.0]).unwrap();
        assert_eq!(p.degree(), 1);
        assert_eq!(Vec::<f64>::from(p), vec![1.0, 2.0]);
    }
}
