use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::math::grid::SpatialGrid;

/// Shape and inner-product weights of a discretized state space.
///
/// Entries are stored component-major: entry `c * nodes + i` is component
/// `c` at node `i`. The weight of an entry is the component weight times the
/// spatial quadrature weight of its node.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldLayout {
    components: usize,
    nodes: usize,
    component_weights: Vec<f64>,
    entry_weights: Vec<f64>,
}

impl FieldLayout {
    pub fn new(quadrature: &[f64], component_weights: &[f64]) -> Result<Self> {
        if quadrature.is_empty() || component_weights.is_empty() {
            return Err(Error::InvalidInput(
                "layout needs at least one node and one component".into(),
            ));
        }
        if quadrature
            .iter()
            .chain(component_weights)
            .any(|w| !(w.is_finite() && *w > 0.0))
        {
            return Err(Error::InvalidInput(
                "inner-product weights must be finite and positive".into(),
            ));
        }
        let entry_weights = component_weights
            .iter()
            .flat_map(|cw| quadrature.iter().map(move |q| cw * q))
            .collect();
        Ok(Self {
            components: component_weights.len(),
            nodes: quadrature.len(),
            component_weights: component_weights.to_vec(),
            entry_weights,
        })
    }

    /// Layout over a spatial grid with trapezoidal quadrature.
    pub fn on_grid(grid: &SpatialGrid, component_weights: &[f64]) -> Result<Self> {
        Self::new(&grid.quadrature_weights(), component_weights)
    }

    /// One component at one node with unit weight.
    pub fn scalar() -> Self {
        Self::new(&[1.0], &[1.0]).expect("unit weights are valid")
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn dim(&self) -> usize {
        self.components * self.nodes
    }

    pub fn component_weights(&self) -> &[f64] {
        &self.component_weights
    }

    pub fn entry_weights(&self) -> &[f64] {
        &self.entry_weights
    }

    pub fn component_range(&self, c: usize) -> std::ops::Range<usize> {
        c * self.nodes..(c + 1) * self.nodes
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.entry_weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    /// `W^{1/2} M W^{-1/2}`: the matrix `M` expressed in an orthonormal basis
    /// of the weighted inner product.
    pub fn to_orthonormal(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let sqrt_w: Vec<f64> = self.entry_weights.iter().map(|w| w.sqrt()).collect();
        DMatrix::from_fn(n, n, |i, j| sqrt_w[i] * m[(i, j)] / sqrt_w[j])
    }

    /// Operator norm of `m` induced by the weighted norm.
    pub fn operator_norm(&self, m: &DMatrix<f64>) -> f64 {
        let b = self.to_orthonormal(m);
        b.singular_values().max()
    }
}

impl fmt::Display for FieldLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} component(s) x {} node(s)", self.components, self.nodes)
    }
}

/// A state vector together with the layout that defines its inner product.
#[derive(Debug, Clone)]
pub struct Field {
    layout: Arc<FieldLayout>,
    values: DVector<f64>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        same_layout(&self.layout, &other.layout) && self.values == other.values
    }
}

fn same_layout(a: &Arc<FieldLayout>, b: &Arc<FieldLayout>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl Field {
    pub fn zeros(layout: &Arc<FieldLayout>) -> Self {
        Self {
            layout: Arc::clone(layout),
            values: DVector::zeros(layout.dim()),
        }
    }

    pub fn from_vec(layout: &Arc<FieldLayout>, values: Vec<f64>) -> Result<Self> {
        Self::from_vector(layout, DVector::from_vec(values))
    }

    pub fn from_vector(layout: &Arc<FieldLayout>, values: DVector<f64>) -> Result<Self> {
        if values.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Self {
            layout: Arc::clone(layout),
            values,
        })
    }

    /// Constant value per component.
    pub fn constant(layout: &Arc<FieldLayout>, per_component: &[f64]) -> Result<Self> {
        if per_component.len() != layout.components() {
            return Err(Error::DimensionMismatch {
                expected: layout.components(),
                got: per_component.len(),
            });
        }
        let values = per_component
            .iter()
            .flat_map(|v| std::iter::repeat_n(*v, layout.nodes()))
            .collect();
        Self::from_vec(layout, values)
    }

    pub(crate) fn from_vector_unchecked(layout: &Arc<FieldLayout>, values: DVector<f64>) -> Self {
        debug_assert_eq!(values.len(), layout.dim());
        Self {
            layout: Arc::clone(layout),
            values,
        }
    }

    pub fn layout(&self) -> &Arc<FieldLayout> {
        &self.layout
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DVector<f64> {
        &mut self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.values.as_slice()[self.layout.component_range(c)]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let range = self.layout.component_range(c);
        &mut self.values.as_mut_slice()[range]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_compatible(&self, other: &Field) -> Result<()> {
        if !same_layout(&self.layout, &other.layout) {
            return Err(Error::DimensionMismatch {
                expected: self.layout.dim(),
                got: other.layout.dim(),
            });
        }
        Ok(())
    }

    pub fn inner(&self, other: &Field) -> f64 {
        debug_assert!(same_layout(&self.layout, &other.layout));
        self.layout.inner(self.as_slice(), other.as_slice())
    }

    pub fn norm_squared(&self) -> f64 {
        self.inner(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field::from_vector_unchecked(&self.layout, &self.values * s)
    }

    /// `self += s * x`
    pub fn axpy(&mut self, s: f64, x: &Field) {
        debug_assert!(same_layout(&self.layout, &x.layout));
        self.values.axpy(s, &x.values, 1.0);
    }

    /// Entrywise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_vector_unchecked(&self.layout, self.values.map(f))
    }

    /// Entrywise product.
    pub fn hadamard(&self, other: &Field) -> Field {
        Field::from_vector_unchecked(&self.layout, self.values.component_mul(&other.values))
    }

    /// `m * self`, keeping the layout.
    pub fn transformed(&self, m: &DMatrix<f64>) -> Field {
        Field::from_vector_unchecked(&self.layout, m * &self.values)
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        debug_assert!(same_layout(&self.layout, &rhs.layout));
        Field::from_vector_unchecked(&self.layout, &self.values + &rhs.values)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        debug_assert!(same_layout(&self.layout, &rhs.layout));
        Field::from_vector_unchecked(&self.layout, &self.values - &rhs.values)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.scaled(rhs)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scaled(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn layout() -> Arc<FieldLayout> {
        let grid = SpatialGrid::new(6).unwrap();
        Arc::new(FieldLayout::on_grid(&grid, &[1.0, 0.25]).unwrap())
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(FieldLayout::new(&[1.0, 0.0], &[1.0]).is_err());
        assert!(FieldLayout::new(&[1.0], &[-1.0]).is_err());
    }

    #[test]
    fn rejects_non_finite_and_wrong_length() {
        let l = layout();
        assert!(Field::from_vec(&l, vec![0.0; 3]).is_err());
        let mut v = vec![0.0; 12];
        v[4] = f64::NAN;
        assert_eq!(Field::from_vec(&l, v), Err(Error::NonFinite("field values")));
    }

    #[test]
    fn constant_field_norm_uses_component_weights() {
        let l = layout();
        // Trapezoid weights integrate constants exactly: |(1, 2)|^2 = 1 + 0.25 * 4.
        let f = Field::constant(&l, &[1.0, 2.0]).unwrap();
        assert!((f.norm_squared() - 2.0).abs() < 1e-14);
        assert_eq!(f.component(1), &[2.0; 6]);
    }

    #[test]
    fn zero_norm_only_for_zero_field() {
        let l = layout();
        assert_eq!(Field::zeros(&l).norm(), 0.0);
        let mut f = Field::zeros(&l);
        f.values_mut()[7] = 1e-3;
        assert!(f.norm() > 0.0);
    }

    #[test]
    fn operator_norm_of_identity_is_one() {
        let l = layout();
        let id = DMatrix::<f64>::identity(l.dim(), l.dim());
        assert!((l.operator_norm(&id) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn inner_product_symmetric_and_bilinear(
            a in prop::collection::vec(-5.0..5.0f64, 12),
            b in prop::collection::vec(-5.0..5.0f64, 12),
            c in prop::collection::vec(-5.0..5.0f64, 12),
            s in -3.0..3.0f64,
        ) {
            let l = layout();
            let a = Field::from_vec(&l, a).unwrap();
            let b = Field::from_vec(&l, b).unwrap();
            let c = Field::from_vec(&l, c).unwrap();
            prop_assert!((a.inner(&b) - b.inner(&a)).abs() <= 1e-12);
            let lhs = (&a.scaled(s) + &b).inner(&c);
            let rhs = s * a.inner(&c) + b.inner(&c);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
            prop_assert!(a.norm() >= 0.0);
        }
    }
}
