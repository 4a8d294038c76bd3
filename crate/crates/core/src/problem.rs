//! Fully assembled problem instances and the built-in presets.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::levy::{Embedding, JumpMeasureSpec, MarkLaw, QOperator};
use crate::math::{
    assemble_fhn_from_nodes, build_propagators, Field, FieldLayout, OperatorBundle, SpatialGrid,
};
use crate::nonlinearity::{Polynomial, PolynomialMap};

/// Everything a path simulation needs.
#[derive(Debug, Clone)]
pub struct Problem {
    pub bundle: OperatorBundle,
    pub nonlinearity: PolynomialMap,
    pub q: QOperator,
    pub noise: JumpMeasureSpec,
    pub u0: Field,
    pub horizon: f64,
}

impl Problem {
    pub fn layout(&self) -> &Arc<FieldLayout> {
        self.bundle.layout()
    }

    pub fn omega(&self) -> f64 {
        self.bundle.omega()
    }

    pub fn eta(&self) -> f64 {
        self.nonlinearity.eta()
    }

    /// `omega - eta`; positive when the full drift is dissipative.
    pub fn dissipativity_margin(&self) -> f64 {
        self.omega() - self.eta()
    }
}

/// A spatial profile on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// One value per grid node.
    Nodal(Vec<f64>),
    /// `mean + amplitude cos(mode pi x)`
    Cosine { mean: f64, amplitude: f64, mode: u32 },
}

impl Profile {
    pub fn sample(&self, grid: &SpatialGrid) -> Result<Vec<f64>> {
        match self {
            Profile::Constant(v) => Ok(vec![*v; grid.n_nodes()]),
            Profile::Nodal(values) => {
                if values.len() != grid.n_nodes() {
                    return Err(Error::DimensionMismatch {
                        expected: grid.n_nodes(),
                        got: values.len(),
                    });
                }
                Ok(values.clone())
            }
            Profile::Cosine {
                mean,
                amplitude,
                mode,
            } => Ok(grid
                .nodes()
                .map(|x| mean + amplitude * (*mode as f64 * std::f64::consts::PI * x).cos())
                .collect()),
        }
    }
}

/// Direction of the jumps, before normalization to unit weighted norm.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpDirection {
    /// One profile per component.
    Profiles(Vec<Profile>),
    /// Uniformly random grid node of the given component.
    NodeSpread { component: usize },
    /// Explicit entries of the state vector.
    Entries(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum QSpec {
    /// `trace / dim` on every entry.
    Uniform { trace: f64 },
    Diagonal(Vec<f64>),
}

impl QSpec {
    pub fn build(&self, dim: usize) -> Result<QOperator> {
        match self {
            QSpec::Uniform { trace } => QOperator::uniform(dim, *trace),
            QSpec::Diagonal(d) => {
                if d.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: d.len(),
                    });
                }
                QOperator::new(d.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseParams {
    pub intensity: f64,
    pub mark_law: MarkLaw,
    pub direction: JumpDirection,
    pub q: QSpec,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            intensity: 5.0,
            mark_law: MarkLaw::TwoPoint { a: 1.0 },
            direction: JumpDirection::Profiles(vec![Profile::Constant(1.0), Profile::Constant(1.0)]),
            q: QSpec::Uniform { trace: 1.0 },
        }
    }
}

impl NoiseParams {
    fn embedding(&self, layout: &Arc<FieldLayout>, grid: Option<&SpatialGrid>) -> Result<Embedding> {
        match &self.direction {
            JumpDirection::Entries(values) => {
                Embedding::fixed_profile(Field::from_vec(layout, values.clone())?)
            }
            JumpDirection::Profiles(profiles) => {
                if profiles.len() != layout.components() {
                    return Err(Error::DimensionMismatch {
                        expected: layout.components(),
                        got: profiles.len(),
                    });
                }
                let values = match grid {
                    Some(grid) => profiles
                        .iter()
                        .map(|p| p.sample(grid))
                        .collect::<Result<Vec<_>>>()?
                        .concat(),
                    None => profiles
                        .iter()
                        .map(|p| match p {
                            Profile::Constant(v) => Ok(vec![*v; layout.nodes()]),
                            Profile::Nodal(v) => Ok(v.clone()),
                            Profile::Cosine { .. } => Err(Error::InvalidInput(
                                "cosine profiles need a spatial grid".into(),
                            )),
                        })
                        .collect::<Result<Vec<_>>>()?
                        .concat(),
                };
                Embedding::fixed_profile(Field::from_vec(layout, values)?)
            }
            JumpDirection::NodeSpread { component } => {
                if *component >= layout.components() {
                    return Err(Error::InvalidInput(format!(
                        "component {component} out of range"
                    )));
                }
                let n = layout.nodes();
                let directions = (0..n)
                    .map(|i| {
                        let mut f = Field::zeros(layout);
                        f.component_mut(*component)[i] = 1.0;
                        f
                    })
                    .collect();
                Embedding::mode_spread(directions, vec![1.0 / n as f64; n])
            }
        }
    }

    pub fn build(
        &self,
        layout: &Arc<FieldLayout>,
        grid: Option<&SpatialGrid>,
    ) -> Result<(JumpMeasureSpec, QOperator)> {
        let spec = JumpMeasureSpec::new(self.intensity, self.mark_law, self.embedding(layout, grid)?)?;
        let q = self.q.build(layout.dim())?;
        Ok((spec, q))
    }
}

/// FitzHugh–Nagumo on `[0, 1]` with Neumann boundary conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct FhnParams {
    pub n_nodes: usize,
    pub c: Profile,
    pub p: Profile,
    pub gamma: f64,
    pub alpha: f64,
    pub xi: f64,
    pub v0: Profile,
    pub w0: Profile,
    pub horizon: f64,
    pub dt: f64,
    pub noise: NoiseParams,
}

impl Default for FhnParams {
    fn default() -> Self {
        Self {
            n_nodes: 32,
            c: Profile::Constant(1.0),
            p: Profile::Constant(1.0),
            gamma: 1.0,
            alpha: 1.0,
            xi: 0.5,
            v0: Profile::Cosine {
                mean: 0.6,
                amplitude: 0.3,
                mode: 1,
            },
            w0: Profile::Constant(0.1),
            horizon: 0.5,
            dt: 1e-3,
            noise: NoiseParams::default(),
        }
    }
}

impl FhnParams {
    /// `(xi^2 - xi + 1) / 3 <= min p`: the cubic's one-sided constant does
    /// not exceed the reaction damping.
    pub fn admissible(&self) -> Result<bool> {
        let grid = SpatialGrid::new(self.n_nodes)?;
        let p_min = self.p.sample(&grid)?.into_iter().fold(f64::INFINITY, f64::min);
        Ok(self.xi * self.xi - self.xi + 1.0 <= 3.0 * p_min)
    }

    pub fn build(&self) -> Result<Problem> {
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(Error::InvalidInput(format!("xi must lie in (0, 1), got {}", self.xi)));
        }
        let grid = SpatialGrid::new(self.n_nodes)?;
        let layout = Arc::new(FieldLayout::on_grid(&grid, &[1.0, 1.0 / self.gamma])?);
        let a = assemble_fhn_from_nodes(
            &grid,
            &self.c.sample(&grid)?,
            &self.p.sample(&grid)?,
            self.gamma,
            self.alpha,
        )?;
        let bundle = build_propagators(a, self.dt, &layout)?;
        let nonlinearity = PolynomialMap::fhn_cubic(self.xi, 2)?;
        let u0 = Field::from_vec(&layout, [self.v0.sample(&grid)?, self.w0.sample(&grid)?].concat())?;
        let (noise, q) = self.noise.build(&layout, Some(&grid))?;
        Ok(Problem {
            bundle,
            nonlinearity,
            q,
            noise,
            u0,
            horizon: self.horizon,
        })
    }
}

/// One-node instance `du = (a u + g(u)) dt + eps sqrt(q) dL`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarParams {
    pub a: f64,
    /// Coefficients of `g`; the FitzHugh–Nagumo cubic with parameter `xi`
    /// when `None`.
    pub coefficients: Option<Vec<f64>>,
    pub xi: f64,
    pub u0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub noise: NoiseParams,
}

impl Default for ScalarParams {
    fn default() -> Self {
        Self {
            a: -1.0,
            coefficients: None,
            xi: 0.5,
            u0: 0.8,
            horizon: 1.0,
            dt: 1e-3,
            noise: NoiseParams {
                direction: JumpDirection::Entries(vec![1.0]),
                ..NoiseParams::default()
            },
        }
    }
}

impl ScalarParams {
    pub fn build(&self) -> Result<Problem> {
        let layout = Arc::new(FieldLayout::scalar());
        let bundle = build_propagators(nalgebra::DMatrix::from_element(1, 1, self.a), self.dt, &layout)?;
        let nonlinearity = match &self.coefficients {
            Some(c) => PolynomialMap::new(vec![Some(Polynomial::new(c.clone())?)])?,
            None => PolynomialMap::fhn_cubic(self.xi, 1)?,
        };
        let u0 = Field::from_vec(&layout, vec![self.u0])?;
        let (noise, q) = self.noise.build(&layout, None)?;
        Ok(Problem {
            bundle,
            nonlinearity,
            q,
            noise,
            u0,
            horizon: self.horizon,
        })
    }
}

/// Arbitrary dense generator with per-component polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomParams {
    /// Row-major generator; its size must be `components * nodes`.
    pub matrix: Vec<Vec<f64>>,
    pub component_weights: Vec<f64>,
    /// Quadrature weight per node; unit weights when `None`.
    pub node_weights: Option<Vec<f64>>,
    /// One coefficient list per component (empty list: zero map).
    pub coefficients: Vec<Vec<f64>>,
    pub u0: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub noise: NoiseParams,
}

impl CustomParams {
    pub fn build(&self) -> Result<Problem> {
        let dim = self.matrix.len();
        let components = self.component_weights.len();
        if components == 0 || !dim.is_multiple_of(components) {
            return Err(Error::InvalidInput(format!(
                "generator size {dim} is not a multiple of {components} components"
            )));
        }
        let nodes = dim / components;
        let node_weights = self.node_weights.clone().unwrap_or_else(|| vec![1.0; nodes]);
        let layout = Arc::new(FieldLayout::new(&node_weights, &self.component_weights)?);
        if layout.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                got: dim,
            });
        }
        if let Some(row) = self.matrix.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
        let a = nalgebra::DMatrix::from_row_iterator(dim, dim, self.matrix.iter().flatten().copied());
        let bundle = build_propagators(a, self.dt, &layout)?;
        if self.coefficients.len() != components {
            return Err(Error::DimensionMismatch {
                expected: components,
                got: self.coefficients.len(),
            });
        }
        let per = self
            .coefficients
            .iter()
            .map(|c| Polynomial::new(c.clone()).map(Some))
            .collect::<Result<Vec<_>>>()?;
        let nonlinearity = PolynomialMap::new(per)?;
        let u0 = Field::from_vec(&layout, self.u0.clone())?;
        let (noise, q) = self.noise.build(&layout, None)?;
        Ok(Problem {
            bundle,
            nonlinearity,
            q,
            noise,
            u0,
            horizon: self.horizon,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fhn_defaults_are_admissible() {
        let params = FhnParams::default();
        assert!(params.admissible().unwrap());
        let p = params.build().unwrap();
        assert_eq!(p.layout().dim(), 64);
        assert!((p.eta() - 0.25).abs() < 1e-15);
        assert!((p.omega() - 1.0).abs() < 1e-8);
        assert!(p.dissipativity_margin() > 0.0);
        assert!((p.q.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fhn_rejects_xi_outside_unit_interval() {
        let params = FhnParams {
            xi: 1.5,
            ..FhnParams::default()
        };
        assert!(params.build().is_err());
    }

    #[test]
    fn node_spread_noise() {
        let params = FhnParams {
            n_nodes: 8,
            noise: NoiseParams {
                direction: JumpDirection::NodeSpread { component: 0 },
                ..NoiseParams::default()
            },
            ..FhnParams::default()
        };
        let p = params.build().unwrap();
        match p.noise.embedding() {
            Embedding::ModeSpread { directions, .. } => assert_eq!(directions.len(), 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scalar_preset() {
        let p = ScalarParams::default().build().unwrap();
        assert_eq!(p.layout().dim(), 1);
        assert!((p.omega() - 1.0).abs() < 1e-14);
        assert_eq!(p.q.trace(), 1.0);
    }

    #[test]
    fn custom_problem_checks_sizes() {
        let params = CustomParams {
            matrix: vec![vec![-1.0, 0.5], vec![0.0, -2.0]],
            component_weights: vec![1.0, 1.0],
            node_weights: None,
            coefficients: vec![vec![0.0, 0.0, 0.0, -1.0], vec![]],
            u0: vec![0.5, 0.5],
            horizon: 1.0,
            dt: 0.01,
            noise: NoiseParams {
                direction: JumpDirection::Entries(vec![1.0, 0.0]),
                ..NoiseParams::default()
            },
        };
        let p = params.build().unwrap();
        assert_eq!(p.nonlinearity.degree(), 3);
        let bad = CustomParams {
            u0: vec![0.5],
            ..params
        };
        assert!(bad.build().is_err());
    }
}
