use crate::error::{Error, Result};

/// Uniform grid on `[0, 1]` with both endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    n_nodes: usize,
}

impl SpatialGrid {
    pub fn new(n_nodes: usize) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least 3 nodes, got {n_nodes}"
            )));
        }
        Ok(Self { n_nodes })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.n_nodes - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n_nodes {
            1.0
        } else {
            i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes).map(|i| self.node(i))
    }

    /// Trapezoidal quadrature weights. The conservative Neumann stencil is
    /// self-adjoint with respect to exactly these weights.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_nodes)
            .map(|i| {
                if i == 0 || i + 1 == self.n_nodes {
                    0.5 * h
                } else {
                    h
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_tiny_grids() {
        assert!(SpatialGrid::new(2).is_err());
        assert!(SpatialGrid::new(3).is_ok());
    }

    #[test]
    fn endpoints_and_spacing() {
        let g = SpatialGrid::new(5).unwrap();
        assert_eq!(g.spacing(), 0.25);
        let nodes: Vec<f64> = g.nodes().collect();
        assert_eq!(nodes, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let total: f64 = g.quadrature_weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
    }
}
