//! Spatial discretization, the linear generator and its step propagators.

pub mod expm;
pub mod field;
pub mod grid;
pub mod operator;

pub use expm::expm;
pub use field::{Field, FieldLayout};
pub use grid::SpatialGrid;
pub use operator::{
    apply_semigroup, assemble_fhn_from_nodes, assemble_fhn_operator, build_propagators,
    dissipativity_rate, neumann_diffusion, DissipativityRate, OperatorBundle,
};
