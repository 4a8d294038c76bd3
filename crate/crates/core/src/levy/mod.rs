//! Mean-zero compound Poisson noise in the discretized state space.

pub mod measure;
pub mod path;
pub mod q;
pub mod seed;

pub use measure::{nu_mean, nu_moment, Embedding, JumpMeasureSpec, MarkLaw};
pub use path::{bin_increments, sample_path, step_count, LevyPath, StepIncrements};
pub use q::{apply_sqrt_q, QOperator};
pub use seed::{derive_seed, StreamSeed};
