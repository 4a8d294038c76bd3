use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),
    #[error(
        "state blew up at step {step} (|u|_w = {norm:e}); omega = {omega}, eta = {eta}, omega - eta = {gap}"
    )]
    BlowUp {
        step: usize,
        norm: f64,
        omega: f64,
        eta: f64,
        gap: f64,
    },
    #[error("time grid mismatch: {0}")]
    GridMismatch(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
