//! Remainders, Monte Carlo moments and order-in-epsilon regression.

pub mod oracle;
pub mod remainder;
pub mod stats;
pub mod study;

pub use oracle::{fd_oracle, relative_sup_error};
pub use remainder::{remainder, sup_remainder};
pub use stats::{fit_order, median, pairwise_sum, quantile_sorted, sup_moment, FitPoint, MomentEstimate, OrderFitResult};
pub use study::{
    monotone_violations, run_order_study, sample_sup_remainders, summarize, EpsilonSummary,
    OrderStudy, OrderStudyConfig, SUP_QUANTILES,
};
