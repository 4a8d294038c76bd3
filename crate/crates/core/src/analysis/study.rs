use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::{solve_u1_with_kicks, solve_uk};
use crate::levy::{bin_increments, derive_seed, sample_path};
use crate::problem::Problem;
use crate::solvers::{propagated_kicks, solve_deterministic, solve_sde_with_kicks, Trajectory};

use super::remainder::sup_remainder_parts;
use super::stats::{fit_order, median, quantile_sorted, sup_moment, FitPoint, MomentEstimate, OrderFitResult};

/// Quantile levels reported for the per-path sup norms.
pub const SUP_QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderStudyConfig {
    pub epsilons: Vec<f64>,
    pub n: usize,
    pub p: u32,
    pub paths: usize,
    pub master_seed: u64,
}

impl Default for OrderStudyConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.2, 0.1, 0.05, 0.025],
            n: 1,
            p: 2,
            paths: 100,
            master_seed: 20240601,
        }
    }
}

impl OrderStudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "epsilons: need at least 3 values, got {}",
                self.epsilons.len()
            )));
        }
        if self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::InvalidInput("epsilons: values must be positive".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidInput("epsilons: must be strictly decreasing".into()));
        }
        if self.epsilons[0] > 1.0 {
            return Err(Error::InvalidInput(format!(
                "epsilons: largest value {} exceeds 1",
                self.epsilons[0]
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("n: expansion order must be at least 1".into()));
        }
        if self.p < 2 || !self.p.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "p: moment exponent must be an even integer >= 2, got {}",
                self.p
            )));
        }
        if self.paths < 2 {
            return Err(Error::InvalidInput(format!(
                "paths: need at least 2 paths, got {}",
                self.paths
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    pub moment: MomentEstimate,
    pub median_sup: f64,
    /// At the levels of [`SUP_QUANTILES`].
    pub sup_quantiles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderStudy {
    pub config: OrderStudyConfig,
    pub per_epsilon: Vec<EpsilonSummary>,
    /// Fit of the median per-path sup norm; targets `n + 1`.
    pub sup_fit: OrderFitResult,
    pub sup_target: f64,
    /// Standard-error weighted fit of `E sup |R_n|^p`; targets `p (n + 1)`.
    pub moment_fit: OrderFitResult,
    pub moment_target: f64,
    /// Share of (path, consecutive epsilon) pairs where the sup norm grows
    /// as epsilon shrinks.
    pub monotone_violation_fraction: f64,
    /// `sups[j][i]`: sup norm of the remainder for `epsilons[j]`, path `i`.
    #[serde(skip)]
    pub sups: Vec<Vec<f64>>,
}

/// Per-path sup norms of `R_n` for every noise level.
///
/// The deterministic trajectory is computed once. Each path draws its own
/// stream from the path index alone, so all noise levels share the path,
/// and results do not depend on thread scheduling.
pub fn sample_sup_remainders(problem: &Problem, cfg: &OrderStudyConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let bundle = &problem.bundle;
    let f = &problem.nonlinearity;
    let phi = solve_deterministic(bundle, f, &problem.u0, problem.horizon)?;
    let per_path: Vec<Vec<f64>> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| path_sups(problem, cfg, &phi, i))
        .collect::<Result<_>>()?;
    Ok((0..cfg.epsilons.len())
        .map(|j| per_path.iter().map(|s| s[j]).collect())
        .collect())
}

fn path_sups(problem: &Problem, cfg: &OrderStudyConfig, phi: &Trajectory, i: usize) -> Result<Vec<f64>> {
    let bundle = &problem.bundle;
    let f = &problem.nonlinearity;
    let mut rng = derive_seed(cfg.master_seed, i as u64, 0).rng();
    let path = sample_path(&problem.noise, problem.horizon, &mut rng)?;
    let increments = bin_increments(&path, bundle.dt())?;
    let kicks = propagated_kicks(bundle, &problem.q, &increments)?;
    let mut terms = vec![solve_u1_with_kicks(bundle, f, phi, &kicks)?];
    for k in 2..=cfg.n {
        let uk = solve_uk(bundle, f, k, phi, &terms)?;
        terms.push(uk);
    }
    let refs: Vec<&Trajectory> = terms.iter().collect();
    cfg.epsilons
        .iter()
        .map(|&eps| {
            let u = solve_sde_with_kicks(bundle, f, eps, &problem.u0, problem.horizon, &kicks)?;
            Ok(sup_remainder_parts(&u, phi, &refs, eps))
        })
        .collect()
}

pub fn run_order_study(problem: &Problem, cfg: &OrderStudyConfig) -> Result<OrderStudy> {
    let sups = sample_sup_remainders(problem, cfg)?;
    summarize(cfg, sups)
}

/// Moments, quantiles and both order fits from precomputed sup norms.
pub fn summarize(cfg: &OrderStudyConfig, sups: Vec<Vec<f64>>) -> Result<OrderStudy> {
    let mut per_epsilon = Vec::with_capacity(cfg.epsilons.len());
    for (eps, s) in cfg.epsilons.iter().zip(&sups) {
        let mut sorted = s.clone();
        sorted.sort_by(f64::total_cmp);
        per_epsilon.push(EpsilonSummary {
            epsilon: *eps,
            moment: sup_moment(s, cfg.p)?,
            median_sup: median(s),
            sup_quantiles: SUP_QUANTILES.iter().map(|&q| quantile_sorted(&sorted, q)).collect(),
        });
    }
    let sup_points: Vec<FitPoint> = per_epsilon
        .iter()
        .map(|e| FitPoint {
            epsilon: e.epsilon,
            value: e.median_sup,
            std_error: None,
        })
        .collect();
    let moment_points: Vec<FitPoint> = per_epsilon
        .iter()
        .map(|e| FitPoint {
            epsilon: e.epsilon,
            value: e.moment.estimate,
            std_error: Some(e.moment.std_error),
        })
        .collect();
    let sup_fit = fit_order(&sup_points, false)?;
    let moment_fit = fit_order(&moment_points, true)?;
    Ok(OrderStudy {
        config: cfg.clone(),
        per_epsilon,
        sup_fit,
        sup_target: (cfg.n + 1) as f64,
        moment_fit,
        moment_target: (cfg.p as usize * (cfg.n + 1)) as f64,
        monotone_violation_fraction: monotone_violations(&sups),
        sups,
    })
}

/// Fraction of (path, j) with `sups[j + 1][path] > sups[j][path]`.
pub fn monotone_violations(sups: &[Vec<f64>]) -> f64 {
    if sups.len() < 2 || sups[0].is_empty() {
        return 0.0;
    }
    let mut bad = 0usize;
    let mut total = 0usize;
    for w in sups.windows(2) {
        for (hi, lo) in w[0].iter().zip(&w[1]) {
            total += 1;
            if lo > hi {
                bad += 1;
            }
        }
    }
    bad as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{FhnParams, ScalarParams};

    #[test]
    fn config_validation() {
        let ok = OrderStudyConfig::default();
        assert!(ok.validate().is_ok());
        let cases = [
            OrderStudyConfig { epsilons: vec![0.2, 0.1], ..ok.clone() },
            OrderStudyConfig { epsilons: vec![0.1, 0.2, 0.05], ..ok.clone() },
            OrderStudyConfig { epsilons: vec![2.0, 1.0, 0.5], ..ok.clone() },
            OrderStudyConfig { p: 3, ..ok.clone() },
            OrderStudyConfig { n: 0, ..ok.clone() },
            OrderStudyConfig { paths: 1, ..ok.clone() },
        ];
        for c in cases {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn monotone_count() {
        let sups = vec![vec![4.0, 4.0], vec![1.0, 5.0], vec![0.5, 1.0]];
        assert_eq!(monotone_violations(&sups), 0.25);
    }

    #[test]
    fn scalar_study_recovers_orders() {
        let problem = ScalarParams::default().build().unwrap();
        for n in [1, 2] {
            let cfg = OrderStudyConfig {
                n,
                paths: 40,
                ..OrderStudyConfig::default()
            };
            let study = run_order_study(&problem, &cfg).unwrap();
            assert!(study.sup_fit.slope > n as f64 + 0.7, "n={n}: {:?}", study.sup_fit);
            assert!(study.monotone_violation_fraction <= 0.05);
        }
    }

    #[test]
    fn study_is_independent_of_thread_count() {
        let problem = FhnParams {
            n_nodes: 8,
            horizon: 0.1,
            ..FhnParams::default()
        }
        .build()
        .unwrap();
        let cfg = OrderStudyConfig {
            paths: 12,
            ..OrderStudyConfig::default()
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| sample_sup_remainders(&problem, &cfg)).unwrap();
        let b = four.install(|| sample_sup_remainders(&problem, &cfg)).unwrap();
        assert_eq!(a, b);
    }
}
