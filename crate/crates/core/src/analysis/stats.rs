use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};

/// Pairwise (cascade) summation; the result depends only on the order of
/// the input, not on how it was produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Mean of `sup^p` over paths, with the standard error of the mean.
pub fn sup_moment(sups: &[f64], p: u32) -> Result<MomentEstimate> {
    let m = sups.len();
    if m < 2 {
        return Err(Error::InvalidInput(format!(
            "moment estimate needs at least 2 paths, got {m}"
        )));
    }
    let xs: Vec<f64> = sups.iter().map(|s| s.powi(p as i32)).collect();
    let mean = pairwise_sum(&xs) / m as f64;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (m - 1) as f64;
    Ok(MomentEstimate {
        estimate: mean,
        std_error: (var / m as f64).sqrt(),
    })
}

/// Linear-interpolation quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub epsilon: f64,
    pub value: f64,
    /// Standard error of `value`; used as a weight when the fit is weighted.
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderFitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub weighted: bool,
    pub used_epsilons: Vec<f64>,
    pub dropped_epsilons: Vec<f64>,
    /// Largest change of the slope when one point is left out (needs at
    /// least 4 points; 0 otherwise).
    pub leave_one_out_shift: f64,
}

/// Least squares of `ln(value)` against `ln(epsilon)`. Weighted fits use
/// `1 / var(ln value) = (value / se)^2`. Non-positive values are dropped.
pub fn fit_order(points: &[FitPoint], weighted: bool) -> Result<OrderFitResult> {
    let mut used = Vec::new();
    let mut dropped = Vec::new();
    for p in points {
        if p.value > 0.0 && p.value.is_finite() && p.epsilon > 0.0 {
            used.push(*p);
        } else {
            warn!("dropping epsilon = {} from the order fit (value {})", p.epsilon, p.value);
            dropped.push(p.epsilon);
        }
    }
    if used.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "order fit needs at least 3 positive points, got {}",
            used.len()
        )));
    }
    let weights = point_weights(&used, weighted);
    let (slope, intercept, r_squared) = weighted_line(&used, &weights);
    let leave_one_out_shift = if used.len() >= 4 {
        (0..used.len())
            .map(|skip| {
                let pts: Vec<FitPoint> = used
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, p)| *p)
                    .collect();
                let w = point_weights(&pts, weighted);
                (weighted_line(&pts, &w).0 - slope).abs()
            })
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(OrderFitResult {
        slope,
        intercept,
        r_squared,
        weighted,
        used_epsilons: used.iter().map(|p| p.epsilon).collect(),
        dropped_epsilons: dropped,
        leave_one_out_shift,
    })
}

fn point_weights(points: &[FitPoint], weighted: bool) -> Vec<f64> {
    let w: Vec<f64> = points
        .iter()
        .map(|p| match p.std_error {
            Some(se) if weighted && se > 0.0 => (p.value / se).powi(2),
            _ => 1.0,
        })
        .collect();
    // A zero standard error means no spread information; fall back to OLS.
    if weighted && points.iter().any(|p| !matches!(p.std_error, Some(se) if se > 0.0)) {
        vec![1.0; points.len()]
    } else {
        w
    }
}

fn weighted_line(points: &[FitPoint], weights: &[f64]) -> (f64, f64, f64) {
    let xs: Vec<f64> = points.iter().map(|p| p.epsilon.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.value.ln()).collect();
    let sw: f64 = weights.iter().sum();
    let mx = xs.iter().zip(weights).map(|(x, w)| w * x).sum::<f64>() / sw;
    let my = ys.iter().zip(weights).map(|(y, w)| w * y).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(weights).map(|(x, w)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .zip(weights)
        .map(|((x, y), w)| w * (x - mx) * (y - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().zip(weights).map(|(y, w)| w * (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .zip(weights)
        .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2.clamp(0.0, 1.0))
}
