//! CSV and JSON emission.

use std::fs::{self, File};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use smallnoise_core::analysis::{OrderStudy, SUP_QUANTILES};
use smallnoise_core::levy::LevyPath;
use smallnoise_core::math::FieldLayout;
use smallnoise_core::solvers::Trajectory;

/// Step indices `0, stride, 2 stride, ...` plus the last step.
pub fn thinned_steps(steps: usize, stride: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..=steps).step_by(stride.max(1)).collect();
    if out.last() != Some(&steps) {
        out.push(steps);
    }
    out
}

/// `u{c}_{i}` for component `c`, node `i`.
pub fn entry_names(layout: &FieldLayout) -> Vec<String> {
    (0..layout.components())
        .flat_map(|c| (0..layout.nodes()).map(move |i| format!("u{c}_{i}")))
        .collect()
}

/// Shortest representation that round-trips, in exponent form.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))
}

/// Writes several trajectories in long form: `label, step, time, entries...`.
pub fn write_trajectories(path: &Path, rows: &[(String, &Trajectory)], stride: usize) -> Result<()> {
    let mut w = writer(path)?;
    let Some((_, first)) = rows.first() else {
        w.flush()?;
        return Ok(());
    };
    let mut header = vec!["label".to_string(), "step".to_string(), "time".to_string()];
    header.extend(entry_names(first.state(0).layout()));
    w.write_record(&header)?;
    for (label, traj) in rows {
        for m in thinned_steps(traj.steps(), stride) {
            let mut record = vec![label.clone(), m.to_string(), num(traj.time(m))];
            record.extend(traj.state(m).as_slice().iter().map(|v| num(*v)));
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `label, jump_time, mark_norm`
pub fn write_jumps(path: &Path, paths: &[(String, &LevyPath)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["label", "jump_time", "mark_norm"])?;
    for (label, p) in paths {
        for (t, mark) in p.jump_times().iter().zip(p.marks()) {
            w.write_record([label.clone(), num(*t), num(mark.norm())])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per noise level with the moment estimate and sup-norm quantiles.
pub fn write_study(path: &Path, study: &OrderStudy) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<String> = ["epsilon", "moment_estimate", "std_error", "median_sup"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(SUP_QUANTILES.iter().map(|q| format!("sup_q{:02}", (q * 100.0).round() as u32)));
    w.write_record(&header)?;
    for e in &study.per_epsilon {
        let mut record = vec![
            num(e.epsilon),
            num(e.moment.estimate),
            num(e.moment.std_error),
            num(e.median_sup),
        ];
        record.extend(e.sup_quantiles.iter().map(|v| num(*v)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// `path, epsilon, sup_remainder`
pub fn write_sups(path: &Path, study: &OrderStudy) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["path", "epsilon", "sup_remainder"])?;
    for (eps, sups) in study.config.epsilons.iter().zip(&study.sups) {
        for (i, s) in sups.iter().enumerate() {
            w.write_record([i.to_string(), num(*eps), num(*s)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinning_keeps_the_last_step() {
        assert_eq!(thinned_steps(10, 3), vec![0, 3, 6, 9, 10]);
        assert_eq!(thinned_steps(9, 3), vec![0, 3, 6, 9]);
        assert_eq!(thinned_steps(4, 1), vec![0, 1, 2, 3, 4]);
        assert_eq!(thinned_steps(4, 100), vec![0, 4]);
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn names_follow_the_layout() {
        let layout = FieldLayout::new(&[1.0, 1.0], &[1.0, 0.5]).unwrap();
        assert_eq!(entry_names(&layout), ["u0_0", "u0_1", "u1_0", "u1_1"]);
    }
}
