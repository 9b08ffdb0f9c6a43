//! Deviation of the interacting dynamics from free propagation at `t = 1 / (4 lambda^2)`.

use std::f64::consts::SQRT_2;

use anyhow::Result;
use dysonlab::evolve::chebyshev_propagate;
use dysonlab::lattice::free_propagate;

use crate::record::{Check, RunRecord, Table};
use crate::spec::ExperimentSpec;
use crate::stats::{median, quartiles};
use crate::{require_finite, row, run_trials, trial_field, trial_potential};

pub const RATIO_WINDOW: (f64, f64) = (SQRT_2 / 3.0, 3.0 * SQRT_2);

pub fn time_for(lambda: f64) -> f64 {
    0.25 / (lambda * lambda)
}

pub fn run(spec: &ExperimentSpec, record: &mut RunRecord) -> Result<()> {
    let fields = spec.tolerances.fields.max(1);
    let rows = run_trials(spec, record, |trial| {
        let pot = trial_potential(spec, trial)?;
        let mut out = Vec::new();
        for k in 0..fields {
            let psi = trial_field(spec, trial, k)?;
            for &lambda in &spec.lambda {
                let t = time_for(lambda);
                let full = chebyshev_propagate(&psi, &pot, lambda, t)?;
                let free = free_propagate(&psi, t);
                out.push((lambda, t, k, require_finite("deviation", full.distance(&free))?));
            }
        }
        Ok(out)
    });
    let mut table = Table::new("free_comparison", &["trial", "lambda", "t", "field", "deviation"]);
    for (trial, per) in &rows {
        for &(lambda, t, k, dev) in per {
            table.push(row![*trial, lambda, t, k, dev]);
        }
    }
    record.tables.push(table);
    if rows.is_empty() {
        return Ok(());
    }
    // Each trial contributes the mean deviation over its random fields.
    let mut medians = Vec::new();
    for &lambda in &spec.lambda {
        let per_trial: Vec<f64> = rows
            .iter()
            .map(|(_, per)| {
                let d: Vec<f64> = per.iter().filter(|r| r.0 == lambda).map(|r| r.3).collect();
                d.iter().sum::<f64>() / d.len() as f64
            })
            .collect();
        let q = quartiles(&per_trial);
        record.summarize(
            &format!("lambda_{lambda}"),
            serde_json::json!({ "t": time_for(lambda), "quartiles": q, "median": median(&per_trial) }),
        );
        medians.push((lambda, q.median));
    }
    medians.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (lo, hi) = RATIO_WINDOW;
    for w in medians.windows(2) {
        let ratio = w[1].1 / w[0].1;
        record
            .checks
            .push(Check::within(&format!("median_ratio_{}_over_{}", w[1].0, w[0].0), ratio, lo, hi));
    }
    Ok(())
}
