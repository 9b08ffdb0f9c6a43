//! `||rho_{delta,E}(H) - rho_{delta,E}(H0)||` across couplings and window widths.

use anyhow::Result;
use dysonlab::operator::NormConfig;
use dysonlab::spectral::{projection_distance, ProjectionConfig};

use crate::record::{Check, RunRecord, Table};
use crate::spec::ExperimentSpec;
use crate::stats::{loglog, median, pooled_slope};
use crate::{require_finite, row, run_trials, trial_potential};

pub const EXPONENT_WINDOW: (f64, f64) = (-0.7, -0.3);

pub fn run(spec: &ExperimentSpec, record: &mut RunRecord) -> Result<()> {
    let tol = &spec.tolerances;
    let cfg = ProjectionConfig {
        eps: tol.eps_trunc,
        norm: NormConfig::lanczos(tol.norm_tol, tol.norm_iters),
    };
    let rows = run_trials(spec, record, |trial| {
        let pot = trial_potential(spec, trial)?;
        let mut out = Vec::new();
        for &lambda in &spec.lambda {
            for &delta in &spec.delta_grid {
                let d = projection_distance(&pot, lambda, spec.energy, delta, &cfg)?;
                out.push((lambda, delta, require_finite("distance", d)?));
            }
        }
        Ok(out)
    });
    let mut table = Table::new("projection_compare", &["trial", "lambda", "delta", "distance"]);
    for (trial, per) in &rows {
        for &(lambda, delta, d) in per {
            table.push(row![*trial, lambda, delta, d]);
        }
    }
    record.tables.push(table);
    if rows.is_empty() {
        return Ok(());
    }
    let mut groups = Vec::new();
    let mut per_lambda = Vec::new();
    for &lambda in &spec.lambda {
        let medians: Vec<f64> = spec
            .delta_grid
            .iter()
            .map(|&delta| {
                let v: Vec<f64> = rows
                    .iter()
                    .flat_map(|(_, per)| per.iter().filter(|r| r.0 == lambda && r.1 == delta).map(|r| r.2))
                    .collect();
                median(&v)
            })
            .collect();
        per_lambda.push(serde_json::json!({
            "lambda": lambda,
            "medians": medians,
            "fit": loglog(&spec.delta_grid, &medians),
        }));
        groups.push((
            spec.delta_grid.iter().map(|d| d.ln()).collect(),
            medians.iter().map(|m| m.ln()).collect(),
        ));
    }
    record.summarize("per_lambda", per_lambda);
    let pooled = pooled_slope(&groups);
    record.summarize("pooled_fit", pooled);
    if let Some(fit) = pooled {
        let (lo, hi) = EXPONENT_WINDOW;
        record.checks.push(Check::within("delta_exponent", fit.slope, lo, hi));
    }
    Ok(())
}
