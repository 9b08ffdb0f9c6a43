//! Gap between the exact propagator and truncated Dyson sums.

use anyhow::Result;
use dysonlab::dyson::{dyson_partial_sums, QuadratureScheme};
use dysonlab::evolve::chebyshev_propagate;

use crate::record::{Check, RunRecord, Table};
use crate::spec::ExperimentSpec;
use crate::stats::quartiles;
use crate::{require_finite, row, run_trials, trial_field, trial_potential};

pub const DROP_FROM_1_TO_4: f64 = 10.0;

pub fn run(spec: &ExperimentSpec, record: &mut RunRecord) -> Result<()> {
    let tol = &spec.tolerances;
    let scheme = QuadratureScheme::new(tol.quad_h, tol.quad_nodes)?.without_error_control();
    let lambda = spec.lambda[0];
    let t = spec.tgrid[0];
    let rows = run_trials(spec, record, |trial| {
        let pot = trial_potential(spec, trial)?;
        let psi = trial_field(spec, trial, 0)?;
        let exact = chebyshev_propagate(&psi, &pot, lambda, t)?;
        let sums = dyson_partial_sums(&psi, &pot, lambda, spec.trunc, t, &scheme)?;
        sums.iter()
            .map(|s| require_finite("gap", exact.distance(s)))
            .collect::<Result<Vec<_>>>()
    });
    let mut table = Table::new("dyson_truncation", &["trial", "M", "gap"]);
    for (trial, gaps) in &rows {
        for (m, g) in gaps.iter().enumerate() {
            table.push(row![*trial, m, *g]);
        }
    }
    record.tables.push(table);
    if rows.is_empty() {
        return Ok(());
    }
    let per_m: Vec<_> = (0..=spec.trunc)
        .map(|m| quartiles(&rows.iter().map(|(_, g)| g[m]).collect::<Vec<_>>()))
        .collect();
    let medians: Vec<f64> = per_m.iter().map(|q| q.median).collect();
    record.summarize("per_M", &per_m);
    let monotone = medians.windows(2).all(|w| w[1] < w[0]);
    record.checks.push(Check::new(
        "median_gap_monotone",
        if monotone { 1.0 } else { 0.0 },
        "strictly decreasing in M",
        monotone,
    ));
    if spec.trunc >= 4 {
        record
            .checks
            .push(Check::at_least("drop_M1_to_M4", medians[1] / medians[4], DROP_FROM_1_TO_4));
    }
    Ok(())
}
