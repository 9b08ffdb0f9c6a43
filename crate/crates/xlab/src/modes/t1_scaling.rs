//! Growth of `||T_1(t)||` in `t` across random potentials.

use anyhow::Result;
use dysonlab::dyson::{t1_norm, QuadratureScheme};
use dysonlab::operator::NormConfig;

use crate::record::{Check, RunRecord, Table};
use crate::spec::ExperimentSpec;
use crate::stats::{loglog, quartiles};
use crate::{require_finite, row, run_trials, trial_potential};

pub const SLOPE_WINDOW: (f64, f64) = (0.40, 0.65);
pub const STDERR_CAP: f64 = 0.05;

pub fn run(spec: &ExperimentSpec, record: &mut RunRecord) -> Result<()> {
    let tol = &spec.tolerances;
    let quad = QuadratureScheme::new(tol.quad_h, tol.quad_nodes)?.without_error_control();
    let cfg = NormConfig::lanczos(tol.norm_tol, tol.norm_iters);
    let rows = run_trials(spec, record, |trial| {
        let pot = trial_potential(spec, trial)?;
        let sup = require_finite("sup norm", pot.sup_norm())?;
        spec.tgrid
            .iter()
            .map(|&t| {
                let n = t1_norm(&pot, t, &quad, &cfg)?;
                Ok((t, require_finite("norm", n.value)?, sup))
            })
            .collect::<Result<Vec<_>>>()
    });
    let mut table = Table::new("t1_scaling", &["trial", "t", "norm_T1", "norm_V_inf"]);
    for (trial, per_t) in &rows {
        for &(t, n, sup) in per_t {
            table.push(row![*trial, t, n, sup]);
        }
    }
    record.tables.push(table);
    if rows.is_empty() {
        return Ok(());
    }
    let mut medians = Vec::new();
    let mut per_t = Vec::new();
    for (i, &t) in spec.tgrid.iter().enumerate() {
        let values: Vec<f64> = rows.iter().map(|(_, r)| r[i].1).collect();
        let q = quartiles(&values);
        medians.push(q.median);
        per_t.push(serde_json::json!({ "t": t, "quartiles": q }));
    }
    record.summarize("per_t", per_t);
    let fit = loglog(&spec.tgrid, &medians);
    record.summarize("fit", fit);
    if let Some(fit) = fit {
        let (lo, hi) = SLOPE_WINDOW;
        record.checks.push(Check::within("slope", fit.slope, lo, hi));
        if let Some(se) = fit.slope_stderr {
            record.checks.push(Check::below("slope_stderr", se, STDERR_CAP));
        }
    }
    Ok(())
}
