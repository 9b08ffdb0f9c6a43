//! Norms of the higher Dyson terms and the per-order ratios `||T_{j+1}|| / ||T_j||`.

use anyhow::Result;
use dysonlab::dyson::{QuadratureScheme, TjOp};
use dysonlab::operator::{operator_norm, NormConfig};

use crate::record::{Check, RunRecord, Table};
use crate::spec::ExperimentSpec;
use crate::stats::quartiles;
use crate::{require_finite, row, run_trials, trial_potential};

pub const DECREASING_SHARE: f64 = 0.8;
/// Ratios `r_1, ..., r_4` enter the monotonicity check.
const RATIOS_CHECKED: usize = 4;

pub fn run(spec: &ExperimentSpec, record: &mut RunRecord) -> Result<()> {
    let tol = &spec.tolerances;
    let scheme = QuadratureScheme::new(tol.quad_h, tol.quad_nodes)?.without_error_control();
    let seed = NormConfig::default().seed;
    let rows = run_trials(spec, record, |trial| {
        let pot = trial_potential(spec, trial)?;
        let sup = require_finite("sup norm", pot.sup_norm())?;
        let mut out = Vec::new();
        for &t in &spec.tgrid {
            for j in 1..=spec.order {
                let op = TjOp::new(&pot, j, t, scheme.clone());
                let n = operator_norm(&op, tol.norm_tol, tol.norm_iters, seed)?;
                out.push((t, j, require_finite("norm", n.value)?, sup));
            }
        }
        Ok(out)
    });
    let mut table = Table::new("tj_orders", &["trial", "t", "j", "norm_Tj", "norm_V_inf"]);
    for (trial, per) in &rows {
        for &(t, j, n, sup) in per {
            table.push(row![*trial, t, j, n, sup]);
        }
    }
    record.tables.push(table);
    if rows.is_empty() || spec.order <= RATIOS_CHECKED {
        return Ok(());
    }
    for (ti, &t) in spec.tgrid.iter().enumerate() {
        let norms_of = |per: &[(f64, usize, f64, f64)]| -> Vec<f64> {
            per[ti * spec.order..(ti + 1) * spec.order].iter().map(|r| r.2).collect()
        };
        let mut decreasing = 0usize;
        let mut per_j = vec![Vec::new(); spec.order - 1];
        for (_, per) in &rows {
            let norms = norms_of(per);
            let ratios: Vec<f64> = norms.windows(2).map(|w| w[1] / w[0]).collect();
            for (j, r) in ratios.iter().enumerate() {
                per_j[j].push(*r);
            }
            if ratios[..RATIOS_CHECKED].windows(2).all(|w| w[1] < w[0]) {
                decreasing += 1;
            }
        }
        let ratio_summary: Vec<_> = per_j
            .iter()
            .enumerate()
            .map(|(j, r)| serde_json::json!({ "j": j + 1, "ratio": quartiles(r) }))
            .collect();
        record.summarize(&format!("ratios_t{t}"), ratio_summary);
        let share = decreasing as f64 / rows.len() as f64;
        record
            .checks
            .push(Check::at_least(&format!("decreasing_ratio_share_t{t}"), share, DECREASING_SHARE));
    }
    Ok(())
}
