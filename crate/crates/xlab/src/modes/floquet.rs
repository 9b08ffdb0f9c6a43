//! Quasienergy states of the periodically driven lattice and their Fourier localisation.

use anyhow::Result;
use dysonlab::evolve::{EvolutionConfig, MonodromyOp};
use dysonlab::rng::mix;
use dysonlab::spectral::{build_circle_filter, extract_floquet_state, frequency_magnitudes, levelset_fraction, levelset_mass};

use crate::record::{Check, RunRecord, Table};
use crate::spec::ExperimentSpec;
use crate::{grid, row, trial_potential};

pub const MASS_FLOOR: f64 = 0.7;
pub const BASELINE_CAP: f64 = 0.35;
/// Residual `||U psi - e^{i phase} psi||` at which the filtered iteration stops early.
pub const RESIDUAL_TARGET: f64 = 1e-2;
const START_SALT: u64 = 0x666c_6f71;

/// Level sets sit where `e^{-i tau omega} = e^{i theta}`, i.e. `omega = -theta / tau` mod `2 pi / tau`.
pub fn band_shift(theta: f64, tau: f64) -> f64 {
    -theta / tau
}

pub fn run(spec: &ExperimentSpec, record: &mut RunRecord) -> Result<()> {
    let tol = &spec.tolerances;
    let tau = spec.tau();
    let shift = band_shift(spec.theta, tau);
    let g = grid(spec)?;
    let n = spec.size;
    let baseline = levelset_fraction(g, tau, tol.width, shift);
    record.summarize("baseline", baseline);
    record.calibrate("residual_target", RESIDUAL_TARGET);
    record.checks.push(Check::below("baseline", baseline, BASELINE_CAP));
    let filter = build_circle_filter(spec.theta, tol.filter_delta, tol.kmax, tol.filter_eps)?;
    record.summarize("filter_reconstruction_error", filter.reconstruction_error);
    let mut per_lambda = Vec::new();
    for (li, &lambda) in spec.lambda.iter().enumerate() {
        let outcome = (|| -> Result<_> {
            let pot = trial_potential(spec, 0)?;
            let op = MonodromyOp {
                pot: &pot,
                cfg: EvolutionConfig::strang(tol.dt, lambda, spec.envelope()?),
            };
            let state = extract_floquet_state(&op, &filter, tol.iters, mix(spec.seed ^ START_SALT, li as u64), RESIDUAL_TARGET)?;
            let mass = levelset_mass(&state.field, tau, tol.width, shift)?;
            let mags = frequency_magnitudes(&state.field)?;
            Ok((state, mass, mags))
        })();
        let (state, mass, mags) = match outcome {
            Ok(v) => v,
            Err(e) => {
                record.failures.push(format!("lambda {lambda}: {e:#}"));
                continue;
            }
        };
        let name = if spec.lambda.len() == 1 {
            "floquet_localization".to_string()
        } else {
            format!("floquet_localization_{li}")
        };
        let mut table = Table::new(&name, &["kx", "ky", "abs_psi_hat_sq"]);
        for (idx, m) in mags.iter().enumerate() {
            table.push(row![idx / n, idx % n, *m]);
        }
        record.tables.push(table);
        per_lambda.push(serde_json::json!({
            "lambda": lambda,
            "levelset_mass": mass,
            "phase": state.phase,
            "residual": state.residual,
            "iterations": state.iterations,
            "converged": state.converged,
            "residual_history": state.history,
        }));
        record.checks.push(Check::at_least(&format!("levelset_mass_{lambda}"), mass, MASS_FLOOR));
    }
    record.summarize("per_lambda", per_lambda);
    Ok(())
}
