//! Every dense reference comparison on tiny grids, in one and two dimensions.

use anyhow::Result;
use dysonlab::dyson::{apply_tj, QuadratureScheme};
use dysonlab::evolve::{chebyshev_propagate, dense_monodromy, dense_oracle, evolve, EvolutionConfig, HamiltonianPropagator, MonodromyOp};
use dysonlab::lattice::{LatticeGrid, C64};
use dysonlab::potential::{sample_potential, DriveEnvelope};
use dysonlab::rng::mix;
use dysonlab::spectral::{build_circle_filter, project_circle, project_energy, BumpFunction};

use crate::oracle::{apply_dense, circle_calculus, dyson_terms};
use crate::record::{Check, RunRecord, Table};
use crate::spec::ExperimentSpec;
use crate::{row, trial_field};

pub const DIMS: [usize; 2] = [1, 2];
pub const EVOLVE_TOL: f64 = 1e-6;
pub const DYSON_TOL: f64 = 1e-6;
pub const PROJECTION_TOL: f64 = 1e-5;
pub const MAX_ORDER: usize = 3;
const RK4_STEPS: usize = 4000;
const ENERGY_EPS: f64 = 1e-8;
const DEFAULT_DELTA: f64 = 0.5;
/// Strang steps per drive period for the circle comparison.
const STEPS_PER_PERIOD: f64 = 256.0;

pub fn run(spec: &ExperimentSpec, record: &mut RunRecord) -> Result<()> {
    let lambda = spec.lambda[0];
    let t = spec.tgrid.first().copied().unwrap_or(5.0);
    let delta = spec.delta_grid.first().copied().unwrap_or(DEFAULT_DELTA);
    let tol = &spec.tolerances;
    let mut table = Table::new("oracle_selftest", &["check", "dim", "error", "tolerance"]);
    for &d in &DIMS {
        let grid = LatticeGrid::new(d, spec.size)?;
        let pot = sample_potential(grid, spec.radius, spec.distribution(), mix(spec.seed, d as u64))?;
        let mut sub = spec.clone();
        sub.dim = d;
        let psi = trial_field(&sub, 0, 0)?;
        let mut push = |name: String, err: f64, cap: f64, record: &mut RunRecord| {
            table.push(row![name.as_str(), d, err, cap]);
            record.checks.push(Check::at_most(&name, err, cap));
        };

        let dense = dense_oracle(grid, &pot, lambda)?;
        let exact = apply_dense(&dense.propagator(t), &psi)?;
        let strang = evolve(&psi, &pot, &EvolutionConfig::strang(tol.dt, lambda, DriveEnvelope::constant()), 0.0, t)?;
        push(format!("evolve_strang_d{d}"), strang.distance(&exact), EVOLVE_TOL, record);
        let cheb = chebyshev_propagate(&psi, &pot, lambda, t)?;
        push(format!("evolve_chebyshev_d{d}"), cheb.distance(&exact), EVOLVE_TOL, record);

        let scheme = QuadratureScheme::default();
        let reference = dyson_terms(&psi, &pot, MAX_ORDER, t, RK4_STEPS)?;
        for j in 1..=MAX_ORDER {
            let got = apply_tj(&psi, &pot, j, t, &scheme)?;
            let scale = reference[j].norm().max(1.0);
            push(format!("t{j}_d{d}"), got.distance(&reference[j]) / scale, DYSON_TOL, record);
        }

        let bump = BumpFunction::standard();
        let prop = HamiltonianPropagator { pot: &pot, lambda };
        let projected = project_energy(&psi, &prop, spec.energy, delta, bump, ENERGY_EPS)?;
        let want = dense.apply_function(&psi, |e| C64::new(bump.value((e - spec.energy) / delta), 0.0))?;
        push(format!("project_energy_d{d}"), projected.distance(&want), PROJECTION_TOL, record);

        let tau = spec.tau();
        let cfg = EvolutionConfig::strang(tau / STEPS_PER_PERIOD, lambda, spec.envelope()?);
        let filter = build_circle_filter(spec.theta, tol.filter_delta, tol.kmax, tol.filter_eps)?;
        let op = MonodromyOp { pot: &pot, cfg: cfg.clone() };
        let got = project_circle(&psi, &op, &filter)?;
        let (f_u, off_diagonal) = circle_calculus(&dense_monodromy(&pot, &cfg)?, |theta| filter.evaluate(theta));
        let want = apply_dense(&f_u, &psi)?;
        push(format!("project_circle_d{d}"), got.distance(&want), PROJECTION_TOL, record);
        push(format!("schur_normality_d{d}"), off_diagonal, 1e-9, record);
    }
    record.tables.push(table);
    Ok(())
}
