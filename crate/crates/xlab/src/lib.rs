//! Experiment harness for the `dysonlab` library: configuration, seeded Monte Carlo
//! sweeps, statistics and file emission. Each [`Mode`] is one experiment.

pub mod modes;
pub mod oracle;
pub mod record;
pub mod spec;
pub mod stats;

use std::time::Instant;

use anyhow::Result;
use dysonlab::lattice::{Basis, LatticeGrid, WaveField};
use dysonlab::potential::{sample_potential, PotentialSample};
use dysonlab::rng::mix;
use rayon::prelude::*;

pub use record::{Cell, Check, RunRecord, Table};
pub use spec::{Dist, ExperimentSpec, Mode, Tolerances};

pub const VERSION_TAG: &str = concat!("dysonlab-xlab ", env!("CARGO_PKG_VERSION"));

/// Versions of the numerical dependencies, echoed into manifests.
pub const LIBRARIES: &[(&str, &str)] = &[
    ("dysonlab", env!("CARGO_PKG_VERSION")),
    ("nalgebra", "0.35"),
    ("rustfft", "6"),
    ("rand_chacha", "0.3"),
    ("rayon", "1"),
];

const FIELD_SALT: u64 = 0x6669_656c_6473;

/// Runs one experiment; wall-clock time is the only non-reproducible field.
pub fn run(spec: &ExperimentSpec) -> Result<RunRecord> {
    spec.validate()?;
    let start = Instant::now();
    let mut record = RunRecord::new(spec);
    match spec.mode {
        Mode::T1Scaling => modes::t1_scaling::run(spec, &mut record)?,
        Mode::TjOrders => modes::tj_orders::run(spec, &mut record)?,
        Mode::DysonTruncation => modes::truncation::run(spec, &mut record)?,
        Mode::FreeComparison => modes::free_comparison::run(spec, &mut record)?,
        Mode::ProjectionCompare => modes::projection::run(spec, &mut record)?,
        Mode::FloquetLocalization => modes::floquet::run(spec, &mut record)?,
        Mode::NckBench => modes::nck::run(spec, &mut record)?,
        Mode::OracleSelftest => modes::selftest::run(spec, &mut record)?,
    }
    if !record.within_budget() {
        record.checks.push(Check::at_most(
            "failure_budget",
            record.failures.len() as f64,
            spec.failure_budget as f64,
        ));
    }
    record.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(record)
}

pub(crate) fn grid(spec: &ExperimentSpec) -> Result<LatticeGrid> {
    Ok(LatticeGrid::new(spec.dim, spec.size)?)
}

/// Potential of trial `trial`, seeded by `mix(master, trial)`.
pub(crate) fn trial_potential(spec: &ExperimentSpec, trial: u64) -> Result<PotentialSample> {
    let mut pot = sample_potential(grid(spec)?, spec.radius, spec.distribution(), mix(spec.seed, trial))?;
    if spec.inject_nan && trial == 0 {
        let site = pot.support()[0];
        pot.set_coupling(site, f64::NAN);
    }
    Ok(pot)
}

/// Unit random field `k` of trial `trial`, from its own stream.
pub(crate) fn trial_field(spec: &ExperimentSpec, trial: u64, k: usize) -> Result<WaveField> {
    let index = trial * spec.tolerances.fields.max(1) as u64 + k as u64;
    let mut psi = WaveField::random(grid(spec)?, Basis::Position, mix(spec.seed ^ FIELD_SALT, index));
    psi.normalize();
    Ok(psi)
}

/// Runs `f` on every trial in parallel; results keep trial order, errors go to the record.
pub(crate) fn run_trials<T, F>(spec: &ExperimentSpec, record: &mut RunRecord, f: F) -> Vec<(u64, T)>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let outcomes: Vec<(u64, Result<T>)> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|k| (k, f(k)))
        .collect();
    let mut done = Vec::with_capacity(outcomes.len());
    for (k, r) in outcomes {
        match r {
            Ok(v) => done.push((k, v)),
            Err(e) => record.failures.push(format!("trial {k}: {e:#}")),
        }
    }
    done
}

pub(crate) fn require_finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        anyhow::bail!("{name} is not finite")
    }
}
