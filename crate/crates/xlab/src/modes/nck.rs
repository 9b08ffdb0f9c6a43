//! Randomized matrix inequalities and the noncommutative Khintchine checks.

use anyhow::Result;
use dysonlab::rmt::{
    holder_jensen_check, moment_bound_check, nck_expectation_check, nck_tail_check, trace_inequality_check,
    CoefficientLaw, StructuredEnsemble,
};
use dysonlab::rng::mix;
use rayon::prelude::*;

use crate::record::{Check, RunRecord, Table};
use crate::row;
use crate::spec::ExperimentSpec;

pub const DIMS: [usize; 3] = [4, 8, 16];
/// Trace inequality orders; every admissible `l` in `0..=2p-2` is run.
pub const TRACE_ORDERS: [usize; 2] = [2, 3];
pub const HOLDER_EXPONENTS: [f64; 2] = [2.0, 3.0];
pub const MOMENT_ORDERS: [usize; 3] = [1, 2, 3];
pub const TAIL_KS: [f64; 3] = [7.0, 8.0, 10.0];
pub const ENSEMBLE_DIM: usize = 16;
pub const ENSEMBLE_TERMS: usize = 8;
/// Ceiling on `E||X|| / (sqrt(log dim) sigma)`.
pub const EXPECTATION_RATIO_CAP: f64 = 3.0;

enum Job {
    Trace { dim: usize, p: usize, l: usize },
    HolderJensen { dim: usize, p: f64 },
}

pub fn run(spec: &ExperimentSpec, record: &mut RunRecord) -> Result<()> {
    let trials = spec.trials;
    let mut jobs = Vec::new();
    for &dim in &DIMS {
        for &p in &TRACE_ORDERS {
            for l in 0..=2 * p - 2 {
                jobs.push(Job::Trace { dim, p, l });
            }
        }
        for &p in &HOLDER_EXPONENTS {
            jobs.push(Job::HolderJensen { dim, p });
        }
    }
    let results: Vec<_> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, job)| {
            let seed = mix(spec.seed, i as u64);
            match *job {
                Job::Trace { dim, p, l } => trace_inequality_check(dim, p, l, trials, seed)
                    .map(|r| vec![(format!("trace_d{dim}_p{p}_l{l}"), dim, p as f64, r)]),
                Job::HolderJensen { dim, p } => holder_jensen_check(dim, p, trials, seed).map(|r| {
                    vec![
                        (format!("holder_d{dim}_p{p}"), dim, p, r.holder),
                        (format!("jensen_d{dim}_p{p}"), dim, p, r.jensen),
                    ]
                }),
            }
        })
        .collect();
    let mut table = Table::new("nck_inequalities", &["check", "dim", "p", "trials", "violations", "worst_margin"]);
    for r in results {
        for (name, dim, p, rep) in r? {
            table.push(row![name.as_str(), dim, p, rep.trials, rep.violations, rep.worst_margin]);
            record.checks.push(Check::new(
                &name,
                rep.violations as f64,
                "0 violations",
                rep.passed(),
            ));
        }
    }
    record.tables.push(table);

    let ens = StructuredEnsemble::random_hermitian(ENSEMBLE_DIM, ENSEMBLE_TERMS, CoefficientLaw::Gaussian, mix(spec.seed, u64::MAX))?;
    let moments: Vec<_> = MOMENT_ORDERS
        .par_iter()
        .map(|&p| moment_bound_check(&ens, p, trials))
        .collect();
    let mut table = Table::new("nck_moments", &["p", "left", "ci_low", "ci_high", "right"]);
    for m in moments {
        let m = m?;
        table.push(row![m.p, m.left, m.left_ci.0, m.left_ci.1, m.right]);
        record.checks.push(Check::new(
            &format!("moment_p{}", m.p),
            m.left / m.right,
            "left <= right within bootstrap slack",
            m.pass,
        ));
    }
    record.tables.push(table);

    let tail = nck_tail_check(&ens, &TAIL_KS, 10 * trials)?;
    let mut table = Table::new("nck_tail", &["k", "exceedances", "frequency", "ci_low", "ci_high", "bound"]);
    for row in &tail {
        table.push(row![row.k, row.exceedances, row.frequency, row.ci_low, row.ci_high, row.bound]);
        record.checks.push(Check::new(
            &format!("tail_k{}", row.k),
            row.frequency,
            format!("<= {} + 3 Wilson half-widths", row.bound),
            row.pass,
        ));
    }
    record.tables.push(table);

    let expectation = nck_expectation_check(&ens, trials)?;
    let mut table = Table::new("nck_norms", &["trial", "norm", "sigma", "ratio"]);
    let scale = (ENSEMBLE_DIM as f64).ln().sqrt() * expectation.sigma;
    for (k, v) in expectation.norms.iter().enumerate() {
        table.push(row![k, *v, expectation.sigma, v / scale]);
    }
    record.tables.push(table);
    record.summarize("expectation_mean", expectation.mean);
    record.summarize("sigma", expectation.sigma);
    record
        .checks
        .push(Check::at_most("expectation_ratio", expectation.ratio, EXPECTATION_RATIO_CAP));
    Ok(())
}
