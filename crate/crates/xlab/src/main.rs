use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use dysonlab_xlab::spec::{Dist, ExperimentSpec, Mode};

/// Monte Carlo experiments on random Schrodinger operators on the torus.
#[derive(Parser, Debug)]
#[command(name = "dysonlab", version)]
struct Cli {
    mode: Mode,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    radius: Option<usize>,
    /// Comma-separated couplings.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    dist: Option<Dist>,
    #[arg(long, value_delimiter = ',')]
    tgrid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    delta_grid: Option<Vec<f64>>,
    #[arg(long)]
    energy: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Drive period; sets omega = 2 pi / tau.
    #[arg(long, conflicts_with = "omega")]
    tau: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    /// Highest Dyson order for tj-orders.
    #[arg(long)]
    order: Option<usize>,
    /// Truncation order M for dyson-truncation.
    #[arg(long)]
    trunc: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    allow_wraparound: bool,
    /// Trial errors tolerated before the run counts as failed.
    #[arg(long)]
    failure_budget: Option<usize>,
    #[arg(long)]
    quad_h: Option<f64>,
    #[arg(long)]
    quad_nodes: Option<usize>,
    #[arg(long)]
    norm_tol: Option<f64>,
    #[arg(long)]
    norm_iters: Option<usize>,
    #[arg(long)]
    eps_trunc: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    filter_delta: Option<f64>,
    #[arg(long)]
    filter_eps: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    fields: Option<usize>,
    /// Test hook: poison the first trial's potential with a NaN.
    #[arg(long, hide = true)]
    inject_nan: bool,
}

macro_rules! set {
    ($target:expr, $value:expr) => {
        if let Some(v) = $value {
            $target = v;
        }
    };
}

impl Cli {
    fn into_spec(self) -> ExperimentSpec {
        let mut s = ExperimentSpec::defaults(self.mode);
        set!(s.dim, self.dim);
        set!(s.size, self.size);
        set!(s.radius, self.radius);
        set!(s.lambda, self.lambda);
        set!(s.dist, self.dist);
        set!(s.tgrid, self.tgrid);
        set!(s.delta_grid, self.delta_grid);
        set!(s.energy, self.energy);
        set!(s.theta, self.theta);
        set!(s.omega, self.omega);
        set!(s.omega, self.tau.map(|tau| 2.0 * std::f64::consts::PI / tau));
        set!(s.order, self.order);
        set!(s.trunc, self.trunc);
        set!(s.trials, self.trials);
        set!(s.seed, self.seed);
        set!(s.failure_budget, self.failure_budget);
        s.out = self.out;
        s.allow_wraparound |= self.allow_wraparound;
        s.inject_nan = self.inject_nan;
        let t = &mut s.tolerances;
        set!(t.quad_h, self.quad_h);
        set!(t.quad_nodes, self.quad_nodes);
        set!(t.norm_tol, self.norm_tol);
        set!(t.norm_iters, self.norm_iters);
        set!(t.eps_trunc, self.eps_trunc);
        set!(t.dt, self.dt);
        set!(t.kmax, self.kmax);
        set!(t.filter_delta, self.filter_delta);
        set!(t.filter_eps, self.filter_eps);
        set!(t.iters, self.iters);
        set!(t.width, self.width);
        set!(t.fields, self.fields);
        s
    }
}

fn execute(spec: ExperimentSpec) -> Result<bool> {
    let record = dysonlab_xlab::run(&spec)?;
    let out = spec
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("out/{}", spec.mode.name())));
    record.write(&out).with_context(|| format!("writing {}", out.display()))?;
    for check in &record.checks {
        let tag = if check.pass { "PASS" } else { "FAIL" };
        eprintln!("{tag} {} = {:.4e} ({})", check.name, check.value, check.requirement);
    }
    for failure in &record.failures {
        eprintln!("trial error: {failure}");
    }
    eprintln!("{} finished in {:.1}s; outputs in {}", spec.mode.name(), record.wall_clock_s, out.display());
    Ok(record.passed())
}

fn main() -> ExitCode {
    let spec = Cli::parse().into_spec();
    match execute(spec) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
