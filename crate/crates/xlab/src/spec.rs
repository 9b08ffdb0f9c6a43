//! Experiment configuration and its per-mode defaults.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use anyhow::{bail, Result};
use dysonlab::potential::{DriveEnvelope, Distribution};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    T1Scaling,
    TjOrders,
    DysonTruncation,
    FreeComparison,
    ProjectionCompare,
    FloquetLocalization,
    NckBench,
    OracleSelftest,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::T1Scaling => "t1-scaling",
            Mode::TjOrders => "tj-orders",
            Mode::DysonTruncation => "dyson-truncation",
            Mode::FreeComparison => "free-comparison",
            Mode::ProjectionCompare => "projection-compare",
            Mode::FloquetLocalization => "floquet-localization",
            Mode::NckBench => "nck-bench",
            Mode::OracleSelftest => "oracle-selftest",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Dist {
    Gauss,
    Rademacher,
    Uniform,
}

impl From<Dist> for Distribution {
    fn from(d: Dist) -> Self {
        match d {
            Dist::Gauss => Distribution::Gaussian,
            Dist::Rademacher => Distribution::Rademacher,
            Dist::Uniform => Distribution::Uniform,
        }
    }
}

/// Numerical knobs; each mode fills in its own defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Base window of the time quadrature.
    pub quad_h: f64,
    /// Gauss-Legendre nodes per base window.
    pub quad_nodes: usize,
    /// Relative tolerance of the norm estimators.
    pub norm_tol: f64,
    pub norm_iters: usize,
    /// Truncation budget of the spectral-projection time integral.
    pub eps_trunc: f64,
    /// Strang step.
    pub dt: f64,
    /// Circle-filter half length K.
    pub kmax: usize,
    /// Circle-filter angular half width.
    pub filter_delta: f64,
    /// Accepted filter reconstruction error.
    pub filter_eps: f64,
    /// Filtered iterations for the Floquet state.
    pub iters: usize,
    /// Full width of the level-set bands.
    pub width: f64,
    /// Random fields per trial.
    pub fields: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quad_h: 0.25,
            quad_nodes: 8,
            norm_tol: 1e-4,
            norm_iters: 500,
            eps_trunc: 1e-6,
            dt: 0.01,
            kmax: 40,
            filter_delta: 0.5,
            filter_eps: 2e-2,
            iters: 10,
            width: 0.1,
            fields: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub dim: usize,
    pub size: usize,
    pub radius: usize,
    pub lambda: Vec<f64>,
    pub dist: Dist,
    pub tgrid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub energy: f64,
    pub theta: f64,
    /// Drive frequency of the envelope `cos(omega t)`; the period is `2 pi / omega`.
    pub omega: f64,
    pub order: usize,
    pub trunc: usize,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub allow_wraparound: bool,
    pub tolerances: Tolerances,
    /// Trial errors tolerated before the run counts as failed.
    pub failure_budget: usize,
    /// Test hook: poison one coupling of trial 0 with NaN.
    pub inject_nan: bool,
}

const DEFAULT_SEED: u64 = 20_240_601;

impl ExperimentSpec {
    /// The configuration each mode uses when no flag overrides it.
    pub fn defaults(mode: Mode) -> Self {
        let mut s = Self {
            mode,
            dim: 2,
            size: 128,
            radius: 32,
            lambda: vec![0.05],
            dist: Dist::Gauss,
            tgrid: vec![20.0],
            delta_grid: vec![],
            energy: 1.0,
            theta: 0.0,
            omega: 0.5,
            order: 1,
            trunc: 5,
            trials: 16,
            seed: DEFAULT_SEED,
            out: None,
            allow_wraparound: false,
            tolerances: Tolerances::default(),
            failure_budget: 0,
            inject_nan: false,
        };
        let tol = &mut s.tolerances;
        match mode {
            Mode::T1Scaling => {
                s.size = 512;
                s.radius = 64;
                s.tgrid = (0..=8).map(|k| f64::powi(2.0, k)).collect();
                s.trials = 64;
                s.allow_wraparound = true;
                tol.quad_h = 8.0;
                tol.quad_nodes = 28;
                tol.norm_tol = 5e-4;
                tol.norm_iters = 80;
            }
            Mode::TjOrders => {
                s.radius = 16;
                s.tgrid = vec![16.0];
                s.order = 5;
                s.trials = 16;
                s.allow_wraparound = true;
                tol.quad_h = 1.0;
                tol.quad_nodes = 12;
                tol.norm_tol = 1e-3;
            }
            Mode::DysonTruncation => {
                s.tgrid = vec![20.0];
                s.trunc = 5;
                s.allow_wraparound = true;
                tol.quad_h = 1.0;
                tol.quad_nodes = 14;
            }
            Mode::FreeComparison => {
                s.size = 512;
                s.radius = 64;
                s.lambda = vec![0.04, 0.08];
                s.tgrid = vec![];
                s.trials = 32;
                s.allow_wraparound = true;
                tol.fields = 8;
            }
            Mode::ProjectionCompare => {
                s.size = 256;
                s.radius = 32;
                s.lambda = vec![0.05, 0.1];
                s.delta_grid = vec![0.1, 0.2, 0.4];
                s.tgrid = vec![];
                s.trials = 1;
                tol.eps_trunc = 1e-5;
                tol.norm_tol = 1e-3;
                tol.norm_iters = 60;
            }
            Mode::FloquetLocalization => {
                s.size = 256;
                s.radius = 64;
                s.lambda = vec![0.1];
                s.dist = Dist::Rademacher;
                s.tgrid = vec![];
                s.trials = 1;
                tol.dt = 4.0 * PI / 64.0;
            }
            Mode::NckBench => {
                s.tgrid = vec![];
                s.trials = 10_000;
            }
            Mode::OracleSelftest => {
                s.size = 8;
                s.radius = 2;
                s.lambda = vec![0.5];
                s.tgrid = vec![5.0];
                s.trials = 1;
                // Dense references live on the same torus, so wrap-around is part of both sides.
                s.allow_wraparound = true;
                tol.dt = 1e-3;
            }
        }
        s
    }

    pub fn distribution(&self) -> Distribution {
        self.dist.into()
    }

    pub fn tau(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn envelope(&self) -> Result<DriveEnvelope> {
        Ok(DriveEnvelope::cosine(self.omega)?)
    }

    /// Times the run will evolve to; free-comparison derives them from the couplings.
    pub fn max_time(&self) -> f64 {
        let t = self.tgrid.iter().copied().fold(0.0, f64::max);
        match self.mode {
            Mode::FreeComparison => self
                .lambda
                .iter()
                .map(|l| 0.25 / (l * l))
                .fold(t, f64::max),
            _ => t,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if self.dim == 0 || self.size < 2 {
            bail!("grid needs dim >= 1 and size >= 2");
        }
        if self.lambda.iter().any(|l| !l.is_finite()) {
            bail!("couplings must be finite");
        }
        if self.tgrid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            bail!("times must be finite and non-negative");
        }
        if self.delta_grid.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            bail!("window widths must be positive");
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            bail!("drive frequency must be positive");
        }
        let t = self.max_time();
        if !self.allow_wraparound && 10.0 * t >= self.size as f64 / 2.0 {
            bail!(
                "wrap-around guard: 10 * max t = {} is not below N / 2 = {}; pass --allow-wraparound to override",
                10.0 * t,
                self.size as f64 / 2.0
            );
        }
        match self.mode {
            Mode::T1Scaling | Mode::TjOrders | Mode::DysonTruncation if self.tgrid.is_empty() => {
                bail!("{} needs a non-empty --tgrid", self.mode)
            }
            Mode::ProjectionCompare if self.delta_grid.is_empty() => {
                bail!("projection-compare needs a non-empty --delta-grid")
            }
            Mode::FloquetLocalization if self.dim != 2 => bail!("floquet-localization needs dim = 2"),
            _ => Ok(()),
        }
    }
}
