//! Structured random matrices `X = sum_n g_n A_n` and randomized checks of the
//! matrix inequalities behind the Khintchine bounds.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::C64;
use crate::rng::{mix, stream, Normal};

/// Law of the scalar coefficients `g_n`; all non-degenerate laws have unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientLaw {
    Gaussian,
    Rademacher,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    Uniform,
    /// Every `g_n = 0`.
    Zero,
}

#[derive(Debug, Clone)]
pub struct StructuredEnsemble {
    dim: usize,
    matrices: Vec<DMatrix<C64>>,
    law: CoefficientLaw,
    seed: u64,
    real: bool,
    diagonal: bool,
}

fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

impl StructuredEnsemble {
    pub fn new(matrices: Vec<DMatrix<C64>>, law: CoefficientLaw, seed: u64) -> Result<Self> {
        let dim = matrices
            .first()
            .map(|m| m.nrows())
            .ok_or_else(|| Error::InvalidArgument("ensemble needs at least one matrix".into()))?;
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        for (n, m) in matrices.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidArgument(format!(
                    "A_{n} has shape {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::NonFinite(format!("A_{n}")));
            }
            let defect = hermitian_defect(m);
            if defect > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "A_{n} is not Hermitian (defect {defect:.2e})"
                )));
            }
        }
        let real = matrices.iter().all(|m| m.iter().all(|v| v.im == 0.0));
        let diagonal = matrices.iter().all(|m| {
            (0..dim).all(|i| (0..dim).all(|j| i == j || m[(i, j)] == C64::new(0.0, 0.0)))
        });
        Ok(Self {
            dim,
            matrices,
            law,
            seed,
            real,
            diagonal,
        })
    }

    pub fn from_real(matrices: Vec<DMatrix<f64>>, law: CoefficientLaw, seed: u64) -> Result<Self> {
        Self::new(
            matrices.into_iter().map(|m| m.map(|v| C64::new(v, 0.0))).collect(),
            law,
            seed,
        )
    }

    /// `A_n = e_n e_n^T`, `n = 1..dim`.
    pub fn diagonal(dim: usize, law: CoefficientLaw, seed: u64) -> Result<Self> {
        let matrices = (0..dim)
            .map(|n| {
                let mut m = DMatrix::zeros(dim, dim);
                m[(n, n)] = 1.0;
                m
            })
            .collect();
        Self::from_real(matrices, law, seed)
    }

    /// `s` Hermitian matrices with Gaussian entries, each scaled by `1 / sqrt(s dim)`.
    pub fn random_hermitian(dim: usize, s: usize, law: CoefficientLaw, seed: u64) -> Result<Self> {
        let mut normal = Normal::new(stream(mix(seed, u64::MAX)));
        let scale = 1.0 / ((s * dim) as f64).sqrt();
        let matrices = (0..s)
            .map(|_| {
                let mut m = random_hermitian_matrix(dim, &mut normal);
                m *= C64::new(scale, 0.0);
                m
            })
            .collect();
        Self::new(matrices, law, seed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrices(&self) -> &[DMatrix<C64>] {
        &self.matrices
    }

    pub fn law(&self) -> CoefficientLaw {
        self.law
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_law(&self, law: CoefficientLaw) -> Self {
        Self {
            law,
            ..self.clone()
        }
    }

    /// Coefficients of trial `trial`, from the stream `mix(seed, trial)`.
    pub fn coefficients(&self, trial: u64) -> Vec<f64> {
        let mut normal = Normal::new(stream(mix(self.seed, trial)));
        (0..self.matrices.len())
            .map(|_| match self.law {
                CoefficientLaw::Gaussian => normal.sample(),
                CoefficientLaw::Rademacher => {
                    if normal.rng_mut().gen::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
                CoefficientLaw::Uniform => 3f64.sqrt() * (2.0 * normal.rng_mut().gen::<f64>() - 1.0),
                CoefficientLaw::Zero => 0.0,
            })
            .collect()
    }

    pub fn assemble(&self, g: &[f64]) -> DMatrix<C64> {
        let mut x = DMatrix::zeros(self.dim, self.dim);
        for (gn, a) in g.iter().zip(&self.matrices) {
            if *gn != 0.0 {
                x += a * C64::new(*gn, 0.0);
            }
        }
        x
    }

    /// `E X^2 = sum_n A_n^2`.
    pub fn second_moment(&self) -> DMatrix<C64> {
        let mut acc = DMatrix::zeros(self.dim, self.dim);
        if self.law == CoefficientLaw::Zero {
            return acc;
        }
        for a in &self.matrices {
            acc += a * a;
        }
        acc
    }

    /// Eigenvalues of a Hermitian matrix in the span of this ensemble.
    fn spectrum(&self, x: &DMatrix<C64>) -> Vec<f64> {
        if self.diagonal {
            (0..self.dim).map(|i| x[(i, i)].re).collect()
        } else {
            hermitian_eigenvalues(x, self.real)
        }
    }
}

pub fn random_hermitian_matrix<R: Rng>(dim: usize, normal: &mut Normal<R>) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = C64::new(normal.sample(), 0.0);
        for j in i + 1..dim {
            let v = C64::new(normal.sample(), normal.sample()) / 2f64.sqrt();
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
    m
}

/// Eigenvalues of a Hermitian matrix; the real path skips the complex solver.
pub fn hermitian_eigenvalues(x: &DMatrix<C64>, real: bool) -> Vec<f64> {
    if real {
        let r = x.map(|v| v.re);
        r.symmetric_eigenvalues().iter().copied().collect()
    } else {
        x.clone().symmetric_eigenvalues().iter().copied().collect()
    }
}

fn spectral_norm(eigs: &[f64]) -> f64 {
    eigs.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Draws trial `trial` of `X`.
pub fn sample_x(ens: &StructuredEnsemble, trial: u64) -> DMatrix<C64> {
    ens.assemble(&ens.coefficients(trial))
}

/// `||X||` for trial `trial`.
pub fn sample_norm(ens: &StructuredEnsemble, trial: u64) -> f64 {
    spectral_norm(&ens.spectrum(&sample_x(ens, trial)))
}

/// `||sum_n A_n^2||^{1/2}`; zero for the degenerate law.
pub fn sigma_param(ens: &StructuredEnsemble) -> f64 {
    let m = ens.second_moment();
    spectral_norm(&hermitian_eigenvalues(&m, ens.real)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NckExpectationReport {
    pub trials: usize,
    pub mean: f64,
    pub sigma: f64,
    /// `mean / (sqrt(log dim) sigma)`; infinite when the denominator vanishes with a positive mean.
    pub ratio: f64,
    pub norms: Vec<f64>,
}

pub fn nck_expectation_check(ens: &StructuredEnsemble, trials: usize) -> Result<NckExpectationReport> {
    if trials < 100 {
        return Err(Error::InvalidArgument(format!("trials = {trials} is below 100")));
    }
    let norms: Vec<f64> = (0..trials as u64).map(|k| sample_norm(ens, k)).collect();
    let mean = norms.iter().sum::<f64>() / trials as f64;
    let sigma = sigma_param(ens);
    let scale = (ens.dim as f64).ln().sqrt() * sigma;
    let ratio = if mean == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        mean / scale
    };
    Ok(NckExpectationReport {
        trials,
        mean,
        sigma,
        ratio,
        norms,
    })
}

/// 95% Wilson score interval for `hits` successes out of `n`.
pub fn wilson_interval(hits: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let nf = n as f64;
    let p = hits as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let center = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if hits == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailRow {
    pub k: f64,
    pub exceedances: usize,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn nck_tail_check(ens: &StructuredEnsemble, ks: &[f64], trials: usize) -> Result<Vec<TailRow>> {
    let threshold = 4.0 * (ens.dim as f64).ln().sqrt();
    if let Some(bad) = ks.iter().find(|&&k| !(k > threshold)) {
        return Err(Error::InvalidArgument(format!(
            "K = {bad} does not exceed 4 sqrt(log dim) = {threshold:.4}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let sigma = sigma_param(ens);
    let norms: Vec<f64> = (0..trials as u64).map(|k| sample_norm(ens, k)).collect();
    Ok(ks
        .iter()
        .map(|&k| {
            let hits = norms.iter().filter(|&&v| v > 0.0 && v >= k * sigma).count();
            let frequency = hits as f64 / trials as f64;
            let (lo, hi) = wilson_interval(hits, trials);
            let bound = (-k * k / 10.0).exp();
            TailRow {
                k,
                exceedances: hits,
                frequency,
                ci_low: lo,
                ci_high: hi,
                bound,
                pass: frequency <= bound + 3.0 * 0.5 * (hi - lo),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub p: usize,
    pub trials: usize,
    /// `(E tr X^{2p})^{1/2p}` from the sample mean.
    pub left: f64,
    pub left_ci: (f64, f64),
    /// `sqrt(2p - 1) (tr (E X^2)^p)^{1/2p}`.
    pub right: f64,
    pub pass: bool,
}

const BOOTSTRAP_RESAMPLES: usize = 400;

pub fn moment_bound_check(ens: &StructuredEnsemble, p: usize, trials: usize) -> Result<MomentReport> {
    if !(1..=8).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p} must lie in 1..=8")));
    }
    if trials < 10_000 {
        return Err(Error::InvalidArgument(format!("trials = {trials} is below 1e4")));
    }
    let exp = 2 * p as i32;
    let traces: Vec<f64> = (0..trials as u64)
        .map(|k| {
            ens.spectrum(&sample_x(ens, k))
                .iter()
                .map(|v| v.powi(exp))
                .sum()
        })
        .collect();
    let root = |m: f64| m.max(0.0).powf(1.0 / exp as f64);
    let mean = traces.iter().sum::<f64>() / trials as f64;
    let left = root(mean);
    let mut rng = stream(mix(ens.seed, u64::MAX - 1));
    let mut boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let s: f64 = (0..trials).map(|_| traces[rng.gen_range(0..trials)]).sum();
            root(s / trials as f64)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let lo = boot[(0.025 * BOOTSTRAP_RESAMPLES as f64) as usize];
    let hi = boot[(0.975 * BOOTSTRAP_RESAMPLES as f64) as usize - 1];
    let m2 = ens.second_moment();
    let inner: f64 = hermitian_eigenvalues(&m2, ens.real)
        .iter()
        .map(|v| v.max(0.0).powi(p as i32))
        .sum();
    let right = ((2 * p - 1) as f64).sqrt() * root(inner);
    let slack = if left > 0.0 { 1.5 * (hi - lo) / left } else { 0.0 };
    Ok(MomentReport {
        p,
        trials,
        left,
        left_ci: (lo, hi),
        right,
        pass: left <= right * (1.0 + slack) + 1e-12,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub trials: usize,
    pub violations: usize,
    /// Smallest `(right - left) / max(1, |right|)` seen.
    pub worst_margin: f64,
}

impl InequalityReport {
    fn new(trials: usize) -> Self {
        Self {
            trials,
            violations: 0,
            worst_margin: f64::INFINITY,
        }
    }

    fn record(&mut self, left: f64, right: f64, slack: f64) {
        let margin = (right - left) / right.abs().max(1.0);
        self.worst_margin = self.worst_margin.min(margin);
        if margin < -slack {
            self.violations += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn trace(m: &DMatrix<C64>) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

fn matrix_power(m: &DMatrix<C64>, k: usize) -> DMatrix<C64> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// `tr[A B^{2p-2-l} A B^l] <= tr[A^2 B^{2p-2}]`, with entries scaled by `1 / sqrt(dim)`.
pub fn trace_inequality_left_right(a: &DMatrix<C64>, b: &DMatrix<C64>, p: usize, l: usize) -> (f64, f64) {
    let left = trace(&(a * matrix_power(b, 2 * p - 2 - l) * a * matrix_power(b, l))).re;
    let right = trace(&(a * a * matrix_power(b, 2 * p - 2))).re;
    (left, right)
}

pub fn trace_inequality_check(dim: usize, p: usize, l: usize, trials: usize, seed: u64) -> Result<InequalityReport> {
    if p < 1 || l > 2 * p - 2 {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= l <= 2p - 2, got p = {p}, l = {l}"
        )));
    }
    let scale = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
    let mut report = InequalityReport::new(trials);
    for k in 0..trials as u64 {
        let mut normal = Normal::new(stream(mix(seed, k)));
        let a = random_hermitian_matrix(dim, &mut normal) * scale;
        let b = random_hermitian_matrix(dim, &mut normal) * scale;
        let (left, right) = trace_inequality_left_right(&a, &b, p, l);
        report.record(left, right, 1e-9);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderJensenReport {
    pub holder: InequalityReport,
    pub jensen: InequalityReport,
}

impl HolderJensenReport {
    pub fn passed(&self) -> bool {
        self.holder.passed() && self.jensen.passed()
    }
}

/// `tr[AB] <= (tr|A|^p)^{1/p} (tr|B|^{p'})^{1/p'}`.
pub fn holder_left_right(a: &DMatrix<C64>, b: &DMatrix<C64>, p: f64) -> (f64, f64) {
    let q = p / (p - 1.0);
    let left = trace(&(a * b)).re;
    let schatten = |m: &DMatrix<C64>, r: f64| {
        hermitian_eigenvalues(m, false)
            .iter()
            .map(|v| v.abs().powf(r))
            .sum::<f64>()
            .powf(1.0 / r)
    };
    (left, schatten(a, p) * schatten(b, q))
}

/// `sum_j phi(a_jj) <= tr phi(A)` for `phi` in `{x^2, x^4, exp}`; one pair per function.
pub fn jensen_left_right(a: &DMatrix<C64>) -> [(f64, f64); 3] {
    let eigs = hermitian_eigenvalues(a, false);
    let diag: Vec<f64> = (0..a.nrows()).map(|i| a[(i, i)].re).collect();
    let phis: [fn(f64) -> f64; 3] = [|x| x * x, |x| x.powi(4), f64::exp];
    phis.map(|phi| (diag.iter().map(|&x| phi(x)).sum(), eigs.iter().map(|&x| phi(x)).sum()))
}

pub fn holder_jensen_check(dim: usize, p: f64, trials: usize, seed: u64) -> Result<HolderJensenReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p = {p} must exceed 1")));
    }
    let scale = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
    let mut holder = InequalityReport::new(trials);
    let mut jensen = InequalityReport::new(trials);
    for k in 0..trials as u64 {
        let mut normal = Normal::new(stream(mix(seed, k)));
        let a = random_hermitian_matrix(dim, &mut normal) * scale;
        let b = random_hermitian_matrix(dim, &mut normal) * scale;
        let (left, right) = holder_left_right(&a, &b, p);
        holder.record(left, right, 1e-9);
        for (left, right) in jensen_left_right(&a) {
            jensen.record(left, right, 1e-9);
        }
    }
    Ok(HolderJensenReport { holder, jensen })
}
