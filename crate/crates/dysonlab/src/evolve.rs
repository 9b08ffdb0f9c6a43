//! Full propagators `e^{-itH}`, `U(b, a)` for driven potentials, and the dense oracle.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lattice::{free_propagate, Basis, FourierEngine, LatticeGrid, WaveField, C64};
use crate::potential::{DriveEnvelope, PotentialSample};
use crate::special::{bessel_cutoff, bessel_j_sequence};

pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Half free step, potential phase at the midpoint, half free step.
    Strang,
    /// Chebyshev expansion of `e^{-itH}`; constant envelopes only.
    Chebyshev,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub envelope: DriveEnvelope,
    pub lambda: f64,
}

impl EvolutionConfig {
    pub fn strang(dt: f64, lambda: f64, envelope: DriveEnvelope) -> Self {
        Self {
            dt,
            scheme: Scheme::Strang,
            envelope,
            lambda,
        }
    }

    pub fn chebyshev(lambda: f64) -> Self {
        Self {
            dt: f64::INFINITY,
            scheme: Scheme::Chebyshev,
            envelope: DriveEnvelope::constant(),
            lambda,
        }
    }

    /// `pi / (2d + lambda ||V||_inf)`.
    pub fn step_limit(&self, pot: &PotentialSample) -> f64 {
        PI / (2.0 * pot.grid().dim() as f64 + self.lambda.abs() * pot.sup_norm())
    }

    pub fn validate(&self, pot: &PotentialSample) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::NonFinite("coupling".into()));
        }
        if !pot.is_finite() {
            return Err(Error::NonFinite("potential couplings".into()));
        }
        match self.scheme {
            Scheme::Strang => {
                let limit = self.step_limit(pot);
                if !(self.dt > 0.0 && self.dt <= limit) {
                    return Err(Error::StepSize {
                        dt: self.dt,
                        limit,
                    });
                }
            }
            Scheme::Chebyshev => {
                if !self.envelope.is_constant() {
                    return Err(Error::InvalidArgument(
                        "the Chebyshev scheme needs a constant envelope".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// `U(b, a) psi`. The Strang product also accepts `b < a`, where it is the exact
/// inverse of the forward product.
pub fn evolve(field: &WaveField, pot: &PotentialSample, cfg: &EvolutionConfig, a: f64, b: f64) -> Result<WaveField> {
    field.expect_basis(Basis::Position)?;
    field.expect_grid(pot.grid())?;
    cfg.validate(pot)?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument("non-finite time window".into()));
    }
    match cfg.scheme {
        Scheme::Strang => Ok(strang(field, pot, cfg, a, b)),
        Scheme::Chebyshev => chebyshev_propagate(field, pot, cfg.lambda, b - a),
    }
}

fn strang(field: &WaveField, pot: &PotentialSample, cfg: &EvolutionConfig, a: f64, b: f64) -> WaveField {
    let span = b - a;
    if span == 0.0 {
        return field.clone();
    }
    let engine = FourierEngine::for_grid(pot.grid());
    let steps = ((span.abs() / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
    let step = span / steps as f64;
    let g = pot.couplings();
    let support = pot.support();
    let mut v = field.values().to_vec();
    engine.forward_in_place(&mut v);
    engine.apply_free_phase(&mut v, 0.5 * step);
    for k in 0..steps {
        engine.inverse_in_place(&mut v);
        let mid = a + (k as f64 + 0.5) * step;
        if cfg.envelope.is_uniform() {
            let e = cfg.envelope.value(mid);
            for &i in support {
                v[i] *= C64::from_polar(1.0, -step * cfg.lambda * e * g[i]);
            }
        } else {
            for &i in support {
                let e = cfg.envelope.site_value(i, mid);
                v[i] *= C64::from_polar(1.0, -step * cfg.lambda * e * g[i]);
            }
        }
        engine.forward_in_place(&mut v);
        let free = if k + 1 == steps { 0.5 * step } else { step };
        engine.apply_free_phase(&mut v, free);
    }
    engine.inverse_in_place(&mut v);
    WaveField::new(pot.grid(), Basis::Position, v).expect("size preserved")
}

/// `out = H0 v + lambda V v` by the nearest-neighbour stencil.
fn apply_hamiltonian(grid: LatticeGrid, pot: &PotentialSample, lambda: f64, v: &[C64], out: &mut [C64]) {
    let n = grid.size();
    let d = grid.dim();
    out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        for (ob, vb) in out.chunks_mut(block).zip(v.chunks(block)) {
            for c in 0..n {
                let up = if c + 1 == n { 0 } else { c + 1 };
                let down = if c == 0 { n - 1 } else { c - 1 };
                let (o_row, u_row, d_row) = (c * stride, up * stride, down * stride);
                for j in 0..stride {
                    ob[o_row + j] += vb[u_row + j] + vb[d_row + j];
                }
            }
        }
    }
    if lambda != 0.0 {
        let g = pot.couplings();
        for &i in pot.support() {
            out[i] += v[i] * (lambda * g[i]);
        }
    }
}

/// Spectral-radius bound `2d + |lambda| ||V||_inf` used to scale Chebyshev series.
pub fn spectral_bound(pot: &PotentialSample, lambda: f64) -> f64 {
    2.0 * pot.grid().dim() as f64 + lambda.abs() * pot.sup_norm()
}

/// `sum_k beta_k T_k(H / a) psi` by the three-term recurrence.
fn chebyshev_series(psi: &WaveField, pot: &PotentialSample, lambda: f64, a: f64, beta: &[C64]) -> WaveField {
    let grid = pot.grid();
    let size = grid.num_sites();
    let mut prev = psi.values().to_vec();
    let mut acc: Vec<C64> = prev.iter().map(|x| x * beta[0]).collect();
    if beta.len() == 1 {
        return WaveField::new(grid, Basis::Position, acc).expect("size preserved");
    }
    let mut cur = vec![C64::new(0.0, 0.0); size];
    apply_hamiltonian(grid, pot, lambda, &prev, &mut cur);
    let inv = 1.0 / a;
    for x in cur.iter_mut() {
        *x *= inv;
    }
    for (s, x) in acc.iter_mut().zip(&cur) {
        *s += x * beta[1];
    }
    let mut next = vec![C64::new(0.0, 0.0); size];
    for b in &beta[2..] {
        apply_hamiltonian(grid, pot, lambda, &cur, &mut next);
        for ((nx, p), s) in next.iter_mut().zip(&prev).zip(acc.iter_mut()) {
            *nx = *nx * (2.0 * inv) - p;
            *s += *nx * b;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    WaveField::new(grid, Basis::Position, acc).expect("size preserved")
}

/// Chebyshev coefficients of `sum_k w_k e^{-i t_k H}` on `H / a`.
fn chebyshev_coefficients(times: &[f64], weights: &[C64], a: f64) -> Vec<C64> {
    let order = times
        .iter()
        .map(|t| bessel_cutoff(a * t))
        .max()
        .unwrap_or(0);
    let mut beta = vec![C64::new(0.0, 0.0); order + 1];
    let powers: Vec<C64> = (0..4)
        .map(|k| C64::new(0.0, -1.0).powu(k as u32))
        .collect();
    for (&t, &w) in times.iter().zip(weights) {
        let kmax = bessel_cutoff(a * t).min(order);
        let j = bessel_j_sequence(a * t, kmax);
        for (k, jk) in j.iter().enumerate() {
            let c = if k == 0 { 1.0 } else { 2.0 } * jk;
            beta[k] += w * powers[k % 4] * c;
        }
    }
    beta
}

/// `e^{-itH} psi` for `H = H0 + lambda V` by a Chebyshev expansion.
pub fn chebyshev_propagate(field: &WaveField, pot: &PotentialSample, lambda: f64, t: f64) -> Result<WaveField> {
    field.expect_basis(Basis::Position)?;
    field.expect_grid(pot.grid())?;
    if !pot.is_finite() || !lambda.is_finite() {
        return Err(Error::NonFinite("potential couplings".into()));
    }
    if t == 0.0 {
        return Ok(field.clone());
    }
    let a = spectral_bound(pot, lambda);
    let beta = chebyshev_coefficients(&[t], &[C64::new(1.0, 0.0)], a);
    Ok(chebyshev_series(field, pot, lambda, a, &beta))
}

/// Supplies `e^{-itA} psi` for a self-adjoint generator `A`.
pub trait Propagator: Sync {
    fn grid(&self) -> LatticeGrid;

    /// Upper bound on the spectral radius of `A`.
    fn spectral_radius(&self) -> f64;

    fn propagate(&self, psi: &WaveField, t: f64) -> Result<WaveField>;

    /// `sum_k w_k e^{-i t_k A} psi`.
    fn superpose(&self, psi: &WaveField, times: &[f64], weights: &[C64]) -> Result<WaveField> {
        let mut acc = WaveField::zeros(psi.grid(), Basis::Position);
        for (&t, &w) in times.iter().zip(weights) {
            acc.axpy(w, &self.propagate(psi, t)?);
        }
        Ok(acc)
    }
}

/// `A = H0`, applied as a frequency multiplier.
pub struct FreePropagator {
    pub grid: LatticeGrid,
}

impl Propagator for FreePropagator {
    fn grid(&self) -> LatticeGrid {
        self.grid
    }

    fn spectral_radius(&self) -> f64 {
        2.0 * self.grid.dim() as f64
    }

    fn propagate(&self, psi: &WaveField, t: f64) -> Result<WaveField> {
        psi.expect_grid(self.grid)?;
        Ok(free_propagate(psi, t))
    }

    fn superpose(&self, psi: &WaveField, times: &[f64], weights: &[C64]) -> Result<WaveField> {
        psi.expect_basis(Basis::Position)?;
        psi.expect_grid(self.grid)?;
        let engine = FourierEngine::for_grid(self.grid);
        let omega = engine.multiplier().values();
        let mut v = psi.values().to_vec();
        engine.forward_in_place(&mut v);
        // Group sites by their symbol value so each distinct value is summed once.
        let mut keyed: Vec<(f64, usize)> = omega.iter().copied().zip(0..).collect();
        keyed.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut i = 0;
        while i < keyed.len() {
            let w0 = keyed[i].0;
            let mut jend = i;
            while jend < keyed.len() && (keyed[jend].0 - w0).abs() <= 1e-13 {
                jend += 1;
            }
            let factor: C64 = times
                .iter()
                .zip(weights)
                .map(|(&t, &w)| w * C64::from_polar(1.0, -t * w0))
                .sum();
            for &(_, idx) in &keyed[i..jend] {
                v[idx] *= factor;
            }
            i = jend;
        }
        engine.inverse_in_place(&mut v);
        WaveField::new(self.grid, Basis::Position, v)
    }
}

/// `A = H0 + lambda V` through Chebyshev expansions.
pub struct HamiltonianPropagator<'a> {
    pub pot: &'a PotentialSample,
    pub lambda: f64,
}

impl Propagator for HamiltonianPropagator<'_> {
    fn grid(&self) -> LatticeGrid {
        self.pot.grid()
    }

    fn spectral_radius(&self) -> f64 {
        spectral_bound(self.pot, self.lambda)
    }

    fn propagate(&self, psi: &WaveField, t: f64) -> Result<WaveField> {
        chebyshev_propagate(psi, self.pot, self.lambda, t)
    }

    /// One Chebyshev sweep whose coefficients absorb the whole time sum.
    fn superpose(&self, psi: &WaveField, times: &[f64], weights: &[C64]) -> Result<WaveField> {
        psi.expect_basis(Basis::Position)?;
        psi.expect_grid(self.pot.grid())?;
        let a = self.spectral_radius();
        let beta = chebyshev_coefficients(times, weights, a);
        Ok(chebyshev_series(psi, self.pot, self.lambda, a, &beta))
    }
}

/// `U(tau, 0) psi`.
pub fn monodromy_apply(field: &WaveField, pot: &PotentialSample, cfg: &EvolutionConfig) -> Result<WaveField> {
    let tau = cfg.envelope.period();
    if !tau.is_finite() {
        return Err(Error::InvalidArgument("monodromy needs a periodic envelope".into()));
    }
    evolve(field, pot, cfg, 0.0, tau)
}

/// A unitary with an inverse, as consumed by circle filters.
pub trait UnitaryHandle: Sync {
    fn grid(&self) -> LatticeGrid;
    fn apply(&self, psi: &WaveField) -> Result<WaveField>;
    fn apply_inverse(&self, psi: &WaveField) -> Result<WaveField>;
}

/// The one-period Strang map and its exact inverse.
pub struct MonodromyOp<'a> {
    pub pot: &'a PotentialSample,
    pub cfg: EvolutionConfig,
}

impl UnitaryHandle for MonodromyOp<'_> {
    fn grid(&self) -> LatticeGrid {
        self.pot.grid()
    }

    fn apply(&self, psi: &WaveField) -> Result<WaveField> {
        monodromy_apply(psi, self.pot, &self.cfg)
    }

    fn apply_inverse(&self, psi: &WaveField) -> Result<WaveField> {
        let tau = self.cfg.envelope.period();
        evolve(psi, self.pot, &self.cfg, tau, 0.0)
    }
}

/// `e^{-i tau H0}` as a multiplier.
pub struct FreeUnitary {
    pub grid: LatticeGrid,
    pub tau: f64,
}

impl UnitaryHandle for FreeUnitary {
    fn grid(&self) -> LatticeGrid {
        self.grid
    }

    fn apply(&self, psi: &WaveField) -> Result<WaveField> {
        Ok(free_propagate(psi, self.tau))
    }

    fn apply_inverse(&self, psi: &WaveField) -> Result<WaveField> {
        Ok(free_propagate(psi, -self.tau))
    }
}

/// A dense unitary matrix.
pub struct DenseUnitary {
    pub grid: LatticeGrid,
    pub matrix: DMatrix<C64>,
}

impl UnitaryHandle for DenseUnitary {
    fn grid(&self) -> LatticeGrid {
        self.grid
    }

    fn apply(&self, psi: &WaveField) -> Result<WaveField> {
        let v = DVector::from_column_slice(psi.values());
        WaveField::new(self.grid, psi.basis(), (&self.matrix * v).as_slice().to_vec())
    }

    fn apply_inverse(&self, psi: &WaveField) -> Result<WaveField> {
        let v = DVector::from_column_slice(psi.values());
        WaveField::new(self.grid, psi.basis(), (self.matrix.adjoint() * v).as_slice().to_vec())
    }
}

pub struct IdentityUnitary {
    pub grid: LatticeGrid,
}

impl UnitaryHandle for IdentityUnitary {
    fn grid(&self) -> LatticeGrid {
        self.grid
    }

    fn apply(&self, psi: &WaveField) -> Result<WaveField> {
        Ok(psi.clone())
    }

    fn apply_inverse(&self, psi: &WaveField) -> Result<WaveField> {
        Ok(psi.clone())
    }
}

/// Dense Hamiltonian `H0 + lambda V` and its eigendecomposition.
pub struct DenseOracle {
    grid: LatticeGrid,
    hamiltonian: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

/// Dense `H0 + lambda V` assembled from the hopping stencil.
pub fn dense_hamiltonian(grid: LatticeGrid, pot: &PotentialSample, lambda: f64) -> Result<DMatrix<f64>> {
    let dim = grid.num_sites();
    if dim > DENSE_LIMIT {
        return Err(Error::OversizeGrid { sites: dim });
    }
    pot_grid_check(grid, pot)?;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let n = grid.size();
    for i in 0..dim {
        let c = grid.coords(i);
        for axis in 0..grid.dim() {
            let mut up = c.clone();
            up[axis] = (c[axis] + 1) % n;
            h[(grid.index(&up), i)] += 1.0;
            let mut down = c.clone();
            down[axis] = (c[axis] + n - 1) % n;
            h[(grid.index(&down), i)] += 1.0;
        }
        h[(i, i)] += lambda * pot.couplings()[i];
    }
    Ok(h)
}

fn pot_grid_check(grid: LatticeGrid, pot: &PotentialSample) -> Result<()> {
    if pot.grid() != grid {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

pub fn dense_oracle(grid: LatticeGrid, pot: &PotentialSample, lambda: f64) -> Result<DenseOracle> {
    let hamiltonian = dense_hamiltonian(grid, pot, lambda)?;
    let residual = (&hamiltonian - hamiltonian.transpose()).amax();
    if residual != 0.0 {
        return Err(Error::InvalidArgument(format!(
            "assembled Hamiltonian is not symmetric (residual {residual})"
        )));
    }
    let eig = SymmetricEigen::new(hamiltonian.clone());
    Ok(DenseOracle {
        grid,
        hamiltonian,
        eigenvalues: eig.eigenvalues,
        eigenvectors: eig.eigenvectors,
    })
}

/// `e^{-itH}` as a dense matrix.
pub fn dense_propagator(grid: LatticeGrid, pot: &PotentialSample, lambda: f64, t: f64) -> Result<DMatrix<C64>> {
    Ok(dense_oracle(grid, pot, lambda)?.propagator(t))
}

impl DenseOracle {
    pub fn grid(&self) -> LatticeGrid {
        self.grid
    }

    pub fn hamiltonian(&self) -> &DMatrix<f64> {
        &self.hamiltonian
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (&self.hamiltonian - self.hamiltonian.transpose()).amax()
    }

    /// `f(H)` for a complex-valued `f`.
    pub fn function<F: Fn(f64) -> C64>(&self, f: F) -> DMatrix<C64> {
        let q = self.eigenvectors.map(|x| C64::new(x, 0.0));
        let diag = DMatrix::from_diagonal(&self.eigenvalues.map(&f));
        &q * diag * q.transpose()
    }

    pub fn propagator(&self, t: f64) -> DMatrix<C64> {
        self.function(|e| C64::from_polar(1.0, -t * e))
    }

    pub fn apply_function<F: Fn(f64) -> C64>(&self, psi: &WaveField, f: F) -> Result<WaveField> {
        psi.expect_basis(Basis::Position)?;
        psi.expect_grid(self.grid)?;
        let q = self.eigenvectors.map(|x| C64::new(x, 0.0));
        let v = DVector::from_column_slice(psi.values());
        let mut coeffs = q.transpose() * v;
        for (c, &e) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= f(e);
        }
        WaveField::new(self.grid, Basis::Position, (q * coeffs).as_slice().to_vec())
    }

    pub fn eigenvector(&self, k: usize) -> WaveField {
        let values = self.eigenvectors.column(k).iter().map(|&x| C64::new(x, 0.0)).collect();
        WaveField::new(self.grid, Basis::Position, values).expect("size matches")
    }
}

impl Propagator for DenseOracle {
    fn grid(&self) -> LatticeGrid {
        self.grid
    }

    fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m: f64, e| m.max(e.abs()))
    }

    fn propagate(&self, psi: &WaveField, t: f64) -> Result<WaveField> {
        self.apply_function(psi, |e| C64::from_polar(1.0, -t * e))
    }

    fn superpose(&self, psi: &WaveField, times: &[f64], weights: &[C64]) -> Result<WaveField> {
        self.apply_function(psi, |e| {
            times
                .iter()
                .zip(weights)
                .map(|(&t, &w)| w * C64::from_polar(1.0, -t * e))
                .sum()
        })
    }
}

/// Dense matrix of `U(tau, 0)` built column by column from the Strang map.
pub fn dense_monodromy(pot: &PotentialSample, cfg: &EvolutionConfig) -> Result<DMatrix<C64>> {
    let grid = pot.grid();
    let dim = grid.num_sites();
    if dim > DENSE_LIMIT {
        return Err(Error::OversizeGrid { sites: dim });
    }
    let mut u = DMatrix::<C64>::zeros(dim, dim);
    for c in 0..dim {
        let col = monodromy_apply(&WaveField::delta(grid, Basis::Position, c), pot, cfg)?;
        for (r, v) in col.values().iter().enumerate() {
            u[(r, c)] = *v;
        }
    }
    Ok(u)
}
