//! Matrix-free operator handles and norm estimation.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lattice::{Basis, LatticeGrid, WaveField, C64};

/// Linear map on position-basis fields with an adjoint.
pub trait OperatorHandle: Sync {
    fn grid(&self) -> LatticeGrid;
    fn apply(&self, psi: &WaveField) -> Result<WaveField>;
    fn apply_adjoint(&self, psi: &WaveField) -> Result<WaveField>;

    fn is_self_adjoint(&self) -> bool {
        false
    }

    /// Whether real-valued inputs are mapped to real-valued outputs.
    fn real_preserving(&self) -> bool {
        false
    }

    /// Tolerance for the adjoint-consistency contract.
    fn tolerance(&self) -> f64 {
        1e-10
    }
}

pub struct IdentityOp {
    pub grid: LatticeGrid,
}

impl OperatorHandle for IdentityOp {
    fn grid(&self) -> LatticeGrid {
        self.grid
    }
    fn apply(&self, psi: &WaveField) -> Result<WaveField> {
        Ok(psi.clone())
    }
    fn apply_adjoint(&self, psi: &WaveField) -> Result<WaveField> {
        Ok(psi.clone())
    }
    fn is_self_adjoint(&self) -> bool {
        true
    }
}

/// Multiplication by a complex diagonal in the position basis.
pub struct DiagonalOp {
    pub grid: LatticeGrid,
    pub diagonal: Vec<C64>,
}

impl OperatorHandle for DiagonalOp {
    fn grid(&self) -> LatticeGrid {
        self.grid
    }
    fn apply(&self, psi: &WaveField) -> Result<WaveField> {
        let values = psi
            .values()
            .iter()
            .zip(&self.diagonal)
            .map(|(v, d)| v * d)
            .collect();
        WaveField::new(self.grid, Basis::Position, values)
    }
    fn apply_adjoint(&self, psi: &WaveField) -> Result<WaveField> {
        let values = psi
            .values()
            .iter()
            .zip(&self.diagonal)
            .map(|(v, d)| v * d.conj())
            .collect();
        WaveField::new(self.grid, Basis::Position, values)
    }
    fn is_self_adjoint(&self) -> bool {
        self.diagonal.iter().all(|d| d.im == 0.0)
    }
}

/// Dense matrix acting on flat position-basis values.
pub struct DenseOp {
    pub grid: LatticeGrid,
    pub matrix: DMatrix<C64>,
}

impl OperatorHandle for DenseOp {
    fn grid(&self) -> LatticeGrid {
        self.grid
    }
    fn apply(&self, psi: &WaveField) -> Result<WaveField> {
        let v = nalgebra::DVector::from_column_slice(psi.values());
        WaveField::new(self.grid, Basis::Position, (&self.matrix * v).as_slice().to_vec())
    }
    fn apply_adjoint(&self, psi: &WaveField) -> Result<WaveField> {
        let v = nalgebra::DVector::from_column_slice(psi.values());
        WaveField::new(
            self.grid,
            Basis::Position,
            (self.matrix.adjoint() * v).as_slice().to_vec(),
        )
    }
}

/// `A - B` for two handles on the same grid.
pub struct DifferenceOp<'a> {
    pub a: &'a dyn OperatorHandle,
    pub b: &'a dyn OperatorHandle,
}

impl OperatorHandle for DifferenceOp<'_> {
    fn grid(&self) -> LatticeGrid {
        self.a.grid()
    }
    fn apply(&self, psi: &WaveField) -> Result<WaveField> {
        let mut out = self.a.apply(psi)?;
        out.axpy(C64::new(-1.0, 0.0), &self.b.apply(psi)?);
        Ok(out)
    }
    fn apply_adjoint(&self, psi: &WaveField) -> Result<WaveField> {
        let mut out = self.a.apply_adjoint(psi)?;
        out.axpy(C64::new(-1.0, 0.0), &self.b.apply_adjoint(psi)?);
        Ok(out)
    }
    fn is_self_adjoint(&self) -> bool {
        self.a.is_self_adjoint() && self.b.is_self_adjoint()
    }
    fn tolerance(&self) -> f64 {
        self.a.tolerance().max(self.b.tolerance())
    }
}

/// Handle built from closures; `adjoint` defaults to `apply` when absent.
pub struct FnOp<F, G>
where
    F: Fn(&WaveField) -> Result<WaveField> + Sync,
    G: Fn(&WaveField) -> Result<WaveField> + Sync,
{
    pub grid: LatticeGrid,
    pub apply: F,
    pub adjoint: Option<G>,
}

impl<F, G> OperatorHandle for FnOp<F, G>
where
    F: Fn(&WaveField) -> Result<WaveField> + Sync,
    G: Fn(&WaveField) -> Result<WaveField> + Sync,
{
    fn grid(&self) -> LatticeGrid {
        self.grid
    }
    fn apply(&self, psi: &WaveField) -> Result<WaveField> {
        (self.apply)(psi)
    }
    fn apply_adjoint(&self, psi: &WaveField) -> Result<WaveField> {
        match &self.adjoint {
            Some(g) => g(psi),
            None => (self.apply)(psi),
        }
    }
    fn is_self_adjoint(&self) -> bool {
        self.adjoint.is_none()
    }
}

/// Largest `|<phi, A psi> - conj(<psi, A* phi>)|` over a few random pairs, relative.
pub fn adjoint_defect(op: &dyn OperatorHandle, pairs: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..pairs as u64 {
        let phi = WaveField::random(op.grid(), Basis::Position, crate::rng::mix(seed, 2 * k));
        let psi = WaveField::random(op.grid(), Basis::Position, crate::rng::mix(seed, 2 * k + 1));
        let lhs = phi.inner(&op.apply(&psi)?);
        let rhs = op.apply_adjoint(&phi)?.inner(&psi);
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormMethod {
    /// Power iteration on `A A*`.
    Power,
    /// Lanczos with full reorthogonalization; requires a self-adjoint handle.
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormConfig {
    pub method: NormMethod,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self {
            method: NormMethod::Power,
            tol: 1e-4,
            max_iters: 500,
            seed: 0x005e_ed0f_d150,
        }
    }
}

impl NormConfig {
    pub fn lanczos(tol: f64, max_iters: usize) -> Self {
        Self {
            method: NormMethod::Lanczos,
            tol,
            max_iters,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub gap: f64,
}

/// Power iteration on `op op*`; the estimate `||op* x||` never exceeds the true norm.
pub fn operator_norm(
    op: &dyn OperatorHandle,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<NormEstimate> {
    let mut x = WaveField::random(op.grid(), Basis::Position, seed);
    let mut prev = f64::NAN;
    let mut gap = f64::INFINITY;
    for it in 1..=max_iters {
        let y = op.apply_adjoint(&x)?;
        let sigma = y.norm();
        if !sigma.is_finite() {
            return Err(Error::NonFinite("operator norm iterate".into()));
        }
        if sigma == 0.0 {
            return Ok(NormEstimate {
                value: 0.0,
                iterations: it,
                gap: 0.0,
            });
        }
        if prev.is_finite() {
            gap = (sigma - prev).abs() / sigma;
            if gap <= tol {
                return Ok(NormEstimate {
                    value: sigma,
                    iterations: it,
                    gap,
                });
            }
        }
        prev = sigma;
        x = op.apply(&y)?;
        if x.normalize() == 0.0 {
            return Ok(NormEstimate {
                value: sigma,
                iterations: it,
                gap: 0.0,
            });
        }
    }
    Err(Error::NotConverged {
        estimate: prev,
        iterations: max_iters,
        gap,
    })
}

/// Largest `|Ritz value|` of a self-adjoint handle by Lanczos with full reorthogonalization.
pub fn lanczos_norm(
    op: &dyn OperatorHandle,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<NormEstimate> {
    let mut q = WaveField::random(op.grid(), Basis::Position, seed);
    if op.real_preserving() {
        for v in q.values_mut() {
            v.im = 0.0;
        }
        q.normalize();
    }
    let mut basis: Vec<WaveField> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut prev = f64::NAN;
    let mut gap = f64::INFINITY;
    let mut estimate = 0.0;
    for it in 1..=max_iters {
        let mut w = op.apply(&q)?;
        if !w.is_finite() {
            return Err(Error::NonFinite("Lanczos iterate".into()));
        }
        let alpha = q.inner(&w).re;
        basis.push(q);
        alphas.push(alpha);
        for _ in 0..2 {
            for b in &basis {
                let c = b.inner(&w);
                w.axpy(-c, b);
            }
        }
        let beta = w.norm();
        estimate = ritz_extreme(&alphas, &betas);
        if prev.is_finite() && estimate > 0.0 {
            gap = (estimate - prev).abs() / estimate;
        }
        let exhausted = beta <= 1e-13 * estimate.max(1e-300);
        if estimate == 0.0 && beta == 0.0 || exhausted || gap <= tol {
            return Ok(NormEstimate {
                value: estimate,
                iterations: it,
                gap: if exhausted { 0.0 } else { gap },
            });
        }
        prev = estimate;
        betas.push(beta);
        w.scale(C64::new(1.0 / beta, 0.0));
        q = w;
    }
    Err(Error::NotConverged {
        estimate,
        iterations: max_iters,
        gap,
    })
}

fn ritz_extreme(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    SymmetricEigen::new(t)
        .eigenvalues
        .iter()
        .fold(0.0, |m: f64, v| m.max(v.abs()))
}

pub fn estimate_norm(op: &dyn OperatorHandle, cfg: &NormConfig) -> Result<NormEstimate> {
    match cfg.method {
        NormMethod::Power => operator_norm(op, cfg.tol, cfg.max_iters, cfg.seed),
        NormMethod::Lanczos => {
            if !op.is_self_adjoint() {
                return Err(Error::InvalidArgument(
                    "Lanczos norm needs a self-adjoint handle".into(),
                ));
            }
            lanczos_norm(op, cfg.tol, cfg.max_iters, cfg.seed)
        }
    }
}
