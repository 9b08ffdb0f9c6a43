//! Dyson-series operators `T_j`, their norms, truncated sums and the variance parameter.
//!
//! `T_j(b, a) = int_{a <= s_1 <= ... <= s_j <= b} V(s_j; a) ... V(s_1; a) ds` with
//! `V(s; a) = e^{i(s-a)H0} phi(s) V e^{-i(s-a)H0}`. All orders up to `J` are
//! produced together by sweeping base windows of length `<= h`: inside a window
//! the nested integrals are collocated on the Gauss-Legendre nodes, and windows
//! are joined with
//! `T_j(s+t) = sum_k e^{isH0} T_{j-k}(t) e^{-isH0} T_k(s)`.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lattice::{free_kernel_column, Basis, FourierEngine, LatticeGrid, WaveField, C64};
use crate::operator::{estimate_norm, NormConfig, NormEstimate, OperatorHandle};
use crate::potential::{DriveEnvelope, PotentialSample};
use crate::quadrature::UnitRule;

pub const MAX_ORDER: usize = 12;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// How consecutive windows are joined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductForm {
    /// `T_j(s+t) = sum_k e^{isH0} T_{j-k}(t) e^{-isH0} T_k(s)`.
    Conjugated,
    /// `T_j(s+t) = sum_k T_k(s) T_{j-k}(t)` with no intertwining factor.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureScheme {
    h: f64,
    rule: UnitRule,
    /// Relative tolerance for the `h` versus `h/2` comparison; `None` skips it.
    pub tolerance: Option<f64>,
    /// Number of times `h` may be halved while chasing the tolerance.
    pub max_depth: usize,
    pub form: ProductForm,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        Self {
            h: 0.25,
            rule: UnitRule::gauss_legendre(8),
            tolerance: Some(1e-8),
            max_depth: 3,
            form: ProductForm::Conjugated,
        }
    }
}

impl QuadratureScheme {
    pub fn new(h: f64, nodes: usize) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) || nodes == 0 {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs h > 0 and at least one node (h = {h}, q = {nodes})"
            )));
        }
        Ok(Self {
            h,
            rule: UnitRule::gauss_legendre(nodes),
            ..Self::default()
        })
    }

    pub fn without_error_control(mut self) -> Self {
        self.tolerance = None;
        self
    }

    pub fn with_tolerance(mut self, tol: f64, max_depth: usize) -> Self {
        self.tolerance = Some(tol);
        self.max_depth = max_depth;
        self
    }

    pub fn with_form(mut self, form: ProductForm) -> Self {
        self.form = form;
        self
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn rule(&self) -> &UnitRule {
        &self.rule
    }

    /// Nodes on `[0, h]`.
    pub fn nodes(&self) -> Vec<f64> {
        self.rule.nodes.iter().map(|x| x * self.h).collect()
    }

    /// Weights on `[0, h]`; they sum to `h`.
    pub fn weights(&self) -> Vec<f64> {
        self.rule.weights.iter().map(|w| w * self.h).collect()
    }

    fn windows(&self, length: f64, refinement: usize) -> usize {
        let base = ((length / self.h) - 1e-12).ceil().max(1.0) as usize;
        base << refinement
    }
}

/// Interaction-picture application in the frequency basis, restricted to the
/// last coordinates that carry the potential.
struct Interaction<'a> {
    engine: Arc<FourierEngine>,
    pot: &'a PotentialSample,
    envelope: &'a DriveEnvelope,
    cols: Vec<usize>,
    /// `+1` for `V(s)`, `-1` for the time-reversed picture used by adjoints.
    direction: f64,
    /// Envelope is evaluated at `env_origin + env_sign * tau`.
    env_origin: f64,
    env_sign: f64,
}

impl<'a> Interaction<'a> {
    fn new(pot: &'a PotentialSample, envelope: &'a DriveEnvelope) -> Self {
        let grid = pot.grid();
        let n = grid.size();
        let mut cols: Vec<usize> = pot.support().iter().map(|&i| i % n).collect();
        cols.sort_unstable();
        cols.dedup();
        Self {
            engine: FourierEngine::for_grid(grid),
            pot,
            envelope,
            cols,
            direction: 1.0,
            env_origin: 0.0,
            env_sign: 1.0,
        }
    }

    /// `out = V(tau) input` where `tau` is measured from the window reference.
    fn apply(&self, input: &[C64], tau: f64, out: &mut [C64], scratch: &mut [C64]) {
        self.engine.free_phase_into(input, scratch, self.direction * tau);
        self.engine.inverse_onto_columns_raw(scratch, &self.cols);
        let t_env = self.env_origin + self.env_sign * tau;
        out.iter_mut().for_each(|v| *v = ZERO);
        // Both transforms are unnormalized; the 1/N^d is folded into V.
        let scale = 1.0 / out.len() as f64;
        let g = self.pot.couplings();
        if self.envelope.is_uniform() {
            let e = scale * self.envelope.value(t_env);
            for &i in self.pot.support() {
                out[i] = scratch[i] * (e * g[i]);
            }
        } else {
            for &i in self.pot.support() {
                out[i] = scratch[i] * (scale * self.envelope.site_value(i, t_env) * g[i]);
            }
        }
        self.engine.forward_from_columns_raw(out, &self.cols);
        self.engine.apply_free_phase(out, -self.direction * tau);
    }
}

fn axpy(y: &mut [C64], a: f64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi * a;
    }
}

/// Sweeps the family `z_j`, `j <= max_j`, across windows of `[0, length]`.
struct Sweep<'a> {
    inter: Interaction<'a>,
    rule: &'a UnitRule,
    max_j: usize,
    windows: usize,
    length: f64,
}

impl Sweep<'_> {
    fn run(&self, z: &mut [Vec<C64>]) {
        self.range(z, 0, self.windows);
    }

    /// Interval halving over the window range `[first, first + count)`.
    fn range(&self, z: &mut [Vec<C64>], first: usize, count: usize) {
        if count == 1 {
            self.window(z, first);
        } else {
            let half = count / 2;
            self.range(z, first, half);
            self.range(z, first + half, count - half);
        }
    }

    fn window(&self, z: &mut [Vec<C64>], index: usize) {
        let len = self.length / self.windows as f64;
        let start = index as f64 * len;
        let q = self.rule.len();
        let size = z[0].len();
        let mut scratch = vec![ZERO; size];
        let mut ys: Vec<Vec<C64>> = (0..q).map(|_| vec![ZERO; size]).collect();
        let mut prev: Vec<Vec<C64>> = Vec::new();
        for j in 1..=self.max_j {
            for (l, y) in ys.iter_mut().enumerate() {
                let tau = start + len * self.rule.nodes[l];
                let input = if j == 1 { &z[0] } else { &prev[l] };
                self.inter.apply(input, tau, y, &mut scratch);
            }
            if j < self.max_j {
                let mut next: Vec<Vec<C64>> = Vec::with_capacity(q);
                for i in 0..q {
                    let mut v = z[j].clone();
                    for (l, y) in ys.iter().enumerate() {
                        axpy(&mut v, len * self.rule.integration[i][l], y);
                    }
                    next.push(v);
                }
                prev = next;
            }
            for (l, y) in ys.iter().enumerate() {
                axpy(&mut z[j], len * self.rule.weights[l], y);
            }
        }
    }
}

/// Result of a family evaluation: `fields[j] = T_j psi` and the quadrature estimate.
#[derive(Debug, Clone)]
pub struct Family {
    pub fields: Vec<WaveField>,
    /// Relative `h` versus `h/2` difference, when error control is on.
    pub error_estimate: Option<f64>,
}

fn family_once(
    psi_hat: &[C64],
    pot: &PotentialSample,
    envelope: &DriveEnvelope,
    max_j: usize,
    a: f64,
    b: f64,
    scheme: &QuadratureScheme,
    adjoint: bool,
    refinement: usize,
) -> Vec<Vec<C64>> {
    let engine = FourierEngine::for_grid(pot.grid());
    let length = b - a;
    let mut z: Vec<Vec<C64>> = Vec::with_capacity(max_j + 1);
    let mut start = psi_hat.to_vec();
    if adjoint {
        engine.apply_free_phase(&mut start, length);
    }
    z.push(start);
    for _ in 0..max_j {
        z.push(vec![ZERO; psi_hat.len()]);
    }
    if max_j > 0 && length > 0.0 {
        let mut inter = Interaction::new(pot, envelope);
        if adjoint {
            inter.direction = -1.0;
            inter.env_origin = b;
            inter.env_sign = -1.0;
        } else {
            inter.env_origin = a;
        }
        let sweep = Sweep {
            inter,
            rule: &scheme.rule,
            max_j,
            windows: scheme.windows(length, refinement),
            length,
        };
        sweep.run(&mut z);
    }
    if adjoint {
        for v in z.iter_mut() {
            engine.apply_free_phase(v, -length);
        }
    }
    z
}

fn check_inputs(field: &WaveField, pot: &PotentialSample, max_j: usize, a: f64, b: f64) -> Result<()> {
    field.expect_basis(Basis::Position)?;
    field.expect_grid(pot.grid())?;
    if max_j > MAX_ORDER {
        return Err(Error::OrderTooLarge(max_j));
    }
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidArgument(format!("window [{a}, {b}] needs a <= b")));
    }
    Ok(())
}

/// `T_0 psi, ..., T_J psi` over the window `[a, b]` (or their adjoints).
pub fn tj_family_window(
    field: &WaveField,
    pot: &PotentialSample,
    envelope: &DriveEnvelope,
    max_j: usize,
    a: f64,
    b: f64,
    scheme: &QuadratureScheme,
    adjoint: bool,
) -> Result<Family> {
    check_inputs(field, pot, max_j, a, b)?;
    if scheme.form == ProductForm::Literal {
        if adjoint {
            return Err(Error::InvalidArgument(
                "the literal product form has no adjoint".into(),
            ));
        }
        return literal_family(field, pot, envelope, max_j, a, b, scheme);
    }
    let engine = FourierEngine::for_grid(pot.grid());
    let mut psi_hat = field.values().to_vec();
    engine.forward_in_place(&mut psi_hat);
    let scale = field.norm().max(1e-300);
    let mut z = family_once(&psi_hat, pot, envelope, max_j, a, b, scheme, adjoint, 0);
    let mut estimate = None;
    if let Some(tol) = scheme.tolerance {
        if max_j > 0 && b > a {
            let mut depth = 0;
            loop {
                let finer = family_once(&psi_hat, pot, envelope, max_j, a, b, scheme, adjoint, depth + 1);
                let diff = z
                    .iter()
                    .zip(&finer)
                    .map(|(u, v)| {
                        u.iter().zip(v).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
                    })
                    .fold(0.0, f64::max)
                    / scale;
                z = finer;
                depth += 1;
                estimate = Some(diff);
                if diff <= tol {
                    break;
                }
                if depth >= scheme.max_depth {
                    return Err(Error::Quadrature {
                        estimate: diff,
                        tolerance: tol,
                    });
                }
            }
        }
    }
    let fields = z
        .into_iter()
        .map(|mut v| {
            engine.inverse_in_place(&mut v);
            WaveField::new(pot.grid(), Basis::Position, v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Family {
        fields,
        error_estimate: estimate,
    })
}

/// Recursive halving that composes halves as `T_k(s) T_{j-k}(t)` without the
/// intertwining factor; kept only to exhibit the discrepancy.
fn literal_family(
    field: &WaveField,
    pot: &PotentialSample,
    envelope: &DriveEnvelope,
    max_j: usize,
    a: f64,
    b: f64,
    scheme: &QuadratureScheme,
) -> Result<Family> {
    let length = b - a;
    if length <= scheme.h * (1.0 + 1e-12) || max_j == 0 {
        let direct = scheme.clone().with_form(ProductForm::Conjugated).without_error_control();
        return tj_family_window(field, pot, envelope, max_j, a, b, &direct, false);
    }
    let mid = a + 0.5 * length;
    // Both halves are measured from their own left end, as in the printed identity.
    let second = literal_family(field, pot, envelope, max_j, mid, b, scheme)?;
    let mut out = vec![WaveField::zeros(field.grid(), Basis::Position); max_j + 1];
    for (m, inner) in second.fields.iter().enumerate() {
        let first = literal_family(inner, pot, envelope, max_j - m, a, mid, scheme)?;
        for (k, f) in first.fields.iter().enumerate() {
            out[k + m].axpy(C64::new(1.0, 0.0), f);
        }
    }
    Ok(Family {
        fields: out,
        error_estimate: None,
    })
}

/// `e^{isH0} lambda V e^{-isH0} psi`.
pub fn apply_interaction(field: &WaveField, pot: &PotentialSample, lambda: f64, s: f64) -> Result<WaveField> {
    field.expect_basis(Basis::Position)?;
    field.expect_grid(pot.grid())?;
    let env = DriveEnvelope::constant();
    let inter = Interaction::new(pot, &env);
    let engine = FourierEngine::for_grid(pot.grid());
    let mut x = field.values().to_vec();
    engine.forward_in_place(&mut x);
    let mut out = vec![ZERO; x.len()];
    let mut scratch = vec![ZERO; x.len()];
    inter.apply(&x, s, &mut out, &mut scratch);
    engine.inverse_in_place(&mut out);
    for v in out.iter_mut() {
        *v *= lambda;
    }
    WaveField::new(pot.grid(), Basis::Position, out)
}

/// `T_1(b, a) psi = int_a^b V(s; a) psi ds` for a time-independent potential.
pub fn apply_t1(field: &WaveField, pot: &PotentialSample, a: f64, b: f64, quad: &QuadratureScheme) -> Result<WaveField> {
    apply_t1_driven(field, pot, &DriveEnvelope::constant(), a, b, quad)
}

pub fn apply_t1_driven(
    field: &WaveField,
    pot: &PotentialSample,
    envelope: &DriveEnvelope,
    a: f64,
    b: f64,
    quad: &QuadratureScheme,
) -> Result<WaveField> {
    let mut fam = tj_family_window(field, pot, envelope, 1, a, b, quad, false)?;
    Ok(fam.fields.pop().expect("order one present"))
}

/// `T_j(t) psi`; `j = 0` returns `psi`.
pub fn apply_tj(field: &WaveField, pot: &PotentialSample, j: usize, t: f64, scheme: &QuadratureScheme) -> Result<WaveField> {
    let mut fam = tj_family(field, pot, j, t, scheme)?;
    Ok(fam.pop().expect("family is non-empty"))
}

pub fn tj_family(field: &WaveField, pot: &PotentialSample, max_j: usize, t: f64, scheme: &QuadratureScheme) -> Result<Vec<WaveField>> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("t = {t} must be non-negative")));
    }
    Ok(tj_family_window(field, pot, &DriveEnvelope::constant(), max_j, 0.0, t, scheme, false)?.fields)
}

/// `T_j(b, a)` as an operator handle.
pub struct TjOp<'a> {
    pub pot: &'a PotentialSample,
    pub envelope: DriveEnvelope,
    pub j: usize,
    pub a: f64,
    pub b: f64,
    pub scheme: QuadratureScheme,
}

impl<'a> TjOp<'a> {
    pub fn new(pot: &'a PotentialSample, j: usize, t: f64, scheme: QuadratureScheme) -> Self {
        Self {
            pot,
            envelope: DriveEnvelope::constant(),
            j,
            a: 0.0,
            b: t,
            scheme,
        }
    }
}

impl OperatorHandle for TjOp<'_> {
    fn grid(&self) -> LatticeGrid {
        self.pot.grid()
    }

    fn apply(&self, psi: &WaveField) -> Result<WaveField> {
        let mut fam = tj_family_window(psi, self.pot, &self.envelope, self.j, self.a, self.b, &self.scheme, false)?;
        Ok(fam.fields.pop().expect("family is non-empty"))
    }

    fn apply_adjoint(&self, psi: &WaveField) -> Result<WaveField> {
        let mut fam = tj_family_window(psi, self.pot, &self.envelope, self.j, self.a, self.b, &self.scheme, true)?;
        Ok(fam.fields.pop().expect("family is non-empty"))
    }

    fn is_self_adjoint(&self) -> bool {
        self.j <= 1
    }

    fn tolerance(&self) -> f64 {
        self.scheme.tolerance.unwrap_or(1e-8)
    }
}

/// `S(t) = int_{-t/2}^{t/2} V(u) du = e^{-itH0/2} T_1(t) e^{itH0/2}`.
///
/// `S` is real symmetric, so `||S|| = ||T_1(t)||` and real inputs need only the
/// nodes on `[0, t/2]`: `S x = 2 Re int_0^{t/2} V(u) x du`.
pub struct CenteredT1Op<'a> {
    pub pot: &'a PotentialSample,
    pub t: f64,
    pub scheme: QuadratureScheme,
}

impl CenteredT1Op<'_> {
    fn apply_real(&self, x: &[f64]) -> Vec<f64> {
        let grid = self.pot.grid();
        let env = DriveEnvelope::constant();
        let inter = Interaction::new(self.pot, &env);
        let engine = FourierEngine::for_grid(grid);
        let mut xh: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
        engine.forward_in_place(&mut xh);
        let half = 0.5 * self.t;
        let windows = self.scheme.windows(half, 0);
        let len = half / windows as f64;
        // A window shorter than h gets proportionally fewer nodes, never fewer than 8.
        let q = self.scheme.rule.len();
        let scaled = ((q as f64 * len / self.scheme.h).ceil() as usize).clamp(q.min(8), q);
        let short;
        let rule = if scaled < q {
            short = UnitRule::gauss_legendre(scaled);
            &short
        } else {
            &self.scheme.rule
        };
        let mut acc = vec![ZERO; xh.len()];
        let mut y = vec![ZERO; xh.len()];
        let mut scratch = vec![ZERO; xh.len()];
        for w in 0..windows {
            for (xl, wl) in rule.nodes.iter().zip(&rule.weights) {
                let tau = (w as f64 + xl) * len;
                inter.apply(&xh, tau, &mut y, &mut scratch);
                axpy(&mut acc, 2.0 * len * wl, &y);
            }
        }
        engine.inverse_in_place(&mut acc);
        acc.iter().map(|v| v.re).collect()
    }
}

impl OperatorHandle for CenteredT1Op<'_> {
    fn grid(&self) -> LatticeGrid {
        self.pot.grid()
    }

    fn apply(&self, psi: &WaveField) -> Result<WaveField> {
        psi.expect_basis(Basis::Position)?;
        let re: Vec<f64> = psi.values().iter().map(|v| v.re).collect();
        let out_re = self.apply_real(&re);
        let values = if psi.values().iter().any(|v| v.im != 0.0) {
            let im: Vec<f64> = psi.values().iter().map(|v| v.im).collect();
            let out_im = self.apply_real(&im);
            out_re.iter().zip(&out_im).map(|(&r, &i)| C64::new(r, i)).collect()
        } else {
            out_re.iter().map(|&r| C64::new(r, 0.0)).collect()
        };
        WaveField::new(self.pot.grid(), Basis::Position, values)
    }

    fn apply_adjoint(&self, psi: &WaveField) -> Result<WaveField> {
        self.apply(psi)
    }

    fn is_self_adjoint(&self) -> bool {
        true
    }

    fn real_preserving(&self) -> bool {
        true
    }
}

/// `||T_1(s)||` through the handle best suited to the norm method.
pub fn t1_norm(pot: &PotentialSample, s: f64, quad: &QuadratureScheme, cfg: &NormConfig) -> Result<NormEstimate> {
    if s == 0.0 || pot.support().is_empty() {
        return Ok(NormEstimate {
            value: 0.0,
            iterations: 0,
            gap: 0.0,
        });
    }
    let op = CenteredT1Op {
        pot,
        t: s,
        scheme: quad.clone(),
    };
    estimate_norm(&op, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtReport {
    /// `max_s ||T_1(s)|| / sqrt(s)` over the dyadic grid.
    pub value: f64,
    /// `(s, ||T_1(s)||)` on the dyadic grid.
    pub grid: Vec<(f64, f64)>,
    /// `||V||_inf + sum_j ||T_1(2^j)||`.
    pub surrogate: f64,
}

/// `{1, 2, 4, ..., 2^floor(log2 t), t}` without duplicates.
pub fn dyadic_grid(t: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut s = 1.0;
    while s <= t * (1.0 + 1e-12) {
        out.push(s);
        s *= 2.0;
    }
    if let Some(&last) = out.last() {
        if (t - last).abs() > 1e-12 * t {
            out.push(t);
        }
    }
    out
}

pub fn compute_mt(pot: &PotentialSample, t: f64, quad: &QuadratureScheme, cfg: &NormConfig) -> Result<MtReport> {
    if !(t >= 1.0) {
        return Err(Error::InvalidArgument(format!("M_t needs t >= 1, got {t}")));
    }
    let mut grid = Vec::new();
    let mut value = 0.0f64;
    let mut surrogate = pot.sup_norm();
    for s in dyadic_grid(t) {
        let norm = t1_norm(pot, s, quad, cfg)?.value;
        value = value.max(norm / s.sqrt());
        if (s.log2() - s.log2().round()).abs() < 1e-12 {
            surrogate += norm;
        }
        grid.push((s, norm));
    }
    Ok(MtReport {
        value,
        grid,
        surrogate,
    })
}

/// `e^{-itH0} sum_{j <= M} (-i lambda)^j T_j(t) psi`.
pub fn dyson_partial_sum(
    field: &WaveField,
    pot: &PotentialSample,
    lambda: f64,
    m: usize,
    t: f64,
    scheme: &QuadratureScheme,
) -> Result<WaveField> {
    let mut all = dyson_partial_sums(field, pot, lambda, m, t, scheme)?;
    Ok(all.pop().expect("at least the M = 0 sum"))
}

/// Partial sums `S_0 psi, ..., S_M psi` from a single family sweep.
pub fn dyson_partial_sums(
    field: &WaveField,
    pot: &PotentialSample,
    lambda: f64,
    m: usize,
    t: f64,
    scheme: &QuadratureScheme,
) -> Result<Vec<WaveField>> {
    let terms = if lambda == 0.0 {
        vec![field.clone()]
    } else {
        tj_family(field, pot, m, t, scheme)?
    };
    let mut sums = Vec::with_capacity(m + 1);
    let mut acc = WaveField::zeros(field.grid(), Basis::Position);
    let mut weight = C64::new(1.0, 0.0);
    for j in 0..=m {
        if let Some(term) = terms.get(j) {
            acc.axpy(weight, term);
        }
        sums.push(crate::lattice::free_propagate(&acc, t));
        weight *= C64::new(0.0, -lambda);
    }
    Ok(sums)
}

/// Dense `A_n(t) = int_0^t e^{isH0} |n><n| e^{-isH0} ds` for every site of the support.
pub fn variance_matrices(pot: &PotentialSample, t: f64, quad: &QuadratureScheme) -> Result<Vec<DMatrix<C64>>> {
    let grid = pot.grid();
    let dim = grid.num_sites();
    if dim > 4096 {
        return Err(Error::OversizeGrid { sites: dim });
    }
    let a0 = site_matrix(grid, t, quad);
    Ok(pot
        .support()
        .iter()
        .map(|&n| DMatrix::from_fn(dim, dim, |r, c| a0[(grid.difference(r, n), grid.difference(c, n))]))
        .collect())
}

/// `A_0(t) = W W*` with columns `sqrt(w_l) e^{is_l H0} delta_0`.
fn site_matrix(grid: LatticeGrid, t: f64, quad: &QuadratureScheme) -> DMatrix<C64> {
    let w = kernel_columns(grid, t, quad);
    &w * w.adjoint()
}

fn kernel_columns(grid: LatticeGrid, t: f64, quad: &QuadratureScheme) -> DMatrix<C64> {
    let dim = grid.num_sites();
    if t <= 0.0 {
        return DMatrix::zeros(dim, 1);
    }
    let windows = quad.windows(t, 0);
    let len = t / windows as f64;
    let q = quad.rule.len();
    let mut w = DMatrix::<C64>::zeros(dim, windows * q);
    for k in 0..windows {
        for (l, (x, wt)) in quad.rule.nodes.iter().zip(&quad.rule.weights).enumerate() {
            let s = (k as f64 + x) * len;
            let col = free_kernel_column(grid, -s);
            let sw = (len * wt).sqrt();
            for (r, v) in col.iter().enumerate() {
                w[(r, k * q + l)] = v * sw;
            }
        }
    }
    w
}

/// `||sum_n A_n(t)^2||` by translation invariance: `A_n` is `A_0` shifted by `n`.
pub fn variance_parameter(pot: &PotentialSample, t: f64, quad: &QuadratureScheme) -> Result<f64> {
    let grid = pot.grid();
    let dim = grid.num_sites();
    if dim > 4096 {
        return Err(Error::OversizeGrid { sites: dim });
    }
    if t == 0.0 || pot.support().is_empty() {
        return Ok(0.0);
    }
    let w = kernel_columns(grid, t, quad);
    let gram = w.adjoint() * &w;
    let b = (&w * gram) * w.adjoint();
    let mut total = DMatrix::<C64>::zeros(dim, dim);
    let shifts: Vec<Vec<usize>> = pot
        .support()
        .iter()
        .map(|&n| (0..dim).map(|r| grid.difference(r, n)).collect())
        .collect();
    for shift in &shifts {
        for c in 0..dim {
            let sc = shift[c];
            for r in 0..dim {
                total[(r, c)] += b[(shift[r], sc)];
            }
        }
    }
    let eig = SymmetricEigen::new(total).eigenvalues;
    Ok(eig.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
}

/// `sigma_d(t)`: `t log^2(2+t)` in two dimensions, `t log(2+t)` above.
pub fn sigma_d(d: usize, t: f64) -> f64 {
    let t = t.abs();
    let l = (2.0 + t).ln();
    if d == 2 {
        t * l * l
    } else {
        t * l
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DysonBound {
    pub j: usize,
    pub t: f64,
    pub k: f64,
    pub sigma: f64,
    pub value: f64,
}

impl DysonBound {
    /// `(K^2 sigma_d(t) / j)^{j/2}`.
    pub fn new(d: usize, j: usize, t: f64, k: f64) -> Self {
        let sigma = sigma_d(d, t);
        let value = if j == 0 {
            1.0
        } else {
            (k * k * sigma / j as f64).powf(j as f64 / 2.0)
        };
        Self {
            j,
            t,
            k,
            sigma,
            value,
        }
    }
}

/// `||V||_inf^j t^j / j!`.
pub fn apriori_bound(sup: f64, j: usize, t: f64) -> f64 {
    (1..=j).fold(1.0, |acc, k| acc * sup * t / k as f64)
}
