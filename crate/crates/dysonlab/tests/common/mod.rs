//! Dense reference computations shared by the integration tests. Nothing here
//! goes through the FFT engine or the window sweep.

#![allow(dead_code)]

use dysonlab::lattice::{Basis, LatticeGrid, WaveField, C64};
use dysonlab::potential::{DriveEnvelope, PotentialSample};
use nalgebra::{DMatrix, DVector};

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Adjacency matrix of the periodic nearest-neighbour graph, built site by site.
pub fn stencil_h0(grid: LatticeGrid) -> DMatrix<C64> {
    let n = grid.size();
    let dim = grid.num_sites();
    let mut h = DMatrix::zeros(dim, dim);
    for site in 0..dim {
        let coords = grid.coords(site);
        for axis in 0..grid.dim() {
            for step in [1, n - 1] {
                let mut nb = coords.clone();
                nb[axis] = (nb[axis] + step) % n;
                h[(grid.index(&nb), site)] += c(1.0);
            }
        }
    }
    h
}

pub fn potential_matrix(pot: &PotentialSample, scale: f64) -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_iterator(
        pot.couplings().len(),
        pot.couplings().iter().map(|g| c(g * scale)),
    ))
}

/// `exp(m)` by scaling and squaring of a 30-term Taylor series.
pub fn expm(m: &DMatrix<C64>) -> DMatrix<C64> {
    let norm = m.iter().map(|v| v.norm()).sum::<f64>();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = m * c(scale);
    let dim = m.nrows();
    let mut term = DMatrix::<C64>::identity(dim, dim);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &a * c(1.0 / k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(-i t h)`.
pub fn unitary(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    expm(&(h * C64::new(0.0, -t)))
}

pub fn apply(m: &DMatrix<C64>, psi: &WaveField) -> Vec<C64> {
    let v = DVector::from_column_slice(psi.values());
    (m * v).as_slice().to_vec()
}

pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn l2_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn field(grid: LatticeGrid, values: Vec<C64>) -> WaveField {
    WaveField::new(grid, Basis::Position, values).unwrap()
}

/// Dense `T_0(b, a), ..., T_J(b, a)` from the ODE `d/ds T_j = V(s; a) T_{j-1}`
/// integrated by classical RK4 with `steps` steps.
pub fn dyson_terms_rk4(
    grid: LatticeGrid,
    pot: &PotentialSample,
    env: &DriveEnvelope,
    max_j: usize,
    a: f64,
    b: f64,
    steps: usize,
) -> Vec<DMatrix<C64>> {
    let h0 = stencil_h0(grid);
    let v = potential_matrix(pot, 1.0);
    let dim = grid.num_sites();
    let h = (b - a) / steps as f64;
    let half = unitary(&h0, -0.5 * h); // e^{i h H0 / 2}
    let mut u = DMatrix::<C64>::identity(dim, dim); // e^{i (s-a) H0}
    let interaction = |u: &DMatrix<C64>, s: f64| -> DMatrix<C64> { u * &v * u.adjoint() * c(env.value(s)) };
    let mut terms: Vec<DMatrix<C64>> = (0..=max_j)
        .map(|j| if j == 0 { DMatrix::identity(dim, dim) } else { DMatrix::zeros(dim, dim) })
        .collect();
    for k in 0..steps {
        let s = a + k as f64 * h;
        let v0 = interaction(&u, s);
        let um = &half * &u;
        let vm = interaction(&um, s + 0.5 * h);
        let u1 = &half * &um;
        let v1 = interaction(&u1, s + h);
        let rhs = |vs: &DMatrix<C64>, t: &[DMatrix<C64>]| -> Vec<DMatrix<C64>> {
            (0..=max_j)
                .map(|j| if j == 0 { DMatrix::zeros(dim, dim) } else { vs * &t[j - 1] })
                .collect()
        };
        let comb = |base: &[DMatrix<C64>], k: &[DMatrix<C64>], f: f64| -> Vec<DMatrix<C64>> {
            base.iter().zip(k).map(|(x, y)| x + y * c(f)).collect()
        };
        let k1 = rhs(&v0, &terms);
        let k2 = rhs(&vm, &comb(&terms, &k1, 0.5 * h));
        let k3 = rhs(&vm, &comb(&terms, &k2, 0.5 * h));
        let k4 = rhs(&v1, &comb(&terms, &k3, h));
        for j in 1..=max_j {
            terms[j] += (&k1[j] + &k2[j] * c(2.0) + &k3[j] * c(2.0) + &k4[j]) * c(h / 6.0);
        }
        u = u1;
    }
    terms
}

/// `int_{-pi}^{pi} f(x) dx / (2 pi)` by the periodic trapezoid rule, which is
/// spectrally accurate for smooth periodic integrands.
pub fn circle_average<F: Fn(f64) -> C64>(f: F, points: usize) -> C64 {
    let h = 2.0 * std::f64::consts::PI / points as f64;
    (0..points).map(|k| f(-std::f64::consts::PI + k as f64 * h)).sum::<C64>() / points as f64
}

/// Largest singular value of a small dense matrix.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    m.clone().singular_values().iter().fold(0.0, |a: f64, &b| a.max(b))
}
