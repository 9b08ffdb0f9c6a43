//! Dense reference computations used by the self-test on tiny grids.

use anyhow::Result;
use dysonlab::evolve::dense_oracle;
use dysonlab::lattice::{Basis, WaveField, C64};
use dysonlab::potential::PotentialSample;
use nalgebra::{DMatrix, DVector, Schur};

/// `T_0(t) psi, ..., T_J(t) psi` from the nested integrals
/// `T_j(s) = int_0^s V(u) T_{j-1}(u) du`, `V(u) = e^{iuH0} V e^{-iuH0}`,
/// integrated as one ODE system by classical RK4 in the eigenbasis of `H0`.
pub fn dyson_terms(psi: &WaveField, pot: &PotentialSample, max_j: usize, t: f64, steps: usize) -> Result<Vec<WaveField>> {
    let grid = pot.grid();
    let free = dense_oracle(grid, pot, 0.0)?;
    let q = free.eigenvectors().map(|x| C64::new(x, 0.0));
    let energies = free.eigenvalues().clone();
    let v = DMatrix::from_diagonal(&DVector::from_iterator(
        grid.num_sites(),
        pot.couplings().iter().map(|&g| C64::new(g, 0.0)),
    ));
    let v_hat = q.transpose() * v * &q;
    // V(u) x in the eigenbasis: D(u) V_hat D(u)^* x with D(u) = diag(e^{iuE}).
    let interaction = |u: f64, x: &DVector<C64>| -> DVector<C64> {
        let phase = |e: f64| C64::from_polar(1.0, u * e);
        let y = DVector::from_iterator(x.len(), x.iter().zip(energies.iter()).map(|(c, &e)| c * phase(e).conj()));
        let mut z = &v_hat * y;
        for (c, &e) in z.iter_mut().zip(energies.iter()) {
            *c *= phase(e);
        }
        z
    };
    let start = q.transpose() * DVector::from_column_slice(psi.values());
    let mut y: Vec<DVector<C64>> = (0..=max_j)
        .map(|j| if j == 0 { start.clone() } else { DVector::zeros(start.len()) })
        .collect();
    let rhs = |u: f64, y: &[DVector<C64>]| -> Vec<DVector<C64>> {
        (0..=max_j)
            .map(|j| if j == 0 { DVector::zeros(y[0].len()) } else { interaction(u, &y[j - 1]) })
            .collect()
    };
    let axpy = |y: &[DVector<C64>], k: &[DVector<C64>], a: f64| -> Vec<DVector<C64>> {
        y.iter().zip(k).map(|(p, d)| p + d * C64::new(a, 0.0)).collect()
    };
    let h = t / steps as f64;
    for step in 0..steps {
        let u = step as f64 * h;
        let k1 = rhs(u, &y);
        let k2 = rhs(u + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = rhs(u + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = rhs(u + h, &axpy(&y, &k3, h));
        for j in 1..=max_j {
            y[j] += (&k1[j] + &k2[j] * C64::new(2.0, 0.0) + &k3[j] * C64::new(2.0, 0.0) + &k4[j]) * C64::new(h / 6.0, 0.0);
        }
    }
    y.iter()
        .map(|c| Ok(WaveField::new(grid, Basis::Position, (&q * c).as_slice().to_vec())?))
        .collect()
}

/// `f(U) = Q diag(f(arg u_k)) Q^*` from the complex Schur form of a unitary `U`.
///
/// Returns the matrix and the largest off-diagonal entry of the triangular factor,
/// which should vanish for a normal input.
pub fn circle_calculus<F: Fn(f64) -> C64>(u: &DMatrix<C64>, f: F) -> (DMatrix<C64>, f64) {
    let (q, t) = Schur::new(u.clone()).unpack();
    let dim = u.nrows();
    let mut off = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                off = off.max(t[(i, j)].norm());
            }
        }
    }
    let diag = DVector::from_iterator(dim, (0..dim).map(|k| f(t[(k, k)].arg())));
    (&q * DMatrix::from_diagonal(&diag) * q.adjoint(), off)
}

pub fn apply_dense(m: &DMatrix<C64>, psi: &WaveField) -> Result<WaveField> {
    let v = m * DVector::from_column_slice(psi.values());
    Ok(WaveField::new(psi.grid(), psi.basis(), v.as_slice().to_vec())?)
}
