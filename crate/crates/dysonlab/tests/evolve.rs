mod common;

use common::*;
use dysonlab::evolve::*;
use dysonlab::lattice::{free_propagate, Basis, LatticeGrid, WaveField, C64};
use dysonlab::potential::*;
use dysonlab::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn grid(d: usize, n: usize) -> LatticeGrid {
    LatticeGrid::new(d, n).unwrap()
}

/// Time-ordered product of short exact exponentials at midpoint couplings.
fn driven_oracle(pot: &PotentialSample, lambda: f64, env: &DriveEnvelope, a: f64, b: f64, steps: usize) -> DMatrix<C64> {
    let g = pot.grid();
    let h0 = stencil_h0(g);
    let dt = (b - a) / steps as f64;
    let dim = g.num_sites();
    let mut u = DMatrix::<C64>::identity(dim, dim);
    for k in 0..steps {
        let s = a + (k as f64 + 0.5) * dt;
        let mut h = h0.clone();
        for i in 0..dim {
            h[(i, i)] += c(lambda * env.site_value(i, s) * pot.couplings()[i]);
        }
        u = unitary(&h, dt) * u;
    }
    u
}

#[test]
fn free_dense_spectrum_on_four_sites() {
    let g = grid(1, 4);
    let oracle = dense_oracle(g, &PotentialSample::zero(g), 0.0).unwrap();
    let mut e: Vec<f64> = oracle.eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    for (a, b) in e.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(oracle.hermiticity_residual() < 1e-14);
}

#[test]
fn dense_hamiltonian_matches_stencil_and_guards_size() {
    let g = grid(2, 8);
    let pot = sample_potential(g, 3, Distribution::Gaussian, 2).unwrap();
    let h = dense_hamiltonian(g, &pot, 0.7).unwrap();
    let reference = stencil_h0(g) + potential_matrix(&pot, 0.7);
    let diff = h.map(c) - reference;
    assert!(diff.iter().all(|v| v.norm() < 1e-15));
    let big = grid(2, 65);
    assert!(matches!(
        dense_oracle(big, &PotentialSample::zero(big), 1.0),
        Err(Error::OversizeGrid { .. })
    ));
}

#[test]
fn dense_propagator_at_zero_is_identity_and_unitary() {
    let g = grid(2, 8);
    let pot = sample_potential(g, 3, Distribution::Gaussian, 2).unwrap();
    let u0 = dense_propagator(g, &pot, 1.0, 0.0).unwrap();
    assert!((u0 - DMatrix::<C64>::identity(64, 64)).iter().all(|v| v.norm() < 1e-12));
    let u = dense_propagator(g, &pot, 1.0, 2.3).unwrap();
    let defect = &u.adjoint() * &u - DMatrix::<C64>::identity(64, 64);
    assert!(defect.iter().all(|v| v.norm() < 1e-12));
    let reference = unitary(&(stencil_h0(g) + potential_matrix(&pot, 1.0)), 2.3);
    assert!((u - reference).iter().all(|v| v.norm() < 1e-10));
}

#[test]
fn strang_matches_dense_exponential() {
    let g = grid(2, 8);
    let pot = sample_potential(g, 3, Distribution::Gaussian, 4).unwrap();
    let lambda = 0.5;
    let exact = unitary(&(stencil_h0(g) + potential_matrix(&pot, lambda)), 1.0);
    let psi = WaveField::random(g, Basis::Position, 1);
    let cfg = EvolutionConfig::strang(1e-3, lambda, DriveEnvelope::constant());
    let out = evolve(&psi, &pot, &cfg, 0.0, 1.0).unwrap();
    assert!(l2_diff(out.values(), &apply(&exact, &psi)) < 1e-6);
}

#[test]
fn strang_error_is_second_order() {
    let g = grid(2, 8);
    let pot = sample_potential(g, 3, Distribution::Gaussian, 4).unwrap();
    let lambda = 0.5;
    let exact = unitary(&(stencil_h0(g) + potential_matrix(&pot, lambda)), 1.0);
    let psi = WaveField::random(g, Basis::Position, 1);
    let target = apply(&exact, &psi);
    let err = |dt: f64| {
        let cfg = EvolutionConfig::strang(dt, lambda, DriveEnvelope::constant());
        l2_diff(evolve(&psi, &pot, &cfg, 0.0, 1.0).unwrap().values(), &target)
    };
    let ratio = err(0.02) / err(0.01);
    assert!((ratio - 4.0).abs() <= 0.5, "ratio {ratio}");
}

#[test]
fn strang_follows_driven_dense_product() {
    let g = grid(2, 6);
    let pot = sample_potential(g, 2, Distribution::Gaussian, 9).unwrap();
    let env = DriveEnvelope::cosine(1.3).unwrap();
    let exact = driven_oracle(&pot, 0.8, &env, 0.4, 2.4, 4000);
    let psi = WaveField::random(g, Basis::Position, 3);
    let cfg = EvolutionConfig::strang(1e-3, 0.8, env);
    let out = evolve(&psi, &pot, &cfg, 0.4, 2.4).unwrap();
    assert!(l2_diff(out.values(), &apply(&exact, &psi)) < 1e-5);
}

#[test]
fn zero_coupling_is_free_propagation() {
    let g = grid(2, 16);
    let pot = sample_potential(g, 5, Distribution::Gaussian, 4).unwrap();
    let psi = WaveField::random(g, Basis::Position, 2);
    let free = free_propagate(&psi, 3.0);
    let cfg = EvolutionConfig::strang(0.1, 0.0, DriveEnvelope::constant());
    assert!(evolve(&psi, &pot, &cfg, 0.0, 3.0).unwrap().distance(&free) < 1e-12);
    assert!(chebyshev_propagate(&psi, &pot, 0.0, 3.0).unwrap().distance(&free) < 1e-11);
}

#[test]
fn chebyshev_matches_dense_exponential() {
    let g = grid(2, 8);
    let pot = sample_potential(g, 3, Distribution::Gaussian, 6).unwrap();
    let psi = WaveField::random(g, Basis::Position, 7);
    for (lambda, t) in [(0.3, 0.5), (1.0, 7.0), (2.0, -3.0)] {
        let exact = unitary(&(stencil_h0(g) + potential_matrix(&pot, lambda)), t);
        let out = chebyshev_propagate(&psi, &pot, lambda, t).unwrap();
        assert!(l2_diff(out.values(), &apply(&exact, &psi)) < 1e-11, "lambda {lambda} t {t}");
    }
}

#[test]
fn superposition_matches_dense_functional_calculus() {
    let g = grid(2, 8);
    let pot = sample_potential(g, 3, Distribution::Gaussian, 6).unwrap();
    let psi = WaveField::random(g, Basis::Position, 7);
    let times = [0.3, -1.2, 4.0];
    let weights = [c(0.5), C64::new(0.0, 1.0), c(-0.25)];
    let prop = HamiltonianPropagator { pot: &pot, lambda: 0.6 };
    let out = prop.superpose(&psi, &times, &weights).unwrap();
    let h = stencil_h0(g) + potential_matrix(&pot, 0.6);
    let mut expected = vec![c(0.0); 64];
    for (&t, &w) in times.iter().zip(&weights) {
        for (e, v) in expected.iter_mut().zip(apply(&unitary(&h, t), &psi)) {
            *e += w * v;
        }
    }
    assert!(l2_diff(out.values(), &expected) < 1e-11);
    let oracle = dense_oracle(g, &pot, 0.6).unwrap();
    assert!(l2_diff(oracle.superpose(&psi, &times, &weights).unwrap().values(), &expected) < 1e-10);
}

#[test]
fn monodromy_examples() {
    let g = grid(2, 8);
    let pot = sample_potential(g, 3, Distribution::Gaussian, 6).unwrap();
    let tau = 2.0 * std::f64::consts::PI / 1.5;
    let env = DriveEnvelope::cosine(1.5).unwrap();
    let psi = WaveField::random(g, Basis::Position, 1);
    let free_cfg = EvolutionConfig::strang(0.01, 0.0, env.clone());
    let free = monodromy_apply(&psi, &pot, &free_cfg).unwrap();
    assert!(free.distance(&free_propagate(&psi, tau)) < 1e-12);

    let cfg = EvolutionConfig::strang(0.01, 0.7, env);
    let mut x = psi.clone();
    for _ in 0..8 {
        x = monodromy_apply(&x, &pot, &cfg).unwrap();
    }
    assert!((x.norm() - psi.norm()).abs() < 1e-12);

    let one = monodromy_apply(&psi, &pot, &cfg).unwrap();
    let two = evolve(&psi, &pot, &cfg, 0.0, 2.0 * tau).unwrap();
    let shifted = evolve(&one, &pot, &cfg, tau, 2.0 * tau).unwrap();
    assert!(two.distance(&monodromy_apply(&one, &pot, &cfg).unwrap()) < 1e-12);
    assert!(shifted.distance(&two) < 1e-12);

    let op = MonodromyOp { pot: &pot, cfg };
    assert!(op.apply_inverse(&op.apply(&psi).unwrap()).unwrap().distance(&psi) < 1e-12);
    let dense = dense_monodromy(&pot, &op.cfg).unwrap();
    assert!(l2_diff(one.values(), &apply(&dense, &psi)) < 1e-12);
    assert!((&dense.adjoint() * &dense - DMatrix::<C64>::identity(64, 64)).iter().all(|v| v.norm() < 1e-12));
}

#[test]
fn guards_reject_bad_inputs() {
    let g = grid(2, 8);
    let pot = sample_potential(g, 3, Distribution::Gaussian, 6).unwrap();
    let psi = WaveField::random(g, Basis::Position, 1);
    let limit = EvolutionConfig::strang(1.0, 1.0, DriveEnvelope::constant()).step_limit(&pot);
    let cfg = EvolutionConfig::strang(limit * 1.01, 1.0, DriveEnvelope::constant());
    assert!(matches!(evolve(&psi, &pot, &cfg, 0.0, 1.0), Err(Error::StepSize { .. })));
    let cfg = EvolutionConfig::strang(0.0, 1.0, DriveEnvelope::constant());
    assert!(matches!(evolve(&psi, &pot, &cfg, 0.0, 1.0), Err(Error::StepSize { .. })));
    let mut cfg = EvolutionConfig::chebyshev(1.0);
    cfg.envelope = DriveEnvelope::cosine(1.0).unwrap();
    assert!(evolve(&psi, &pot, &cfg, 0.0, 1.0).is_err());
    let cfg = EvolutionConfig::strang(0.1, f64::NAN, DriveEnvelope::constant());
    assert!(matches!(evolve(&psi, &pot, &cfg, 0.0, 1.0), Err(Error::NonFinite(_))));
    let mut bad = pot.clone();
    bad.set_coupling(pot.support()[0], f64::INFINITY);
    let cfg = EvolutionConfig::strang(0.1, 1.0, DriveEnvelope::constant());
    assert!(matches!(evolve(&psi, &bad, &cfg, 0.0, 1.0), Err(Error::NonFinite(_))));
    let freq = WaveField::random(g, Basis::Frequency, 1);
    assert!(matches!(evolve(&freq, &pot, &cfg, 0.0, 1.0), Err(Error::BasisMismatch { .. })));
    let cfg = EvolutionConfig::strang(0.1, 1.0, DriveEnvelope::constant());
    assert!(monodromy_apply(&psi, &pot, &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn strang_is_unitary_and_invertible(seed in any::<u64>(), lambda in -2.0f64..2.0, t in 0.0f64..5.0) {
        let g = grid(2, 16);
        let pot = sample_potential(g, 4, Distribution::Rademacher, seed).unwrap();
        let psi = WaveField::random(g, Basis::Position, seed ^ 5);
        let cfg = EvolutionConfig::strang(0.05, lambda, DriveEnvelope::cosine(0.9).unwrap());
        let fwd = evolve(&psi, &pot, &cfg, 0.3, 0.3 + t).unwrap();
        prop_assert!((fwd.norm() - psi.norm()).abs() < 1e-12);
        let back = evolve(&fwd, &pot, &cfg, 0.3 + t, 0.3).unwrap();
        prop_assert!(back.distance(&psi) < 1e-11);
    }

    #[test]
    fn chebyshev_group_law(seed in any::<u64>(), s in -4.0f64..4.0, t in -4.0f64..4.0) {
        let g = grid(2, 16);
        let pot = sample_potential(g, 4, Distribution::Gaussian, seed).unwrap();
        let psi = WaveField::random(g, Basis::Position, seed ^ 9);
        let two = chebyshev_propagate(&chebyshev_propagate(&psi, &pot, 0.5, s).unwrap(), &pot, 0.5, t).unwrap();
        let one = chebyshev_propagate(&psi, &pot, 0.5, s + t).unwrap();
        prop_assert!(one.distance(&two) < 1e-10);
        prop_assert!((one.norm() - psi.norm()).abs() < 1e-10);
    }
}
