mod common;

use common::{circle_average, max_diff, stencil_h0, unitary};
use dysonlab::lattice::*;
use dysonlab::Error;
use proptest::prelude::*;

fn grid(d: usize, n: usize) -> LatticeGrid {
    LatticeGrid::new(d, n).unwrap()
}

/// `<0| e^{-itH0} |0>` in one dimension: `(2 pi)^{-1} int e^{-2it cos x} dx`.
fn one_dim_return_amplitude(t: f64) -> C64 {
    circle_average(|x| C64::from_polar(1.0, -2.0 * t * x.cos()), 512)
}

#[test]
fn grid_rejects_degenerate_shapes() {
    assert!(matches!(LatticeGrid::new(0, 8), Err(Error::InvalidGrid(_))));
    assert!(matches!(LatticeGrid::new(2, 1), Err(Error::InvalidGrid(_))));
    let g = grid(3, 4);
    assert_eq!(g.num_sites(), 64);
    for i in 0..64 {
        assert_eq!(g.index(&g.coords(i)), i);
    }
}

#[test]
fn periodic_distance_wraps() {
    let g = grid(2, 16);
    let a = g.index(&[0, 0]);
    let b = g.index(&[15, 1]);
    assert!((g.distance(a, b) - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(g.translate(g.difference(b, a), a), b);
}

#[test]
fn constant_field_has_only_dc_component() {
    let g = grid(2, 8);
    let f = WaveField::constant(g, Basis::Position, C64::new(1.0, 0.0));
    let hat = to_frequency(&f).unwrap();
    assert!((hat.values()[0] - C64::new(8.0, 0.0)).norm() < 1e-12);
    assert!(hat.values()[1..].iter().all(|v| v.norm() < 1e-12));
}

#[test]
fn transform_basis_mismatch_is_rejected() {
    let g = grid(1, 8);
    let f = WaveField::zeros(g, Basis::Frequency);
    assert!(matches!(to_frequency(&f), Err(Error::BasisMismatch { .. })));
    let p = WaveField::zeros(g, Basis::Position);
    assert!(matches!(to_position(&p), Err(Error::BasisMismatch { .. })));
}

#[test]
fn multiplier_matches_symbol_and_symmetry() {
    let g = grid(2, 16);
    let m = DispersionMultiplier::new(g);
    for i in 0..g.num_sites() {
        let [a, b] = [g.coords(i)[0], g.coords(i)[1]];
        let expect = 2.0 * ((2.0 * std::f64::consts::PI * a as f64 / 16.0).cos()
            + (2.0 * std::f64::consts::PI * b as f64 / 16.0).cos());
        assert!((m.value(i) - expect).abs() < 1e-14);
        assert!(m.value(i).abs() <= 4.0 + 1e-15);
        let mirror = g.index(&[(16 - a) % 16, b]);
        assert!((m.value(i) - m.value(mirror)).abs() < 1e-14);
    }
}

#[test]
fn free_propagation_matches_dense_exponential() {
    for (d, n) in [(1, 8), (2, 8), (3, 4)] {
        let g = grid(d, n);
        let u = unitary(&stencil_h0(g), 1.7);
        let psi = WaveField::random(g, Basis::Position, 3);
        let out = free_propagate(&psi, 1.7);
        assert!(max_diff(out.values(), &common::apply(&u, &psi)) < 1e-12, "d={d}");
    }
}

#[test]
fn free_propagation_at_zero_time_is_identity() {
    let g = grid(2, 16);
    let psi = WaveField::random(g, Basis::Position, 11);
    assert_eq!(free_propagate(&psi, 0.0).values(), psi.values());
}

#[test]
fn free_propagation_keeps_frequency_basis() {
    let g = grid(1, 16);
    let psi = WaveField::random(g, Basis::Position, 2);
    let hat = to_frequency(&psi).unwrap();
    let out = free_propagate(&hat, 0.4);
    assert_eq!(out.basis(), Basis::Frequency);
    let back = to_position(&out).unwrap();
    assert!(max_diff(back.values(), free_propagate(&psi, 0.4).values()) < 1e-12);
}

#[test]
fn return_amplitude_is_bessel_j0() {
    let g = grid(1, 64);
    let out = free_propagate(&WaveField::delta(g, Basis::Position, 0), 0.5);
    let oracle = one_dim_return_amplitude(0.5);
    assert!((out.values()[0] - oracle).norm() < 1e-12);
    assert!((out.values()[0].norm() - 0.76519).abs() < 1e-5);
}

#[test]
fn two_dimensional_diagonal_kernel_is_product() {
    let g = grid(2, 64);
    let k = free_kernel(7, 7, 0.5, g);
    let one = one_dim_return_amplitude(0.5);
    assert!((k - one * one).norm() < 1e-12);
    assert!((k.norm() - 0.58552).abs() < 1e-5);
}

#[test]
fn kernel_at_time_zero_is_kronecker() {
    let g = grid(2, 8);
    assert!((free_kernel(5, 5, 0.0, g) - C64::new(1.0, 0.0)).norm() < 1e-15);
    assert!(free_kernel(5, 6, 0.0, g).norm() < 1e-15);
}

#[test]
fn kernel_factorizes_over_axes() {
    let g2 = grid(2, 32);
    let g1 = grid(1, 32);
    for (n, m, t) in [([3, 4], [30, 9], 1.3), ([0, 0], [5, 27], 4.0), ([16, 2], [16, 2], 9.5)] {
        let k2 = free_kernel(g2.index(&n), g2.index(&m), t, g2);
        let k1 = free_kernel(n[0], m[0], t, g1) * free_kernel(n[1], m[1], t, g1);
        assert!((k2 - k1).norm() < 1e-10);
    }
}

#[test]
fn dispersive_report_at_time_zero() {
    let r = check_dispersive(grid(2, 64), &[0.0]).unwrap();
    assert_eq!(r.rows[0].diagonal, 1.0);
    assert_eq!(r.max_tail, 0.0);
    assert_eq!(r.max_scaled, 0.0);
}

#[test]
fn dispersive_precondition_is_enforced() {
    assert!(matches!(
        check_dispersive(grid(2, 256), &[16.0]),
        Err(Error::WrapAround(_))
    ));
    assert!(check_dispersive(grid(2, 256), &[-1.0]).is_err());
}

#[test]
fn dispersive_scaled_diagonal_stays_below_one() {
    // s up to 32 needs 10 s < N/2, hence N = 1024.
    let r = check_dispersive(grid(2, 1024), &[4.0, 8.0, 16.0, 32.0]).unwrap();
    for row in &r.rows {
        assert!(row.s * row.diagonal <= 1.0, "s = {}: {}", row.s, row.s * row.diagonal);
    }
}

#[test]
fn dispersive_tail_is_negligible() {
    let r = check_dispersive(grid(2, 256), &[4.0]).unwrap();
    assert!(r.max_tail_mass < 1e-8, "{}", r.max_tail_mass);
    assert!(r.max_tail < 1e-6);
}

#[test]
fn dispersive_decay_and_finite_speed_on_256() {
    let s: Vec<f64> = (0..=16).map(|k| 2.0 + 0.25 * k as f64).collect();
    let r = check_dispersive(grid(2, 256), &s).unwrap();
    assert!(r.max_scaled <= 2.0 * r.rows[0].scaled);
    assert!(r.max_tail < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip_and_parseval(seed in any::<u64>(), d in 1usize..=3, e in 1u32..=4) {
        let n = 1usize << e;
        let g = grid(d, n.max(2));
        let psi = WaveField::random(g, Basis::Position, seed);
        let hat = to_frequency(&psi).unwrap();
        prop_assert!((hat.norm() - psi.norm()).abs() < 1e-12 * psi.norm().max(1.0));
        let back = to_position(&hat).unwrap();
        prop_assert!(psi.distance(&back) < 1e-12 * psi.norm());
    }

    #[test]
    fn free_propagation_is_unitary(seed in any::<u64>(), t in -50.0f64..50.0) {
        let g = grid(2, 16);
        let psi = WaveField::random(g, Basis::Position, seed);
        let ratio = free_propagate(&psi, t).norm() / psi.norm();
        prop_assert!((ratio - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn free_propagation_group_law(seed in any::<u64>(), s in -20.0f64..20.0, t in -20.0f64..20.0) {
        let g = grid(2, 16);
        let psi = WaveField::random(g, Basis::Position, seed);
        let two = free_propagate(&free_propagate(&psi, s), t);
        let one = free_propagate(&psi, s + t);
        prop_assert!(two.distance(&one) < 1e-11);
        let back = free_propagate(&free_propagate(&psi, t), -t);
        prop_assert!(back.distance(&psi) < 1e-12);
    }

    #[test]
    fn multiplier_bounded_by_twice_dimension(d in 1usize..=3, e in 1u32..=4) {
        let g = grid(d, 1 << e);
        let m = DispersionMultiplier::new(g);
        for i in 0..g.num_sites() {
            prop_assert!(m.value(i).abs() <= 2.0 * d as f64 + 1e-14);
        }
    }
}
