use dysonlab::lattice::{Basis, LatticeGrid, WaveField, C64};
use dysonlab::potential::*;
use dysonlab::Error;
use proptest::prelude::*;

fn grid(d: usize, n: usize) -> LatticeGrid {
    LatticeGrid::new(d, n).unwrap()
}

/// Radius giving roughly `10^4` in-radius sites in two dimensions.
const TEN_K_RADIUS: usize = 56;

#[test]
fn rademacher_couplings_are_signs_inside_the_ball() {
    let g = grid(2, 64);
    for seed in 0..5 {
        let pot = sample_potential(g, 10, Distribution::Rademacher, seed).unwrap();
        let center = g.index(&g.center());
        for (i, &v) in pot.couplings().iter().enumerate() {
            if g.distance(i, center) <= 10.0 {
                assert!(v == 1.0 || v == -1.0);
            } else {
                assert_eq!(v, 0.0);
            }
        }
        assert_eq!(pot.sup_norm(), 1.0);
    }
}

#[test]
fn uniform_couplings_stay_in_unit_interval() {
    let pot = sample_potential(grid(2, 64), 20, Distribution::Uniform, 9).unwrap();
    assert!(pot.couplings().iter().all(|v| v.abs() <= 1.0));
    let mean: f64 = pot.support().iter().map(|&i| pot.couplings()[i]).sum::<f64>() / pot.support().len() as f64;
    assert!(mean.abs() < 4.0 / (pot.support().len() as f64).sqrt());
}

#[test]
fn sampling_is_deterministic_in_seed() {
    let g = grid(2, 32);
    let a = sample_potential(g, 8, Distribution::Gaussian, 42).unwrap();
    let b = sample_potential(g, 8, Distribution::Gaussian, 42).unwrap();
    let c = sample_potential(g, 8, Distribution::Gaussian, 43).unwrap();
    assert_eq!(a.couplings(), b.couplings());
    assert_ne!(a.couplings(), c.couplings());
}

#[test]
fn radius_preconditions() {
    let g = grid(2, 32);
    assert!(matches!(sample_potential(g, 16, Distribution::Gaussian, 1), Err(Error::InvalidPotential(_))));
    assert!(matches!(sample_potential(g, 0, Distribution::Gaussian, 1), Err(Error::InvalidPotential(_))));
    assert!(sample_potential(g, 15, Distribution::Gaussian, 1).is_ok());
}

#[test]
fn zero_potential_has_zero_sup_norm() {
    let pot = PotentialSample::zero(grid(2, 16));
    assert_eq!(pot.sup_norm(), 0.0);
    assert!(pot.support().is_empty());
}

#[test]
fn gaussian_moments_match_the_law() {
    let pot = sample_potential(grid(2, 256), 64, Distribution::Gaussian, 2024).unwrap();
    let vals: Vec<f64> = pot.support().iter().map(|&i| pot.couplings()[i]).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 4.0 / n.sqrt(), "mean {mean}");
    assert!((var - 1.0).abs() < 0.1, "variance {var}");
}

#[test]
fn gaussian_sup_norm_over_ten_thousand_sites() {
    let g = grid(2, 128);
    let sites = ball_sites(g, TEN_K_RADIUS).len();
    assert!((9_500..=10_500).contains(&sites), "{sites}");
    let inside = (0..200u64)
        .filter(|&s| {
            let v = sample_potential(g, TEN_K_RADIUS, Distribution::Gaussian, s).unwrap().sup_norm();
            (3.0..=5.5).contains(&v)
        })
        .count();
    assert!(inside >= 198, "{inside} of 200");
}

/// Exceedance frequencies of `sup_norm > K` over 500 samples with about 10^4 sites.
fn sup_norm_exceedance(ks: &[f64]) -> Vec<f64> {
    let g = grid(2, 128);
    let sups: Vec<f64> = (0..500u64)
        .map(|s| sample_potential(g, TEN_K_RADIUS, Distribution::Gaussian, 1_000 + s).unwrap().sup_norm())
        .collect();
    ks.iter().map(|&k| sups.iter().filter(|&&v| v > k).count() as f64 / 500.0).collect()
}

#[test]
fn sup_norm_tail_is_monotone_and_below_union_bound() {
    let ks = [4.0, 5.0, 6.0];
    let freq = sup_norm_exceedance(&ks);
    assert!(freq.windows(2).all(|w| w[1] <= w[0]), "{freq:?}");
    // Union bound: sites * P(|g| > K), with P(|g| > K) <= 2 exp(-K^2/2) / (K sqrt(2 pi)).
    let sites = ball_sites(grid(2, 128), TEN_K_RADIUS).len() as f64;
    for (&k, &f) in ks.iter().zip(&freq) {
        let single = 2.0 * (-k * k / 2.0).exp() / (k * (2.0 * std::f64::consts::PI).sqrt());
        let slack = 3.0 * (single * sites / 500.0).sqrt();
        assert!(f <= (sites * single).min(1.0) + slack, "K = {k}: {f}");
    }
    // The pinned constant c = 1/4 holds at K = 6.
    assert!(freq[2] <= 2.0 * (-9.0f64).exp());
}

#[test]
fn pinned_tail_constant_fails_at_small_k() {
    // With 10^4 sites, P(sup > 4) is close to 1 - exp(-0.63), far above 2 exp(-4).
    let freq = sup_norm_exceedance(&[4.0]);
    assert!(freq[0] > 2.0 * (-4.0f64).exp(), "{freq:?}");
}

#[test]
fn apply_potential_examples() {
    let g = grid(2, 16);
    let pot = sample_potential(g, 5, Distribution::Gaussian, 5).unwrap();
    let psi = WaveField::random(g, Basis::Position, 1);
    let zero = apply_potential(&psi, &pot, 0.0, 1.0).unwrap();
    assert_eq!(zero.norm(), 0.0);
    let n = g.index(&g.center());
    let delta = WaveField::delta(g, Basis::Position, n);
    let out = apply_potential(&delta, &pot, 1.0, 1.0).unwrap();
    assert_eq!(out.values()[n], C64::new(pot.couplings()[n], 0.0));
    assert_eq!(out.norm(), pot.couplings()[n].abs());
    let hat = WaveField::zeros(g, Basis::Frequency);
    assert!(matches!(apply_potential(&hat, &pot, 1.0, 1.0), Err(Error::BasisMismatch { .. })));
}

#[test]
fn apply_potential_norm_equality_on_argmax_sites() {
    let g = grid(2, 16);
    let pot = sample_potential(g, 5, Distribution::Gaussian, 8).unwrap();
    let sup = pot.sup_norm();
    let arg = pot.couplings().iter().position(|g| g.abs() == sup).unwrap();
    let mut psi = WaveField::delta(g, Basis::Position, arg);
    psi.scale(C64::new(0.6, -0.8));
    let out = apply_potential(&psi, &pot, 0.3, 1.0).unwrap();
    assert!((out.norm() - 0.3 * sup).abs() < 1e-15);
    let spread = WaveField::random(g, Basis::Position, 4);
    assert!(apply_potential(&spread, &pot, 0.3, 1.0).unwrap().norm() < 0.3 * sup);
}

#[test]
fn binary_round_trip() {
    let g = grid(2, 32);
    let pot = sample_potential(g, 10, Distribution::Uniform, 77).unwrap();
    let mut bytes = Vec::new();
    pot.write_to(&mut bytes).unwrap();
    let back = PotentialSample::read_from(bytes.as_slice()).unwrap();
    assert_eq!(back.couplings(), pot.couplings());
    assert_eq!(back.radius(), 10);
    assert_eq!(back.seed(), 77);
    assert_eq!(back.distribution(), Distribution::Uniform);
    assert_eq!(back.support(), pot.support());
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(matches!(PotentialSample::read_from(extra.as_slice()), Err(Error::Format(_))));
    assert!(PotentialSample::read_from(&bytes[..bytes.len() - 3]).is_err());
    let mut bad = bytes;
    bad[0] = b'X';
    assert!(matches!(PotentialSample::read_from(bad.as_slice()), Err(Error::Format(_))));
}

#[test]
fn distribution_names_parse() {
    for d in [Distribution::Gaussian, Distribution::Rademacher, Distribution::Uniform] {
        assert_eq!(d.name().parse::<Distribution>().unwrap(), d);
        assert_eq!(Distribution::from_tag(d.tag()).unwrap(), d);
    }
    assert_eq!("gauss".parse::<Distribution>().unwrap(), Distribution::Gaussian);
    assert!("cauchy".parse::<Distribution>().is_err());
}

#[test]
fn figure_envelope_has_period_four_pi() {
    let env = DriveEnvelope::cosine(0.5).unwrap();
    assert!((env.period() - 4.0 * std::f64::consts::PI).abs() < 1e-15);
    assert!((env.value(std::f64::consts::PI) - 0.0).abs() < 1e-15);
    assert!(DriveEnvelope::cosine(0.0).is_err());
    assert!(DriveEnvelope::constant().is_constant());
}

#[test]
fn per_site_envelope_interpolates_samples() {
    let samples = vec![vec![0.0, 1.0, 0.0, -1.0], vec![1.0; 4]];
    let env = DriveEnvelope::per_site(2.0, samples).unwrap();
    assert!((env.site_value(0, 0.5) - 1.0).abs() < 1e-15);
    assert!((env.site_value(1, 0.37) - 1.0).abs() < 1e-15);
    assert!(!env.is_uniform());
    assert!(DriveEnvelope::per_site(1.0, vec![vec![0.0; 3]]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn envelopes_are_periodic(t in -100.0f64..100.0, omega in 0.1f64..3.0, k in -3i32..4) {
        let env = DriveEnvelope::cosine(omega).unwrap();
        let shifted = t + k as f64 * env.period();
        prop_assert!((env.value(shifted) - env.value(t)).abs() < 1e-12 * (1.0 + t.abs()));
        let table = DriveEnvelope::per_site(3.0, vec![vec![0.3, -0.2, 0.9, 0.1, 0.5]]).unwrap();
        prop_assert!((table.value(t + 3.0 * k as f64) - table.value(t)).abs() < 1e-12);
    }

    #[test]
    fn apply_potential_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let g = grid(2, 16);
        let pot = sample_potential(g, 6, Distribution::Gaussian, 3).unwrap();
        let psi = WaveField::random(g, Basis::Position, s1);
        let phi = WaveField::random(g, Basis::Position, s2);
        let mut comb = psi.clone();
        comb.scale(C64::new(a, 0.0));
        comb.axpy(C64::new(b, 0.0), &phi);
        let lhs = apply_potential(&comb, &pot, 0.7, 0.3).unwrap();
        let mut rhs = apply_potential(&psi, &pot, 0.7, 0.3).unwrap();
        rhs.scale(C64::new(a, 0.0));
        rhs.axpy(C64::new(b, 0.0), &apply_potential(&phi, &pot, 0.7, 0.3).unwrap());
        prop_assert!(lhs.distance(&rhs) < 1e-12);
    }

    #[test]
    fn couplings_vanish_outside_radius(seed in any::<u64>(), r in 1usize..15) {
        let g = grid(2, 32);
        let pot = sample_potential(g, r, Distribution::Gaussian, seed).unwrap();
        let center = g.index(&g.center());
        for (i, &v) in pot.couplings().iter().enumerate() {
            if g.distance(i, center) > r as f64 {
                prop_assert_eq!(v, 0.0);
            }
        }
    }
}
