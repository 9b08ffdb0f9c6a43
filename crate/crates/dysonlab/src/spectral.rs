//! Smooth spectral projections, circle filters for unitaries and Fourier-side diagnostics.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::evolve::{FreePropagator, HamiltonianPropagator, Propagator, UnitaryHandle};
use crate::lattice::{to_frequency, Basis, FourierEngine, LatticeGrid, WaveField, C64};
use crate::operator::{estimate_norm, NormConfig, OperatorHandle};
use crate::potential::PotentialSample;
use crate::quadrature::gauss_legendre;

const MOLLIFIER_WIDTH: f64 = 0.25;
const PLATEAU_HALF_WIDTH: f64 = 0.75;
const CDF_INTERVALS: usize = 8192;
const FT_STEP: f64 = 0.05;
const FT_MAX: f64 = 1600.0;

fn mollifier(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - y * y)).exp()
    }
}

fn mollifier_derivative(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - y * y;
        -2.0 * y / (s * s) * mollifier(y)
    }
}

/// `rho = 1_{[-3/4, 3/4]} * phi_{1/4}`: equal to 1 on `[-1/2, 1/2]`, supported in `[-1, 1]`.
pub struct BumpFunction {
    norm: f64,
    cdf: Vec<f64>,
    ft: Vec<f64>,
    tail: Vec<f64>,
}

impl BumpFunction {
    /// The shared instance; tables are built on first use.
    pub fn standard() -> &'static BumpFunction {
        static BUMP: OnceLock<BumpFunction> = OnceLock::new();
        BUMP.get_or_init(BumpFunction::build)
    }

    fn build() -> Self {
        let (x, w) = gauss_legendre(12);
        let h = 2.0 / CDF_INTERVALS as f64;
        let mut cdf = Vec::with_capacity(CDF_INTERVALS + 1);
        let mut acc = 0.0;
        cdf.push(0.0);
        for k in 0..CDF_INTERVALS {
            let lo = -1.0 + k as f64 * h;
            let part: f64 = x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| wi * mollifier(lo + 0.5 * h * (xi + 1.0)))
                .sum();
            acc += 0.5 * h * part;
            cdf.push(acc);
        }
        let norm = acc;
        for v in cdf.iter_mut() {
            *v /= norm;
        }
        let mut bump = Self {
            norm,
            cdf,
            ft: Vec::new(),
            tail: Vec::new(),
        };
        let count = (FT_MAX / FT_STEP) as usize + 1;
        bump.ft = (0..count).map(|k| bump.fourier(k as f64 * FT_STEP)).collect();
        let mut tail = vec![0.0; count];
        for k in (0..count - 1).rev() {
            tail[k] = tail[k + 1] + 0.5 * FT_STEP * (bump.ft[k].abs() + bump.ft[k + 1].abs());
        }
        bump.tail = tail;
        bump
    }

    /// Normalized mollifier distribution function on `[-1, 1]`, cubic Hermite interpolated.
    fn mollifier_cdf(&self, u: f64) -> f64 {
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let h = 2.0 / CDF_INTERVALS as f64;
        let pos = (u + 1.0) / h;
        let k = (pos.floor() as usize).min(CDF_INTERVALS - 1);
        let s = pos - k as f64;
        let (y0, y1) = (self.cdf[k], self.cdf[k + 1]);
        let x0 = -1.0 + k as f64 * h;
        let (d0, d1) = (
            mollifier(x0) / self.norm * h,
            mollifier(x0 + h) / self.norm * h,
        );
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1
    }

    pub fn value(&self, x: f64) -> f64 {
        let r = x.abs();
        if r <= PLATEAU_HALF_WIDTH - MOLLIFIER_WIDTH {
            return 1.0;
        }
        if r >= PLATEAU_HALF_WIDTH + MOLLIFIER_WIDTH {
            return 0.0;
        }
        let a = self.mollifier_cdf((r + PLATEAU_HALF_WIDTH) / MOLLIFIER_WIDTH);
        let b = self.mollifier_cdf((r - PLATEAU_HALF_WIDTH) / MOLLIFIER_WIDTH);
        (a - b).clamp(0.0, 1.0)
    }

    /// `rho'(x)`, exact from the mollifier.
    pub fn derivative(&self, x: f64) -> f64 {
        let a = mollifier((x + PLATEAU_HALF_WIDTH) / MOLLIFIER_WIDTH);
        let b = mollifier((x - PLATEAU_HALF_WIDTH) / MOLLIFIER_WIDTH);
        (a - b) / (self.norm * MOLLIFIER_WIDTH)
    }

    /// Second derivative, used for quadrature error checks in tests.
    pub fn second_derivative(&self, x: f64) -> f64 {
        let a = mollifier_derivative((x + PLATEAU_HALF_WIDTH) / MOLLIFIER_WIDTH);
        let b = mollifier_derivative((x - PLATEAU_HALF_WIDTH) / MOLLIFIER_WIDTH);
        (a - b) / (self.norm * MOLLIFIER_WIDTH * MOLLIFIER_WIDTH)
    }

    /// `rho_hat(t) = (2 pi)^{-1} int rho(x) e^{-itx} dx`, evaluated by quadrature.
    pub fn fourier(&self, t: f64) -> f64 {
        let box_part = if t == 0.0 {
            2.0 * PLATEAU_HALF_WIDTH
        } else {
            2.0 * (PLATEAU_HALF_WIDTH * t).sin() / t
        };
        box_part * self.mollifier_fourier(MOLLIFIER_WIDTH * t) / (2.0 * PI)
    }

    fn mollifier_fourier(&self, xi: f64) -> f64 {
        let (x, w) = gauss_legendre(16);
        let panels = 32 + (xi.abs() / 2.0).ceil() as usize;
        let h = 2.0 / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = -1.0 + p as f64 * h;
            for (xi_n, wi) in x.iter().zip(&w) {
                let y = lo + 0.5 * h * (xi_n + 1.0);
                total += 0.5 * h * wi * mollifier(y) * (xi * y).cos();
            }
        }
        total / self.norm
    }

    /// Tabulated `rho_hat`, linearly interpolated; zero beyond the table.
    pub fn fourier_tabulated(&self, t: f64) -> f64 {
        let pos = t.abs() / FT_STEP;
        let k = pos.floor() as usize;
        if k + 1 >= self.ft.len() {
            return 0.0;
        }
        let s = pos - k as f64;
        (1.0 - s) * self.ft[k] + s * self.ft[k + 1]
    }

    /// `int_{|t| > T} |rho_hat|` from the table.
    pub fn tail_mass(&self, t: f64) -> f64 {
        let k = (t.abs() / FT_STEP).floor() as usize;
        if k >= self.tail.len() {
            return 0.0;
        }
        2.0 * self.tail[k]
    }

    /// Smallest tabulated `T` with `int_{|t| > T} |rho_hat| < eps`.
    pub fn cutoff_time(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::Truncation(format!("eps = {eps} must be positive")));
        }
        match self.tail.iter().position(|&m| 2.0 * m < eps) {
            Some(k) if k + 1 < self.tail.len() => Ok(k as f64 * FT_STEP),
            _ => Err(Error::Truncation(format!(
                "tail mass below {eps} is not reached before |t| = {FT_MAX}"
            ))),
        }
    }

    /// Tail still present at the end of the table.
    pub fn residual_tail(&self) -> f64 {
        self.ft.last().map(|v| v.abs()).unwrap_or(0.0)
    }
}

/// Window of the trapezoid rule used by `project_energy`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeQuadrature {
    pub times: Vec<f64>,
    pub weights: Vec<C64>,
    pub step: f64,
    pub cutoff: f64,
}

/// Nodes `t_k` and weights with `sum_k w_k e^{i t_k A} ~ rho((A - E) / delta)`.
pub fn energy_quadrature(radius: f64, energy: f64, delta: f64, bump: &BumpFunction, eps: f64) -> Result<TimeQuadrature> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta = {delta}")));
    }
    let cutoff = bump.cutoff_time(eps)? / delta;
    // Aliases of the trapezoid rule sit at multiples of 2 pi / dt = 4 R away.
    let bound = radius.max((radius + energy.abs() + delta) / 3.9);
    let step = PI / (2.0 * bound);
    let k_max = (cutoff / step).ceil() as i64;
    let mut times = Vec::with_capacity(2 * k_max as usize + 1);
    let mut weights = Vec::with_capacity(times.capacity());
    for k in -k_max..=k_max {
        let t = k as f64 * step;
        let end = if k.abs() == k_max { 0.5 } else { 1.0 };
        let w = delta * step * end * bump.fourier(delta * t) * C64::from_polar(1.0, -t * energy);
        times.push(t);
        weights.push(w);
    }
    Ok(TimeQuadrature {
        times,
        weights,
        step,
        cutoff,
    })
}

/// `rho_{delta,E}(A) psi = delta int e^{it(A - E)} rho_hat(delta t) dt psi`.
pub fn project_energy(
    field: &WaveField,
    prop: &dyn Propagator,
    energy: f64,
    delta: f64,
    bump: &BumpFunction,
    eps: f64,
) -> Result<WaveField> {
    field.expect_basis(Basis::Position)?;
    field.expect_grid(prop.grid())?;
    let quad = energy_quadrature(prop.spectral_radius(), energy, delta, bump, eps)?;
    // The propagator supplies e^{-itA}; e^{itA} is the sample at -t.
    let times: Vec<f64> = quad.times.iter().map(|t| -t).collect();
    prop.superpose(field, &times, &quad.weights)
}

/// `rho((omega - E) / delta)` applied directly in frequency space.
pub fn project_free_multiplier(field: &WaveField, energy: f64, delta: f64, bump: &BumpFunction) -> Result<WaveField> {
    field.expect_basis(Basis::Position)?;
    let engine = FourierEngine::for_grid(field.grid());
    let mut v = field.values().to_vec();
    engine.forward_in_place(&mut v);
    for (i, x) in v.iter_mut().enumerate() {
        *x *= bump.value((engine.multiplier().value(i) - energy) / delta);
    }
    engine.inverse_in_place(&mut v);
    WaveField::new(field.grid(), Basis::Position, v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConfig {
    pub eps: f64,
    pub norm: NormConfig,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            norm: NormConfig::lanczos(1e-4, 60),
        }
    }
}

/// `rho_{delta,E}(H) - rho_{delta,E}(H0)` as a self-adjoint handle.
pub struct ProjectionDifference<'a> {
    pub pot: &'a PotentialSample,
    pub lambda: f64,
    pub energy: f64,
    pub delta: f64,
    pub eps: f64,
}

impl OperatorHandle for ProjectionDifference<'_> {
    fn grid(&self) -> LatticeGrid {
        self.pot.grid()
    }

    fn apply(&self, psi: &WaveField) -> Result<WaveField> {
        let bump = BumpFunction::standard();
        let h = HamiltonianPropagator {
            pot: self.pot,
            lambda: self.lambda,
        };
        let free = FreePropagator {
            grid: self.pot.grid(),
        };
        let mut out = project_energy(psi, &h, self.energy, self.delta, bump, self.eps)?;
        let base = project_energy(psi, &free, self.energy, self.delta, bump, self.eps)?;
        out.axpy(C64::new(-1.0, 0.0), &base);
        Ok(out)
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

    fn tolerance(&self) -> f64 {
        self.eps
    }
}

/// `||rho_{delta,E}(H) - rho_{delta,E}(H0)||`.
pub fn projection_distance(pot: &PotentialSample, lambda: f64, energy: f64, delta: f64, cfg: &ProjectionConfig) -> Result<f64> {
    let op = ProjectionDifference {
        pot,
        lambda,
        energy,
        delta,
        eps: cfg.eps,
    };
    Ok(estimate_norm(&op, &cfg.norm)?.value)
}

/// `||psi - rho_{delta,E}(H0) psi||` through the exact multiplier.
pub fn fourier_localization_defect(field: &WaveField, energy: f64, delta: f64) -> Result<f64> {
    let projected = project_free_multiplier(field, energy, delta, BumpFunction::standard())?;
    Ok(field.distance(&projected))
}

/// Trigonometric polynomial `f(e^{i theta}) = sum_{|k| <= K} a_k e^{ik theta}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleFilter {
    center: f64,
    width: f64,
    kmax: usize,
    coeffs: Vec<C64>,
    /// Largest reconstruction error found on the check grid.
    pub reconstruction_error: f64,
}

fn wrap_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t == -PI {
        PI
    } else {
        t
    }
}

impl CircleFilter {
    /// `f = 1`, i.e. `a_0 = 1`.
    pub fn identity() -> Self {
        Self {
            center: 0.0,
            width: PI,
            kmax: 0,
            coeffs: vec![C64::new(1.0, 0.0)],
            reconstruction_error: 0.0,
        }
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    /// `a_k` for `-K <= k <= K`.
    pub fn coefficient(&self, k: i64) -> C64 {
        let idx = k + self.kmax as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn evaluate(&self, theta: f64) -> C64 {
        let k = self.kmax as i64;
        (-k..=k)
            .map(|j| self.coefficient(j) * C64::from_polar(1.0, j as f64 * theta))
            .sum()
    }

    /// Target profile `rho(wrap(theta - theta0) / delta)`.
    pub fn target(&self, theta: f64) -> f64 {
        if self.kmax == 0 && self.width >= PI {
            return 1.0;
        }
        BumpFunction::standard().value(wrap_angle(theta - self.center) / self.width)
    }
}

pub fn build_circle_filter(center: f64, delta: f64, kmax: usize, eps: f64) -> Result<CircleFilter> {
    if !(delta > 0.0 && delta < PI) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must lie in (0, pi)")));
    }
    if (kmax as f64) < 10.0 / delta {
        return Err(Error::FilterTooShort(format!(
            "K = {kmax} is below 10 / delta = {:.1}",
            10.0 / delta
        )));
    }
    let bump = BumpFunction::standard();
    let samples = (16 * kmax).max(8192).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(samples);
    let mut buf: Vec<C64> = (0..samples)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / samples as f64;
            C64::new(bump.value(wrap_angle(theta - center) / delta), 0.0)
        })
        .collect();
    fft.process(&mut buf);
    let k = kmax as i64;
    let coeffs: Vec<C64> = (-k..=k)
        .map(|j| buf[j.rem_euclid(samples as i64) as usize] / samples as f64)
        .collect();
    let mut filter = CircleFilter {
        center,
        width: delta,
        kmax,
        coeffs,
        reconstruction_error: 0.0,
    };
    // Evaluate the truncated series on a fine grid with one inverse transform.
    let check = (8 * (2 * kmax + 1)).max(4096).next_power_of_two();
    let ifft = planner.plan_fft_inverse(check);
    let mut spec = vec![C64::new(0.0, 0.0); check];
    for j in -k..=k {
        spec[j.rem_euclid(check as i64) as usize] += filter.coefficient(j);
    }
    ifft.process(&mut spec);
    let mut worst = 0.0f64;
    for (j, v) in spec.iter().enumerate() {
        let theta = 2.0 * PI * j as f64 / check as f64;
        worst = worst.max((v - filter.target(theta)).norm());
    }
    worst = worst.max((filter.evaluate(center) - 1.0).norm());
    filter.reconstruction_error = worst;
    if worst > eps {
        return Err(Error::FilterTooShort(format!(
            "reconstruction error {worst:.3e} exceeds {eps:.1e} at K = {kmax}"
        )));
    }
    Ok(filter)
}

/// `sum_k a_k U^k psi` by Horner's rule in `U` and `U^{-1}`.
pub fn project_circle(field: &WaveField, unitary: &dyn UnitaryHandle, filter: &CircleFilter) -> Result<WaveField> {
    let k = filter.kmax as i64;
    let mut acc = field.clone();
    acc.scale(filter.coefficient(k));
    for j in (0..k).rev() {
        acc = unitary.apply(&acc)?;
        acc.axpy(filter.coefficient(j), field);
    }
    if k > 0 {
        let mut neg = field.clone();
        neg.scale(filter.coefficient(-k));
        for j in (1..k).rev() {
            neg = unitary.apply_inverse(&neg)?;
            neg.axpy(filter.coefficient(-j), field);
        }
        neg = unitary.apply_inverse(&neg)?;
        acc.axpy(C64::new(1.0, 0.0), &neg);
    }
    if !acc.is_finite() {
        return Err(Error::NonFinite("circle projection".into()));
    }
    Ok(acc)
}

#[derive(Debug, Clone)]
pub struct FloquetState {
    pub field: WaveField,
    /// `arg <psi, U psi>`.
    pub phase: f64,
    /// `||U psi - e^{i phase} psi||`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

/// Filtered iteration `psi <- normalize(f(U) psi)` from a seeded random start.
pub fn extract_floquet_state(
    unitary: &dyn UnitaryHandle,
    filter: &CircleFilter,
    iters: usize,
    seed: u64,
    threshold: f64,
) -> Result<FloquetState> {
    let mut psi = WaveField::random(unitary.grid(), Basis::Position, seed);
    let mut history = Vec::new();
    let mut phase = 0.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=iters.max(1) {
        psi = project_circle(&psi, unitary, filter)?;
        if psi.normalize() == 0.0 {
            return Err(Error::InvalidArgument(
                "filter annihilated the start vector".into(),
            ));
        }
        let u_psi = unitary.apply(&psi)?;
        let overlap = psi.inner(&u_psi);
        phase = overlap.arg();
        let mut diff = u_psi;
        diff.axpy(-C64::from_polar(1.0, phase), &psi);
        residual = diff.norm();
        history.push(residual);
        iterations = it;
        if residual <= threshold {
            break;
        }
    }
    Ok(FloquetState {
        field: psi,
        phase,
        residual,
        iterations,
        converged: residual <= threshold,
        history,
    })
}

/// Whether `omega` lies within `w / 2` of `shift + (2 pi / tau) Z`.
pub fn in_level_band(omega: f64, tau: f64, width: f64, shift: f64) -> bool {
    let spacing = 2.0 * PI / tau;
    let x = (omega - shift) / spacing;
    (x - x.round()).abs() * spacing <= 0.5 * width + 1e-12
}

/// Fraction of `||psi_hat||^2` on frequency sites whose symbol lies in a level band.
pub fn levelset_mass(field: &WaveField, tau: f64, width: f64, shift: f64) -> Result<f64> {
    let hat = match field.basis() {
        Basis::Position => to_frequency(field)?,
        Basis::Frequency => field.clone(),
    };
    let engine = FourierEngine::for_grid(field.grid());
    let total = hat.norm_sqr();
    if total == 0.0 {
        return Ok(0.0);
    }
    let inside: f64 = hat
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| in_level_band(engine.multiplier().value(*i), tau, width, shift))
        .map(|(_, v)| v.norm_sqr())
        .sum();
    Ok((inside / total).clamp(0.0, 1.0))
}

/// Share of frequency sites inside the level bands (the uniform-field value).
pub fn levelset_fraction(grid: LatticeGrid, tau: f64, width: f64, shift: f64) -> f64 {
    let engine = FourierEngine::for_grid(grid);
    let count = (0..grid.num_sites())
        .filter(|&i| in_level_band(engine.multiplier().value(i), tau, width, shift))
        .count();
    count as f64 / grid.num_sites() as f64
}

/// `|psi_hat(m)|^2` in flat frequency order.
pub fn frequency_magnitudes(field: &WaveField) -> Result<Vec<f64>> {
    let hat = match field.basis() {
        Basis::Position => to_frequency(field)?,
        Basis::Frequency => field.clone(),
    };
    Ok(hat.values().iter().map(|v| v.norm_sqr()).collect())
}
