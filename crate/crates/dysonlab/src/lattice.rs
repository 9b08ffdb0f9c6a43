//! Periodic lattices, position/frequency transforms and the free propagator.
//!
//! The transform is the unitary DFT `psi_hat(m) = N^{-d/2} sum_n e^{-2 pi i m.n / N} psi(n)`,
//! under which the nearest-neighbour sum `H0` becomes multiplication by
//! `omega(m) = 2 sum_j cos(2 pi m_j / N)`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::rng;

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeGrid {
    dim: usize,
    size: usize,
}

impl LatticeGrid {
    pub fn new(dim: usize, size: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if size < 2 {
            return Err(Error::InvalidGrid("side length must be at least 2".into()));
        }
        let sites = size
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::InvalidGrid("site count overflows".into()))?;
        if sites > 1 << 28 {
            return Err(Error::InvalidGrid(format!("{sites} sites is too many")));
        }
        Ok(Self { dim, size })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn num_sites(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    /// Row-major flat index; the last coordinate varies fastest.
    pub fn index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.dim);
        coords
            .iter()
            .fold(0, |acc, &c| acc * self.size + c % self.size)
    }

    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = index % self.size;
            index /= self.size;
        }
        out
    }

    pub fn center(&self) -> Vec<usize> {
        vec![self.size / 2; self.dim]
    }

    /// Signed minimal-image displacement `a - b` along one axis.
    pub fn wrap_displacement(&self, a: usize, b: usize) -> i64 {
        let n = self.size as i64;
        let mut d = (a as i64 - b as i64).rem_euclid(n);
        if d > n / 2 {
            d -= n;
        }
        d
    }

    /// Periodic Euclidean distance between two flat indices.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (ca, cb) = (self.coords(a), self.coords(b));
        ca.iter()
            .zip(&cb)
            .map(|(&x, &y)| {
                let d = self.wrap_displacement(x, y) as f64;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Index of the site `a + b` (componentwise, periodic).
    pub fn translate(&self, a: usize, b: usize) -> usize {
        let (ca, cb) = (self.coords(a), self.coords(b));
        let sum: Vec<usize> = ca.iter().zip(&cb).map(|(x, y)| x + y).collect();
        self.index(&sum)
    }

    /// Index of the site `a - b` (componentwise, periodic).
    pub fn difference(&self, a: usize, b: usize) -> usize {
        let (ca, cb) = (self.coords(a), self.coords(b));
        let diff: Vec<usize> = ca
            .iter()
            .zip(&cb)
            .map(|(x, y)| (x + self.size - y) % self.size)
            .collect();
        self.index(&diff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Position,
    Frequency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: LatticeGrid,
    basis: Basis,
    values: Vec<C64>,
}

impl WaveField {
    pub fn new(grid: LatticeGrid, basis: Basis, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.num_sites() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values but the grid has {} sites",
                values.len(),
                grid.num_sites()
            )));
        }
        Ok(Self {
            grid,
            basis,
            values,
        })
    }

    pub fn zeros(grid: LatticeGrid, basis: Basis) -> Self {
        Self {
            grid,
            basis,
            values: vec![C64::new(0.0, 0.0); grid.num_sites()],
        }
    }

    pub fn constant(grid: LatticeGrid, basis: Basis, value: C64) -> Self {
        Self {
            grid,
            basis,
            values: vec![value; grid.num_sites()],
        }
    }

    pub fn delta(grid: LatticeGrid, basis: Basis, site: usize) -> Self {
        let mut f = Self::zeros(grid, basis);
        f.values[site] = C64::new(1.0, 0.0);
        f
    }

    /// Normalized field with i.i.d. complex Gaussian entries.
    pub fn random(grid: LatticeGrid, basis: Basis, seed: u64) -> Self {
        let mut gen = rng::Normal::new(rng::stream(seed));
        let values = (0..grid.num_sites())
            .map(|_| C64::new(gen.sample(), gen.sample()))
            .collect();
        let mut f = Self {
            grid,
            basis,
            values,
        };
        f.normalize();
        f
    }

    /// Normalized field with uniformly random phases and unit moduli.
    pub fn random_phase(grid: LatticeGrid, basis: Basis, seed: u64) -> Self {
        let mut r = rng::stream(seed);
        let values = (0..grid.num_sites())
            .map(|_| C64::from_polar(1.0, 2.0 * PI * r.gen::<f64>()))
            .collect();
        let mut f = Self {
            grid,
            basis,
            values,
        };
        f.normalize();
        f
    }

    pub fn grid(&self) -> LatticeGrid {
        self.grid
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &WaveField) -> C64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&mut self, s: C64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: C64, other: &WaveField) {
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
    }

    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            self.scale(C64::new(1.0 / n, 0.0));
        }
        n
    }

    pub fn distance(&self, other: &WaveField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub(crate) fn expect_basis(&self, basis: Basis) -> Result<()> {
        if self.basis != basis {
            return Err(Error::BasisMismatch {
                expected: basis,
                found: self.basis,
            });
        }
        Ok(())
    }

    pub(crate) fn expect_grid(&self, grid: LatticeGrid) -> Result<()> {
        if self.grid != grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub(crate) fn relabel(mut self, basis: Basis) -> Self {
        self.basis = basis;
        self
    }
}

/// Values of the free symbol `2 sum_j cos(2 pi m_j / N)` on the frequency grid.
#[derive(Debug, Clone)]
pub struct DispersionMultiplier {
    grid: LatticeGrid,
    axis: Vec<f64>,
}

impl DispersionMultiplier {
    pub fn new(grid: LatticeGrid) -> Self {
        let n = grid.size();
        let axis = (0..n)
            .map(|m| 2.0 * (2.0 * PI * m as f64 / n as f64).cos())
            .collect();
        Self { grid, axis }
    }

    /// Per-axis contribution `2 cos(2 pi m / N)`.
    pub fn axis_values(&self) -> &[f64] {
        &self.axis
    }

    pub fn value(&self, index: usize) -> f64 {
        let n = self.grid.size();
        let mut idx = index;
        let mut total = 0.0;
        for _ in 0..self.grid.dim() {
            total += self.axis[idx % n];
            idx /= n;
        }
        total
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.grid.num_sites()).map(|i| self.value(i)).collect()
    }

    pub fn bound(&self) -> f64 {
        2.0 * self.grid.dim() as f64
    }
}

/// Cached FFT plans for one grid shape.
pub struct FourierEngine {
    grid: LatticeGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    multiplier: DispersionMultiplier,
}

const COLUMN_BLOCK: usize = 16;

thread_local! {
    static SCRATCH: RefCell<(Vec<C64>, Vec<C64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

fn engine_cache() -> &'static Mutex<HashMap<LatticeGrid, Arc<FourierEngine>>> {
    static CACHE: OnceLock<Mutex<HashMap<LatticeGrid, Arc<FourierEngine>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl FourierEngine {
    /// Shared engine for `grid`, planned once per process.
    pub fn for_grid(grid: LatticeGrid) -> Arc<FourierEngine> {
        let mut cache = engine_cache().lock().unwrap_or_else(|e| e.into_inner());
        cache
            .entry(grid)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Arc::new(FourierEngine {
                    grid,
                    forward: planner.plan_fft_forward(grid.size()),
                    inverse: planner.plan_fft_inverse(grid.size()),
                    multiplier: DispersionMultiplier::new(grid),
                })
            })
            .clone()
    }

    pub fn grid(&self) -> LatticeGrid {
        self.grid
    }

    pub fn multiplier(&self) -> &DispersionMultiplier {
        &self.multiplier
    }

    pub fn forward_in_place(&self, values: &mut [C64]) {
        self.transform(values, &self.forward);
    }

    pub fn inverse_in_place(&self, values: &mut [C64]) {
        self.transform(values, &self.inverse);
    }

    /// Forward transform of a field whose last coordinate lies in `cols`
    /// (sorted, distinct); values at other last coordinates must be zero.
    pub fn forward_from_columns(&self, values: &mut [C64], cols: &[usize]) {
        self.transform_pruned(values, &self.forward, cols, true);
        self.normalize(values);
    }

    /// Inverse transform that is exact only where the last coordinate lies in
    /// `cols`; values elsewhere are left in an unspecified state.
    pub fn inverse_onto_columns(&self, values: &mut [C64], cols: &[usize]) {
        self.transform_pruned(values, &self.inverse, cols, false);
        self.normalize(values);
    }

    /// Unnormalized variants: the pair scales by `N^d`.
    pub(crate) fn forward_from_columns_raw(&self, values: &mut [C64], cols: &[usize]) {
        self.transform_pruned(values, &self.forward, cols, true);
    }

    pub(crate) fn inverse_onto_columns_raw(&self, values: &mut [C64], cols: &[usize]) {
        self.transform_pruned(values, &self.inverse, cols, false);
    }

    fn transform(&self, data: &mut [C64], fft: &Arc<dyn Fft<f64>>) {
        SCRATCH.with(|cell| {
            let mut guard = cell.borrow_mut();
            let (buf, scratch) = &mut *guard;
            let need = fft.get_inplace_scratch_len();
            if scratch.len() < need {
                scratch.resize(need, C64::new(0.0, 0.0));
            }
            fft.process_with_scratch(data, &mut scratch[..need]);
            self.strided_axes(data, fft, buf, &mut scratch[..need], None);
        });
        self.normalize(data);
    }

    fn transform_pruned(&self, data: &mut [C64], fft: &Arc<dyn Fft<f64>>, cols: &[usize], cols_first: bool) {
        SCRATCH.with(|cell| {
            let mut guard = cell.borrow_mut();
            let (buf, scratch) = &mut *guard;
            let need = fft.get_inplace_scratch_len();
            if scratch.len() < need {
                scratch.resize(need, C64::new(0.0, 0.0));
            }
            if cols_first {
                self.strided_axes(data, fft, buf, &mut scratch[..need], Some(cols));
                fft.process_with_scratch(data, &mut scratch[..need]);
            } else {
                fft.process_with_scratch(data, &mut scratch[..need]);
                self.strided_axes(data, fft, buf, &mut scratch[..need], Some(cols));
            }
        });
    }

    fn normalize(&self, data: &mut [C64]) {
        let s = 1.0 / (data.len() as f64).sqrt();
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    /// Transforms along every axis except the contiguous last one, optionally
    /// only for the listed last coordinates.
    fn strided_axes(
        &self,
        data: &mut [C64],
        fft: &Arc<dyn Fft<f64>>,
        buf: &mut Vec<C64>,
        scratch: &mut [C64],
        cols: Option<&[usize]>,
    ) {
        let n = self.grid.size();
        let d = self.grid.dim();
        let total = data.len();
        debug_assert_eq!(total, self.grid.num_sites());
        if buf.len() < COLUMN_BLOCK * n {
            buf.resize(COLUMN_BLOCK * n, C64::new(0.0, 0.0));
        }
        // Runs of adjacent last coordinates, each at most one block wide.
        let mut runs: Vec<(usize, usize)> = Vec::new();
        match cols {
            None => {
                let mut c = 0;
                while c < n {
                    let b = COLUMN_BLOCK.min(n - c);
                    runs.push((c, b));
                    c += b;
                }
            }
            Some(cols) => {
                for &c in cols {
                    match runs.last_mut() {
                        Some((start, len)) if *start + *len == c && *len < COLUMN_BLOCK => *len += 1,
                        _ => runs.push((c, 1)),
                    }
                }
            }
        }
        for axis in 0..d.saturating_sub(1) {
            let stride = n.pow((d - 1 - axis) as u32);
            let outer = total / (n * stride);
            for o in 0..outer {
                for mid in 0..stride / n {
                    let base = o * n * stride + mid * n;
                    for &(c0, b) in &runs {
                        for k in 0..n {
                            let row = base + k * stride + c0;
                            for j in 0..b {
                                buf[j * n + k] = data[row + j];
                            }
                        }
                        fft.process_with_scratch(&mut buf[..b * n], scratch);
                        for k in 0..n {
                            let row = base + k * stride + c0;
                            for j in 0..b {
                                data[row + j] = buf[j * n + k];
                            }
                        }
                    }
                }
            }
        }
    }

    /// `dst = exp(-i t omega) src` in the frequency basis.
    pub(crate) fn free_phase_into(&self, src: &[C64], dst: &mut [C64], t: f64) {
        let n = self.grid.size();
        let phases: Vec<C64> = self
            .multiplier
            .axis_values()
            .iter()
            .map(|&w| C64::from_polar(1.0, -t * w))
            .collect();
        let row_count = src.len() / n;
        let dim = self.grid.dim();
        for r in 0..row_count {
            let mut factor = C64::new(1.0, 0.0);
            let mut rest = r;
            for _ in 1..dim {
                factor *= phases[rest % n];
                rest /= n;
            }
            let (s, d) = (&src[r * n..(r + 1) * n], &mut dst[r * n..(r + 1) * n]);
            for ((o, i), p) in d.iter_mut().zip(s).zip(&phases) {
                *o = i * (factor * p);
            }
        }
    }

    /// Multiplies frequency amplitudes by `exp(-i t omega(m))`.
    pub fn apply_free_phase(&self, values: &mut [C64], t: f64) {
        if t == 0.0 {
            return;
        }
        let phases: Vec<C64> = self
            .multiplier
            .axis_values()
            .iter()
            .map(|&w| C64::from_polar(1.0, -t * w))
            .collect();
        apply_separable(values, &phases, self.grid.dim(), C64::new(1.0, 0.0));
    }
}

/// Multiplies `values` by the tensor product of `phases` over `dim` axes.
fn apply_separable(values: &mut [C64], phases: &[C64], dim: usize, factor: C64) {
    let n = phases.len();
    if dim == 1 {
        for (v, p) in values.iter_mut().zip(phases) {
            *v *= factor * p;
        }
        return;
    }
    let chunk = values.len() / n;
    for (m, block) in values.chunks_mut(chunk).enumerate() {
        apply_separable(block, phases, dim - 1, factor * phases[m]);
    }
}

pub fn to_frequency(field: &WaveField) -> Result<WaveField> {
    field.expect_basis(Basis::Position)?;
    let mut out = field.clone();
    FourierEngine::for_grid(field.grid).forward_in_place(&mut out.values);
    Ok(out.relabel(Basis::Frequency))
}

pub fn to_position(field: &WaveField) -> Result<WaveField> {
    field.expect_basis(Basis::Frequency)?;
    let mut out = field.clone();
    FourierEngine::for_grid(field.grid).inverse_in_place(&mut out.values);
    Ok(out.relabel(Basis::Position))
}

/// `e^{-itH0} psi`, returned in the basis of the input.
pub fn free_propagate(field: &WaveField, t: f64) -> WaveField {
    let engine = FourierEngine::for_grid(field.grid);
    let mut out = field.clone();
    if t == 0.0 {
        return out;
    }
    match field.basis {
        Basis::Frequency => engine.apply_free_phase(&mut out.values, t),
        Basis::Position => {
            engine.forward_in_place(&mut out.values);
            engine.apply_free_phase(&mut out.values, t);
            engine.inverse_in_place(&mut out.values);
        }
    }
    out
}

/// Matrix element `<n| e^{-itH0} |m>` by propagating a delta at `m`.
pub fn free_kernel(n: usize, m: usize, t: f64, grid: LatticeGrid) -> C64 {
    let delta = WaveField::delta(grid, Basis::Position, m);
    free_propagate(&delta, t).values[n]
}

/// Column of the free kernel: `e^{-itH0} delta_0` as a flat array.
pub fn free_kernel_column(grid: LatticeGrid, t: f64) -> Vec<C64> {
    free_propagate(&WaveField::delta(grid, Basis::Position, 0), t).values
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersiveRow {
    pub s: f64,
    pub diagonal: f64,
    pub local_max: f64,
    pub scaled: f64,
    pub tail_max: f64,
    pub tail_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersiveReport {
    pub rows: Vec<DispersiveRow>,
    /// Max over `s` of `s^{d/2} max_{|n-m| <= s/100} |kernel|`.
    pub max_scaled: f64,
    /// Max kernel modulus beyond `|n-m| > 10 s`.
    pub max_tail: f64,
    pub max_tail_mass: f64,
}

pub fn check_dispersive(grid: LatticeGrid, s_values: &[f64]) -> Result<DispersiveReport> {
    let half = grid.size() as f64 / 2.0;
    for &s in s_values {
        if !(s.is_finite() && s >= 0.0) || (s > 0.0 && 10.0 * s >= half) {
            return Err(Error::WrapAround(format!(
                "s = {s} needs 10 s < N/2 = {half}"
            )));
        }
    }
    let dists: Vec<f64> = (0..grid.num_sites()).map(|i| grid.distance(i, 0)).collect();
    let mut rows = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let column = free_kernel_column(grid, s);
        let mut local_max = 0.0f64;
        let mut tail_max = 0.0f64;
        let mut tail_mass = 0.0f64;
        for (v, &r) in column.iter().zip(&dists) {
            let a = v.norm();
            if r <= s / 100.0 {
                local_max = local_max.max(a);
            }
            if r > 10.0 * s {
                tail_max = tail_max.max(a);
                tail_mass += a * a;
            }
        }
        rows.push(DispersiveRow {
            s,
            diagonal: column[0].norm(),
            local_max,
            scaled: s.powf(grid.dim() as f64 / 2.0) * local_max,
            tail_max,
            tail_mass,
        });
    }
    let max_scaled = rows.iter().map(|r| r.scaled).fold(0.0, f64::max);
    let max_tail = rows.iter().map(|r| r.tail_max).fold(0.0, f64::max);
    let max_tail_mass = rows.iter().map(|r| r.tail_mass).fold(0.0, f64::max);
    Ok(DispersiveReport {
        rows,
        max_scaled,
        max_tail,
        max_tail_mass,
    })
}
