//! Random on-site potentials `V = sum_{|n - c| <= R} g_n |n><n|` and drive envelopes.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Basis, LatticeGrid, WaveField, C64};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distribution {
    Gaussian,
    Rademacher,
    Uniform,
}

impl Distribution {
    pub fn tag(self) -> u8 {
        match self {
            Distribution::Gaussian => 0,
            Distribution::Rademacher => 1,
            Distribution::Uniform => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Distribution::Gaussian),
            1 => Ok(Distribution::Rademacher),
            2 => Ok(Distribution::Uniform),
            other => Err(Error::Format(format!("unknown distribution tag {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Distribution::Gaussian => "gauss",
            Distribution::Rademacher => "rademacher",
            Distribution::Uniform => "uniform",
        }
    }
}

impl std::str::FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss" | "gaussian" => Ok(Distribution::Gaussian),
            "rademacher" => Ok(Distribution::Rademacher),
            "uniform" => Ok(Distribution::Uniform),
            other => Err(Error::InvalidArgument(format!("unknown distribution {other:?}"))),
        }
    }
}

/// Draws i.i.d. mean-zero variates of one distribution from a seeded stream.
pub struct CouplingSampler {
    normal: rng::Normal<rng::Stream>,
    dist: Distribution,
}

impl CouplingSampler {
    pub fn new(dist: Distribution, seed: u64) -> Self {
        Self {
            normal: rng::Normal::new(rng::stream(seed)),
            dist,
        }
    }

    pub fn sample(&mut self) -> f64 {
        match self.dist {
            Distribution::Gaussian => self.normal.sample(),
            Distribution::Rademacher => {
                if self.normal.rng_mut().gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Distribution::Uniform => 2.0 * self.normal.rng_mut().gen::<f64>() - 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSample {
    grid: LatticeGrid,
    radius: usize,
    distribution: Distribution,
    seed: u64,
    couplings: Vec<f64>,
    support: Vec<usize>,
}

/// Flat indices of sites within Euclidean distance `radius` of the grid center.
pub fn ball_sites(grid: LatticeGrid, radius: usize) -> Vec<usize> {
    let center = grid.index(&grid.center());
    let r = radius as f64;
    (0..grid.num_sites())
        .filter(|&i| grid.distance(i, center) <= r)
        .collect()
}

pub fn sample_potential(
    grid: LatticeGrid,
    radius: usize,
    distribution: Distribution,
    seed: u64,
) -> Result<PotentialSample> {
    if radius < 1 {
        return Err(Error::InvalidPotential("radius must be at least 1".into()));
    }
    if 2 * radius >= grid.size() {
        return Err(Error::InvalidPotential(format!(
            "2R = {} must be smaller than N = {}",
            2 * radius,
            grid.size()
        )));
    }
    let support = ball_sites(grid, radius);
    let mut couplings = vec![0.0; grid.num_sites()];
    let mut sampler = CouplingSampler::new(distribution, seed);
    for &i in &support {
        couplings[i] = sampler.sample();
    }
    Ok(PotentialSample {
        grid,
        radius,
        distribution,
        seed,
        couplings,
        support,
    })
}

impl PotentialSample {
    /// Potential with explicit couplings; the support is every site with `g_n != 0`.
    pub fn from_couplings(
        grid: LatticeGrid,
        radius: usize,
        distribution: Distribution,
        seed: u64,
        couplings: Vec<f64>,
    ) -> Result<Self> {
        if couplings.len() != grid.num_sites() {
            return Err(Error::InvalidPotential(format!(
                "{} couplings for {} sites",
                couplings.len(),
                grid.num_sites()
            )));
        }
        let support = (0..couplings.len())
            .filter(|&i| couplings[i] != 0.0)
            .collect();
        Ok(Self {
            grid,
            radius,
            distribution,
            seed,
            couplings,
            support,
        })
    }

    pub fn zero(grid: LatticeGrid) -> Self {
        Self {
            grid,
            radius: 0,
            distribution: Distribution::Gaussian,
            seed: 0,
            couplings: vec![0.0; grid.num_sites()],
            support: Vec::new(),
        }
    }

    /// Unit coupling at a single site.
    pub fn single_site(grid: LatticeGrid, site: usize) -> Self {
        let mut couplings = vec![0.0; grid.num_sites()];
        couplings[site] = 1.0;
        Self {
            grid,
            radius: 0,
            distribution: Distribution::Rademacher,
            seed: 0,
            couplings,
            support: vec![site],
        }
    }

    pub fn grid(&self) -> LatticeGrid {
        self.grid
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn distribution(&self) -> Distribution {
        self.distribution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Sites carrying a coupling (all in-radius sites for sampled potentials).
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn sup_norm(&self) -> f64 {
        self.couplings.iter().fold(0.0, |m, g| m.max(g.abs()))
    }

    /// Overwrites one coupling; used to inject faults in harness tests.
    pub fn set_coupling(&mut self, site: usize, value: f64) {
        self.couplings[site] = value;
        if !self.support.contains(&site) {
            self.support.push(site);
            self.support.sort_unstable();
        }
    }

    pub fn is_finite(&self) -> bool {
        self.couplings.iter().all(|g| g.is_finite())
    }

    /// Pointwise `out[n] = s g_n values[n]` over the support, zero elsewhere.
    pub(crate) fn multiply_into(&self, values: &[C64], s: f64, out: &mut [C64]) {
        out.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for &i in &self.support {
            out[i] = values[i] * (s * self.couplings[i]);
        }
    }

    const MAGIC: &'static [u8; 4] = b"DYLP";

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.grid.size() as u32).to_le_bytes())?;
        w.write_all(&(self.radius as u32).to_le_bytes())?;
        w.write_all(&[self.distribution.tag()])?;
        w.write_all(&self.seed.to_le_bytes())?;
        for g in &self.couplings {
            w.write_all(&g.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let mut word = [0u8; 4];
        let mut read_u32 = |r: &mut R| -> Result<u32> {
            r.read_exact(&mut word)?;
            Ok(u32::from_le_bytes(word))
        };
        let dim = read_u32(&mut r)? as usize;
        let size = read_u32(&mut r)? as usize;
        let radius = read_u32(&mut r)? as usize;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let distribution = Distribution::from_tag(tag[0])?;
        let mut long = [0u8; 8];
        r.read_exact(&mut long)?;
        let seed = u64::from_le_bytes(long);
        let grid = LatticeGrid::new(dim, size)?;
        let mut couplings = Vec::with_capacity(grid.num_sites());
        for _ in 0..grid.num_sites() {
            r.read_exact(&mut long)?;
            couplings.push(f64::from_le_bytes(long));
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        let support = ball_sites(grid, radius)
            .into_iter()
            .chain((0..couplings.len()).filter(|&i| couplings[i] != 0.0))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(Self {
            grid,
            radius,
            distribution,
            seed,
            couplings,
            support,
        })
    }
}

/// `lambda * envelope_value * V psi`.
pub fn apply_potential(
    field: &WaveField,
    pot: &PotentialSample,
    lambda: f64,
    envelope_value: f64,
) -> Result<WaveField> {
    field.expect_basis(Basis::Position)?;
    field.expect_grid(pot.grid)?;
    let mut out = WaveField::zeros(field.grid(), Basis::Position);
    pot.multiply_into(field.values(), lambda * envelope_value, out.values_mut());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvelopeKind {
    Constant,
    /// `cos(omega t)`, the same at every site.
    GlobalCosine { omega: f64 },
    /// Per-site samples on a uniform grid over one period, `samples[site][k]`,
    /// interpolated by periodic Catmull-Rom splines.
    PerSite { samples: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveEnvelope {
    kind: EnvelopeKind,
    period: f64,
}

impl DriveEnvelope {
    pub fn constant() -> Self {
        Self {
            kind: EnvelopeKind::Constant,
            period: f64::INFINITY,
        }
    }

    /// `cos(omega t)` with period `2 pi / omega`.
    pub fn cosine(omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidArgument(format!("omega = {omega}")));
        }
        Ok(Self {
            kind: EnvelopeKind::GlobalCosine { omega },
            period: 2.0 * PI / omega,
        })
    }

    pub fn per_site(period: f64, samples: Vec<Vec<f64>>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidArgument(format!("period = {period}")));
        }
        if samples.iter().any(|s| s.len() < 4) {
            return Err(Error::InvalidArgument(
                "per-site tables need at least 4 samples".into(),
            ));
        }
        Ok(Self {
            kind: EnvelopeKind::PerSite { samples },
            period,
        })
    }

    pub fn kind(&self) -> &EnvelopeKind {
        &self.kind
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn is_uniform(&self) -> bool {
        !matches!(self.kind, EnvelopeKind::PerSite { .. })
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, EnvelopeKind::Constant)
    }

    /// Value shared by all sites; per-site envelopes return the value at site 0.
    pub fn value(&self, t: f64) -> f64 {
        self.site_value(0, t)
    }

    pub fn site_value(&self, site: usize, t: f64) -> f64 {
        match &self.kind {
            EnvelopeKind::Constant => 1.0,
            EnvelopeKind::GlobalCosine { omega } => {
                let phase = (t / self.period).fract() * self.period;
                (omega * phase).cos()
            }
            EnvelopeKind::PerSite { samples } => {
                let table = &samples[site.min(samples.len() - 1)];
                catmull_rom_periodic(table, t / self.period)
            }
        }
    }
}

fn catmull_rom_periodic(table: &[f64], phase: f64) -> f64 {
    let n = table.len();
    let x = phase.rem_euclid(1.0) * n as f64;
    let k = x.floor() as usize % n;
    let u = x - x.floor();
    let at = |i: isize| table[(k as isize + i).rem_euclid(n as isize) as usize];
    let (p0, p1, p2, p3) = (at(-1), at(0), at(1), at(2));
    0.5 * (2.0 * p1
        + (-p0 + p2) * u
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u
        + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u)
}
