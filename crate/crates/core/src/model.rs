//! Nearest-neighbour easy-axis antiferromagnet on square and simple-cubic
//! lattices in linear spin-wave theory.
//!
//! The Holstein–Primakoff boson on sublattice A is `a_k`, on sublattice B is
//! `b_{-k}`. Per wavevector the magnon Hamiltonian is
//! `ω_a a†a + ω_b b†b + g a b + g* a† b†` with
//!
//! ```text
//! ω_a = S z J + 2 S K_z + μ_B B
//! ω_b = S z J + 2 S K_z − μ_B B
//! g   = S z J γ_k
//! ```

use thiserror::Error;

use crate::scalar::{Complex, Real};

/// Bohr magneton in meV/T (CODATA 2018).
pub const BOHR_MAGNETON_MEV_PER_T: f64 = 5.788_381_806_0e-2;

/// Wavevector in units of the inverse lattice constant. Square lattices ignore
/// the third component.
pub type Wavevector<T> = [T; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("unstable magnon spectrum at k = {k:?}: {reason}")]
    Unstable { k: [f64; 3], reason: String },
    #[error("k-path needs at least one segment")]
    EmptyPath,
    #[error("k-path segment {index} has {count} points, need at least 2")]
    SegmentTooShort { index: usize, count: usize },
}

fn k_f64<T: Real>(k: &Wavevector<T>) -> [f64; 3] {
    [k[0].to_f64().unwrap_or(f64::NAN), k[1].to_f64().unwrap_or(f64::NAN), k[2].to_f64().unwrap_or(f64::NAN)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    Square,
    Cubic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec<T> {
    pub kind: LatticeKind,
    pub lattice_constant: T,
}

impl<T: Real> LatticeSpec<T> {
    pub fn square() -> Self {
        Self { kind: LatticeKind::Square, lattice_constant: T::one() }
    }

    pub fn cubic() -> Self {
        Self { kind: LatticeKind::Cubic, lattice_constant: T::one() }
    }

    pub fn dimension(&self) -> usize {
        match self.kind {
            LatticeKind::Square => 2,
            LatticeKind::Cubic => 3,
        }
    }

    /// Number of nearest neighbours `z`.
    pub fn coordination(&self) -> usize {
        2 * self.dimension()
    }

    /// Nearest-neighbour bond vectors `±a ê_i`.
    pub fn neighbors(&self) -> Vec<Wavevector<T>> {
        let a = self.lattice_constant;
        let mut out = Vec::with_capacity(self.coordination());
        for axis in 0..self.dimension() {
            for sign in [T::one(), -T::one()] {
                let mut d = [T::zero(); 3];
                d[axis] = sign * a;
                out.push(d);
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.lattice_constant > T::zero()) || !self.lattice_constant.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "lattice_constant",
                reason: format!("must be positive and finite, got {}", self.lattice_constant),
            });
        }
        Ok(())
    }
}

/// Parameters of the spin Hamiltonian. Energies in meV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    pub lattice: LatticeSpec<T>,
    /// Antiferromagnetic Heisenberg exchange `J > 0`.
    pub exchange: T,
    /// Easy-axis anisotropy `K_z ≥ 0`.
    pub anisotropy: T,
    /// Zeeman energy `μ_B B` along the easy axis.
    pub zeeman: T,
    pub spin: T,
    /// Conversion constant used by [`ModelParams::with_field_tesla`], meV/T.
    pub bohr_magneton: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(lattice: LatticeSpec<T>, exchange: T, anisotropy: T, spin: T) -> Self {
        Self { lattice, exchange, anisotropy, zeeman: T::zero(), spin, bohr_magneton: T::lit(BOHR_MAGNETON_MEV_PER_T) }
    }

    /// Sets the Zeeman energy directly in meV.
    pub fn with_zeeman(mut self, zeeman: T) -> Self {
        self.zeeman = zeeman;
        self
    }

    /// Sets the field in tesla, converted with `bohr_magneton`.
    pub fn with_field_tesla(mut self, field: T) -> Self {
        self.zeeman = self.bohr_magneton * field;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.lattice.validate()?;
        let check = |name: &'static str, ok: bool, v: T, what: &str| {
            if ok && v.is_finite() {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter { name, reason: format!("{what}, got {v}") })
            }
        };
        check("exchange", self.exchange > T::zero(), self.exchange, "must be > 0")?;
        check("spin", self.spin > T::zero(), self.spin, "must be > 0")?;
        check("anisotropy", self.anisotropy >= T::zero(), self.anisotropy, "must be >= 0")?;
        check("zeeman", true, self.zeeman, "must be finite")?;
        Ok(())
    }
}

/// Kittel-mode data at one wavevector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KittelModes<T> {
    pub k: Wavevector<T>,
    pub omega_a: T,
    pub omega_b: T,
    pub g_mm: Complex<T>,
    /// `Γ = 2 g / (ω_a + ω_b)`.
    pub gamma: Complex<T>,
}

impl<T: Real> KittelModes<T> {
    pub fn new(k: Wavevector<T>, omega_a: T, omega_b: T, g_mm: Complex<T>) -> Self {
        let two = T::lit(2.0);
        let gamma = g_mm * (two / (omega_a + omega_b));
        Self { k, omega_a, omega_b, g_mm, gamma }
    }

    /// Kittel modes of `m` at `k`, without any stability check.
    pub fn from_model(k: Wavevector<T>, m: &ModelParams<T>) -> Self {
        let two = T::lit(2.0);
        let z = T::from_usize_lossy(m.lattice.coordination());
        let exchange = m.spin * z * m.exchange;
        let base = exchange + two * m.spin * m.anisotropy;
        let g = exchange * structure_factor(&k, &m.lattice);
        Self::new(k, base + m.zeeman, base - m.zeeman, Complex::new(g, T::zero()))
    }

    pub fn mean_frequency(&self) -> T {
        (self.omega_a + self.omega_b) / T::lit(2.0)
    }

    pub fn half_splitting(&self) -> T {
        (self.omega_a - self.omega_b) / T::lit(2.0)
    }

    pub fn check_stable(&self) -> Result<(), ModelError> {
        let sum = self.omega_a + self.omega_b;
        let unstable = |reason: String| Err(ModelError::Unstable { k: k_f64(&self.k), reason });
        if !(sum > T::zero()) {
            return unstable(format!("ω_a + ω_b = {sum} is not positive"));
        }
        if !(self.omega_b > T::zero()) || !(self.omega_a > T::zero()) {
            return unstable(format!("Kittel frequency not positive (ω_a = {}, ω_b = {})", self.omega_a, self.omega_b));
        }
        if !(self.gamma.norm() < T::one()) {
            return unstable(format!("|Γ| = {} ≥ 1", self.gamma.norm()));
        }
        Ok(())
    }
}

/// Diagonal magnon frequencies at one wavevector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnonDispersion<T> {
    pub k: Wavevector<T>,
    pub omega_alpha: T,
    pub omega_beta: T,
}

/// Normalised nearest-neighbour sum `γ_k = (1/z) Σ_δ e^{i k·δ}`.
pub fn structure_factor<T: Real>(k: &Wavevector<T>, lattice: &LatticeSpec<T>) -> T {
    let neighbors = lattice.neighbors();
    let z = T::from_usize_lossy(neighbors.len());
    // The neighbour set is inversion symmetric, so the imaginary parts cancel.
    let sum = neighbors.iter().fold(T::zero(), |acc, d| {
        let phase = k[0] * d[0] + k[1] * d[1] + k[2] * d[2];
        acc + phase.cos()
    });
    sum / z
}

pub fn kittel_parameters<T: Real>(k: Wavevector<T>, m: &ModelParams<T>) -> Result<KittelModes<T>, ModelError> {
    m.validate()?;
    let km = KittelModes::from_model(k, m);
    km.check_stable()?;
    Ok(km)
}

/// `ω_{α/β} = sqrt(ω̄² − |g|²) ± δ` with `ω̄` the mean and `δ` the half splitting
/// of the Kittel frequencies.
pub fn diagonal_frequencies<T: Real>(km: &KittelModes<T>) -> Result<MagnonDispersion<T>, ModelError> {
    let unstable = |reason: String| Err(ModelError::Unstable { k: k_f64(&km.k), reason });
    if !(km.gamma.norm() < T::one()) {
        return unstable(format!("|Γ| = {} ≥ 1", km.gamma.norm()));
    }
    let mean = km.mean_frequency();
    let split = km.half_splitting();
    let g = km.g_mm.norm();
    // (ω̄ − |g|)(ω̄ + |g|) keeps the gap accurate when |g| ≈ ω̄.
    let radicand = (mean - g) * (mean + g);
    if radicand < T::zero() {
        return unstable(format!("ω̄² − |g|² = {radicand} < 0"));
    }
    let root = radicand.sqrt();
    let omega_alpha = root + split;
    let omega_beta = root - split;
    if !(omega_beta > T::zero()) || !(omega_alpha > T::zero()) {
        return unstable(format!("spin-flop regime (ω_α = {omega_alpha}, ω_β = {omega_beta})"));
    }
    Ok(MagnonDispersion { k: km.k, omega_alpha, omega_beta })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSegment<T> {
    pub start: Wavevector<T>,
    pub end: Wavevector<T>,
    pub count: usize,
}

impl<T: Real> PathSegment<T> {
    pub fn new(start: Wavevector<T>, end: Wavevector<T>, count: usize) -> Self {
        Self { start, end, count }
    }
}

/// Piecewise-linear path through the Brillouin zone.
///
/// Each segment contributes `count` evenly spaced points including both
/// endpoints. When a segment starts exactly where the previous one ended the
/// shared corner is emitted once.
pub fn kpath<T: Real>(lattice: &LatticeSpec<T>, segments: &[PathSegment<T>]) -> Result<Vec<Wavevector<T>>, ModelError> {
    lattice.validate()?;
    if segments.is_empty() {
        return Err(ModelError::EmptyPath);
    }
    let mut points: Vec<Wavevector<T>> = Vec::new();
    for (index, seg) in segments.iter().enumerate() {
        if seg.count < 2 {
            return Err(ModelError::SegmentTooShort { index, count: seg.count });
        }
        let skip_first = index > 0 && segments[index - 1].end == seg.start;
        let last = T::from_usize_lossy(seg.count - 1);
        for i in usize::from(skip_first)..seg.count {
            let t = T::from_usize_lossy(i) / last;
            let mut k = [T::zero(); 3];
            for (c, kc) in k.iter_mut().enumerate() {
                *kc = seg.start[c] + (seg.end[c] - seg.start[c]) * t;
            }
            points.push(k);
        }
    }
    Ok(points)
}

/// Cumulative arc length along a sequence of wavevectors.
pub fn path_distance<T: Real>(points: &[Wavevector<T>]) -> Vec<T> {
    let mut out = Vec::with_capacity(points.len());
    let mut acc = T::zero();
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            let q = points[i - 1];
            let d2 = (0..3).fold(T::zero(), |s, c| s + (p[c] - q[c]) * (p[c] - q[c]));
            acc = acc + d2.sqrt();
        }
        out.push(acc);
    }
    out
}
