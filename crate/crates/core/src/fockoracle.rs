//! Brute-force checks on truncated multi-mode bosonic Fock spaces.
//!
//! Operators are assembled as sparse matrices on the full tensor-product
//! space. Spectra come from dense Hermitian diagonalisation of conserved-charge
//! blocks (`n_a − n_b` for the two-mode magnon Hamiltonian, the total
//! excitation number for the hybrid), after checking that the block really is
//! closed under the operator. Time evolution is exact spectral propagation.
//!
//! Nothing here uses the closed forms it is meant to test, apart from the
//! Bogoliubov parameters used to build `α†` and `β†`, whose correctness shows up
//! directly in the eigen-residual of the states they produce.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;
use thiserror::Error;

use crate::bogoliubov::SqueezeParams;
use crate::hybrid::HybridParams;
use crate::model::KittelModes;

pub type C64 = Complex64;

/// Default bound on the tensor-product dimension.
pub const DEFAULT_DIM_CAP: usize = 1 << 20;
/// Largest block handed to the dense eigensolver.
pub const DENSE_LIMIT: usize = 4096;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("Fock space dimension {dim} exceeds the cap {cap}")]
    CapExceeded { dim: usize, cap: usize },
    #[error("mode `{label}` needs dimension >= 2 (qubits exactly 2), got {dim}")]
    BadModeDim { label: String, dim: usize },
    #[error("no mode labelled `{0}`")]
    UnknownMode(String),
    #[error("mode partition must be a non-empty proper subset of the modes")]
    BadPartition,
    #[error("operator is not Hermitian (max |H - H†| = {0:e})")]
    NotHermitian(f64),
    #[error("state norm deviates from 1 by {0:e}")]
    NotNormalized(f64),
    #[error("block of dimension {0} is too large for dense diagonalisation")]
    DenseLimit(usize),
    #[error("sector is not closed under the operator (leakage {0:e})")]
    SectorLeak(f64),
    #[error("empty sector")]
    EmptySector,
    #[error("eigen-residual {residual:e} exceeds {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("time series: {0}")]
    Sampling(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    Boson,
    Qubit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub label: String,
    pub dim: usize,
    pub kind: ModeKind,
}

impl Mode {
    pub fn boson(label: &str, dim: usize) -> Self {
        Self { label: label.to_owned(), dim, kind: ModeKind::Boson }
    }

    pub fn qubit(label: &str) -> Self {
        Self { label: label.to_owned(), dim: 2, kind: ModeKind::Qubit }
    }
}

/// Tensor product of truncated modes; the last mode varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FockSpace {
    modes: Vec<Mode>,
    strides: Vec<usize>,
    total_dim: usize,
}

impl FockSpace {
    pub fn new(modes: Vec<Mode>) -> Result<Self, OracleError> {
        Self::with_cap(modes, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(modes: Vec<Mode>, cap: usize) -> Result<Self, OracleError> {
        let mut total: usize = 1;
        for m in &modes {
            let ok = match m.kind {
                ModeKind::Boson => m.dim >= 2,
                ModeKind::Qubit => m.dim == 2,
            };
            if !ok {
                return Err(OracleError::BadModeDim { label: m.label.clone(), dim: m.dim });
            }
            total = total.saturating_mul(m.dim);
        }
        if total > cap {
            return Err(OracleError::CapExceeded { dim: total, cap });
        }
        let mut strides = vec![1; modes.len()];
        for i in (0..modes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * modes[i + 1].dim;
        }
        Ok(Self { modes, strides, total_dim: total })
    }

    /// Two bosonic modes `a`, `b` with `n` levels each.
    pub fn two_mode(n: usize) -> Result<Self, OracleError> {
        Self::new(vec![Mode::boson("a", n), Mode::boson("b", n)])
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode_index(&self, label: &str) -> Result<usize, OracleError> {
        self.modes.iter().position(|m| m.label == label).ok_or_else(|| OracleError::UnknownMode(label.to_owned()))
    }

    pub fn index(&self, occ: &[usize]) -> usize {
        occ.iter().zip(&self.strides).map(|(n, s)| n * s).sum()
    }

    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.strides[mode]) % self.modes[mode].dim
    }

    pub fn occupations(&self, index: usize) -> Vec<usize> {
        (0..self.modes.len()).map(|m| self.occupation(index, m)).collect()
    }

    /// Basis states with at least one boson mode in its top level, where
    /// truncation breaks the canonical commutator.
    pub fn is_boundary(&self, index: usize) -> bool {
        self.modes
            .iter()
            .enumerate()
            .any(|(m, mode)| mode.kind == ModeKind::Boson && self.occupation(index, m) == mode.dim - 1)
    }

    /// Indices of basis states with `charge(occupations) == q`, ascending.
    pub fn sector(&self, charge: impl Fn(&[usize]) -> i64, q: i64) -> Vec<usize> {
        (0..self.total_dim).filter(|&i| charge(&self.occupations(i)) == q).collect()
    }

    /// Sector of fixed total excitation number.
    pub fn number_sector(&self, n: usize) -> Vec<usize> {
        self.sector(|occ| occ.iter().sum::<usize>() as i64, n as i64)
    }
}

/// Sparse complex matrix on a [`FockSpace`], stored row by row with sorted
/// column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    space: FockSpace,
    rows: Vec<Vec<(usize, C64)>>,
}

impl OperatorMatrix {
    pub fn zero(space: &FockSpace) -> Self {
        Self { space: space.clone(), rows: vec![Vec::new(); space.total_dim] }
    }

    pub fn identity(space: &FockSpace) -> Self {
        Self::diagonal(space, |_| 1.0)
    }

    pub fn diagonal(space: &FockSpace, f: impl Fn(&[usize]) -> f64) -> Self {
        let rows = (0..space.total_dim)
            .map(|i| {
                let d = f(&space.occupations(i));
                if d == 0.0 {
                    Vec::new()
                } else {
                    vec![(i, C64::new(d, 0.0))]
                }
            })
            .collect();
        Self { space: space.clone(), rows }
    }

    pub fn from_triplets(space: &FockSpace, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut acc: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); space.total_dim];
        for (i, j, v) in triplets {
            *acc[i].entry(j).or_insert(ZERO) += v;
        }
        Self::from_maps(space, acc)
    }

    fn from_maps(space: &FockSpace, maps: Vec<BTreeMap<usize, C64>>) -> Self {
        let rows = maps.into_iter().map(|m| m.into_iter().filter(|(_, v)| *v != ZERO).collect()).collect();
        Self { space: space.clone(), rows }
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match self.rows[i].binary_search_by_key(&j, |(c, _)| *c) {
            Ok(k) => self.rows[i][k].1,
            Err(_) => ZERO,
        }
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(&self.space, self.entries().map(|(i, j, v)| (j, i, v.conj())))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_triplets(&self.space, self.entries().map(|(i, j, v)| (i, j, v * c)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_triplets(&self.space, self.entries().chain(other.entries()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_triplets(&self.space, self.entries().chain(other.entries().map(|(i, j, v)| (i, j, -v))))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let maps = self
            .rows
            .iter()
            .map(|row| {
                let mut acc = BTreeMap::new();
                for &(k, a) in row {
                    for &(j, b) in &other.rows[k] {
                        *acc.entry(j).or_insert(ZERO) += a * b;
                    }
                }
                acc
            })
            .collect();
        Self::from_maps(&self.space, maps)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.rows.iter().map(|row| row.iter().map(|&(j, v)| v * x[j]).sum()).collect()
    }

    /// `max |H_ij − conj(H_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        self.entries().map(|(i, j, v)| (v - self.get(j, i).conj()).norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries().map(|(_, _, v)| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm.
    pub fn inf_norm(&self) -> f64 {
        self.rows.iter().map(|r| r.iter().map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Frobenius norm of the entries with row and column both accepted.
    pub fn restricted_norm(&self, keep: impl Fn(usize) -> bool) -> f64 {
        self.entries().filter(|&(i, j, _)| keep(i) && keep(j)).map(|(_, _, v)| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry connecting `basis` to its complement.
    pub fn leakage(&self, basis: &[usize]) -> f64 {
        let mut inside = vec![false; self.dim()];
        for &i in basis {
            inside[i] = true;
        }
        self.entries().filter(|&(i, j, _)| inside[i] != inside[j]).map(|(_, _, v)| v.norm()).fold(0.0, f64::max)
    }

    /// Dense block on `basis` (rows and columns in the given order).
    pub fn block(&self, basis: &[usize]) -> DMatrix<C64> {
        let mut pos = vec![usize::MAX; self.dim()];
        for (k, &i) in basis.iter().enumerate() {
            pos[i] = k;
        }
        let mut m = DMatrix::zeros(basis.len(), basis.len());
        for (r, &i) in basis.iter().enumerate() {
            for &(j, v) in &self.rows[i] {
                if pos[j] != usize::MAX {
                    m[(r, pos[j])] = v;
                }
            }
        }
        m
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let all: Vec<usize> = (0..self.dim()).collect();
        self.block(&all)
    }
}

/// Truncated lowering operator of `mode`, `√n |n−1⟩⟨n|` tensored with identities.
pub fn annihilation(space: &FockSpace, mode: usize) -> OperatorMatrix {
    let triplets = (0..space.total_dim).filter_map(|i| {
        let n = space.occupation(i, mode);
        (n > 0).then(|| (i - space.strides[mode], i, C64::new((n as f64).sqrt(), 0.0)))
    });
    OperatorMatrix::from_triplets(space, triplets)
}

pub fn creation(space: &FockSpace, mode: usize) -> OperatorMatrix {
    annihilation(space, mode).adjoint()
}

pub fn number(space: &FockSpace, mode: usize) -> OperatorMatrix {
    OperatorMatrix::diagonal(space, |occ| occ[mode] as f64)
}

/// State vector on a [`FockSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub space: FockSpace,
    pub amplitudes: Vec<C64>,
}

impl FockState {
    pub fn basis(space: &FockSpace, occ: &[usize]) -> Self {
        let mut amplitudes = vec![ZERO; space.total_dim];
        amplitudes[space.index(occ)] = ONE;
        Self { space: space.clone(), amplitudes }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `|1 − ‖ψ‖|`.
    pub fn norm_deficit(&self) -> f64 {
        (1.0 - self.norm()).abs()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        for a in &mut self.amplitudes {
            *a /= n;
        }
        self
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn apply(&self, op: &OperatorMatrix) -> Self {
        Self { space: self.space.clone(), amplitudes: op.apply(&self.amplitudes) }
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> C64 {
        self.inner(&self.apply(op))
    }

    pub fn probability(&self, occ: &[usize]) -> f64 {
        self.amplitudes[self.space.index(occ)].norm_sqr()
    }
}

/// Eigenpairs of a Hermitian dense matrix, eigenvalues ascending.
pub fn eigh(m: DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>), OracleError> {
    let n = m.nrows();
    if n > DENSE_LIMIT {
        return Err(OracleError::DenseLimit(n));
    }
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let herm = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (m[(i, j)] - m[(j, i)].conj()).norm())
        .fold(0.0, f64::max);
    if herm > 1e-12 * scale {
        return Err(OracleError::NotHermitian(herm));
    }
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Eigen-decomposition of `h` restricted to a closed sector.
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    pub basis: Vec<usize>,
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl SectorSpectrum {
    pub fn new(h: &OperatorMatrix, basis: Vec<usize>) -> Result<Self, OracleError> {
        if basis.is_empty() {
            return Err(OracleError::EmptySector);
        }
        let leak = h.leakage(&basis);
        if leak != 0.0 {
            return Err(OracleError::SectorLeak(leak));
        }
        let (values, vectors) = eigh(h.block(&basis))?;
        Ok(Self { basis, values, vectors })
    }

    /// Eigenvector `k` embedded in the full space.
    pub fn state(&self, space: &FockSpace, k: usize) -> FockState {
        let mut amplitudes = vec![ZERO; space.total_dim];
        for (r, &i) in self.basis.iter().enumerate() {
            amplitudes[i] = self.vectors[(r, k)];
        }
        FockState { space: space.clone(), amplitudes }
    }
}

/// `ω_a a†a + ω_b b†b + g a b + g* a†b†` on two modes of `n` levels.
pub fn two_mode_hamiltonian(km: &KittelModes<f64>, n: usize) -> Result<OperatorMatrix, OracleError> {
    let space = FockSpace::two_mode(n)?;
    let (a, b) = (annihilation(&space, 0), annihilation(&space, 1));
    let pair = a.mul(&b).scale(km.g_mm);
    let h = number(&space, 0)
        .scale(C64::new(km.omega_a, 0.0))
        .add(&number(&space, 1).scale(C64::new(km.omega_b, 0.0)))
        .add(&pair)
        .add(&pair.adjoint());
    Ok(h)
}

fn imbalance(occ: &[usize]) -> i64 {
    occ[0] as i64 - occ[1] as i64
}

/// Low-lying spectrum of the truncated two-mode Hamiltonian.
#[derive(Debug, Clone)]
pub struct TwoModeSpectrum {
    pub hamiltonian: OperatorMatrix,
    pub ground_energy: f64,
    /// Lowest excitation with `n_a − n_b = +1`.
    pub omega_alpha: f64,
    /// Lowest excitation with `n_a − n_b = −1`.
    pub omega_beta: f64,
    /// Ground state, phase fixed so that the vacuum amplitude is real positive.
    pub ground: FockState,
}

pub fn two_mode_spectrum(km: &KittelModes<f64>, n: usize) -> Result<TwoModeSpectrum, OracleError> {
    let h = two_mode_hamiltonian(km, n)?;
    let space = h.space().clone();
    let lowest = |q: i64| SectorSpectrum::new(&h, space.sector(imbalance, q));
    let s0 = lowest(0)?;
    let (sp, sm) = (lowest(1)?, lowest(-1)?);
    let mut ground = s0.state(&space, 0);
    let vac = ground.amplitudes[0];
    let phase = if vac.norm() > 0.0 { vac.conj() / vac.norm() } else { ONE };
    for a in &mut ground.amplitudes {
        *a *= phase;
    }
    let e0 = s0.values[0];
    Ok(TwoModeSpectrum {
        ground_energy: e0,
        omega_alpha: sp.values[0] - e0,
        omega_beta: sm.values[0] - e0,
        ground,
        hamiltonian: h,
    })
}

#[derive(Debug, Clone)]
pub struct Eigenstate {
    pub state: FockState,
    /// `⟨ψ|H|ψ⟩`.
    pub energy: f64,
    /// `‖Hψ − Eψ‖`.
    pub residual: f64,
    /// [`OperatorMatrix::inf_norm`] of `H`, for relative tolerances.
    pub h_norm: f64,
}

/// `(α†)^x (β†)^y |ψ_00⟩`, normalised, on two truncated modes. `|ψ_00⟩` is the
/// numerically lowest eigenvector, `α† = u a† − v* b`, `β† = −v* a + u b†`.
///
/// Fails when `‖Hψ − Eψ‖ > rel_tol · ‖H‖`.
pub fn squeezed_eigenstate(
    x: usize,
    y: usize,
    km: &KittelModes<f64>,
    sp: &SqueezeParams<f64>,
    n: usize,
    rel_tol: f64,
) -> Result<Eigenstate, OracleError> {
    let spec = two_mode_spectrum(km, n)?;
    let h = &spec.hamiltonian;
    let space = h.space().clone();
    let (a, b) = (annihilation(&space, 0), annihilation(&space, 1));
    let (ad, bd) = (a.adjoint(), b.adjoint());
    let alpha_dag = ad.scale(sp.u).sub(&b.scale(sp.v.conj()));
    let beta_dag = bd.scale(sp.u).sub(&a.scale(sp.v.conj()));
    let mut psi = spec.ground.clone();
    for _ in 0..x {
        psi = psi.apply(&alpha_dag);
    }
    for _ in 0..y {
        psi = psi.apply(&beta_dag);
    }
    let psi = psi.normalized();
    let h_psi = psi.apply(h);
    let energy = psi.inner(&h_psi).re;
    let residual =
        h_psi.amplitudes.iter().zip(&psi.amplitudes).map(|(hp, p)| (hp - p * energy).norm_sqr()).sum::<f64>().sqrt();
    let h_norm = h.inf_norm();
    if residual > rel_tol * h_norm {
        return Err(OracleError::Residual { residual, tolerance: rel_tol * h_norm });
    }
    Ok(Eigenstate { state: psi, energy, residual, h_norm })
}

/// Entanglement entropy (nats) between the modes in `subsystem` and the rest,
/// from the singular values of the reshaped amplitude matrix.
pub fn reduced_entropy(state: &FockState, subsystem: &[usize]) -> Result<f64, OracleError> {
    let space = &state.space;
    let nm = space.modes.len();
    if subsystem.is_empty() || subsystem.len() >= nm || subsystem.iter().any(|&m| m >= nm) {
        return Err(OracleError::BadPartition);
    }
    let deficit = state.norm_deficit();
    if deficit > 1e-8 {
        return Err(OracleError::NotNormalized(deficit));
    }
    let in_a: Vec<bool> = (0..nm).map(|m| subsystem.contains(&m)).collect();
    let dim_of = |sel: bool| (0..nm).filter(|&m| in_a[m] == sel).map(|m| space.modes[m].dim).product::<usize>();
    let (da, db) = (dim_of(true), dim_of(false));
    let mut mat = DMatrix::<C64>::zeros(da, db);
    for (i, &amp) in state.amplitudes.iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        let (mut ia, mut ib) = (0, 0);
        for (m, &sub) in in_a.iter().enumerate() {
            let n = space.occupation(i, m);
            if sub {
                ia = ia * space.modes[m].dim + n;
            } else {
                ib = ib * space.modes[m].dim + n;
            }
        }
        mat[(ia, ib)] = amp;
    }
    let sv = mat.singular_values();
    let total: f64 = sv.iter().map(|s| s * s).sum();
    Ok(sv.iter().map(|s| s * s / total).filter(|&l| l > 0.0).map(|l| -l * l.ln()).sum::<f64>().max(0.0))
}

/// EPR function `½[Var(X_A + X_B) + Var(P_A − P_B)]` with
/// `X = (a + a†)/√2`, `P = (a − a†)/(i√2)`.
pub fn epr_variance(state: &FockState, mode_a: usize, mode_b: usize) -> f64 {
    let space = &state.space;
    let quad = |m: usize| {
        let a = annihilation(space, m);
        let ad = a.adjoint();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        (a.add(&ad).scale(C64::new(s, 0.0)), a.sub(&ad).scale(C64::new(0.0, -s)))
    };
    let (xa, pa) = quad(mode_a);
    let (xb, pb) = quad(mode_b);
    let variance = |op: &OperatorMatrix| {
        let o_psi = state.apply(op);
        let mean = state.inner(&o_psi).re;
        o_psi.norm().powi(2) - mean * mean
    };
    0.5 * (variance(&xa.add(&xb)) + variance(&pa.sub(&pb)))
}

/// Truncation of the magnon–cavity–qubit model. The qubit is always two-level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HybridDims {
    pub magnon: usize,
    pub cavity: usize,
}

impl Default for HybridDims {
    fn default() -> Self {
        Self { magnon: 3, cavity: 3 }
    }
}

/// Operators of the three-mode hybrid on modes `(alpha, c, q)`.
#[derive(Debug, Clone)]
pub struct HybridModel {
    pub space: FockSpace,
    pub h0: OperatorMatrix,
    pub v: OperatorMatrix,
    /// `α†α + c†c + η†η`.
    pub total_number: OperatorMatrix,
    params: HybridParams<f64>,
}

pub const MAGNON: usize = 0;
pub const CAVITY: usize = 1;
pub const QUBIT: usize = 2;

impl HybridModel {
    pub fn new(h: &HybridParams<f64>, dims: HybridDims) -> Result<Self, OracleError> {
        let space =
            FockSpace::new(vec![Mode::boson("alpha", dims.magnon), Mode::boson("c", dims.cavity), Mode::qubit("q")])?;
        let h0 = OperatorMatrix::diagonal(&space, |occ| {
            h.omega_alpha * occ[MAGNON] as f64 + h.omega_c * occ[CAVITY] as f64 + h.omega_q * occ[QUBIT] as f64
        });
        let (al, c, q) = (annihilation(&space, MAGNON), annihilation(&space, CAVITY), annihilation(&space, QUBIT));
        let hop = c.adjoint().mul(&al).scale(h.g_mph).add(&q.adjoint().mul(&c).scale(h.g_phq));
        let v = hop.add(&hop.adjoint()).scale(-ONE);
        let total_number = OperatorMatrix::diagonal(&space, |occ| occ.iter().sum::<usize>() as f64);
        Ok(Self { space, h0, v, total_number, params: *h })
    }

    pub fn hamiltonian(&self) -> OperatorMatrix {
        self.h0.add(&self.v)
    }

    /// `W = [g_mph/(ω_α−ω_c) c†α − g_phq/(ω_q−ω_c) η†c] − h.c.`
    pub fn generator(&self) -> OperatorMatrix {
        let h = &self.params;
        let s = &self.space;
        let (al, c, q) = (annihilation(s, MAGNON), annihilation(s, CAVITY), annihilation(s, QUBIT));
        let x = c
            .adjoint()
            .mul(&al)
            .scale(h.g_mph / (h.omega_alpha - h.omega_c))
            .sub(&q.adjoint().mul(&c).scale(h.g_phq / (h.omega_q - h.omega_c)));
        x.sub(&x.adjoint())
    }

    /// `H₀ + ½[W, V]`.
    pub fn sw_effective(&self) -> OperatorMatrix {
        self.h0.add(&self.generator().commutator(&self.v).scale(C64::new(0.5, 0.0)))
    }

    pub fn sector(&self, n: usize) -> Vec<usize> {
        self.space.number_sector(n)
    }

    pub fn index(&self, magnon: usize, cavity: usize, qubit: usize) -> usize {
        self.space.index(&[magnon, cavity, qubit])
    }
}

/// `ω_α α†α + ω_c c†c + ω_q η†η − (g_mph c†α + g_phq η†c + h.c.)`.
pub fn hybrid_hamiltonian(h: &HybridParams<f64>, dims: HybridDims) -> Result<OperatorMatrix, OracleError> {
    Ok(HybridModel::new(h, dims)?.hamiltonian())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorResidual {
    /// `‖V + [W, H₀]‖_F` on the single-excitation sector.
    pub single_excitation: f64,
    /// Same, on all states off the truncation boundary.
    pub bulk: f64,
}

pub fn generator_residual(h: &HybridParams<f64>, dims: HybridDims) -> Result<GeneratorResidual, OracleError> {
    let model = HybridModel::new(h, dims)?;
    let r = model.v.add(&model.generator().commutator(&model.h0));
    let space = &model.space;
    let single: Vec<bool> = (0..space.total_dim).map(|i| space.occupations(i).iter().sum::<usize>() == 1).collect();
    Ok(GeneratorResidual {
        single_excitation: r.restricted_norm(|i| single[i]),
        bulk: r.restricted_norm(|i| !space.is_boundary(i)),
    })
}

/// `‖e^W H e^{−W} − (H₀ + ½[W, V])‖_F` on the single-excitation sector, where
/// truncation is exact.
pub fn sw_transform_remainder(h: &HybridParams<f64>) -> Result<f64, OracleError> {
    let model = HybridModel::new(h, HybridDims { magnon: 2, cavity: 2 })?;
    let basis = model.sector(1);
    let w = model.generator().block(&basis);
    // W is anti-Hermitian: W = −iK with K = iW Hermitian.
    let k = w.map(|z| z * C64::new(0.0, 1.0));
    let (vals, vecs) = eigh(k)?;
    let phases =
        DMatrix::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|&l| C64::from_polar(1.0, -l))));
    let u = &vecs * phases * vecs.adjoint();
    let full = model.hamiltonian().block(&basis);
    let rotated = &u * full * u.adjoint();
    let eff = model.sw_effective().block(&basis);
    Ok((rotated - eff).norm())
}

/// Exact propagator `e^{−iHt}` from a spectral decomposition.
#[derive(Debug, Clone)]
pub struct Propagator {
    space: FockSpace,
    basis: Vec<usize>,
    values: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl Propagator {
    pub fn new(h: &OperatorMatrix) -> Result<Self, OracleError> {
        Self::on_sector(h, (0..h.dim()).collect())
    }

    /// Propagator restricted to a closed sector; states must live inside it.
    pub fn on_sector(h: &OperatorMatrix, basis: Vec<usize>) -> Result<Self, OracleError> {
        let herm = h.hermiticity_error();
        if herm > 1e-12 * h.inf_norm().max(1.0) {
            return Err(OracleError::NotHermitian(herm));
        }
        let s = SectorSpectrum::new(h, basis)?;
        Ok(Self { space: h.space().clone(), basis: s.basis, values: s.values, vectors: s.vectors })
    }

    pub fn evolve(&self, state: &FockState, t: f64) -> FockState {
        let psi = DVector::from_iterator(self.basis.len(), self.basis.iter().map(|&i| state.amplitudes[i]));
        let mut coeff = self.vectors.adjoint() * psi;
        for (c, &e) in coeff.iter_mut().zip(&self.values) {
            *c *= C64::from_polar(1.0, -e * t);
        }
        let out = &self.vectors * coeff;
        let mut amplitudes = vec![ZERO; self.space.total_dim];
        for (r, &i) in self.basis.iter().enumerate() {
            amplitudes[i] = out[r];
        }
        FockState { space: self.space.clone(), amplitudes }
    }
}

/// `e^{−iHt}|ψ⟩`.
pub fn evolve(state: &FockState, h: &OperatorMatrix, t: f64) -> Result<FockState, OracleError> {
    Ok(Propagator::new(h)?.evolve(state, t))
}

/// Frequency and amplitude of a sampled `I sin²(f t)` signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiFit {
    /// `f` in `I sin²(f t)`, i.e. half the angular frequency of the signal.
    /// `None` for a flat signal.
    pub frequency: Option<f64>,
    /// Peak-to-peak amplitude of the fitted oscillation.
    pub intensity: f64,
}

fn sinusoid_fit(times: &[f64], centered: &[f64], omega: f64) -> (f64, Vector3<f64>) {
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for (&t, &y) in times.iter().zip(centered) {
        let row = Vector3::new(1.0, (omega * t).cos(), (omega * t).sin());
        ata += row * row.transpose();
        atb += row * y;
    }
    let coef = ata.lu().solve(&atb).unwrap_or_else(Vector3::zeros);
    (coef.dot(&atb), coef)
}

/// Estimates `(f, I)` from uniformly sampled `P(t)`: the periodogram peak,
/// refined by maximising the least-squares fit of `c₀ + c₁ cos ωt + c₂ sin ωt`
/// within one bin of it.
pub fn extract_rabi(times: &[f64], samples: &[f64]) -> Result<RabiFit, OracleError> {
    let n = times.len();
    if n != samples.len() {
        return Err(OracleError::Sampling(format!("{n} times but {} samples", samples.len())));
    }
    if n < 8 {
        return Err(OracleError::Sampling(format!("{n} samples is too few")));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(OracleError::Sampling("times must be uniformly spaced and increasing".into()));
    }
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &s| (l.min(s), h.max(s)));
    if hi - lo < 1e-12 {
        return Ok(RabiFit { frequency: None, intensity: 0.0 });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = samples.iter().map(|s| s - mean).collect();
    let span = dt * n as f64;
    let bin = std::f64::consts::TAU / span;
    let power = |omega: f64| {
        let z: C64 = times.iter().zip(&centered).map(|(&t, &y)| C64::from_polar(y, -omega * t)).sum();
        z.norm_sqr()
    };
    let peak = (1..n / 2).max_by(|&a, &b| power(a as f64 * bin).total_cmp(&power(b as f64 * bin))).unwrap_or(1);

    // golden-section search on the fit quality
    let quality = |omega: f64| sinusoid_fit(times, &centered, omega).0;
    let (mut a, mut b) = (((peak as f64) - 1.0).max(0.25) * bin, (peak as f64 + 1.0) * bin);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut qc, mut qd) = (quality(c), quality(d));
    for _ in 0..100 {
        if qc > qd {
            b = d;
            d = c;
            qd = qc;
            c = b - g * (b - a);
            qc = quality(c);
        } else {
            a = c;
            c = d;
            qc = qd;
            d = a + g * (b - a);
            qd = quality(d);
        }
    }
    let omega = 0.5 * (a + b);
    let periods = omega * span / std::f64::consts::TAU;
    let per_period = std::f64::consts::TAU / (omega * dt);
    if periods < 4.0 - 1e-9 || per_period < 20.0 - 1e-9 {
        return Err(OracleError::Sampling(format!(
            "need >= 4 periods at >= 20 points per period, got {periods:.2} periods at {per_period:.1}"
        )));
    }
    let (_, coef) = sinusoid_fit(times, &centered, omega);
    let amplitude = (coef[1] * coef[1] + coef[2] * coef[2]).sqrt();
    Ok(RabiFit { frequency: Some(omega / 2.0), intensity: 2.0 * amplitude })
}
