//! Magnon–cavity–transmon hybrid, its Schrieffer–Wolff reduction to an
//! effective magnon–qubit model, and the Rabi observables of that model.
//!
//! The three-mode Hamiltonian is
//!
//! ```text
//! H = ω_α α†α + ω_c c†c + ω_q η†η − (g_mph c†α + g_phq η†c + h.c.)
//! ```
//!
//! With `W = [g_mph/(ω_α−ω_c) c†α − g_phq/(ω_q−ω_c) η†c] − h.c.` the cavity
//! decouples at second order and `H' = H₀ + ½[W, V]` has
//!
//! ```text
//! ω'_c = ω_c − |g_mph|²/(ω_α−ω_c) − |g_phq|²/(ω_q−ω_c)
//! ω'_α = ω_α + |g_mph|²/(ω_α−ω_c)
//! ω'_q = ω_q + |g_phq|²/(ω_q−ω_c)
//! g_mq = ½ g_mph g_phq [1/(ω_α−ω_c) + 1/(ω_q−ω_c)]
//! ```
//!
//! `g_mq` is the `η†α` matrix element of `½[W, V]`; the factor ½ is what the
//! exact three-mode dynamics reproduces.

use thiserror::Error;

use crate::bogoliubov::{BogoliubovError, SqueezeParams};
use crate::entanglement::{epr_function, ground_state_entropy_closed_form, LogBase};
use crate::model::MagnonDispersion;
use crate::scalar::{Complex, Real};

/// Default smallest cavity detuning before a point is treated as resonant.
pub const RESONANCE_EPS: f64 = 1e-9;
/// Validity ratio above which the dispersive reduction is flagged.
pub const DISPERSIVE_WARN_RATIO: f64 = 0.1;
/// `E_J / E_C` below which the transmon regime is questionable.
/// Relative distance from Δ = 1 treated as the boundary itself in [`invert_rabi`].
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;
pub const TRANSMON_REGIME_RATIO: f64 = 20.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HybridError {
    #[error("`{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{which} is resonant with the cavity (detuning {detuning:e})")]
    Resonance { which: &'static str, detuning: f64 },
    #[error("measured EPR value {epr} lies on the wrong side of 1 for φ = {branch}")]
    BranchInconsistent { branch: SqueezeBranch, epr: f64 },
    #[error("excitation number must be at least 1")]
    NoExcitation,
    #[error(transparent)]
    Bogoliubov(#[from] BogoliubovError),
}

fn f64_of<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmonParams<T> {
    pub e_c: T,
    pub e_j: T,
    /// `sqrt(8 E_C E_J) − E_C`.
    pub omega_q: T,
    /// Anharmonicity magnitude, `E_C`.
    pub xi: T,
    /// Set when `E_J/E_C` is below [`TRANSMON_REGIME_RATIO`].
    pub regime_warning: bool,
}

pub fn transmon_spectrum<T: Real>(e_c: T, e_j: T) -> Result<TransmonParams<T>, HybridError> {
    for (name, value) in [("E_C", e_c), ("E_J", e_j)] {
        if !(value > T::zero()) || !value.is_finite() {
            return Err(HybridError::NonPositive { name, value: f64_of(value) });
        }
    }
    let omega_q = (T::lit(8.0) * e_c * e_j).sqrt() - e_c;
    Ok(TransmonParams { e_c, e_j, omega_q, xi: e_c, regime_warning: e_j / e_c < T::lit(TRANSMON_REGIME_RATIO) })
}

/// Which diagonal magnon the circularly polarised cavity field addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ProbeMode {
    /// Right circular polarisation, couples to α.
    #[default]
    Alpha,
    /// Left circular polarisation, couples to β.
    Beta,
}

impl ProbeMode {
    pub fn frequency<T: Real>(self, d: &MagnonDispersion<T>) -> T {
        match self {
            ProbeMode::Alpha => d.omega_alpha,
            ProbeMode::Beta => d.omega_beta,
        }
    }

    /// Magnon part of the magnon–photon coupling, `u + v*` for α and its
    /// conjugate `u* + v` for β.
    pub fn amplitude<T: Real>(self, sp: &SqueezeParams<T>) -> Complex<T> {
        match self {
            ProbeMode::Alpha => sp.alpha_amplitude(),
            ProbeMode::Beta => sp.beta_amplitude(),
        }
    }
}

/// Cavity and dipole settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams<T> {
    /// Vector-potential amplitude `A₀`, taken as an energy scale.
    pub a0: T,
    pub omega_c: T,
    /// Transmon dipole strength `d`.
    pub d: T,
    /// `k·r` at the transmon position.
    pub phase_kr: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings<T> {
    /// `λ = A₀ k sqrt(S)`.
    pub lambda: T,
    pub g_mph: Complex<T>,
    pub g_phq: Complex<T>,
}

/// `g_mph = λ (u + v*)` (or the β amplitude) and `g_phq = −i d ω_c e^{−i k·r}`.
pub fn couplings<T: Real>(
    k: T,
    spin: T,
    sp: &SqueezeParams<T>,
    cavity: &CavityParams<T>,
    mode: ProbeMode,
) -> Couplings<T> {
    let lambda = cavity.a0 * k * spin.sqrt();
    let g_mph = mode.amplitude(sp) * lambda;
    let g_phq = Complex::new(T::zero(), -cavity.d * cavity.omega_c) * Complex::from_polar(T::one(), -cavity.phase_kr);
    Couplings { lambda, g_mph, g_phq }
}

/// Bare three-mode parameters. `omega_alpha` is the frequency of whichever
/// magnon the cavity addresses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridParams<T> {
    pub omega_alpha: T,
    pub omega_c: T,
    pub omega_q: T,
    pub g_mph: Complex<T>,
    pub g_phq: Complex<T>,
}

impl<T: Real> HybridParams<T> {
    pub fn new(omega_alpha: T, omega_c: T, omega_q: T, g_mph: Complex<T>, g_phq: Complex<T>) -> Self {
        Self { omega_alpha, omega_c, omega_q, g_mph, g_phq }
    }

    pub fn from_couplings(omega_alpha: T, omega_c: T, omega_q: T, c: &Couplings<T>) -> Self {
        Self::new(omega_alpha, omega_c, omega_q, c.g_mph, c.g_phq)
    }

    /// `max(|g_mph|, |g_phq|) / min(|ω_α − ω_c|, |ω_q − ω_c|)`.
    pub fn dispersive_ratio(&self) -> T {
        let g = self.g_mph.norm().max(self.g_phq.norm());
        let den = (self.omega_alpha - self.omega_c).abs().min((self.omega_q - self.omega_c).abs());
        g / den
    }

    /// The tuning `ω_q = ω_α`, `|g_phq| = |g_mph|` within `tol`.
    pub fn is_zero_detuned_bare(&self, tol: T) -> bool {
        (self.omega_q - self.omega_alpha).abs() <= tol && (self.g_phq.norm() - self.g_mph.norm()).abs() <= tol
    }
}

/// Qubit frequency and dipole that zero the dressed detuning for a magnon of
/// frequency `omega_magnon` coupled with `g_mph`: `ω_q = ω_magnon`, `d ω_c = |g_mph|`.
pub fn zero_detuning_tuning<T: Real>(omega_magnon: T, g_mph: Complex<T>, omega_c: T) -> (T, T) {
    (omega_magnon, g_mph.norm() / omega_c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedParams<T> {
    pub omega_c_p: T,
    pub omega_alpha_p: T,
    pub omega_q_p: T,
    pub g_mq: Complex<T>,
    /// `Δ = (ω'_α − ω'_q)/2`.
    pub detuning: T,
    pub dispersive_ratio: T,
    pub dispersive_warning: bool,
}

pub fn schrieffer_wolff<T: Real>(h: &HybridParams<T>) -> Result<DressedParams<T>, HybridError> {
    schrieffer_wolff_with_eps(h, T::lit(RESONANCE_EPS))
}

pub fn schrieffer_wolff_with_eps<T: Real>(h: &HybridParams<T>, eps: T) -> Result<DressedParams<T>, HybridError> {
    let d_alpha = h.omega_alpha - h.omega_c;
    let d_q = h.omega_q - h.omega_c;
    for (which, det) in [("magnon", d_alpha), ("qubit", d_q)] {
        if !(det.abs() >= eps) {
            return Err(HybridError::Resonance { which, detuning: f64_of(det) });
        }
    }
    let gm2 = h.g_mph.norm_sqr();
    let gp2 = h.g_phq.norm_sqr();
    let omega_alpha_p = h.omega_alpha + gm2 / d_alpha;
    let omega_q_p = h.omega_q + gp2 / d_q;
    let omega_c_p = h.omega_c - gm2 / d_alpha - gp2 / d_q;
    let half = T::lit(0.5);
    let g_mq = h.g_mph * h.g_phq * (half * (T::one() / d_alpha + T::one() / d_q));
    let ratio = h.dispersive_ratio();
    Ok(DressedParams {
        omega_c_p,
        omega_alpha_p,
        omega_q_p,
        g_mq,
        detuning: (omega_alpha_p - omega_q_p) * half,
        dispersive_ratio: ratio,
        dispersive_warning: ratio > T::lit(DISPERSIVE_WARN_RATIO),
    })
}

/// Rabi data of the effective qubit in the `n`-excitation block
/// `{|n, 0⟩, |n−1, 1⟩}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiObservables<T> {
    pub omega: Complex<T>,
    /// `sqrt(Δ² + n|Ω|²)`.
    pub f: T,
    /// `n|Ω|² / (Δ² + n|Ω|²)`.
    pub intensity: T,
    /// `atan2(sqrt(n)|Ω|, Δ)`.
    pub theta: T,
    pub n: usize,
    pub detuning: T,
    /// `n ω'_α`.
    pub block_center: T,
}

impl<T: Real> RabiObservables<T> {
    /// `[[n ω'_α, √n Ω*], [√n Ω, n ω'_α − 2Δ]]`.
    pub fn block_matrix(&self) -> [[Complex<T>; 2]; 2] {
        let sn = T::from_usize_lossy(self.n).sqrt();
        let c = Complex::new(self.block_center, T::zero());
        [[c, self.omega.conj() * sn], [self.omega * sn, c - Complex::new(self.detuning + self.detuning, T::zero())]]
    }

    /// Eigenvalues of [`Self::block_matrix`], ascending.
    pub fn block_eigenvalues(&self) -> (T, T) {
        let (lo, hi) = self.qubit_eigenvalues();
        (lo - self.detuning, hi - self.detuning)
    }

    /// `ε_± = n ω'_α ± f`, the spectrum after shifting both qubit levels by Δ.
    pub fn qubit_eigenvalues(&self) -> (T, T) {
        (self.block_center - self.f, self.block_center + self.f)
    }
}

pub fn effective_qubit<T: Real>(dp: &DressedParams<T>, n: usize) -> Result<RabiObservables<T>, HybridError> {
    if n == 0 {
        return Err(HybridError::NoExcitation);
    }
    let nf = T::from_usize_lossy(n);
    let coupling2 = nf * dp.g_mq.norm_sqr();
    let denom = dp.detuning * dp.detuning + coupling2;
    let intensity = if denom > T::zero() { coupling2 / denom } else { T::zero() };
    Ok(RabiObservables {
        omega: dp.g_mq,
        f: denom.sqrt(),
        intensity,
        theta: coupling2.sqrt().atan2(dp.detuning),
        n,
        detuning: dp.detuning,
        block_center: nf * dp.omega_alpha_p,
    })
}

/// `P_{0→1}(t) = I sin²(f t)`.
pub fn rabi_probability<T: Real>(t: T, ro: &RabiObservables<T>) -> T {
    ro.intensity * (ro.f * t).sin().powi(2)
}

/// Zero-detuning Rabi frequency `λ² Δ[ψ_00] / |ω_q − ω_c|`, equal to
/// `|g_mph|² / |ω_q − ω_c|`.
pub fn rabi_frequency_zero_detuning<T: Real>(
    lambda: T,
    omega_q: T,
    omega_c: T,
    sp: &SqueezeParams<T>,
) -> Result<T, HybridError> {
    let den = resonance_guard(omega_q, omega_c)?;
    Ok(lambda * lambda * epr_function(sp) / den)
}

fn resonance_guard<T: Real>(omega_q: T, omega_c: T) -> Result<T, HybridError> {
    let den = (omega_q - omega_c).abs();
    if !(den >= T::lit(RESONANCE_EPS)) {
        return Err(HybridError::Resonance { which: "qubit", detuning: f64_of(omega_q - omega_c) });
    }
    Ok(den)
}

/// Real branches of the squeezing phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SqueezeBranch {
    /// `φ = 0`, `Γ < 0`, `Δ = e^{2r} ≥ 1`.
    Zero,
    /// `φ = π`, `Γ > 0`, `Δ = e^{−2r} ≤ 1`.
    Pi,
}

impl SqueezeBranch {
    pub fn phase<T: Real>(self) -> T {
        match self {
            SqueezeBranch::Zero => T::zero(),
            SqueezeBranch::Pi => T::PI(),
        }
    }
}

impl std::fmt::Display for SqueezeBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SqueezeBranch::Zero => "0",
            SqueezeBranch::Pi => "π",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion<T> {
    pub epr: T,
    pub r: T,
    pub ground_entropy: T,
    /// First-order estimate `r ≈ ±(Δ − 1)/2`, for comparison only.
    pub r_linearized: T,
    pub nonlocal: bool,
}

/// Recovers `Δ[ψ_00]`, `r` and the ground-state entropy from a measured
/// zero-detuning Rabi frequency: `Δ = f |ω_q − ω_c| / λ²`, `r = ½ |ln Δ|`.
pub fn invert_rabi<T: Real>(
    f_measured: T,
    lambda: T,
    omega_q: T,
    omega_c: T,
    branch: SqueezeBranch,
    base: LogBase,
) -> Result<Inversion<T>, HybridError> {
    if !(f_measured > T::zero()) {
        return Err(HybridError::NonPositive { name: "f_measured", value: f64_of(f_measured) });
    }
    if !(lambda > T::zero()) {
        return Err(HybridError::NonPositive { name: "lambda", value: f64_of(lambda) });
    }
    let den = resonance_guard(omega_q, omega_c)?;
    let epr = f_measured * den / (lambda * lambda);
    // rounding in f·|ω_q − ω_c|/λ² should not push the boundary state Δ = 1 off its branch
    let epr = if (epr - T::one()).abs() <= T::lit(BOUNDARY_TOLERANCE) { T::one() } else { epr };
    let wrong_side = match branch {
        SqueezeBranch::Pi => epr > T::one(),
        SqueezeBranch::Zero => epr < T::one(),
    };
    if wrong_side {
        return Err(HybridError::BranchInconsistent { branch, epr: f64_of(epr) });
    }
    let r = epr.ln().abs() * T::lit(0.5);
    let half_excess = (epr - T::one()) * T::lit(0.5);
    let r_linearized = match branch {
        SqueezeBranch::Zero => half_excess,
        SqueezeBranch::Pi => -half_excess,
    };
    Ok(Inversion {
        epr,
        r,
        ground_entropy: ground_state_entropy_closed_form(r, base),
        r_linearized,
        nonlocal: epr < T::one(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::{LN_2, PI};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn transmon_values() {
        let t = transmon_spectrum(0.25, 50.0).unwrap();
        assert_eq!(t.omega_q, 9.75);
        assert_eq!(t.xi, 0.25);
        assert!(!t.regime_warning);
        assert!(transmon_spectrum(1.0, 8.0).unwrap().regime_warning);
        assert!(matches!(transmon_spectrum(0.0, 8.0), Err(HybridError::NonPositive { name: "E_C", .. })));
        assert!(transmon_spectrum(1.0, -1.0).is_err());
    }

    #[test]
    fn couplings_values() {
        let cav = CavityParams { a0: 1.0, omega_c: 0.05, d: 2.0, phase_kr: 0.3 };
        let bare = couplings(0.8, 0.5, &SqueezeParams::identity(), &cav, ProbeMode::Alpha);
        assert!((bare.lambda - 0.8 * 0.5f64.sqrt()).abs() < 1e-15);
        assert!((bare.g_mph.norm() - bare.lambda).abs() < 1e-15);
        let want = Complex64::new(0.0, -2.0 * 0.05) * Complex64::from_polar(1.0, -0.3);
        assert!((bare.g_phq - want).norm() < 1e-16);

        let sq = SqueezeParams::from_r_phi(0.5 * LN_2, PI);
        let g = couplings(1.0, 1.0, &sq, &cav, ProbeMode::Alpha);
        assert!((g.g_mph.norm_sqr() - 0.5).abs() < 1e-15);
        let gb = couplings(1.0, 1.0, &sq, &cav, ProbeMode::Beta);
        assert!((gb.g_mph.norm() - g.g_mph.norm()).abs() < 1e-15);

        let off = couplings(1.0, 1.0, &sq, &CavityParams { d: 0.0, ..cav }, ProbeMode::Alpha);
        assert_eq!(off.g_phq.norm(), 0.0);
        let h = HybridParams::from_couplings(5.0, 4.0, 5.0, &off);
        assert_eq!(schrieffer_wolff(&h).unwrap().g_mq.norm(), 0.0);
    }

    #[test]
    fn dressing_at_zero_detuning() {
        let h = HybridParams::new(5.0, 4.0, 5.0, c(0.1), c(0.1));
        let dp = schrieffer_wolff(&h).unwrap();
        assert!((dp.omega_alpha_p - 5.01).abs() < 1e-14);
        assert!((dp.omega_q_p - 5.01).abs() < 1e-14);
        assert!((dp.omega_c_p - 3.98).abs() < 1e-14);
        assert!((dp.g_mq.re - 0.01).abs() < 1e-15);
        assert_eq!(dp.detuning, 0.0);
        assert!(h.is_zero_detuned_bare(0.0));
        assert!(!dp.dispersive_warning);
    }

    #[test]
    fn resonance_is_an_error() {
        let h = HybridParams::new(5.0, 4.0, 4.0, c(0.1), c(0.1));
        assert!(matches!(schrieffer_wolff(&h), Err(HybridError::Resonance { which: "qubit", .. })));
        let h = HybridParams::new(4.0 + 1e-12, 4.0, 5.0, c(0.1), c(0.1));
        assert!(matches!(schrieffer_wolff(&h), Err(HybridError::Resonance { which: "magnon", .. })));
        assert!(schrieffer_wolff_with_eps(&h, 1e-13).is_ok());
    }

    #[test]
    fn dispersive_flag() {
        let h = HybridParams::new(5.0, 4.0, 5.0, c(0.5), c(0.1));
        let dp = schrieffer_wolff(&h).unwrap();
        assert!((dp.dispersive_ratio - 0.5).abs() < 1e-15);
        assert!(dp.dispersive_warning);
    }

    #[test]
    fn effective_qubit_limits() {
        let mk = |det: f64, g: f64| DressedParams {
            omega_c_p: 0.0,
            omega_alpha_p: 1.0,
            omega_q_p: 1.0 - 2.0 * det,
            g_mq: c(g),
            detuning: det,
            dispersive_ratio: 0.0,
            dispersive_warning: false,
        };
        let ro = effective_qubit(&mk(0.0, 0.02), 1).unwrap();
        assert!((ro.f - 0.02).abs() < 1e-17);
        assert_eq!(ro.intensity, 1.0);
        let ro = effective_qubit(&mk(0.02, 0.0), 1).unwrap();
        assert!((ro.f - 0.02).abs() < 1e-17);
        assert_eq!(ro.intensity, 0.0);
        let ro4 = effective_qubit(&mk(0.0, 0.02), 4).unwrap();
        assert!((ro4.f - 0.04).abs() < 1e-17);
        assert!(matches!(effective_qubit(&mk(0.0, 0.02), 0), Err(HybridError::NoExcitation)));
    }

    #[test]
    fn rabi_probability_values() {
        let dp = schrieffer_wolff(&HybridParams::new(5.0, 4.0, 5.0, c(0.1), c(0.1))).unwrap();
        let ro = effective_qubit(&dp, 1).unwrap();
        assert_eq!(rabi_probability(0.0, &ro), 0.0);
        assert!((rabi_probability(PI / (2.0 * ro.f), &ro) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_detuning_frequency() {
        let sq = SqueezeParams::from_r_phi(0.0, PI);
        assert!((rabi_frequency_zero_detuning(2.0, 5.0, 4.0, &sq).unwrap() - 4.0).abs() < 1e-15);
        let sq = SqueezeParams::from_r_phi(0.5 * LN_2, PI);
        assert!((rabi_frequency_zero_detuning(1.0, 5.0, 4.0, &sq).unwrap() - 0.5).abs() < 1e-15);
        assert!(rabi_frequency_zero_detuning(1.0, 4.0, 4.0, &sq).is_err());
    }

    #[test]
    fn zero_detuning_matches_sw_chain() {
        let sq = SqueezeParams::from_r_phi(0.4, PI);
        let cav = CavityParams { a0: 0.3, omega_c: 4.0, d: 0.0, phase_kr: 0.7 };
        let cp = couplings(0.2, 0.5, &sq, &cav, ProbeMode::Alpha);
        let omega_m = 4.8;
        let (omega_q, d) = zero_detuning_tuning(omega_m, cp.g_mph, cav.omega_c);
        let cp = couplings(0.2, 0.5, &sq, &CavityParams { d, ..cav }, ProbeMode::Alpha);
        let h = HybridParams::from_couplings(omega_m, cav.omega_c, omega_q, &cp);
        assert!(h.is_zero_detuned_bare(1e-15));
        let ro = effective_qubit(&schrieffer_wolff(&h).unwrap(), 1).unwrap();
        let f = rabi_frequency_zero_detuning(cp.lambda, omega_q, cav.omega_c, &sq).unwrap();
        assert!((ro.f - f).abs() < 1e-15);
        assert!((f - cp.g_mph.norm_sqr() / (omega_q - cav.omega_c).abs()).abs() < 1e-15);
        assert!((ro.intensity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inversion_round_trip_and_errors() {
        for branch in [SqueezeBranch::Pi, SqueezeBranch::Zero] {
            let sq = SqueezeParams::from_r_phi(0.7f64, branch.phase());
            let f = rabi_frequency_zero_detuning(1.3, 3.0, 1.0, &sq).unwrap();
            let inv = invert_rabi(f, 1.3, 3.0, 1.0, branch, LogBase::Nats).unwrap();
            assert!((inv.r - 0.7).abs() < 1e-10);
        }
        // Δ = 1
        let inv = invert_rabi(0.5, 1.0, 3.0, 1.0, SqueezeBranch::Pi, LogBase::Nats).unwrap();
        assert_eq!(inv.r, 0.0);
        assert_eq!(inv.ground_entropy, 0.0);
        assert!(!inv.nonlocal);
        let err = invert_rabi(0.65, 1.0, 3.0, 1.0, SqueezeBranch::Pi, LogBase::Nats).unwrap_err();
        assert!(matches!(err, HybridError::BranchInconsistent { branch: SqueezeBranch::Pi, .. }));
        assert!(invert_rabi(0.4, 1.0, 3.0, 1.0, SqueezeBranch::Zero, LogBase::Nats).is_err());
        assert!(invert_rabi(-0.4, 1.0, 3.0, 1.0, SqueezeBranch::Zero, LogBase::Nats).is_err());
    }

    #[test]
    fn block_spectrum_matches_qubit_levels() {
        let h = HybridParams::new(5.0, 4.0, 5.05, Complex64::from_polar(0.08, 0.4), Complex64::from_polar(0.06, -1.0));
        let dp = schrieffer_wolff(&h).unwrap();
        for n in 1..5 {
            let ro = effective_qubit(&dp, n).unwrap();
            let m = ro.block_matrix();
            // shift out the large common diagonal before the quadratic formula
            let c = ro.block_center;
            let (d0, d1) = (m[0][0].re - c, m[1][1].re - c);
            let tr = d0 + d1;
            let det = d0 * d1 - (m[0][1] * m[1][0]).re;
            let disc = (tr * tr / 4.0 - det).sqrt();
            let (lo, hi) = ro.block_eigenvalues();
            assert!((lo - c - (tr / 2.0 - disc)).abs() < 1e-12);
            assert!((hi - c - (tr / 2.0 + disc)).abs() < 1e-12);
            assert!((hi - lo - 2.0 * ro.f).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn dressing_preserves_trace(
            wa in 1.0f64..6.0, wc in 1.0f64..6.0, dq in -2.0f64..2.0,
            gm in 0.0f64..0.1, gp in 0.0f64..0.1, pm in -PI..PI, pp in -PI..PI,
        ) {
            let wq = wa + dq;
            prop_assume!((wa - wc).abs() > 0.1 && (wq - wc).abs() > 0.1);
            let h = HybridParams::new(wa, wc, wq, Complex64::from_polar(gm, pm), Complex64::from_polar(gp, pp));
            let dp = schrieffer_wolff(&h).unwrap();
            let scale = wa.abs() + wc.abs() + wq.abs();
            prop_assert!((dp.omega_c_p + dp.omega_alpha_p + dp.omega_q_p - (wa + wc + wq)).abs() < 1e-12 * scale);
            let ro = effective_qubit(&dp, 1).unwrap();
            prop_assert!(ro.intensity <= 1.0);
            let (em, ep) = ro.qubit_eigenvalues();
            prop_assert!((ep - (dp.omega_alpha_p + (dp.detuning.powi(2) + dp.g_mq.norm_sqr()).sqrt())).abs() < 1e-12);
            prop_assert!((em - (dp.omega_alpha_p - (dp.detuning.powi(2) + dp.g_mq.norm_sqr()).sqrt())).abs() < 1e-12);
        }

        #[test]
        fn zero_detuning_characterisation(
            wa in 1.0f64..6.0, wc in 0.5f64..6.0, gm in 0.01f64..0.1, gp in 0.01f64..0.1, dq in -0.5f64..0.5
        ) {
            prop_assume!((wa - wc).abs() > 0.3 && (wa + dq - wc).abs() > 0.3);
            let tuned = HybridParams::new(wa, wc, wa, c(gm), c(gm));
            prop_assert!(schrieffer_wolff(&tuned).unwrap().detuning.abs() < 1e-15);
            prop_assert!((effective_qubit(&schrieffer_wolff(&tuned).unwrap(), 1).unwrap().intensity - 1.0).abs() < 1e-12);
            // generic: off the tuning the dressed detuning does not vanish
            prop_assume!(dq.abs() > 1e-3 || (gm - gp).abs() > 1e-3);
            let h = HybridParams::new(wa, wc, wa + dq, c(gm), c(gp));
            let dp = schrieffer_wolff(&h).unwrap();
            let bare = h.is_zero_detuned_bare(1e-12);
            prop_assert_eq!(bare, dp.detuning.abs() < 1e-14);
        }
    }
}
