//! Entanglement between the Kittel modes in the magnon energy eigenstates
//! `|ψ_xy⟩ = (α†)^x (β†)^y |ψ_00⟩ / sqrt(x! y!)`.
//!
//! Every eigenstate has a Schmidt decomposition on `|n+δ⟩_a|n⟩_b` (`x ≥ y`) or
//! `|n⟩_a|n+δ⟩_b` (`x < y`), `δ = |x − y|`, with coefficients
//!
//! ```text
//! p_n^{(x,y)} = (x! y!)^{-1/2} (1/u*)^δ (1/(u* v))^m f_n^{(m,δ)} p_n,   m = min(x, y)
//! p_n         = e^{inφ} tanh^n r / cosh r
//! ```
//!
//! where `f^{(m,δ)}` follows a three-term recursion in `m` and a two-term
//! recursion in `δ`, seeded with `f^{(0,0)}_n = 1`.

use thiserror::Error;

use crate::bogoliubov::SqueezeParams;
use crate::scalar::{Complex, Real};

/// Target tail mass for the truncated Schmidt series.
pub const TAIL_TOLERANCE: f64 = 1e-12;
/// Safety factor applied to the geometric tail estimate.
pub const TAIL_SAFETY: f64 = 10.0;
/// Largest number of Schmidt terms ever evaluated.
pub const MAX_TERMS: usize = 5000;
/// Largest normalisation deficit accepted by [`entanglement_entropy`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntanglementError {
    #[error("{n_terms} Schmidt terms leave an estimated tail mass of {tail:e}")]
    TruncationInsufficient { n_terms: usize, tail: f64 },
    #[error("Schmidt series needs more than {MAX_TERMS} terms (estimated tail {tail:e})")]
    TermCapExceeded { tail: f64 },
    #[error("Schmidt weights sum to 1 - {deficit:e}; refusing to renormalise")]
    NotNormalized { deficit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Nats,
    Bits,
}

impl LogBase {
    fn scale<T: Real>(self) -> T {
        match self {
            LogBase::Nats => T::one(),
            LogBase::Bits => T::one() / T::LN_2(),
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            LogBase::Nats => "nats",
            LogBase::Bits => "bits",
        }
    }
}

/// Truncated Schmidt coefficients of `|ψ_xy⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum<T> {
    pub x: usize,
    pub y: usize,
    pub delta: usize,
    /// `p_n` for `n = 0..n_terms`, not renormalised.
    pub coefficients: Vec<Complex<T>>,
    /// `Σ |p_n|²` over the kept terms.
    pub weight: T,
    /// Estimated mass beyond the last kept term.
    pub tail_estimate: T,
}

impl<T: Real> SchmidtSpectrum<T> {
    pub fn n_terms(&self) -> usize {
        self.coefficients.len()
    }

    /// `1 − Σ |p_n|²`.
    pub fn deficit(&self) -> T {
        T::one() - self.weight
    }

    /// Kittel occupations `(n_a, n_b)` paired with Schmidt index `n`.
    pub fn occupations(&self, n: usize) -> (usize, usize) {
        if self.x >= self.y {
            (n + self.delta, n)
        } else {
            (n, n + self.delta)
        }
    }

    pub fn probabilities(&self) -> Vec<T> {
        self.coefficients.iter().map(|p| p.norm_sqr()).collect()
    }
}

fn factorial<T: Real>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::from_usize_lossy(k))
}

/// Estimated weight of the Schmidt terms `n ≥ n_terms`, from the geometric
/// decay `n^{x+y} tanh^{2n} r` of `|p_n|²`.
pub fn tail_estimate<T: Real>(x: usize, y: usize, r: T, n_terms: usize) -> T {
    let t2 = r.tanh().powi(2);
    if t2 == T::zero() {
        return if n_terms > x.min(y) { T::zero() } else { T::infinity() };
    }
    let p = (x + y) as i32;
    let m = x.min(y) as i32;
    let shift = T::from_usize_lossy(x + y);
    let nf = T::from_usize_lossy(n_terms);
    let head = (nf + shift).powi(p) * t2.powi(n_terms as i32 - m);
    // ratio of consecutive terms at the truncation point bounds the rest
    let q = ((nf + shift + T::one()) / (nf + shift)).powi(p) * t2;
    if q >= T::one() {
        return T::infinity();
    }
    T::lit(TAIL_SAFETY) * (T::one() - t2) * head / (T::one() - q)
}

/// Smallest term count whose tail estimate is below [`TAIL_TOLERANCE`].
pub fn required_terms<T: Real>(x: usize, y: usize, r: T) -> Result<usize, EntanglementError> {
    let start = x.min(y) + 1;
    let tol = T::lit(TAIL_TOLERANCE);
    let mut last = T::infinity();
    for n in start..=MAX_TERMS {
        last = tail_estimate(x, y, r, n);
        if last <= tol {
            return Ok(n);
        }
    }
    Err(EntanglementError::TermCapExceeded { tail: last.to_f64().unwrap_or(f64::INFINITY) })
}

/// `f^{(m,δ)}_n` for `n = 0..n_terms`, built from `f^{(0,0)} = 1` by first
/// raising `m` and then `δ`. Each step consumes the `n + 1` entry of the level
/// below, so the seed window is `n_terms + m + δ` long.
fn f_polynomial<T: Real>(m: usize, delta: usize, n_terms: usize, u2: T, v2: T) -> Vec<T> {
    let mut f = vec![T::one(); n_terms + m + delta];
    let (u4, v4, uv2) = (u2 * u2, v2 * v2, u2 * v2);
    let two = T::lit(2.0);
    for _ in 0..m {
        let next: Vec<T> = (0..f.len() - 1)
            .map(|n| {
                let nf = T::from_usize_lossy(n);
                let lower = if n == 0 { T::zero() } else { nf * u4 * f[n - 1] };
                lower - (two * nf + T::one()) * uv2 * f[n] + (nf + T::one()) * v4 * f[n + 1]
            })
            .collect();
        f = next;
    }
    for d in 1..=delta {
        let df = T::from_usize_lossy(d);
        let next: Vec<T> = (0..f.len() - 1)
            .map(|n| {
                let nf = T::from_usize_lossy(n);
                u2 * (nf + df).sqrt() * f[n] - v2 * (nf + T::one()).sqrt() * f[n + 1]
            })
            .collect();
        f = next;
    }
    f
}

/// Schmidt coefficients of `|ψ_xy⟩` with an explicit number of terms.
///
/// At `r = 0` with `m > 0` the closed form is `0/0`; the analytic limit, the
/// product state `|x⟩|y⟩`, is returned instead.
pub fn schmidt_coefficients<T: Real>(
    x: usize,
    y: usize,
    sp: &SqueezeParams<T>,
    n_terms: usize,
) -> Result<SchmidtSpectrum<T>, EntanglementError> {
    let m = x.min(y);
    let delta = x.abs_diff(y);
    let tail = tail_estimate(x, y, sp.r, n_terms);
    if !(tail <= T::lit(TAIL_TOLERANCE)) {
        return Err(EntanglementError::TruncationInsufficient {
            n_terms,
            tail: tail.to_f64().unwrap_or(f64::INFINITY),
        });
    }

    let zero = Complex::new(T::zero(), T::zero());
    let coefficients = if sp.v.norm() == T::zero() {
        let mut c = vec![zero; n_terms];
        c[m] = Complex::new(T::one(), T::zero());
        c
    } else {
        let (u2, v2) = (sp.u.norm_sqr(), sp.v.norm_sqr());
        let f = f_polynomial(m, delta, n_terms, u2, v2);
        let one = Complex::new(T::one(), T::zero());
        let norm = T::one() / (factorial::<T>(x) * factorial::<T>(y)).sqrt();
        let pre = (one / sp.u.conj()).powi(delta as i32) * (one / (sp.u.conj() * sp.v)).powi(m as i32) * norm;
        let ratio = sp.ratio();
        let mut vacuum = Complex::new(T::one() / sp.r.cosh(), T::zero());
        f.iter()
            .map(|&fn_| {
                let p = pre * vacuum * fn_;
                vacuum = vacuum * ratio;
                p
            })
            .collect()
    };
    let weight = coefficients.iter().fold(T::zero(), |acc, p| acc + p.norm_sqr());
    Ok(SchmidtSpectrum { x, y, delta, coefficients, weight, tail_estimate: tail })
}

/// Schmidt coefficients with the number of terms chosen from the tail bound.
pub fn schmidt_coefficients_auto<T: Real>(
    x: usize,
    y: usize,
    sp: &SqueezeParams<T>,
) -> Result<SchmidtSpectrum<T>, EntanglementError> {
    let n = required_terms(x, y, sp.r)?;
    schmidt_coefficients(x, y, sp, n)
}

/// `−Σ |p_n|² log |p_n|²` on the renormalised weights, `0 log 0 = 0`.
pub fn entanglement_entropy<T: Real>(s: &SchmidtSpectrum<T>, base: LogBase) -> Result<T, EntanglementError> {
    let deficit = s.deficit();
    if !(deficit.abs() <= T::lit(NORMALIZATION_TOLERANCE)) {
        return Err(EntanglementError::NotNormalized { deficit: deficit.to_f64().unwrap_or(f64::NAN) });
    }
    let entropy = s.coefficients.iter().fold(T::zero(), |acc, p| {
        let q = p.norm_sqr() / s.weight;
        if q > T::zero() {
            acc - q * q.ln()
        } else {
            acc
        }
    });
    Ok(entropy.max(T::zero()) * base.scale::<T>())
}

/// `cosh² r ln cosh² r − sinh² r ln sinh² r`, the entropy of `|ψ_00⟩`.
pub fn ground_state_entropy_closed_form<T: Real>(r: T, base: LogBase) -> T {
    let c2 = r.cosh().powi(2);
    let s2 = r.sinh().powi(2);
    let tail = if s2 > T::zero() { s2 * s2.ln() } else { T::zero() };
    (c2 * c2.ln() - tail) * base.scale::<T>()
}

/// EPR function of the two-mode vacuum, `Δ = cosh 2r + sinh 2r cos φ`.
///
/// The real branches `φ = 0` and `φ = π` are evaluated as `e^{±2r}`.
pub fn epr_function<T: Real>(sp: &SqueezeParams<T>) -> T {
    let two_r = sp.r + sp.r;
    if sp.phi == T::PI() {
        (-two_r).exp()
    } else if sp.phi == T::zero() {
        two_r.exp()
    } else {
        two_r.cosh() + two_r.sinh() * sp.phi.cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementReport<T> {
    pub entropy: T,
    pub epr: T,
    /// `Δ < 1`: the two-mode vacuum violates the separability bound.
    pub nonlocal: bool,
}

impl<T: Real> EntanglementReport<T> {
    pub fn new(x: usize, y: usize, sp: &SqueezeParams<T>, base: LogBase) -> Result<Self, EntanglementError> {
        let s = schmidt_coefficients_auto(x, y, sp)?;
        let entropy = entanglement_entropy(&s, base)?;
        let epr = epr_function(sp);
        Ok(Self { entropy, epr, nonlocal: epr < T::one() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    fn sp(r: f64, phi: f64) -> SqueezeParams<f64> {
        SqueezeParams::from_r_phi(r, phi)
    }

    #[test]
    fn vacuum_product_state() {
        let s = schmidt_coefficients(0, 0, &sp(0.0, PI), 4).unwrap();
        assert_eq!(s.coefficients[0].re, 1.0);
        assert!(s.coefficients[1..].iter().all(|p| p.norm() == 0.0));
        assert_eq!(entanglement_entropy(&s, LogBase::Nats).unwrap(), 0.0);
    }

    #[test]
    fn squeezed_vacuum_magnitudes() {
        let s = schmidt_coefficients_auto(0, 0, &sp(0.5 * LN_2, PI)).unwrap();
        let c0 = 2.0 * 2f64.sqrt() / 3.0;
        for (n, p) in s.coefficients.iter().take(20).enumerate() {
            assert!((p.norm() - c0 * (1.0f64 / 3.0).powi(n as i32)).abs() < 1e-15);
        }
        // phase e^{inπ}
        assert!(s.coefficients[1].re < 0.0 && s.coefficients[2].re > 0.0);
        let e = entanglement_entropy(&s, LogBase::Nats).unwrap();
        let oracle = 1.125 * 1.125f64.ln() - 0.125 * 0.125f64.ln();
        // the dropped tail weight w ~ 1e-13 costs about w|ln w| in entropy
        assert!((e - oracle).abs() < 1e-10, "{e} vs {oracle}");
        assert!((oracle - 0.392_436_107_823_410_6).abs() < 1e-15);
    }

    #[test]
    fn single_alpha_excitation() {
        let r = 0.5 * LN_2;
        let s = schmidt_coefficients_auto(1, 0, &sp(r, PI)).unwrap();
        assert_eq!(s.occupations(0), (1, 0));
        assert!((s.coefficients[0].norm() - 8.0 / 9.0).abs() < 1e-15);
        let vac = schmidt_coefficients_auto(0, 0, &sp(r, PI)).unwrap();
        for n in 0..10 {
            let want = ((n + 1) as f64).sqrt() * vac.coefficients[n].norm() / r.cosh();
            assert!((s.coefficients[n].norm() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn pair_excitation_against_direct_expansion() {
        // α†β†|ψ00⟩ expanded by hand: c_n [n u² − (n+1)|v|²] / (u v)
        let p = sp(0.7, PI);
        let s = schmidt_coefficients_auto(1, 1, &p).unwrap();
        let (u, v) = (p.u, p.v);
        let vac = schmidt_coefficients_auto(0, 0, &p).unwrap();
        for n in 0..15 {
            let nf = n as f64;
            let want = vac.coefficients[n] * (nf * u.norm_sqr() - (nf + 1.0) * v.norm_sqr()) / (u * v);
            assert!((s.coefficients[n] - want).norm() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn mirror_symmetry() {
        let p = sp(0.9, 0.0);
        for (x, y) in [(2, 0), (3, 1), (2, 1)] {
            let a = schmidt_coefficients_auto(x, y, &p).unwrap();
            let b = schmidt_coefficients_auto(y, x, &p).unwrap();
            assert_eq!(a.coefficients, b.coefficients);
            assert_eq!(b.occupations(0), (0, a.delta));
        }
    }

    #[test]
    fn zero_squeezing_limit() {
        for (x, y) in [(2, 1), (1, 1), (0, 3), (3, 3)] {
            let s = schmidt_coefficients_auto(x, y, &sp(0.0, PI)).unwrap();
            assert_eq!(s.weight, 1.0);
            assert_eq!(entanglement_entropy(&s, LogBase::Nats).unwrap(), 0.0);
            let m = x.min(y);
            assert_eq!(s.occupations(m), (x, y));
            assert_eq!(s.coefficients[m].norm(), 1.0);
        }
    }

    #[test]
    fn small_squeezing_is_continuous() {
        for (x, y) in [(1, 1), (2, 2), (3, 1)] {
            let e = EntanglementReport::new(x, y, &sp(1e-4, PI), LogBase::Nats).unwrap();
            assert!(e.entropy < 1e-5, "{x},{y}: {}", e.entropy);
        }
    }

    #[test]
    fn truncation_errors() {
        let err = schmidt_coefficients(0, 0, &sp(1.0, PI), 5).unwrap_err();
        assert!(matches!(err, EntanglementError::TruncationInsufficient { n_terms: 5, .. }));
        assert!(matches!(required_terms(3, 3, 12.0f64), Err(EntanglementError::TermCapExceeded { .. })));
    }

    #[test]
    fn rejects_unnormalised_spectrum() {
        let mut s = schmidt_coefficients_auto(0, 0, &sp(0.5, PI)).unwrap();
        s.weight = 0.9;
        assert!(matches!(entanglement_entropy(&s, LogBase::Nats), Err(EntanglementError::NotNormalized { .. })));
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(ground_state_entropy_closed_form(0.0, LogBase::Nats), 0.0);
        assert!((ground_state_entropy_closed_form(0.5 * LN_2, LogBase::Nats) - 0.392_436_107_823_410_6).abs() < 1e-13);
        // cosh²(1) ln cosh²(1) − sinh²(1) ln sinh²(1), evaluated separately
        let (c2, s2) = (1f64.cosh().powi(2), 1f64.sinh().powi(2));
        let oracle = c2 * c2.ln() - s2 * s2.ln();
        assert!((ground_state_entropy_closed_form(1.0, LogBase::Nats) - oracle).abs() < 1e-14);
        assert!((oracle - 1.619_822_092_897_702_7).abs() < 1e-13);
        let bits = ground_state_entropy_closed_form(1.0, LogBase::Bits);
        assert!((bits * LN_2 - oracle).abs() < 1e-14);
    }

    #[test]
    fn closed_form_matches_schmidt_sum() {
        for i in 0..=40 {
            let r = 0.05 * i as f64;
            for phi in [0.0, PI, 1.1] {
                let s = schmidt_coefficients_auto(0, 0, &sp(r, phi)).unwrap();
                let e = entanglement_entropy(&s, LogBase::Nats).unwrap();
                assert!((e - ground_state_entropy_closed_form(r, LogBase::Nats)).abs() < 1e-10, "r={r}");
            }
        }
    }

    #[test]
    fn epr_values() {
        assert_eq!(epr_function(&sp(0.0, PI)), 1.0);
        assert!((epr_function(&sp(0.5 * LN_2, PI)) - 0.5).abs() < 1e-16);
        assert!((epr_function(&sp(0.5 * LN_2, 0.0)) - 2.0).abs() < 1e-15);
        let generic = sp(0.4, 2.0);
        let want = 0.8f64.cosh() + 0.8f64.sinh() * 2f64.cos();
        assert!((epr_function(&generic) - want).abs() < 1e-15);
    }

    #[test]
    fn report_flags_nonlocality() {
        let r = EntanglementReport::new(0, 0, &sp(0.3, PI), LogBase::Nats).unwrap();
        assert!(r.nonlocal && r.epr < 1.0 && r.entropy > 0.0);
        let r = EntanglementReport::new(0, 0, &sp(0.3, 0.0), LogBase::Nats).unwrap();
        assert!(!r.nonlocal);
        let r = EntanglementReport::new(0, 0, &sp(0.0, PI), LogBase::Nats).unwrap();
        assert!(!r.nonlocal && r.epr == 1.0);
    }

    #[test]
    fn normalisation_grid() {
        for x in 0..=3 {
            for y in 0..=3 {
                for i in 0..=15 {
                    for phi in [0.0, PI] {
                        let s = schmidt_coefficients_auto(x, y, &sp(0.1 * i as f64, phi)).unwrap();
                        assert!(s.deficit() <= 1e-8 && s.deficit() >= -1e-13, "{x},{y},{i}: {}", s.deficit());
                    }
                }
            }
        }
    }

    #[test]
    fn entropy_is_phase_independent() {
        for (x, y) in [(0, 0), (1, 0), (2, 1), (2, 2)] {
            let a = EntanglementReport::new(x, y, &sp(0.8, 0.0), LogBase::Nats).unwrap();
            let b = EntanglementReport::new(x, y, &sp(0.8, PI), LogBase::Nats).unwrap();
            assert!((a.entropy - b.entropy).abs() < 1e-10);
        }
    }

    #[test]
    fn entropy_monotone_in_r() {
        for (x, y) in [(0, 0), (1, 0), (1, 1), (2, 0), (2, 1)] {
            let mut prev = -1.0;
            for i in 0..=200 {
                let e = EntanglementReport::new(x, y, &sp(0.01 * i as f64, PI), LogBase::Nats).unwrap().entropy;
                assert!(e >= prev - 1e-12, "({x},{y}) at r={}", 0.01 * i as f64);
                prev = e;
            }
        }
    }
}
