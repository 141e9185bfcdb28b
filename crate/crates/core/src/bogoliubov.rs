//! SU(1,1) Bogoliubov transformation between the Kittel modes `(a, b)` and the
//! diagonal magnon modes `(α, β)`:
//!
//! ```text
//! ( a  )   ( u   v  ) ( α  )
//! ( b† ) = ( v*  u* ) ( β† )      u = cosh r,  v = sinh r e^{iφ}
//! ```

use thiserror::Error;

use crate::scalar::{Complex, Real};

/// Largest `|Γ|` accepted; beyond this `atanh` has lost all useful precision.
pub const MAX_GAMMA_NORM: f64 = 1.0 - 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BogoliubovError {
    #[error("|Γ| = {0} is outside the stable domain |Γ| < 1")]
    OutOfDomain(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeParams<T> {
    /// Squeezing parameter `r ≥ 0`.
    pub r: T,
    /// Phase `φ ∈ [0, 2π)`.
    pub phi: T,
    pub u: Complex<T>,
    pub v: Complex<T>,
}

impl<T: Real> SqueezeParams<T> {
    pub fn from_r_phi(r: T, phi: T) -> Self {
        let tau = T::TAU();
        let phi = phi - tau * (phi / tau).floor();
        let phi = if phi >= tau { T::zero() } else { phi };
        Self { r, phi, u: Complex::new(r.cosh(), T::zero()), v: Complex::from_polar(r.sinh(), phi) }
    }

    pub fn identity() -> Self {
        Self::from_r_phi(T::zero(), T::PI())
    }

    /// `|u|² − |v|²`, equal to one for a valid transformation.
    pub fn symplectic_form(&self) -> T {
        self.u.norm_sqr() - self.v.norm_sqr()
    }

    /// Amplitude `u + v*` with which the α mode enters the total transverse spin.
    pub fn alpha_amplitude(&self) -> Complex<T> {
        self.u + self.v.conj()
    }

    /// Amplitude `u* + v` of the β mode, the conjugate of the α amplitude.
    pub fn beta_amplitude(&self) -> Complex<T> {
        self.u.conj() + self.v
    }

    /// `tanh r · e^{iφ}`, the ratio of successive two-mode vacuum amplitudes.
    pub fn ratio(&self) -> Complex<T> {
        Complex::from_polar(self.r.tanh(), self.phi)
    }

    pub fn matrix(&self) -> BogoliubovMatrix<T> {
        BogoliubovMatrix([[self.u, self.v], [self.v.conj(), self.u.conj()]])
    }
}

/// `r = atanh[(1 − sqrt(1 − |Γ|²)) / |Γ|]`, `φ = π − arg Γ`.
///
/// The squeezing parameter is evaluated through the equivalent
/// `r = ¼ ln((1 + |Γ|)/(1 − |Γ|))`, which is accurate at both ends of the
/// domain. `Γ = 0` maps to `φ = π`.
pub fn squeeze_params<T: Real>(gamma: Complex<T>) -> Result<SqueezeParams<T>, BogoliubovError> {
    let g = gamma.norm();
    if !(g <= T::lit(MAX_GAMMA_NORM)) {
        return Err(BogoliubovError::OutOfDomain(g.to_f64().unwrap_or(f64::NAN)));
    }
    if g == T::zero() {
        return Ok(SqueezeParams::identity());
    }
    let two = T::lit(2.0);
    let r = (two * g / (T::one() - g)).ln_1p() / T::lit(4.0);
    Ok(SqueezeParams::from_r_phi(r, T::PI() - gamma.arg()))
}

/// A 2×2 complex matrix acting on `(α, β†)` or `(a, b†)` column vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogoliubovMatrix<T>(pub [[Complex<T>; 2]; 2]);

impl<T: Real> BogoliubovMatrix<T> {
    pub fn identity() -> Self {
        let (o, z) = (Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()));
        Self([[o, z], [z, o]])
    }

    pub fn determinant(&self) -> Complex<T> {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Inverse `[[u*, −v], [−v*, u]]` of an SU(1,1) element, written out rather
    /// than divided by the determinant.
    pub fn su11_inverse(&self) -> Self {
        let m = &self.0;
        Self([[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]])
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[Complex::new(T::zero(), T::zero()); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self(out)
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        let mut worst = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - rhs.0[i][j]).norm());
            }
        }
        worst
    }
}

/// The matrix expressing `(a, b†)` in terms of `(α, β†)`.
pub fn bogoliubov_rotate<T: Real>(sp: &SqueezeParams<T>) -> BogoliubovMatrix<T> {
    sp.matrix()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn zero_gamma_is_identity() {
        let sp = squeeze_params(Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(sp.r, 0.0);
        assert_eq!(sp.phi, PI);
        assert_eq!(sp.u, Complex64::new(1.0, 0.0));
        assert!(sp.v.norm() == 0.0);
        assert!(bogoliubov_rotate(&sp).max_abs_diff(&BogoliubovMatrix::identity()) == 0.0);
    }

    #[test]
    fn positive_real_gamma() {
        // tanh r = 1/3 ⇒ r = ½ ln 2, cosh r = 3/(2√2), sinh r = 1/(2√2)
        let sp = squeeze_params(Complex64::new(0.6, 0.0)).unwrap();
        assert!((sp.r - 0.5 * LN_2).abs() < 1e-15);
        assert!((sp.r.tanh() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(sp.phi, PI);
        assert!((sp.u.re - 3.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((sp.v.re + 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!(sp.v.im.abs() < 1e-16);
    }

    #[test]
    fn negative_real_gamma() {
        let sp = squeeze_params(Complex64::new(-0.6, 0.0)).unwrap();
        assert!((sp.r - 0.5 * LN_2).abs() < 1e-15);
        assert_eq!(sp.phi, 0.0);
        assert!((sp.v.re - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        let sp = squeeze_params(Complex64::new(-0.6, -0.0)).unwrap();
        assert_eq!(sp.phi, 0.0);
    }

    #[test]
    fn half_angle_form_agrees() {
        // the half-angle form cancels catastrophically for tiny |Γ|
        for g in [1e-3f64, 0.01, 0.3, 0.6, 0.9, 0.999] {
            let half_angle = ((1.0 - (1.0 - g * g).sqrt()) / g).atanh();
            let sp = squeeze_params(Complex64::new(g, 0.0)).unwrap();
            assert!((sp.r - half_angle).abs() < 1e-12 * half_angle.max(1.0), "g={g}");
        }
    }

    #[test]
    fn domain_edges() {
        assert!(squeeze_params(Complex64::new(1.0, 0.0)).is_err());
        assert!(squeeze_params(Complex64::new(0.0, 1.2)).is_err());
        assert!(squeeze_params(Complex64::new(1.0 - 1e-13, 0.0)).is_err());
        assert!(squeeze_params(Complex64::new(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn inverse_pattern() {
        let sp = squeeze_params(Complex64::new(0.6, 0.0)).unwrap();
        let m = bogoliubov_rotate(&sp);
        let inv = m.su11_inverse();
        assert_eq!(inv.0[0][0], sp.u.conj());
        assert_eq!(inv.0[0][1], -sp.v);
        assert!(m.mul(&inv).max_abs_diff(&BogoliubovMatrix::identity()) < 1e-12);
        assert!(inv.mul(&m).max_abs_diff(&BogoliubovMatrix::identity()) < 1e-12);
    }

    #[test]
    fn small_gamma_limit() {
        for theta in [0.0, 1.0, 2.5, -2.0] {
            let g = 1e-4;
            let sp = squeeze_params(Complex64::from_polar(g, theta)).unwrap();
            assert!((sp.r - g / 2.0).abs() < g * g * g);
        }
    }

    #[test]
    fn single_precision() {
        let sp = squeeze_params(num_complex::Complex32::new(0.6, 0.0)).unwrap();
        assert!((sp.symplectic_form() - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn symplectic_and_epr_identities(mag in 0.0f64..0.999, theta in -PI..PI) {
            let sp = squeeze_params(Complex64::from_polar(mag, theta)).unwrap();
            prop_assert!((sp.symplectic_form() - 1.0).abs() < 1e-12);
            prop_assert!(sp.r >= 0.0);
            prop_assert!((0.0..2.0 * PI).contains(&sp.phi));
            prop_assert!((bogoliubov_rotate(&sp).determinant() - 1.0).norm() < 1e-12);
            let lhs = sp.alpha_amplitude().norm_sqr();
            let rhs = (2.0 * sp.r).cosh() + (2.0 * sp.r).sinh() * sp.phi.cos();
            prop_assert!((lhs - rhs).abs() < 1e-12);
            prop_assert!((sp.beta_amplitude().norm_sqr() - lhs).abs() < 1e-12);
        }

        #[test]
        fn tanh_two_r_is_gamma(mag in 1e-6f64..0.99) {
            let sp = squeeze_params(Complex64::new(mag, 0.0)).unwrap();
            prop_assert!(((2.0 * sp.r).tanh() - mag).abs() < 1e-13);
        }
    }
}
