//! Dimensionless model constants and the velocity variable.
//!
//! The collision frequency is `nu(C) = 1 + a|C|` in units of the base
//! frequency, with `a >= 0`. Everything here uses that convention. The
//! older parametrization `1 + sqrt(pi) a' |C|` maps onto it through
//! `a = sqrt(pi) a'`; it is never used in computations.
//!
//! Two velocity variables coexist. `C` is the dimensionless molecular
//! velocity on the whole real line; `mu = C / (1 + a|C|)` is the transport
//! variable confined to `(-alpha, alpha)` with `alpha = 1/a`. The weight
//! satisfies `rho(mu) dmu = exp(-C^2) (1 + a|C|) dC`, so integrals are
//! evaluated in `C`.

use crate::error::{Error, Result};
use std::f64::consts::PI;

pub(crate) const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Model constants for a given collision-frequency slope `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParams {
    a: f64,
    alpha: f64,
    beta: f64,
    r0: f64,
    r1: f64,
    r2: f64,
}

impl GasParams {
    /// Builds the constants for slope `a`. `a` must be finite and nonnegative.
    pub fn new(a: f64) -> Result<Self> {
        if !a.is_finite() || a < 0.0 {
            return Err(Error::Domain(format!(
                "collision-frequency slope must be finite and >= 0, got {a}"
            )));
        }
        let alpha = if a == 0.0 { f64::INFINITY } else { 1.0 / a };
        let beta = (2.0 * a + SQRT_PI) / (2.0 * (a + SQRT_PI));
        let r0 = 1.0 / (a + SQRT_PI);
        let r1 = 2.0 / (2.0 * a + SQRT_PI);
        let r2 = 4.0 * (a + SQRT_PI) / (4.0 * a * a + 7.0 * SQRT_PI * a + 2.0 * PI);
        Ok(GasParams {
            a,
            alpha,
            beta,
            r0,
            r1,
            r2,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Half-width of the continuous spectrum; `+inf` when `a = 0`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The energy-invariant shift making `1` and `C^2 - beta` orthogonal.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn velocity_map(&self) -> VelocityMap {
        VelocityMap {
            a: self.a,
            alpha: self.alpha,
        }
    }

    /// True when `x` lies strictly inside the continuous spectrum.
    pub fn in_cut(&self, x: f64) -> bool {
        x.abs() < self.alpha
    }

    /// `C(mu)`.
    pub fn c_of(&self, mu: f64) -> Result<f64> {
        self.velocity_map().c_of(mu)
    }

    /// `mu(C)`.
    pub fn mu_of(&self, c: f64) -> f64 {
        self.velocity_map().mu_of(c)
    }

    /// Weight in the `C` variable, `exp(-C^2) (1 + a|C|)`.
    pub fn weight_c(&self, c: f64) -> f64 {
        (-c * c).exp() * (1.0 + self.a * c.abs())
    }

    /// Weight `rho(mu) = exp(-C(mu)^2) / (1 - a|mu|)^3`.
    ///
    /// Vanishes at and beyond the endpoints `mu = +-alpha`.
    pub fn weight(&self, mu: f64) -> f64 {
        if !self.in_cut(mu) {
            return 0.0;
        }
        let c = self.mu_to_c_unchecked(mu);
        // (1 - a|mu|)^-1 = 1 + a|C| stays finite where the direct form overflows.
        let s = 1.0 + self.a * c.abs();
        (-c * c).exp() * s * s * s
    }

    /// Kernel `q(mu, mu')` of the transport equation.
    pub fn kernel_q(&self, mu: f64, mu_prime: f64) -> Result<f64> {
        let c = self.c_of(mu)?;
        let cp = self.c_of(mu_prime)?;
        Ok(self.kernel_q_c(c, cp))
    }

    /// The same kernel written in velocity variables.
    pub fn kernel_q_c(&self, c: f64, c_prime: f64) -> f64 {
        self.r0
            + self.r1 * c * c_prime
            + self.r2 * (c * c - self.beta) * (c_prime * c_prime - self.beta)
    }

    /// Exact weighted moment `int exp(-C^2)(1 + a|C|) C^n dC`.
    pub fn exact_moment(&self, n: u32) -> f64 {
        if n % 2 == 1 {
            return 0.0;
        }
        let k = n / 2;
        // Gamma(k + 1/2) and Gamma(k + 1).
        let mut gamma_half = SQRT_PI;
        let mut gamma_int = 1.0;
        for j in 0..k {
            gamma_half *= j as f64 + 0.5;
            gamma_int *= (j + 1) as f64;
        }
        gamma_half + self.a * gamma_int
    }

    fn mu_to_c_unchecked(&self, mu: f64) -> f64 {
        mu / (1.0 - self.a * mu.abs())
    }
}

/// The bijection between `mu` in `(-alpha, alpha)` and `C` on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityMap {
    a: f64,
    alpha: f64,
}

impl VelocityMap {
    pub fn c_of(&self, mu: f64) -> Result<f64> {
        if !(mu.abs() < self.alpha) {
            return Err(Error::Domain(format!(
                "mu = {mu} outside the open interval (-{0}, {0})",
                self.alpha
            )));
        }
        Ok(mu / (1.0 - self.a * mu.abs()))
    }

    pub fn mu_of(&self, c: f64) -> f64 {
        c / (1.0 + self.a * c.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn constant_frequency_constants() {
        let p = GasParams::new(0.0).unwrap();
        assert_eq!(p.beta(), 0.5);
        assert_relative_eq!(p.r0(), 1.0 / SQRT_PI, epsilon = 1e-16);
        assert!(p.alpha().is_infinite());
    }

    #[test]
    fn beta_tends_to_one() {
        let p = GasParams::new(1e6).unwrap();
        assert!((p.beta() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn beta_solves_orthogonality_at_a_one() {
        // Independent route: trapezoid sums for int w C^2 / int w.
        let h = 1e-4;
        let (mut num, mut den) = (0.0f64, 0.0f64);
        let mut c: f64 = -10.0;
        while c <= 10.0 {
            let w = (-c * c).exp() * (1.0 + c.abs());
            num += w * c * c;
            den += w;
            c += h;
        }
        let beta_oracle = num / den;
        assert!((beta_oracle - 0.68034f64).abs() < 1e-5);
        let p = GasParams::new(1.0).unwrap();
        assert_relative_eq!(p.beta(), beta_oracle, max_relative = 1e-7);
    }

    #[test]
    fn coefficient_identities() {
        for a in [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 100.0] {
            let p = GasParams::new(a).unwrap();
            assert_relative_eq!(p.r0() * (a + SQRT_PI), 1.0, epsilon = 1e-14);
            assert_relative_eq!(p.r1() * (2.0 * a + SQRT_PI), 2.0, epsilon = 1e-14);
            assert_relative_eq!(
                p.r2() * (4.0 * a * a + 7.0 * SQRT_PI * a + 2.0 * PI),
                4.0 * (a + SQRT_PI),
                max_relative = 1e-14
            );
            assert!(p.beta() >= 0.5 && p.beta() < 1.0);
        }
    }

    #[test]
    fn rejects_bad_slopes() {
        assert!(GasParams::new(-1.0).is_err());
        assert!(GasParams::new(f64::NAN).is_err());
        assert!(GasParams::new(f64::INFINITY).is_err());
    }

    #[test]
    fn velocity_map_examples() {
        let p1 = GasParams::new(1.0).unwrap();
        assert_eq!(p1.c_of(0.0).unwrap(), 0.0);
        assert_eq!(p1.mu_of(1.0), 0.5);
        assert!(p1.c_of(1.0).is_err());
        assert!(p1.c_of(-1.5).is_err());
        let p0 = GasParams::new(0.0).unwrap();
        for mu in [-3.0, -0.2, 0.7, 12.0] {
            assert_eq!(p0.c_of(mu).unwrap(), mu);
        }
    }

    #[test]
    fn weight_examples() {
        let p = GasParams::new(2.0).unwrap();
        assert_eq!(p.weight(0.0), 1.0);
        assert_eq!(p.weight(0.5), 0.0);
        assert_eq!(p.weight(-0.5), 0.0);
        // rho C^n decays to zero at the endpoints.
        for n in 0..=8 {
            let mu = 0.5 * (1.0 - 1e-3);
            let c = p.c_of(mu).unwrap();
            assert!(p.weight(mu) * c.powi(n) < 1e-100);
        }
    }

    #[test]
    fn constant_frequency_kernel_matches_classical_form() {
        let p = GasParams::new(0.0).unwrap();
        for (c, cp) in [(0.3, -1.2), (2.0, 0.5), (-0.7, -0.7)] {
            let classical = 1.0 + 2.0 * c * cp + 2.0 * (c * c - 0.5) * (cp * cp - 0.5);
            assert_relative_eq!(SQRT_PI * p.kernel_q_c(c, cp), classical, epsilon = 1e-14);
        }
    }

    #[test]
    fn exact_moments() {
        let p = GasParams::new(1.0).unwrap();
        assert_relative_eq!(p.exact_moment(0), SQRT_PI + 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.exact_moment(2), SQRT_PI / 2.0 + 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.exact_moment(4), 0.75 * SQRT_PI + 2.0, epsilon = 1e-15);
        assert_eq!(p.exact_moment(3), 0.0);
    }

    proptest! {
        #[test]
        fn map_round_trip_and_oddness(a in 0.0f64..10.0, u in -0.999f64..0.999) {
            let p = GasParams::new(a).unwrap();
            let mu = if a == 0.0 { 10.0 * u } else { u * p.alpha() };
            let c = p.c_of(mu).unwrap();
            prop_assert!((p.mu_of(c) - mu).abs() <= 1e-14 * (1.0 + mu.abs()));
            prop_assert_eq!(p.c_of(-mu).unwrap(), -c);
        }

        #[test]
        fn kernel_symmetric(a in 0.0f64..5.0, u in -0.99f64..0.99, v in -0.99f64..0.99) {
            let p = GasParams::new(a).unwrap();
            let s = if a == 0.0 { 4.0 } else { p.alpha() };
            let q1 = p.kernel_q(u * s, v * s).unwrap();
            let q2 = p.kernel_q(v * s, u * s).unwrap();
            prop_assert!((q1 - q2).abs() <= 1e-12 * q1.abs().max(1.0));
        }
    }
}
