//! Cauchy-type moments of the weight,
//! `t_n(z) = z int rho(mu) C(mu)^n / (mu - z) dmu`, `n = 0..4`.
//!
//! On each half line the substitution `mu = C / (1 + a|C|)` turns the
//! Cauchy kernel into a simple pole in `C`:
//!
//! ```text
//! C >= 0:  1/(mu - z) = (1 + aC) / ((1 - az)(C - z/(1 - az)))
//! C <= 0:  1/(mu - z) = (1 - aC) / ((1 + az)(C - z/(1 + az)))
//! ```
//!
//! so each half is `int G(C)/(C - zeta) dC` with an entire numerator `G`.
//! When `zeta` is close to the half line the numerator value `G(zeta)` is
//! subtracted and its integral added back as a logarithm. That form is exact
//! at any distance from the cut, which also gives principal values and
//! boundary values from the same code path.

use crate::error::{Error, Result};
use crate::quadrature::QuadratureScheme;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Distance from a half line below which the pole is subtracted.
const SUBTRACTION_RADIUS: f64 = 1.0;

/// Where a moment set (or dispersion value) was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// Off the cut: complex point, or real point outside `[-alpha, alpha]`.
    OffCut,
    /// Principal value on the cut.
    PrincipalValue,
    /// Boundary value from the upper half plane.
    BoundaryPlus,
    /// Boundary value from the lower half plane.
    BoundaryMinus,
}

/// Side of the cut for boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

impl From<Side> for Region {
    fn from(side: Side) -> Self {
        match side {
            Side::Plus => Region::BoundaryPlus,
            Side::Minus => Region::BoundaryMinus,
        }
    }
}

/// The five moments `t_0 .. t_4` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub point: Complex64,
    pub region: Region,
    pub t: [Complex64; 5],
}

impl MomentSet {
    pub fn zero(point: Complex64, region: Region) -> Self {
        MomentSet {
            point,
            region,
            t: [Complex64::new(0.0, 0.0); 5],
        }
    }
}

/// How a real pole on the integration path is treated.
#[derive(Debug, Clone, Copy)]
enum OnPath {
    Forbidden,
    PrincipalValue,
    Boundary(f64),
}

/// Moments at a point off the cut.
pub fn moments_at(scheme: &QuadratureScheme, z: Complex64) -> Result<MomentSet> {
    let p = scheme.params();
    if z.im == 0.0 {
        if p.in_cut(z.re) {
            return Err(Error::WrongRegion { re: z.re, im: z.im });
        }
        if z.re.abs() == p.alpha() {
            return Err(Error::Domain(format!("z = {} is an endpoint of the cut", z.re)));
        }
    }
    let t = cauchy_moments(scheme, z, OnPath::Forbidden)?;
    Ok(MomentSet {
        point: z,
        region: Region::OffCut,
        t,
    })
}

/// Principal-value moments at a real point of the cut.
pub fn moments_pv(scheme: &QuadratureScheme, x: f64) -> Result<MomentSet> {
    check_on_cut(scheme, x)?;
    let z = Complex64::new(x, 0.0);
    if x == 0.0 {
        return Ok(MomentSet::zero(z, Region::PrincipalValue));
    }
    let t = cauchy_moments(scheme, z, OnPath::PrincipalValue)?;
    Ok(MomentSet {
        point: z,
        region: Region::PrincipalValue,
        t,
    })
}

/// Boundary values `t_n^+-(x) = t_n^PV(x) +- i pi x C(x)^n rho(x)`.
pub fn moments_boundary(scheme: &QuadratureScheme, x: f64, side: Side) -> Result<MomentSet> {
    check_on_cut(scheme, x)?;
    let z = Complex64::new(x, 0.0);
    if x == 0.0 {
        return Ok(MomentSet::zero(z, side.into()));
    }
    let t = cauchy_moments(scheme, z, OnPath::Boundary(side.sign()))?;
    Ok(MomentSet {
        point: z,
        region: side.into(),
        t,
    })
}

/// Dispatches on the region of a real or complex point: off-cut values for
/// complex points and real points outside the cut, otherwise the requested
/// boundary or principal value.
pub fn moments_in_region(
    scheme: &QuadratureScheme,
    z: Complex64,
    region: Region,
) -> Result<MomentSet> {
    match region {
        Region::OffCut => moments_at(scheme, z),
        Region::PrincipalValue => real_point(z).and_then(|x| moments_pv(scheme, x)),
        Region::BoundaryPlus => real_point(z).and_then(|x| moments_boundary(scheme, x, Side::Plus)),
        Region::BoundaryMinus => {
            real_point(z).and_then(|x| moments_boundary(scheme, x, Side::Minus))
        }
    }
}

/// Boundary values reconstructed from off-cut moments at `x +- i eps`,
/// `eps = h, 2h, 4h` with `h = 1e-5 min(1, alpha)`, extrapolated
/// quadratically to `eps = 0`.
///
/// Independent of the boundary formula; its error is dominated by the
/// third derivative of `t_n` across the cut, which grows like `alpha^-3`.
pub fn moments_limit(scheme: &QuadratureScheme, x: f64, side: Side) -> Result<MomentSet> {
    check_on_cut(scheme, x)?;
    let h = 1e-5 * scheme.params().alpha().min(1.0);
    let at = |eps: f64| moments_at(scheme, Complex64::new(x, side.sign() * eps));
    let (f1, f2, f4) = (at(h)?, at(2.0 * h)?, at(4.0 * h)?);
    let t = std::array::from_fn(|n| (f1.t[n] * 8.0 - f2.t[n] * 6.0 + f4.t[n]) / 3.0);
    Ok(MomentSet {
        point: Complex64::new(x, 0.0),
        region: side.into(),
        t,
    })
}

/// `int rho(mu) C(mu)^n mu^k dmu`, the coefficients of the expansion
/// `t_n(z) = -sum_k z^-k int rho C^n mu^k dmu` at large `|z|`.
pub fn expansion_moment(scheme: &QuadratureScheme, n: u32, k: u32) -> Result<f64> {
    let p = *scheme.params();
    scheme.integrate_weighted(|c| c.powi(n as i32) * p.mu_of(c).powi(k as i32))
}

fn real_point(z: Complex64) -> Result<f64> {
    if z.im != 0.0 {
        return Err(Error::Domain(format!(
            "boundary and principal values need a real point, got {z}"
        )));
    }
    Ok(z.re)
}

fn check_on_cut(scheme: &QuadratureScheme, x: f64) -> Result<()> {
    if !scheme.params().in_cut(x) {
        return Err(Error::Domain(format!(
            "x = {x} is not inside the cut (-{0}, {0})",
            scheme.params().alpha()
        )));
    }
    Ok(())
}

fn cauchy_moments(scheme: &QuadratureScheme, z: Complex64, on_path: OnPath) -> Result<[Complex64; 5]> {
    if z == Complex64::new(0.0, 0.0) {
        return Ok([Complex64::new(0.0, 0.0); 5]);
    }
    let a = scheme.params().a();
    let l = scheme.cutoff();
    let mut total = [Complex64::new(0.0, 0.0); 5];
    for s in [1.0f64, -1.0] {
        let denom = Complex64::new(1.0, 0.0) - z * (s * a);
        let zeta = z / denom;
        let half = half_line_cauchy(scheme, s, zeta, l, on_path)?;
        for n in 0..5 {
            total[n] += half[n] / denom;
        }
    }
    let t = total.map(|v| v * z);
    if t.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite("Cauchy moments"));
    }
    Ok(t)
}

/// `int_{half s} e^{-C^2}(1 + s a C)^2 C^n / (C - zeta) dC` for `n = 0..4`.
fn half_line_cauchy(
    scheme: &QuadratureScheme,
    s: f64,
    zeta: Complex64,
    l: f64,
    on_path: OnPath,
) -> Result<[Complex64; 5]> {
    let a = scheme.params().a();
    let nodes = scheme.half_nodes();
    let weights = scheme.half_weights();
    let base = scheme.node_base();

    // Distance from zeta to the segment s*[0, L].
    let along = (s * zeta.re).clamp(0.0, l);
    let dist = (zeta - Complex64::new(s * along, 0.0)).norm();

    // A real pole at or past the cutoff sits where the numerator is below
    // exp(-L^2); only its boundary-value residue is kept.
    let beyond = zeta.im == 0.0 && s * zeta.re >= l;

    let mut out = [Complex64::new(0.0, 0.0); 5];
    if dist >= SUBTRACTION_RADIUS || beyond {
        for k in 0..nodes.len() {
            let c = s * nodes[k];
            let inv = (Complex64::new(c, 0.0) - zeta).inv() * (weights[k] * base[k]);
            let mut cn = 1.0;
            for item in out.iter_mut() {
                *item += inv * cn;
                cn *= c;
            }
        }
        if let (true, OnPath::Boundary(sign)) = (beyond, on_path) {
            let g = numerator(a, s, zeta);
            for n in 0..5 {
                out[n] += g[n] * Complex64::new(0.0, sign * PI);
            }
        }
        return Ok(out);
    }

    let g_at_pole = numerator(a, s, zeta);
    let g_prime = numerator_derivative(a, s, zeta);
    let tiny = 1e-9 * (1.0 + zeta.norm());
    for k in 0..nodes.len() {
        let c = s * nodes[k];
        let diff = Complex64::new(c, 0.0) - zeta;
        let w = weights[k];
        let mut cn = 1.0;
        if diff.norm() < tiny {
            for n in 0..5 {
                out[n] += g_prime[n] * w;
            }
            continue;
        }
        let inv = diff.inv();
        for n in 0..5 {
            out[n] += (Complex64::new(base[k] * cn, 0.0) - g_at_pole[n]) * inv * w;
            cn *= c;
        }
    }

    // int over s*[0, L] of dC / (C - zeta).
    let (upper, lower) = if s > 0.0 {
        (Complex64::new(l, 0.0) - zeta, -zeta)
    } else {
        (-zeta, Complex64::new(-l, 0.0) - zeta)
    };
    let on_half_line = zeta.im == 0.0 && s * zeta.re > 0.0;
    let log_term = if on_half_line {
        let real_log = (upper.re / lower.re).abs().ln();
        match on_path {
            OnPath::Forbidden => {
                if s * zeta.re < l {
                    return Err(Error::WrongRegion { re: zeta.re, im: 0.0 });
                }
                Complex64::new(real_log, 0.0)
            }
            OnPath::PrincipalValue => Complex64::new(real_log, 0.0),
            OnPath::Boundary(sign) => Complex64::new(real_log, sign * PI),
        }
    } else {
        (upper / lower).ln()
    };
    for n in 0..5 {
        out[n] += g_at_pole[n] * log_term;
    }
    Ok(out)
}

/// `e^{-w^2} (1 + s a w)^2 w^n`, `n = 0..4`.
fn numerator(a: f64, s: f64, w: Complex64) -> [Complex64; 5] {
    let lin = Complex64::new(1.0, 0.0) + w * (s * a);
    let mut v = (-w * w).exp() * lin * lin;
    let mut out = [Complex64::new(0.0, 0.0); 5];
    for item in out.iter_mut() {
        *item = v;
        v *= w;
    }
    out
}

fn numerator_derivative(a: f64, s: f64, w: Complex64) -> [Complex64; 5] {
    let lin = Complex64::new(1.0, 0.0) + w * (s * a);
    let e = (-w * w).exp();
    let mut out = [Complex64::new(0.0, 0.0); 5];
    for (n, item) in out.iter_mut().enumerate() {
        let wn = w.powu(n as u32);
        let wn1 = if n == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            w.powu(n as u32 - 1) * n as f64
        };
        *item = e * (-w * 2.0 * lin * lin * wn + lin * (2.0 * s * a) * wn + lin * lin * wn1);
    }
    out
}
