//! The two exactly solvable limits.
//!
//! * `a = 0`: the dispersion function reduces to
//!   `lambda(z) = -1/2 - (z^2 - 3/2) lambda_C(z)` with the plasma dispersion
//!   function `lambda_C(z) = 1 + z/sqrt(pi) int exp(-mu^2)/(mu - z) dmu`.
//! * `a -> inf`: the frequency is proportional to speed and the equation
//!   `sgn(C) h_x + h = int exp(-C'^2) |C'| q1(C, C') h(x, C') dC'` closes on
//!   the six functions `{1, s, C, |C|, C^2 - 1, (C^2 - 1) s}`, `s = sgn C`.

use crate::error::{Error, Result};
use crate::moments::Side;
use crate::params::{GasParams, SQRT_PI};
use crate::quadrature::GaussLegendre;
use nalgebra::{DMatrix, SMatrix, SVector};
use num_complex::Complex64;
use std::sync::OnceLock;

/// The rate `sqrt(3 pi) / 2`, kept for comparison with the derived rate
/// [`FmModes::decay_rate`] (`sqrt(5 pi) / 4`); it does not solve the
/// free-molecular system.
pub const REFERENCE_DECAY_RATE: f64 = 1.534_990_061_919_732;

/// `|z|` from which `lambda_C` is evaluated by its asymptotic series.
pub const SERIES_RADIUS: f64 = 6.0;

const INTEGRAL_NODES: usize = 100;
const CF_DEPTH: usize = 300;

fn integral_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(INTEGRAL_NODES))
}

/// Plasma dispersion function `lambda_C(z)`.
///
/// Off the real axis this is the analytic function of the corresponding
/// half plane. On the real axis the stable form's `sign(Im z)` factor is
/// zero, which gives the principal value `(lambda_C^+ + lambda_C^-)/2`; use
/// [`lambda_c_boundary`] for one-sided values.
pub fn lambda_c(z: Complex64) -> Complex64 {
    if z.im > 0.0 {
        upper(z)
    } else if z.im < 0.0 {
        upper(z.conj()).conj()
    } else {
        Complex64::new(upper(z).re, 0.0)
    }
}

/// Boundary value `lambda_C^+(x)` or `lambda_C^-(x)` on the real axis.
pub fn lambda_c_boundary(x: f64, side: Side) -> Complex64 {
    let v = upper(Complex64::new(x, 0.0));
    match side {
        Side::Plus => v,
        Side::Minus => v.conj(),
    }
}

/// `lambda_C` in the closed upper half plane, switching between three
/// evaluations that are each accurate in their own region.
fn upper(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r >= SERIES_RADIUS {
        let mut v = -asymptotic_terms(z, |_| 1.0);
        if z.im == 0.0 {
            v += Complex64::new(0.0, SQRT_PI * z.re * (-z.re * z.re).exp());
        }
        v
    } else if r < 1.5 || (z.im < 1.0 && (z * z).re >= 0.0) {
        integral_form(z, 1.0)
    } else {
        continued_fraction(z)
    }
}

/// The finite-interval form
/// `1 - 2 z^2 int_0^1 exp(-z^2 (1 - t^2)) dt + sign i sqrt(pi) z exp(-z^2)`,
/// where `sign` is the sign of `Im z` (zero gives the principal value).
///
/// Accurate wherever `exp(-z^2)` is moderate; it cancels badly far up the
/// imaginary axis.
pub fn lambda_c_integral_form(z: Complex64) -> Complex64 {
    let sign = if z.im > 0.0 {
        1.0
    } else if z.im < 0.0 {
        -1.0
    } else {
        0.0
    };
    integral_form(z, sign)
}

fn integral_form(z: Complex64, sign: f64) -> Complex64 {
    let z2 = z * z;
    let rule = integral_rule();
    let mut f = Complex64::new(0.0, 0.0);
    for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
        let t = 0.5 * (t + 1.0);
        f += (-z2 * (1.0 - t * t)).exp() * (0.5 * w);
    }
    Complex64::new(1.0, 0.0) - z2 * f * 2.0 + Complex64::new(0.0, sign * SQRT_PI) * z * (-z2).exp()
}

/// Laplace continued fraction for `w(z) = exp(-z^2) erfc(-iz)`, giving
/// `lambda_C = 1 + i sqrt(pi) z w(z) = -f / (z - f)`.
fn continued_fraction(z: Complex64) -> Complex64 {
    let mut f = Complex64::new(0.0, 0.0);
    for k in (1..=CF_DEPTH).rev() {
        f = (k as f64 * 0.5) / (z - f);
    }
    -f / (z - f)
}

/// `sum_k coeff(k) c_k z^-2k` over the asymptotic coefficients
/// `c_1 = 1/2`, `c_{k+1} = c_k (2k + 1)/2` of `-lambda_C`, truncated before
/// the terms start to grow.
fn asymptotic_terms(z: Complex64, coeff: impl Fn(u32) -> f64) -> Complex64 {
    let inv = (z * z).inv();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut power = inv;
    let mut c = 0.5;
    let mut last = f64::INFINITY;
    for k in 1..200u32 {
        let size = c * power.norm();
        if size > last {
            break;
        }
        sum += power * (c * coeff(k));
        if size < 1e-18 * sum.norm() {
            break;
        }
        last = size;
        c *= (2 * k + 1) as f64 / 2.0;
        power *= inv;
    }
    sum
}

/// `lambda_C` through the half-plane form
/// `1 - 2z exp(-z^2) int_0^z exp(u^2) du + sign i sqrt(pi) z exp(-z^2)`,
/// with `sign` the sign of `Im z`, the integral summed as a Taylor series.
/// Intended for `|z| <= 3`.
///
/// Where `Re z^2 < 0` the series `exp(z^2) z sum (-2z^2)^n / (2n+1)!!` is
/// used; it has no cancellation there.
pub fn lambda_c_half_plane_form(z: Complex64) -> Complex64 {
    let sign = if z.im > 0.0 {
        1.0
    } else if z.im < 0.0 {
        -1.0
    } else {
        0.0
    };
    let z2 = z * z;
    let one = Complex64::new(1.0, 0.0);
    // 2 z exp(-z^2) int_0^z exp(u^2) du
    let middle = if z2.re < 0.0 {
        let x = -z2 * 2.0;
        let (mut term, mut sum) = (one, one);
        for n in 1..400 {
            term *= x / (2 * n + 1) as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        z2 * sum * 2.0
    } else {
        let (mut term, mut sum) = (z, z);
        for n in 1..400 {
            term *= z2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        z * (-z2).exp() * sum * 2.0
    };
    one - middle + Complex64::new(0.0, sign * SQRT_PI) * z * (-z2).exp()
}

/// The constant-frequency dispersion function
/// `lambda(z) = -1/2 - (z^2 - 3/2) lambda_C(z)`.
///
/// For `|z| >= 6` the leading terms cancel, so the asymptotic series
/// `sum_{k>=2} (k - 1) c_k z^-2k` is summed directly.
pub fn lambda_a0(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        return lambda_a0(z.conj()).conj();
    }
    if z.norm() >= SERIES_RADIUS {
        return asymptotic_terms(z, |k| k as f64 - 1.0);
    }
    closed_form(z, lambda_c(z))
}

/// Boundary value of [`lambda_a0`] on the real axis.
pub fn lambda_a0_boundary(x: f64, side: Side) -> Complex64 {
    let z = Complex64::new(x, 0.0);
    if x.abs() >= SERIES_RADIUS {
        let re = asymptotic_terms(z, |k| k as f64 - 1.0).re;
        let im = -(x * x - 1.5) * SQRT_PI * x * (-x * x).exp();
        return match side {
            Side::Plus => Complex64::new(re, im),
            Side::Minus => Complex64::new(re, -im),
        };
    }
    closed_form(z, lambda_c_boundary(x, side))
}

fn closed_form(z: Complex64, lc: Complex64) -> Complex64 {
    Complex64::new(-0.5, 0.0) - (z * z - 1.5) * lc
}

/// Free-molecular kernel `q1(C, C') = 1 + C C' + (C^2 - 1)(C'^2 - 1)`.
pub fn fm_kernel(c: f64, c_prime: f64) -> f64 {
    1.0 + c * c_prime + (c * c - 1.0) * (c_prime * c_prime - 1.0)
}

/// Half-line Gaussian moment `int_0^inf C^k exp(-C^2) dC = Gamma((k+1)/2)/2`;
/// `k!/2` for odd `2k+1`.
pub fn half_line_moment(k: u32) -> f64 {
    let mut g = if k % 2 == 1 { 1.0 } else { SQRT_PI };
    let mut v = if k % 2 == 1 { 1.0 } else { 0.5 };
    // Gamma(v) with v = (k+1)/2 built upward from Gamma(1) or Gamma(1/2).
    while v < (k + 1) as f64 / 2.0 {
        g *= v;
        v += 1.0;
    }
    0.5 * g
}

/// Basis of the free-molecular closure, as polynomials in `C` and `s`.
pub const FM_BASIS: [&str; 6] = ["1", "s", "C", "|C|", "C^2-1", "(C^2-1)s"];

/// Value of basis function `i` at `C`.
pub fn fm_basis(i: usize, c: f64) -> f64 {
    let s = if c > 0.0 {
        1.0
    } else if c < 0.0 {
        -1.0
    } else {
        0.0
    };
    match i {
        0 => 1.0,
        1 => s,
        2 => c,
        3 => c.abs(),
        4 => c * c - 1.0,
        5 => (c * c - 1.0) * s,
        _ => panic!("basis index {i} out of range"),
    }
}

/// Index of `s * phi_i` in the basis.
const S_PARTNER: [usize; 6] = [1, 0, 3, 2, 5, 4];

/// The kernel's collision invariants `1, C, C^2 - 1` as basis indices.
const INVARIANTS: [usize; 3] = [0, 2, 4];

pub type Matrix6 = SMatrix<f64, 6, 6>;

/// The generator `M` of `y' = M y` for `y = (a1, a1~, a2, a2~, a3, a3~)`,
/// the coefficients of `h` in [`FM_BASIS`].
///
/// Multiplying the equation by `s` gives `h_x = s (K h - h)`, where `K` maps
/// the span into `{1, C, C^2 - 1}` with coefficients
/// `int exp(-C^2)|C| psi(C) phi_j(C) dC`. The span is closed under
/// multiplication by `s`, so the projection is exact.
pub fn fm_project_system() -> Matrix6 {
    assemble_generator(projection_exact)
}

/// The same generator with every projection integral evaluated by
/// Gauss-Legendre quadrature on `[0, cutoff]` per half line.
pub fn fm_project_system_quadrature(nodes: usize, cutoff: f64) -> Matrix6 {
    let gl = GaussLegendre::new(nodes);
    assemble_generator(|i, j| {
        let f = |c: f64| (-c * c).exp() * c.abs() * fm_basis(i, c) * fm_basis(j, c);
        gl.integrate(0.0, cutoff, f) + gl.integrate(-cutoff, 0.0, f)
    })
}

fn assemble_generator(projection: impl Fn(usize, usize) -> f64) -> Matrix6 {
    // K - I in the basis: row INVARIANTS[k] of K holds <psi_k, phi_j>.
    let mut k_minus_i = Matrix6::zeros();
    for &row in &INVARIANTS {
        for j in 0..6 {
            k_minus_i[(row, j)] = projection(row, j);
        }
    }
    k_minus_i -= Matrix6::identity();
    let mut s = Matrix6::zeros();
    for (i, &p) in S_PARTNER.iter().enumerate() {
        s[(p, i)] = 1.0;
    }
    s * k_minus_i
}

/// `int exp(-C^2)|C| phi_i phi_j dC` from half-line moments: on `C > 0`
/// the pair is a polynomial, on `C < 0` the same with `C -> -C` applied.
fn projection_exact(i: usize, j: usize) -> f64 {
    let pi = basis_poly(i);
    let pj = basis_poly(j);
    let mut total = 0.0;
    for sign in [1.0, -1.0] {
        let (a, sa) = pi;
        let (b, sb) = pj;
        let fa = if sign > 0.0 { 1.0 } else { sa };
        let fb = if sign > 0.0 { 1.0 } else { sb };
        for (p, &ca) in a.iter().enumerate() {
            for (q, &cb) in b.iter().enumerate() {
                if ca == 0.0 || cb == 0.0 {
                    continue;
                }
                total += fa * fb * ca * cb * half_line_moment((p + q + 1) as u32);
            }
        }
    }
    total
}

/// Coefficients of `phi_i(C)` for `C > 0` in powers of `C`, and the factor
/// `phi_i(-C) / phi_i(C)` that maps the positive half line onto the negative.
fn basis_poly(i: usize) -> ([f64; 3], f64) {
    match i {
        0 => ([1.0, 0.0, 0.0], 1.0),
        1 => ([1.0, 0.0, 0.0], -1.0),
        2 => ([0.0, 1.0, 0.0], -1.0),
        3 => ([0.0, 1.0, 0.0], 1.0),
        4 => ([-1.0, 0.0, 1.0], 1.0),
        5 => ([-1.0, 0.0, 1.0], -1.0),
        _ => unreachable!(),
    }
}

/// Mode vectors of the free-molecular generator, read off its eigen
/// decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct FmModes {
    pub system_matrix: Matrix6,
    /// Kernel of `M` in reduced form: unit pivots on `1`, `C`, `C^2 - 1`.
    pub invariants: [SVector<f64, 6>; 3],
    /// `w` with `M w` in the kernel; `w + x M w` solves the system. Scaled
    /// so the `s` coefficient is one.
    pub linear: SVector<f64, 6>,
    /// Eigenvector for `-kappa`, scaled so the `|C|` coefficient is one.
    pub decaying: SVector<f64, 6>,
    /// Eigenvector for `+kappa`, same scaling.
    pub growing: SVector<f64, 6>,
    /// `kappa > 0`.
    pub decay_rate: f64,
}

impl FmModes {
    /// Derives the modes from [`fm_project_system`].
    pub fn derive() -> Result<Self> {
        let m = fm_project_system();
        let eig = m.complex_eigenvalues();
        let kappa = eig.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
        if !(kappa > 1e-6) {
            return Err(Error::FitFailed(format!(
                "free-molecular generator has no growing eigenvalue (max real part {kappa})"
            )));
        }
        let kernel = null_space(&m, 3)?;
        let pivots = DMatrix::from_fn(3, 3, |r, c| kernel[(INVARIANTS[r], c)]);
        let inv = pivots
            .try_inverse()
            .ok_or_else(|| Error::FitFailed("kernel has no pivots on the invariants".into()))?;
        let reduced = &kernel * inv;
        let invariants = std::array::from_fn(|k| SVector::<f64, 6>::from_fn(|r, _| clean(reduced[(r, k)])));

        let m2 = m * m;
        let gen_kernel = null_space(&m2, 4)?;
        // Component of the generalized kernel orthogonal to the kernel.
        let mut linear = None;
        for c in 0..gen_kernel.ncols() {
            let mut v = SVector::<f64, 6>::from_fn(|r, _| gen_kernel[(r, c)]);
            for k in 0..kernel.ncols() {
                let u = SVector::<f64, 6>::from_fn(|r, _| kernel[(r, k)]);
                v -= u * u.dot(&v);
            }
            if v.norm() > 1e-6 {
                linear = Some(v);
                break;
            }
        }
        let linear = normalize(linear.ok_or_else(|| Error::FitFailed("no Jordan chain".into()))?, 1)?;

        let decaying = normalize(eigenvector(&m, -kappa)?, 3)?;
        let growing = normalize(eigenvector(&m, kappa)?, 3)?;
        Ok(FmModes {
            system_matrix: m,
            invariants,
            linear,
            decaying,
            growing,
            decay_rate: kappa,
        })
    }
}

fn clean(v: f64) -> f64 {
    if v.abs() < 1e-13 { 0.0 } else { v }
}

fn normalize(v: SVector<f64, 6>, index: usize) -> Result<SVector<f64, 6>> {
    if v[index].abs() < 1e-10 {
        return Err(Error::FitFailed(format!(
            "mode has no {} component to normalize by",
            FM_BASIS[index]
        )));
    }
    Ok((v / v[index]).map(clean))
}

/// Orthonormal basis of the null space of `m`, expecting `dim` vectors.
fn null_space(m: &Matrix6, dim: usize) -> Result<DMatrix<f64>> {
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let small: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&k| svd.singular_values[k] < 1e-10)
        .collect();
    if small.len() != dim {
        return Err(Error::FitFailed(format!(
            "expected a null space of dimension {dim}, found {}",
            small.len()
        )));
    }
    Ok(DMatrix::from_fn(6, dim, |r, c| v_t[(small[c], r)]))
}

fn eigenvector(m: &Matrix6, lambda: f64) -> Result<SVector<f64, 6>> {
    let shifted = m - Matrix6::identity() * lambda;
    let ns = null_space(&shifted, 1)?;
    Ok(SVector::<f64, 6>::from_fn(|r, _| ns[(r, 0)]))
}

fn modes() -> &'static FmModes {
    static MODES: OnceLock<FmModes> = OnceLock::new();
    MODES.get_or_init(|| FmModes::derive().expect("free-molecular generator has the expected structure"))
}

/// The six free constants of the free-molecular solution.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct FmCoefficients {
    /// Decaying mode `exp(-kappa x)`.
    pub a0: f64,
    /// Invariant `1`.
    pub a1: f64,
    /// Invariant `C`.
    pub a2: f64,
    /// Invariant `C^2 - 1`.
    pub a3: f64,
    /// Linear-in-`x` mode.
    pub at1: f64,
    /// Growing mode `exp(kappa x)`.
    pub at3: f64,
}

impl FmCoefficients {
    pub fn from_array(v: [f64; 6]) -> Self {
        FmCoefficients {
            a0: v[0],
            a1: v[1],
            a2: v[2],
            a3: v[3],
            at1: v[4],
            at3: v[5],
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.a0, self.a1, self.a2, self.a3, self.at1, self.at3]
    }
}

/// Closed-form solution of the free-molecular equation for given constants.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeMolecularSolution {
    pub coefficients: FmCoefficients,
    pub decay_rate: f64,
    pub system_matrix: Matrix6,
    modes: FmModes,
}

impl FreeMolecularSolution {
    pub fn new(coefficients: FmCoefficients) -> Self {
        let modes = modes().clone();
        FreeMolecularSolution {
            coefficients,
            decay_rate: modes.decay_rate,
            system_matrix: modes.system_matrix,
            modes,
        }
    }

    /// The same constants with the exponential modes evaluated at another
    /// rate; used to test candidate rates against the residual.
    pub fn with_decay_rate(mut self, rate: f64) -> Self {
        self.decay_rate = rate;
        self.modes.decay_rate = rate;
        self
    }

    pub fn modes(&self) -> &FmModes {
        &self.modes
    }

    /// Coefficient vector `y(x)` in [`FM_BASIS`].
    pub fn state(&self, x: f64) -> SVector<f64, 6> {
        let k = &self.coefficients;
        let md = &self.modes;
        let lin = md.linear + md.system_matrix * md.linear * x;
        md.invariants[0] * k.a1
            + md.invariants[1] * k.a2
            + md.invariants[2] * k.a3
            + lin * k.at1
            + md.decaying * (k.a0 * (-md.decay_rate * x).exp())
            + md.growing * (k.at3 * (md.decay_rate * x).exp())
    }

    /// `y'(x)`, analytic.
    pub fn state_dx(&self, x: f64) -> SVector<f64, 6> {
        let k = &self.coefficients;
        let md = &self.modes;
        let kappa = md.decay_rate;
        md.system_matrix * md.linear * k.at1
            + md.decaying * (-kappa * k.a0 * (-kappa * x).exp())
            + md.growing * (kappa * k.at3 * (kappa * x).exp())
    }
}

fn expand(y: &SVector<f64, 6>, c: f64) -> f64 {
    (0..6).map(|i| y[i] * fm_basis(i, c)).sum()
}

/// `h(x, C)` of the free-molecular solution.
pub fn fm_general_solution(sol: &FreeMolecularSolution, x: f64, c: f64) -> f64 {
    expand(&sol.state(x), c)
}

/// `dh/dx (x, C)`, analytic.
pub fn fm_general_solution_dx(sol: &FreeMolecularSolution, x: f64, c: f64) -> f64 {
    expand(&sol.state_dx(x), c)
}

/// Test velocities for [`fm_residual`]: 64 midpoints of a uniform partition
/// of `[-4, 4]`, so `C = 0` is avoided.
pub fn fm_test_grid() -> Vec<f64> {
    (0..64).map(|k| -4.0 + 8.0 * (k as f64 + 0.5) / 64.0).collect()
}

/// `sup_C |sgn(C) h_x + h - int exp(-C'^2)|C'| q1(C, C') h(x, C') dC'|` over
/// [`fm_test_grid`], with the integral by Gauss-Legendre on each half line.
pub fn fm_residual(sol: &FreeMolecularSolution, x: f64) -> Result<f64> {
    let gl = GaussLegendre::new(120);
    let y = sol.state(x);
    let dy = sol.state_dx(x);
    let mut worst: f64 = 0.0;
    for c in fm_test_grid() {
        let f = |cp: f64| (-cp * cp).exp() * cp.abs() * fm_kernel(c, cp) * expand(&y, cp);
        let integral = gl.integrate(0.0, 10.0, f) + gl.integrate(-10.0, 0.0, f);
        let r = c.signum() * expand(&dy, c) + expand(&y, c) - integral;
        if !r.is_finite() {
            return Err(Error::NonFinite("free-molecular residual"));
        }
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// `max |(1 + a|C'|) q(C, C'; a) - |C'| q1(C, C')| / max |C'| q1(C, C')` over
/// a grid of `(C, C')` in `[-3, 3]^2`: the distance of the general kernel,
/// weighted by the collision frequency, from the free-molecular kernel.
pub fn kernel_limit_deviation(params: &GasParams) -> f64 {
    let grid: Vec<f64> = (0..41).map(|k| -3.0 + 6.0 * k as f64 / 40.0).collect();
    let a = params.a();
    let (mut dev, mut scale): (f64, f64) = (0.0, 0.0);
    for &c in &grid {
        for &cp in &grid {
            let general = (1.0 + a * cp.abs()) * params.kernel_q_c(c, cp);
            let limit = cp.abs() * fm_kernel(c, cp);
            dev = dev.max((general - limit).abs());
            scale = scale.max(limit.abs());
        }
    }
    dev / scale
}
