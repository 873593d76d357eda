//! The 3x3 dispersion matrix, its determinant `lambda(z)`, cofactor
//! determinants, the kernel `Q~(eta, mu)`, boundary relations on the cut and
//! argument-principle zero counting.
//!
//! Entry `(alpha, j)` of the matrix is
//!
//! ```text
//! delta_{alpha j} + (r0 + beta^2 r2) t_alpha - beta r2 t_{alpha+2}   (j = 0)
//! delta_{alpha j} + r1 t_{alpha+1}                                  (j = 1)
//! delta_{alpha j} + r2 (t_{alpha+2} - beta t_alpha)                 (j = 2)
//! ```
//!
//! with the moments `t_n` of [`crate::moments`].

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::moments::{self, MomentSet, Region, Side};
use crate::params::GasParams;
use crate::quadrature::QuadratureScheme;
use num_complex::Complex64;
use std::f64::consts::PI;

pub type Matrix3 = [[Complex64; 3]; 3];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Smallest admissible `|lambda|` on a zero-counting contour.
pub const MIN_CONTOUR_MODULUS: f64 = 1e-8;

/// Samples per closed loop on the first winding pass.
pub const MIN_LOOP_SAMPLES: usize = 4096;

/// Radii used by [`laurent_order_at_infinity`].
pub const LAURENT_RADII: [f64; 3] = [10.0, 20.0, 40.0];

/// Assembles the dispersion matrix from a moment set.
pub fn lambda_matrix(params: &GasParams, m: &MomentSet) -> Matrix3 {
    let (beta, r0, r1, r2) = (params.beta(), params.r0(), params.r1(), params.r2());
    let t = &m.t;
    let mut out = [[ZERO; 3]; 3];
    for (alpha, row) in out.iter_mut().enumerate() {
        row[0] = t[alpha] * (r0 + beta * beta * r2) - t[alpha + 2] * (beta * r2);
        row[1] = t[alpha + 1] * r1;
        row[2] = (t[alpha + 2] - t[alpha] * beta) * r2;
        row[alpha] += ONE;
    }
    out
}

/// Determinant by cofactor expansion along the first row.
pub fn det3(m: &Matrix3) -> Complex64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// The expanded six-product form of the determinant, used only as a
/// cross-check of [`det3`].
pub fn six_term_expansion(m: &Matrix3) -> Complex64 {
    m[0][0] * m[1][1] * m[2][2] + m[0][1] * m[1][2] * m[2][0] + m[0][2] * m[1][0] * m[2][1]
        - m[0][2] * m[1][1] * m[2][0]
        - m[0][0] * m[1][2] * m[2][1]
        - m[0][1] * m[1][0] * m[2][2]
}

/// Matrix, determinant and (on the real axis inside the cut) cofactors at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionEval {
    pub point: Complex64,
    pub region: Region,
    pub matrix: Matrix3,
    pub det: Complex64,
    /// `Lambda_0, Lambda_1, Lambda_2` at the point, present when the point is
    /// real and inside the cut.
    pub cofactors: Option<[Complex64; 3]>,
}

impl DispersionEval {
    pub fn from_moments(params: &GasParams, m: &MomentSet) -> Result<Self> {
        let matrix = lambda_matrix(params, m);
        let det = det3(&matrix);
        let cofactors = if m.point.im == 0.0 && params.in_cut(m.point.re) {
            let mut out = [ZERO; 3];
            for (k, slot) in out.iter_mut().enumerate() {
                *slot = replaced_column_det(params, &matrix, k, m.point.re)?;
            }
            Some(out)
        } else {
            None
        };
        Ok(DispersionEval {
            point: m.point,
            region: m.region,
            matrix,
            det,
            cofactors,
        })
    }
}

/// Evaluates matrix and determinant at `z` in the requested region.
pub fn dispersion_eval(scheme: &QuadratureScheme, z: Complex64, region: Region) -> Result<DispersionEval> {
    let m = moments::moments_in_region(scheme, z, region)?;
    DispersionEval::from_moments(scheme.params(), &m)
}

/// `lambda(z)` off the cut.
pub fn lambda_fn(scheme: &QuadratureScheme, z: Complex64) -> Result<Complex64> {
    let m = moments::moments_at(scheme, z)?;
    Ok(det3(&lambda_matrix(scheme.params(), &m)))
}

/// Determinant of the principal-value matrix at a cut point.
///
/// The jump of the matrix across the cut has rank one, so this equals the
/// average `(lambda^+ + lambda^-)/2` of the boundary values.
pub fn lambda_pv(scheme: &QuadratureScheme, x: f64) -> Result<f64> {
    let m = moments::moments_pv(scheme, x)?;
    Ok(det3(&lambda_matrix(scheme.params(), &m)).re)
}

/// Boundary value `lambda^+(x)` or `lambda^-(x)` at a cut point.
pub fn lambda_boundary(scheme: &QuadratureScheme, x: f64, side: Side) -> Result<Complex64> {
    let m = moments::moments_boundary(scheme, x, side)?;
    Ok(det3(&lambda_matrix(scheme.params(), &m)))
}

/// Cofactor determinant `Lambda_alpha(eta)`: the dispersion matrix built from
/// `moments` with column `alpha_index` replaced by `(1, C(eta), C(eta)^2)`.
pub fn lambda_alpha(
    params: &GasParams,
    moments: &MomentSet,
    alpha_index: usize,
    eta: f64,
) -> Result<Complex64> {
    replaced_column_det(params, &lambda_matrix(params, moments), alpha_index, eta)
}

fn replaced_column_det(params: &GasParams, m: &Matrix3, alpha_index: usize, eta: f64) -> Result<Complex64> {
    if alpha_index > 2 {
        return Err(Error::Domain(format!(
            "cofactor index must be 0, 1 or 2, got {alpha_index}"
        )));
    }
    let c = params.c_of(eta)?;
    let column = [1.0, c, c * c];
    let mut r = *m;
    for (row, &v) in r.iter_mut().zip(&column) {
        row[alpha_index] = Complex64::new(v, 0.0);
    }
    Ok(det3(&r))
}

/// `Q~(eta, mu) = r0 L0 + r1 C(mu) L1 + r2 (C(mu)^2 - beta)(L2 - beta L0)`
/// built from principal-value moments at `eta`.
pub fn q_tilde(params: &GasParams, moments: &MomentSet, eta: f64, mu: f64) -> Result<f64> {
    if moments.region != Region::PrincipalValue {
        return Err(Error::Domain(format!(
            "Q~ needs principal-value moments, got {:?}",
            moments.region
        )));
    }
    let m = lambda_matrix(params, moments);
    let mut l = [0.0; 3];
    for (k, slot) in l.iter_mut().enumerate() {
        *slot = replaced_column_det(params, &m, k, eta)?.re;
    }
    let cut = CutPoint {
        eta,
        rho: params.weight(eta),
        lambda_pv: det3(&m).re,
        cofactors: l,
    };
    cut.q_tilde(params, mu)
}

/// Principal-value data at one point `eta` of the cut: `rho(eta)`,
/// `lambda^PV(eta)` and the three cofactors. Reused for every `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutPoint {
    pub eta: f64,
    pub rho: f64,
    pub lambda_pv: f64,
    pub cofactors: [f64; 3],
}

impl CutPoint {
    pub fn new(scheme: &QuadratureScheme, eta: f64) -> Result<Self> {
        let params = scheme.params();
        let m = moments::moments_pv(scheme, eta)?;
        let matrix = lambda_matrix(params, &m);
        let mut cofactors = [0.0; 3];
        for (k, slot) in cofactors.iter_mut().enumerate() {
            *slot = replaced_column_det(params, &matrix, k, eta)?.re;
        }
        Ok(CutPoint {
            eta,
            rho: params.weight(eta),
            lambda_pv: det3(&matrix).re,
            cofactors,
        })
    }

    pub fn q_tilde(&self, params: &GasParams, mu: f64) -> Result<f64> {
        let c = params.c_of(mu)?;
        Ok(self.q_tilde_c(params, c))
    }

    /// `Q~(eta, mu)` with `mu` given through its velocity `C(mu)`.
    pub fn q_tilde_c(&self, params: &GasParams, c: f64) -> f64 {
        let [l0, l1, l2] = self.cofactors;
        let (beta, r0, r1, r2) = (params.beta(), params.r0(), params.r1(), params.r2());
        r0 * l0 + r1 * c * l1 + r2 * (c * c - beta) * (l2 - beta * l0)
    }
}

/// Measured boundary values of `lambda` at a cut point, against the jump
/// `2 pi i rho(x) Q~(x, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SokhotskyReport {
    pub x: f64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// `lambda^+ - lambda^-`.
    pub jump: Complex64,
    /// `2 pi i rho(x) Q~(x, x)`.
    pub reference_jump: Complex64,
    /// `jump / reference_jump`; `None` where the reference value vanishes.
    pub ratio: Option<Complex64>,
    /// `(lambda^+ + lambda^-) / 2`.
    pub average: Complex64,
    pub lambda_pv: f64,
}

/// Measures the jump of `lambda` across the cut at `x` and compares it with
/// the value `2 pi i rho(x) Q~(x, x)`.
///
/// The measured jump is `2 pi i x rho(x) Q~(x, x)`; the ratio therefore
/// comes out as `x`.
pub fn sokhotsky_jump(scheme: &QuadratureScheme, x: f64) -> Result<SokhotskyReport> {
    let params = scheme.params();
    let lambda_plus = lambda_boundary(scheme, x, Side::Plus)?;
    let lambda_minus = lambda_boundary(scheme, x, Side::Minus)?;
    let cut = CutPoint::new(scheme, x)?;
    let q = cut.q_tilde(params, x)?;
    let reference_jump = Complex64::new(0.0, 2.0 * PI * cut.rho * q);
    let jump = lambda_plus - lambda_minus;
    let ratio = (reference_jump.norm() > 0.0).then(|| jump / reference_jump);
    Ok(SokhotskyReport {
        x,
        lambda_plus,
        lambda_minus,
        jump,
        reference_jump,
        ratio,
        average: (lambda_plus + lambda_minus) * 0.5,
        lambda_pv: cut.lambda_pv,
    })
}

/// `lambda^+(x)` or `lambda^-(x)` on a grid; real points outside the cut use
/// the ordinary (real) value.
pub fn dispersion_curve(
    scheme: &QuadratureScheme,
    xs: &[f64],
    side: Side,
    exec: Execution,
) -> Result<Vec<Complex64>> {
    exec.try_map(xs, |&x| {
        if scheme.params().in_cut(x) {
            lambda_boundary(scheme, x, side)
        } else {
            lambda_fn(scheme, Complex64::new(x, 0.0))
        }
    })
}

/// Zeros of the principal-value symbol `lambda^PV` on `(0, alpha)` (it is
/// even), bracketed on `samples` uniform points and refined by bisection.
/// For `a = 0` the search covers `(0, 6)`.
///
/// With `g = 1` the continuum eigenfunction carries `1/lambda^PV(eta)` and is
/// singular at these points.
pub fn pv_zeros(scheme: &QuadratureScheme, samples: usize, exec: Execution) -> Result<Vec<f64>> {
    let alpha = scheme.params().alpha();
    let top = if alpha.is_finite() { alpha } else { 6.0 };
    let xs: Vec<f64> = (1..samples).map(|k| top * k as f64 / samples as f64).collect();
    let vals = exec.try_map(&xs, |&x| lambda_pv(scheme, x))?;
    let mut zeros = Vec::new();
    for i in 1..xs.len() {
        if vals[i - 1].signum() == vals[i].signum() {
            continue;
        }
        let (mut lo, mut hi, mut flo) = (xs[i - 1], xs[i], vals[i - 1]);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let fm = lambda_pv(scheme, mid)?;
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        zeros.push(0.5 * (lo + hi));
    }
    Ok(zeros)
}

/// A union of closed polygonal loops; the winding of the union is the sum of
/// the windings of its loops. Each loop is closed implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    loops: Vec<Vec<Complex64>>,
}

impl Contour {
    /// One closed loop through `vertices`.
    pub fn polygon(vertices: Vec<Complex64>) -> Result<Self> {
        Self::from_loops(vec![vertices])
    }

    pub fn from_loops(loops: Vec<Vec<Complex64>>) -> Result<Self> {
        if loops.is_empty() || loops.iter().any(|l| l.len() < 3) {
            return Err(Error::IllConditionedContour(
                "every loop needs at least three vertices".into(),
            ));
        }
        if loops
            .iter()
            .flatten()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::IllConditionedContour("non-finite vertex".into()));
        }
        Ok(Contour { loops })
    }

    /// Counter-clockwise circle approximated by `sides` vertices.
    pub fn circle(center: Complex64, radius: f64, sides: usize) -> Result<Self> {
        Self::polygon(arc(center, radius, 0.0, 2.0 * PI, sides.max(3), false))
    }

    /// Boundary of `{|Re z| <= half_width, |Im z| <= half_height}` minus a
    /// stadium-shaped `margin` neighbourhood of the cut `[-alpha, alpha]`:
    /// the rectangle counter-clockwise and the stadium clockwise.
    pub fn cut_avoiding_rectangle(half_width: f64, half_height: f64, alpha: f64, margin: f64) -> Result<Self> {
        if !(alpha.is_finite() && margin > 0.0 && half_width > alpha + margin && half_height > margin) {
            return Err(Error::IllConditionedContour(format!(
                "rectangle {half_width} x {half_height} does not enclose the {margin}-neighbourhood of [-{alpha}, {alpha}]"
            )));
        }
        let (w, h) = (half_width, half_height);
        let outer = vec![
            Complex64::new(-w, -h),
            Complex64::new(w, -h),
            Complex64::new(w, h),
            Complex64::new(-w, h),
        ];
        // Counter-clockwise stadium, reversed below.
        let mut inner = arc(Complex64::new(alpha, 0.0), margin, -PI / 2.0, PI / 2.0, 64, true);
        inner.extend(arc(Complex64::new(-alpha, 0.0), margin, PI / 2.0, 1.5 * PI, 64, true));
        inner.reverse();
        Self::from_loops(vec![outer, inner])
    }

    /// Closed upper half-disc of `radius` centred at `i base`, counter-clockwise.
    pub fn upper_semicircle(radius: f64, base: f64, sides: usize) -> Result<Self> {
        if !(radius > 0.0 && base > 0.0) {
            return Err(Error::IllConditionedContour(format!(
                "semicircle needs radius > 0 and base > 0, got {radius}, {base}"
            )));
        }
        let center = Complex64::new(0.0, base);
        Self::polygon(arc(center, radius, 0.0, PI, sides.max(3), true))
    }

    /// `count` nested cut-avoiding rectangles with margins growing outward
    /// from `1e-2` and sizes from `alpha + 0.5` by `0.5` to
    /// `alpha + 0.5 count^2` by `0.5 count^2`.
    pub fn nested_family(alpha: f64, count: usize) -> Result<Vec<Self>> {
        (1..=count)
            .map(|k| {
                let s = 0.5 * (k * k) as f64;
                Self::cut_avoiding_rectangle(alpha + s, s, alpha, 1e-2)
            })
            .collect()
    }

    pub fn loops(&self) -> &[Vec<Complex64>] {
        &self.loops
    }

    fn loop_length(vertices: &[Complex64]) -> f64 {
        (0..vertices.len())
            .map(|i| (vertices[(i + 1) % vertices.len()] - vertices[i]).norm())
            .sum()
    }

    /// About `samples` points along one loop, spaced by arc length, with the
    /// vertices included.
    fn sample_loop(vertices: &[Complex64], samples: usize) -> Vec<Complex64> {
        let total = Self::loop_length(vertices);
        let mut out = Vec::with_capacity(samples + vertices.len());
        for i in 0..vertices.len() {
            let (p, q) = (vertices[i], vertices[(i + 1) % vertices.len()]);
            let n = ((samples as f64 * (q - p).norm() / total).ceil() as usize).max(1);
            for k in 0..n {
                out.push(p + (q - p) * (k as f64 / n as f64));
            }
        }
        out
    }
}

/// Vertices on an arc from angle `t0` to `t1`; `inclusive` keeps the end point.
fn arc(center: Complex64, radius: f64, t0: f64, t1: f64, sides: usize, inclusive: bool) -> Vec<Complex64> {
    let last = if inclusive { sides } else { sides - 1 };
    (0..=last)
        .map(|k| center + Complex64::from_polar(radius, t0 + (t1 - t0) * k as f64 / sides as f64))
        .collect()
}

/// Winding result of [`count_zeros`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroCount {
    pub zeros: i64,
    /// Samples per unit loop on the accepted pass.
    pub samples: usize,
    pub min_modulus: f64,
}

/// Number of zeros of `lambda` enclosed by `contour`, from the winding of
/// `lambda` along it.
///
/// The argument is tracked continuously on at least [`MIN_LOOP_SAMPLES`]
/// points per loop; sampling doubles until consecutive passes agree and no
/// step turns the argument by more than an eighth of a turn.
pub fn count_zeros(scheme: &QuadratureScheme, contour: &Contour, exec: Execution) -> Result<ZeroCount> {
    let mut samples = MIN_LOOP_SAMPLES;
    let mut previous: Option<i64> = None;
    for _ in 0..6 {
        let (winding, max_step, min_modulus) = winding_pass(scheme, contour, samples, exec)?;
        if max_step < PI / 4.0 && previous == Some(winding) {
            return Ok(ZeroCount {
                zeros: winding,
                samples,
                min_modulus,
            });
        }
        previous = Some(winding);
        samples *= 2;
    }
    Err(Error::IllConditionedContour(format!(
        "winding did not stabilise with {} samples per loop",
        samples / 2
    )))
}

fn winding_pass(
    scheme: &QuadratureScheme,
    contour: &Contour,
    samples: usize,
    exec: Execution,
) -> Result<(i64, f64, f64)> {
    let params = scheme.params();
    let mut total = 0.0;
    let mut max_step: f64 = 0.0;
    let mut min_modulus = f64::INFINITY;
    for vertices in &contour.loops {
        let pts = Contour::sample_loop(vertices, samples);
        if let Some(z) = pts.iter().find(|z| z.im == 0.0 && params.in_cut(z.re)) {
            return Err(Error::IllConditionedContour(format!(
                "contour touches the cut at {}",
                z.re
            )));
        }
        let values = exec.try_map(&pts, |&z| lambda_fn(scheme, z))?;
        for (z, v) in pts.iter().zip(&values) {
            let r = v.norm();
            if r < MIN_CONTOUR_MODULUS {
                return Err(Error::IllConditionedContour(format!(
                    "|lambda| = {r:e} at {z} is below {MIN_CONTOUR_MODULUS:e}"
                )));
            }
            min_modulus = min_modulus.min(r);
        }
        let mut turn = 0.0;
        for i in 0..values.len() {
            let step = (values[(i + 1) % values.len()] / values[i]).arg();
            max_step = max_step.max(step.abs());
            turn += step;
        }
        total += turn;
    }
    Ok(((total / (2.0 * PI)).round() as i64, max_step, min_modulus))
}

/// Fitted behaviour `lambda(z) ~ c / z^k` at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaurentFit {
    pub order: u32,
    /// Slope of the log-log regression before rounding.
    pub raw_order: f64,
    pub leading_coeff: Complex64,
}

/// Order of the zero of `lambda` at infinity, along the imaginary axis.
///
/// The order is the rounded slope of a log-log regression of `|lambda(iR)|`
/// over [`LAURENT_RADII`]. The coefficient `lim z^k lambda(z)` is obtained by
/// Richardson extrapolation in `1/R^2`, since `lambda` is even.
pub fn laurent_order_at_infinity(scheme: &QuadratureScheme) -> Result<LaurentFit> {
    let mut logs = [(0.0, 0.0); 3];
    let mut values = [ZERO; 3];
    for (i, &r) in LAURENT_RADII.iter().enumerate() {
        let z = Complex64::new(0.0, r);
        let v = lambda_fn(scheme, z)?;
        if v.norm() == 0.0 {
            return Err(Error::FitFailed(format!("lambda vanishes at {z}")));
        }
        logs[i] = (r.ln(), v.norm().ln());
        values[i] = v;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let raw_order = -sxy / sxx;
    let order = raw_order.round();
    if !(raw_order.is_finite() && order >= 0.0 && (raw_order - order).abs() < 0.1) {
        return Err(Error::FitFailed(format!(
            "log-log slope {raw_order} is not close to an integer"
        )));
    }
    let k = order as i32;
    let f: Vec<Complex64> = LAURENT_RADII
        .iter()
        .zip(&values)
        .map(|(&r, &v)| v * Complex64::new(0.0, r).powi(k))
        .collect();
    let g1 = (f[1] * 4.0 - f[0]) / 3.0;
    let g2 = (f[2] * 4.0 - f[1]) / 3.0;
    let leading_coeff = (g2 * 16.0 - g1) / 15.0;
    Ok(LaurentFit {
        order: order as u32,
        raw_order,
        leading_coeff,
    })
}

/// The spectrum: the continuous part `(-alpha, alpha)` and the single
/// discrete point at infinity with the multiplicity measured from `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SpectrumDescription {
    pub continuous: (f64, f64),
    pub discrete_multiplicity: u32,
}

impl SpectrumDescription {
    pub fn measure(scheme: &QuadratureScheme) -> Result<Self> {
        let alpha = scheme.params().alpha();
        let fit = laurent_order_at_infinity(scheme)?;
        Ok(SpectrumDescription {
            continuous: (-alpha, alpha),
            discrete_multiplicity: fit.order,
        })
    }
}
