//! Discrete and continuum eigensolutions and the general-solution expansion
//! of the transport equation
//!
//! ```text
//! mu dh/dx + h = int rho(mu') q(mu, mu') h(x, mu') dmu'
//! ```
//!
//! The continuum eigenfunctions are, for `eta` in the cut,
//!
//! ```text
//! Phi(eta, mu) = g(eta) [ eta rho(eta) Q~(eta, mu) / lambda(eta) P 1/(eta - mu) + delta(eta - mu) ]
//! ```
//!
//! with `lambda` the principal-value symbol and `g = 1` unless stated.

use crate::dispersion::CutPoint;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::params::GasParams;
use crate::quadrature::{GaussLegendre, QuadratureScheme};

/// Step of the default central-difference x-derivative.
pub const FD_STEP: f64 = 1e-5;

/// Longest panel, in `C`, of the residual's composite rule.
pub const RESIDUAL_PANEL: f64 = 0.05;

const RESIDUAL_NODES: usize = 16;

/// Number of points in the default `mu` test grid.
pub const TEST_GRID_POINTS: usize = 64;

/// The four solutions belonging to the point at infinity:
/// `1`, `C`, `C^2 - 1/2` and `(x - mu)(C^2 - 3/2)`, `C = C(mu)`.
pub fn discrete_solution(params: &GasParams, k: usize, x: f64, mu: f64) -> Result<f64> {
    let c = params.c_of(mu)?;
    match k {
        0 => Ok(1.0),
        1 => Ok(c),
        2 => Ok(c * c - 0.5),
        3 => Ok((x - mu) * (c * c - 1.5)),
        _ => Err(Error::Domain(format!("discrete solution index must be 0..=3, got {k}"))),
    }
}

/// `d/dx` of [`discrete_solution`].
pub fn discrete_solution_dx(params: &GasParams, k: usize, _x: f64, mu: f64) -> Result<f64> {
    let c = params.c_of(mu)?;
    match k {
        0..=2 => Ok(0.0),
        3 => Ok(c * c - 1.5),
        _ => Err(Error::Domain(format!("discrete solution index must be 0..=3, got {k}"))),
    }
}

/// A candidate solution `h(x, mu)` for [`residual_2_4`].
pub trait Profile: Sync {
    fn value(&self, x: f64, mu: f64) -> Result<f64>;

    /// `dh/dx`; central differences with step [`FD_STEP`] unless overridden.
    fn dx(&self, x: f64, mu: f64) -> Result<f64> {
        let hp = self.value(x + FD_STEP, mu)?;
        let hm = self.value(x - FD_STEP, mu)?;
        Ok((hp - hm) / (2.0 * FD_STEP))
    }

    /// Values of `mu` where `h` is less smooth; the residual's quadrature
    /// places panel boundaries there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// One of the four discrete solutions as a [`Profile`].
#[derive(Debug, Clone, Copy)]
pub struct DiscreteSolution {
    params: GasParams,
    k: usize,
}

impl DiscreteSolution {
    pub fn new(params: GasParams, k: usize) -> Result<Self> {
        if k > 3 {
            return Err(Error::Domain(format!("discrete solution index must be 0..=3, got {k}")));
        }
        Ok(DiscreteSolution { params, k })
    }
}

impl Profile for DiscreteSolution {
    fn value(&self, x: f64, mu: f64) -> Result<f64> {
        discrete_solution(&self.params, self.k, x, mu)
    }

    fn dx(&self, x: f64, mu: f64) -> Result<f64> {
        discrete_solution_dx(&self.params, self.k, x, mu)
    }
}

/// A closure `h(x, mu)` with a finite-difference derivative.
pub struct FnProfile<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> Profile for FnProfile<F> {
    fn value(&self, x: f64, mu: f64) -> Result<f64> {
        Ok((self.0)(x, mu))
    }
}

/// `n` test points `mu(C_k)` with `C_k` the cell midpoints of a uniform
/// partition of `[-4, 4]`; covers the cut where the weight is not negligible.
pub fn mu_test_grid(params: &GasParams, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| params.mu_of(-4.0 + 8.0 * (k as f64 + 0.5) / n as f64))
        .collect()
}

/// Composite Gauss-Legendre rule in `C` on `[-L, L]` with the weight folded
/// in, panels split at `C = 0` and at the images of `breakpoints`.
fn residual_rule(scheme: &QuadratureScheme, breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let p = scheme.params();
    let l = scheme.cutoff();
    let mut cuts = vec![-l, 0.0, l];
    for &b in breakpoints {
        if let Ok(c) = p.c_of(b) {
            if c.abs() < l {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let gl = GaussLegendre::new(RESIDUAL_NODES);
    let mut rule = Vec::new();
    for w in cuts.windows(2) {
        let n = ((w[1] - w[0]) / RESIDUAL_PANEL).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / n as f64;
        for k in 0..n {
            let (a, b) = (w[0] + k as f64 * h, w[0] + (k + 1) as f64 * h);
            for (&t, &wt) in gl.nodes().iter().zip(gl.weights()) {
                let c = 0.5 * (a + b) + 0.5 * (b - a) * t;
                rule.push((c, 0.5 * (b - a) * wt * p.weight_c(c)));
            }
        }
    }
    rule
}

/// `sup |mu dh/dx + h - int rho(mu') q(mu, mu') h(x, mu') dmu'|` over
/// [`mu_test_grid`] with [`TEST_GRID_POINTS`] points.
///
/// The integral is evaluated through the three kernel projections of `h`,
/// each by a composite rule in `C` independent of the moment machinery.
pub fn residual_2_4(scheme: &QuadratureScheme, h: &dyn Profile, x: f64, exec: Execution) -> Result<f64> {
    let p = scheme.params();
    let beta = p.beta();
    let rule = residual_rule(scheme, &h.breakpoints());
    let values = exec.try_map(&rule, |&(c, _)| h.value(x, p.mu_of(c)))?;
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (&(c, w), &v) in rule.iter().zip(&values) {
        m0 += w * v;
        m1 += w * c * v;
        m2 += w * (c * c - beta) * v;
    }
    let grid = mu_test_grid(p, TEST_GRID_POINTS);
    let residuals = exec.try_map(&grid, |&mu| {
        let c = p.c_of(mu)?;
        let integral = p.r0() * m0 + p.r1() * c * m1 + p.r2() * (c * c - beta) * m2;
        Ok::<f64, Error>(mu * h.dx(x, mu)? + h.value(x, mu)? - integral)
    })?;
    let mut worst: f64 = 0.0;
    for r in residuals {
        if !r.is_finite() {
            return Err(Error::NonFinite("transport residual"));
        }
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Continuum eigenfunction data at one `eta` of the cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenData {
    pub eta: f64,
    /// Scale `g(eta)`; also the coefficient of the delta term.
    pub g: f64,
    pub cut: CutPoint,
}

impl EigenData {
    pub fn new(scheme: &QuadratureScheme, eta: f64, g: f64) -> Result<Self> {
        Ok(EigenData {
            eta,
            g,
            cut: CutPoint::new(scheme, eta)?,
        })
    }

    /// `g eta rho(eta) Q~(eta, mu) / (lambda(eta) (eta - mu))`, `mu != eta`.
    pub fn regular(&self, params: &GasParams, mu: f64) -> Result<f64> {
        if mu == self.eta {
            return Err(Error::Pole(mu));
        }
        let q = self.cut.q_tilde(params, mu)?;
        Ok(self.g * self.eta * self.cut.rho * q / (self.cut.lambda_pv * (self.eta - mu)))
    }

    pub fn delta_coefficient(&self) -> f64 {
        self.g
    }
}

/// Regular part of the continuum eigenfunction with `g = 1`.
pub fn eigenfunction_regular(scheme: &QuadratureScheme, eta: f64, mu: f64) -> Result<f64> {
    EigenData::new(scheme, eta, 1.0)?.regular(scheme.params(), mu)
}

/// Natural cubic spline through `(x_i, y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(Error::Interpolation(format!(
                "need at least 3 knots with matching values, got {} and {}",
                n,
                y.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Interpolation("knots must be finite and strictly increasing".into()));
        }
        // Tridiagonal system for the interior second derivatives.
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            let a = h0;
            let b = 2.0 * (h0 + h1);
            let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            let denom = b - a * c[i - 1];
            c[i] = h1 / denom;
            d[i] = (rhs - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Ok(CubicSpline { x, y, m })
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo() && t <= self.hi()
    }

    /// Value at `t`; `t` is clamped to the knot hull.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(self.lo(), self.hi());
        let i = match self.x.partition_point(|&k| k <= t) {
            0 => 0,
            k if k >= self.x.len() => self.x.len() - 2,
            k => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Continuum amplitude `A(eta)` sampled on a grid and interpolated by a
/// natural cubic spline.
#[derive(Debug, Clone, PartialEq)]
pub struct Continuum {
    spline: CubicSpline,
}

impl Continuum {
    /// The grid must lie strictly inside the cut on one side of `0`.
    pub fn new(params: &GasParams, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.iter().any(|&e| !params.in_cut(e)) {
            return Err(Error::Domain("continuum grid must lie strictly inside the cut".into()));
        }
        if grid.first().zip(grid.last()).is_some_and(|(&lo, &hi)| lo <= 0.0 && hi >= 0.0) {
            return Err(Error::Domain("continuum grid must not contain eta = 0".into()));
        }
        Ok(Continuum {
            spline: CubicSpline::new(grid, values)?,
        })
    }

    /// `amplitude exp(1 - 1/(1 - t^2))`, `t` mapping `[lo, hi]` onto `[-1, 1]`,
    /// sampled on `points` uniform points.
    pub fn bump(params: &GasParams, lo: f64, hi: f64, amplitude: f64, points: usize) -> Result<Self> {
        if !(lo < hi) || points < 3 {
            return Err(Error::Domain(format!("bad bump support [{lo}, {hi}] or point count {points}")));
        }
        let grid: Vec<f64> = (0..points)
            .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
            .collect();
        let values = grid.iter().map(|&e| amplitude * bump_profile(lo, hi, e)).collect();
        Self::new(params, grid, values)
    }

    pub fn hull(&self) -> (f64, f64) {
        (self.spline.lo(), self.spline.hi())
    }

    fn compact(&self) -> bool {
        self.spline.y[0] == 0.0 && self.spline.y[self.spline.y.len() - 1] == 0.0
    }

    /// `A(eta)`; zero outside the hull when both end values are zero.
    pub fn value(&self, eta: f64) -> Result<f64> {
        if self.spline.contains(eta) {
            Ok(self.spline.eval(eta))
        } else if self.compact() {
            Ok(0.0)
        } else {
            Err(Error::Interpolation(format!(
                "eta = {eta} outside the continuum grid [{}, {}]",
                self.spline.lo(),
                self.spline.hi()
            )))
        }
    }

    pub fn grid(&self) -> &[f64] {
        &self.spline.x
    }

    pub fn values(&self) -> &[f64] {
        &self.spline.y
    }
}

/// `exp(1 - 1/(1 - t^2))` on `(lo, hi)`, zero elsewhere; peak value 1.
pub fn bump_profile(lo: f64, hi: f64, eta: f64) -> f64 {
    let t = (2.0 * eta - lo - hi) / (hi - lo);
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Coefficients of the general solution: `A_0 .. A_3` for the discrete
/// solutions and an optional continuum amplitude `A(eta)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralExpansion {
    pub discrete: [f64; 4],
    pub continuum: Option<Continuum>,
}

/// A [`SpectralExpansion`] bound to a quadrature scheme with the continuum
/// factors `eta rho(eta) A(eta) c_j(eta) / lambda(eta)` tabulated on the
/// continuum grid, where `Q~(eta, mu) = sum_j c_j(eta) b_j(mu)` with
/// `b = (1, C(mu), C(mu)^2 - beta)`.
pub struct PreparedExpansion<'a> {
    scheme: &'a QuadratureScheme,
    expansion: SpectralExpansion,
    parts: Option<[CubicSpline; 3]>,
}

impl<'a> PreparedExpansion<'a> {
    pub fn new(scheme: &'a QuadratureScheme, expansion: SpectralExpansion, exec: Execution) -> Result<Self> {
        let parts = match &expansion.continuum {
            None => None,
            Some(cont) => Some(tabulate(scheme, cont, exec)?),
        };
        Ok(PreparedExpansion {
            scheme,
            expansion,
            parts,
        })
    }

    pub fn expansion(&self) -> &SpectralExpansion {
        &self.expansion
    }

    /// Continuum contribution or its x-derivative.
    fn continuum(&self, x: f64, mu: f64, derivative: bool) -> Result<f64> {
        let (Some(parts), Some(cont)) = (&self.parts, &self.expansion.continuum) else {
            return Ok(0.0);
        };
        let p = self.scheme.params();
        let c = p.c_of(mu)?;
        let b = [1.0, c, c * c - p.beta()];
        let (lo, hi) = cont.hull();
        let integrand = |eta: f64| {
            let decay = (-x / eta).exp();
            let s: f64 = parts.iter().zip(&b).map(|(sp, bj)| bj * sp.eval(eta)).sum();
            let f = decay * s;
            if derivative { -f / eta } else { f }
        };
        let regular = self.scheme.pv_integral(integrand, lo, hi, mu, &[])?;
        let a_mu = cont.value(mu)?;
        let delta = if a_mu == 0.0 {
            0.0
        } else {
            let e = (-x / mu).exp() * a_mu;
            if derivative { -e / mu } else { e }
        };
        Ok(regular + delta)
    }
}

fn tabulate(scheme: &QuadratureScheme, cont: &Continuum, exec: Execution) -> Result<[CubicSpline; 3]> {
    let p = scheme.params();
    let beta = p.beta();
    let rows = exec.try_map(cont.grid(), |&eta| {
        let a = cont.value(eta)?;
        if a == 0.0 {
            return Ok::<[f64; 3], Error>([0.0; 3]);
        }
        let cut = CutPoint::new(scheme, eta)?;
        if cut.lambda_pv.abs() < 1e-10 {
            return Err(Error::Domain(format!(
                "continuum amplitude is nonzero at eta = {eta}, a zero of the principal-value symbol"
            )));
        }
        let [l0, l1, l2] = cut.cofactors;
        let k = eta * cut.rho * a / cut.lambda_pv;
        Ok([k * p.r0() * l0, k * p.r1() * l1, k * p.r2() * (l2 - beta * l0)])
    })?;
    let grid = cont.grid().to_vec();
    let col = |j: usize| CubicSpline::new(grid.clone(), rows.iter().map(|r| r[j]).collect());
    Ok([col(0)?, col(1)?, col(2)?])
}

impl Profile for PreparedExpansion<'_> {
    fn value(&self, x: f64, mu: f64) -> Result<f64> {
        let p = self.scheme.params();
        let mut v = self.continuum(x, mu, false)?;
        for (k, &ak) in self.expansion.discrete.iter().enumerate() {
            if ak != 0.0 {
                v += ak * discrete_solution(p, k, x, mu)?;
            }
        }
        Ok(v)
    }

    fn dx(&self, x: f64, mu: f64) -> Result<f64> {
        let p = self.scheme.params();
        let mut v = self.continuum(x, mu, true)?;
        for (k, &ak) in self.expansion.discrete.iter().enumerate() {
            if ak != 0.0 {
                v += ak * discrete_solution_dx(p, k, x, mu)?;
            }
        }
        Ok(v)
    }

    fn breakpoints(&self) -> Vec<f64> {
        match &self.expansion.continuum {
            Some(c) => {
                let (lo, hi) = c.hull();
                vec![lo, hi]
            }
            None => Vec::new(),
        }
    }
}

/// `h(x, mu)` of the general solution. Tabulates the continuum on every
/// call; use [`PreparedExpansion`] for repeated evaluation.
pub fn apply_expansion(scheme: &QuadratureScheme, expansion: &SpectralExpansion, x: f64, mu: f64) -> Result<f64> {
    PreparedExpansion::new(scheme, expansion.clone(), Execution::default())?.value(x, mu)
}

/// Moments `n_alpha(eta) = int Phi(eta, mu) C(mu)^alpha rho(mu) dmu` by
/// direct principal-value quadrature, against `rho(eta) Lambda_alpha / lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationCheck {
    pub eta: f64,
    pub direct: [f64; 3],
    pub predicted: [f64; 3],
}

impl NormalizationCheck {
    pub fn deviations(&self) -> [f64; 3] {
        std::array::from_fn(|k| (self.direct[k] - self.predicted[k]).abs())
    }

    pub fn max_deviation(&self) -> f64 {
        self.deviations().into_iter().fold(0.0, f64::max)
    }
}

/// Compares the moments of the continuum eigenfunction (`g = 1`) with the
/// values predicted by the cofactors.
///
/// The integral is taken in `C`, where `1/(eta - mu(C))` has a simple pole
/// at `C(eta)` with residue factor `-(1 + a|C|)/(1 - a|eta|)`.
pub fn normalization_check(scheme: &QuadratureScheme, eta: f64) -> Result<NormalizationCheck> {
    let p = *scheme.params();
    let data = EigenData::new(scheme, eta, 1.0)?;
    let cut = data.cut;
    let ce = p.c_of(eta)?;
    let a = p.a();
    let l = scheme.cutoff();
    let scale = eta * cut.rho / cut.lambda_pv;
    // (C - C(eta)) / (eta - mu(C)), smooth on each half line.
    let factor = |c: f64| {
        if c * eta >= 0.0 {
            -(1.0 + a * c.abs()) / (1.0 - a * eta.abs())
        } else {
            let s = 1.0 + a * c.abs();
            (c - ce) * s / (eta * s - c)
        }
    };
    let mut direct = [0.0; 3];
    let mut predicted = [0.0; 3];
    for (k, slot) in direct.iter_mut().enumerate() {
        let g = |c: f64| p.weight_c(c) * c.powi(k as i32) * scale * cut.q_tilde_c(&p, c) * factor(c);
        let pv = if eta == 0.0 {
            0.0
        } else {
            scheme.pv_integral(g, -l, l, ce, &[0.0])?
        };
        *slot = pv + data.delta_coefficient() * cut.rho * ce.powi(k as i32);
        predicted[k] = cut.rho * cut.cofactors[k] / cut.lambda_pv;
    }
    Ok(NormalizationCheck {
        eta,
        direct,
        predicted,
    })
}

/// `count` points of `(0, top)`, `top = mu(3.6)`, spread evenly
/// and kept at least `0.05 top` away from the zeros of the principal-value
/// symbol, where the `g = 1` eigenfunction is singular.
pub fn normalization_points(scheme: &QuadratureScheme, count: usize, exec: Execution) -> Result<Vec<f64>> {
    let top = scheme.params().mu_of(3.6);
    let zeros = crate::dispersion::pv_zeros(scheme, 400, exec)?;
    let candidates: Vec<f64> = (1..8 * count)
        .map(|k| top * k as f64 / (8 * count) as f64)
        .filter(|e| zeros.iter().all(|z| (e - z).abs() >= 0.05 * top))
        .collect();
    if candidates.len() < count {
        return Err(Error::Domain(format!("only {} admissible normalization points", candidates.len())));
    }
    let stride = candidates.len() as f64 / count as f64;
    Ok((0..count).map(|k| candidates[(k as f64 * stride) as usize]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::lambda_pv;
    use crate::limits::lambda_a0;
    use crate::params::SQRT_PI;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn scheme(a: f64) -> QuadratureScheme {
        QuadratureScheme::with_default_nodes(GasParams::new(a).unwrap())
    }

    #[test]
    fn discrete_solution_examples() {
        let p = GasParams::new(1.0).unwrap();
        for (x, mu) in [(0.0, 0.0), (1.5, -0.3), (-2.0, 0.6)] {
            assert_eq!(discrete_solution(&p, 0, x, mu).unwrap(), 1.0);
            assert_eq!(discrete_solution(&p, 3, mu, mu).unwrap(), 0.0);
        }
        assert!(discrete_solution(&p, 4, 0.0, 0.0).is_err());
        assert!(discrete_solution(&p, 1, 0.0, 1.0).is_err());
    }

    #[test]
    fn discrete_solutions_have_small_residual() {
        for a in [0.0, 0.5, 1.0, 2.0] {
            let s = scheme(a);
            for k in 0..4 {
                let h = DiscreteSolution::new(*s.params(), k).unwrap();
                for x in [0.0, 0.7, 2.0] {
                    let r = residual_2_4(&s, &h, x, Execution::Sequential).unwrap();
                    assert!(r < 1e-10, "a = {a}, k = {k}, x = {x}: {r}");
                }
            }
        }
    }

    #[test]
    fn non_solution_has_large_residual() {
        let s = scheme(1.0);
        let h = FnProfile(|x: f64, mu: f64| (-x / 0.4).exp() * (mu * mu + 0.3));
        assert!(residual_2_4(&s, &h, 0.5, Execution::Sequential).unwrap() > 1e-2);
    }

    #[test]
    fn finite_difference_derivative_is_accurate() {
        let s = scheme(0.5);
        let p = *s.params();
        let h = FnProfile(move |x: f64, mu: f64| discrete_solution(&p, 3, x, mu).unwrap());
        let r = residual_2_4(&s, &h, 0.7, Execution::Sequential).unwrap();
        assert!(r < 1e-8);
    }

    #[test]
    fn residual_is_subadditive() {
        let s = scheme(1.0);
        let p = *s.params();
        let f = |x: f64, mu: f64| (-x).exp() * mu;
        let g = move |x: f64, mu: f64| x * p.c_of(mu).unwrap();
        let rf = residual_2_4(&s, &FnProfile(f), 0.4, Execution::Sequential).unwrap();
        let rg = residual_2_4(&s, &FnProfile(g), 0.4, Execution::Sequential).unwrap();
        let rs = residual_2_4(&s, &FnProfile(move |x, mu| f(x, mu) + g(x, mu)), 0.4, Execution::Sequential)
            .unwrap();
        assert!(rs <= rf + rg + 1e-9);
    }

    #[test]
    fn eigenfunction_pole_structure_and_scaling() {
        let s = scheme(1.0);
        let p = *s.params();
        let eta = 0.2;
        let e1 = EigenData::new(&s, eta, 1.0).unwrap();
        assert!(matches!(e1.regular(&p, eta), Err(Error::Pole(_))));
        let (up, down) = (e1.regular(&p, eta + 1e-7).unwrap(), e1.regular(&p, eta - 1e-7).unwrap());
        assert!(up.signum() != down.signum());
        assert!((up + down).abs() < 1e-4 * up.abs());
        let e2 = EigenData { g: 2.0, ..e1 };
        for mu in [-0.5, 0.1, 0.7] {
            assert_eq!(e2.regular(&p, mu).unwrap(), 2.0 * e1.regular(&p, mu).unwrap());
        }
        assert_eq!(e2.delta_coefficient(), 2.0);
    }

    #[test]
    fn constant_frequency_eigenfunction() {
        // exp(eta^2) lambda(eta) times the regular part is eta (3/2 - mu^2) / (sqrt(pi)(eta - mu)).
        let s = scheme(0.0);
        for eta in [0.35, 1.2, -2.1] {
            let lam = lambda_pv(&s, eta).unwrap();
            let closed = lambda_a0(Complex64::new(eta, 0.0)).re;
            assert!((lam - closed).abs() < 1e-10);
            for mu in [0.0, 0.8, -1.4] {
                let v = eigenfunction_regular(&s, eta, mu).unwrap() * (eta * eta).exp() * lam;
                let expected = eta * (1.5 - mu * mu) / (SQRT_PI * (eta - mu));
                assert!((v - expected).abs() < 1e-10 * expected.abs().max(1.0));
            }
        }
    }

    #[test]
    fn spline_reproduces_cubics_and_interpolates() {
        let x: Vec<f64> = (0..41).map(|k| k as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|t| t.sin()).collect();
        let sp = CubicSpline::new(x, y).unwrap();
        for t in [0.013, 0.5, 1.234, 1.5] {
            assert!((sp.eval(t) - t.sin()).abs() < 1e-5);
        }
        let lin = CubicSpline::new(vec![0.0, 1.0, 3.0], vec![1.0, 3.0, 7.0]).unwrap();
        assert!((lin.eval(2.0) - 5.0).abs() < 1e-14);
        assert!(CubicSpline::new(vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn expansion_without_continuum_is_discrete_sum() {
        let s = scheme(1.0);
        let p = *s.params();
        let one = SpectralExpansion {
            discrete: [1.0, 0.0, 0.0, 0.0],
            continuum: None,
        };
        assert_eq!(apply_expansion(&s, &one, 0.3, 0.2).unwrap(), 1.0);
        let coeffs = [0.4, -1.1, 0.7, 2.0];
        let e = SpectralExpansion {
            discrete: coeffs,
            continuum: None,
        };
        for (x, mu) in [(0.0, 0.1), (1.0, -0.6)] {
            let direct: f64 = (0..4).map(|k| coeffs[k] * discrete_solution(&p, k, x, mu).unwrap()).sum();
            assert!((apply_expansion(&s, &e, x, mu).unwrap() - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn continuum_validation() {
        let p = GasParams::new(1.0).unwrap();
        assert!(Continuum::new(&p, vec![0.5, 0.9, 1.1], vec![0.0; 3]).is_err());
        assert!(Continuum::new(&p, vec![-0.1, 0.0, 0.1], vec![0.0; 3]).is_err());
        let open = Continuum::new(&p, vec![0.1, 0.2, 0.3], vec![1.0, 2.0, 1.0]).unwrap();
        assert!(matches!(open.value(0.5), Err(Error::Interpolation(_))));
        let bump = Continuum::bump(&p, 0.1, 0.3, 1.0, 101).unwrap();
        assert_eq!(bump.value(0.5).unwrap(), 0.0);
        assert!((bump.value(0.2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn continuum_bump_solves_the_equation() {
        let s = scheme(1.0);
        let cont = Continuum::bump(s.params(), 0.05, 0.3, 1.0, 801).unwrap();
        let e = SpectralExpansion {
            discrete: [0.0; 4],
            continuum: Some(cont),
        };
        let prepared = PreparedExpansion::new(&s, e, Execution::default()).unwrap();
        for x in [0.5, 1.0] {
            let r = residual_2_4(&s, &prepared, x, Execution::default()).unwrap();
            assert!(r < 1e-5, "x = {x}: {r}");
        }
    }

    #[test]
    fn normalization_matches_cofactors() {
        let s = scheme(1.0);
        let chk = normalization_check(&s, 0.3).unwrap();
        assert!(chk.max_deviation() < 1e-6, "{chk:?}");
        let zero = normalization_check(&s, 0.0).unwrap();
        assert_eq!(zero.direct, [1.0, 0.0, 0.0]);
        assert_eq!(zero.predicted, [1.0, 0.0, 0.0]);
        let m = normalization_check(&s, -0.3).unwrap();
        assert!((m.direct[0] - chk.direct[0]).abs() < 1e-9);
        assert!((m.direct[1] + chk.direct[1]).abs() < 1e-9);
        assert!((m.direct[2] - chk.direct[2]).abs() < 1e-9);
    }

    #[test]
    fn normalization_holds_across_the_cut() {
        for a in [0.5, 1.0] {
            let s = scheme(a);
            let pts = normalization_points(&s, 10, Execution::default()).unwrap();
            assert_eq!(pts.len(), 10);
            for eta in pts {
                let chk = normalization_check(&s, eta).unwrap();
                assert!(chk.max_deviation() < 1e-6, "a={a} eta={eta}: {chk:?}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn discrete_combinations_solve(
            a in 0.0f64..3.0,
            c0 in -2.0f64..2.0, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, c3 in -2.0f64..2.0,
            x in 0.0f64..2.0,
        ) {
            let s = scheme(a);
            let prepared = PreparedExpansion::new(
                &s,
                SpectralExpansion { discrete: [c0, c1, c2, c3], continuum: None },
                Execution::Sequential,
            ).unwrap();
            prop_assert!(residual_2_4(&s, &prepared, x, Execution::Sequential).unwrap() < 1e-9);
        }
    }
}
