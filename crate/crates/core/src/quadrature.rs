//! Weighted quadrature over the velocity line and principal-value integrals.
//!
//! The scheme is a symmetric rule for `int exp(-C^2)(1 + a|C|) f(C) dC`:
//! Gauss-Legendre nodes on `[0, L]` mirrored onto `[-L, 0]`, each half
//! carrying the weight in closed form. Splitting at `C = 0` keeps the kink of
//! `|C|` on a panel boundary. `L` is large enough that the Gaussian tail is
//! below double precision for every moment used here.
//!
//! Principal values use singularity subtraction: the pole is bracketed by a
//! symmetric core `[p - d, p + d]` where the integrand is folded into the
//! regular form `(g(p + s) - g(p - s)) / s`, and the remainder is integrated
//! on panels graded geometrically toward the pole.

use crate::error::{Error, Result};
use crate::params::GasParams;
use num_complex::Complex64;

/// Truncation of the velocity line; `exp(-L^2)` is far below `f64::EPSILON`.
pub const VELOCITY_CUTOFF: f64 = 10.0;

/// Default node count per half line.
pub const DEFAULT_NODES: usize = 200;

const PANEL_NODES: usize = 24;
const CORE_NODES: usize = 32;
const MAX_PANEL: f64 = 1.0;

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `int_lo^hi f(x) dx`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(mid + half * t))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Symmetric weighted rule bound to one set of model constants.
#[derive(Debug, Clone)]
pub struct QuadratureScheme {
    params: GasParams,
    cutoff: f64,
    /// Nodes in `(0, L)` and their plain Gauss-Legendre weights.
    half_nodes: Vec<f64>,
    half_weights: Vec<f64>,
    /// `exp(-c^2) (1 + a c)^2` at each half-line node, shared by both halves.
    node_base: Vec<f64>,
    /// Exact weighted moments `m_0 .. m_8`.
    exact_moments: [f64; 9],
    panel: GaussLegendre,
    core: GaussLegendre,
}

impl QuadratureScheme {
    /// Builds the rule with `nodes` points per half line.
    pub fn new(params: GasParams, nodes: usize) -> Result<Self> {
        if nodes < 8 {
            return Err(Error::Domain(format!(
                "node count must be at least 8, got {nodes}"
            )));
        }
        let gl = GaussLegendre::new(nodes);
        let cutoff = VELOCITY_CUTOFF;
        let half_nodes: Vec<f64> = gl.nodes().iter().map(|t| 0.5 * cutoff * (t + 1.0)).collect();
        let half_weights = gl.weights().iter().map(|w| 0.5 * cutoff * w).collect();
        let a = params.a();
        let node_base = half_nodes
            .iter()
            .map(|&c: &f64| (-c * c).exp() * (1.0 + a * c) * (1.0 + a * c))
            .collect();
        let exact_moments = std::array::from_fn(|n| params.exact_moment(n as u32));
        Ok(QuadratureScheme {
            params,
            cutoff,
            half_nodes,
            half_weights,
            node_base,
            exact_moments,
            panel: GaussLegendre::new(PANEL_NODES),
            core: GaussLegendre::new(CORE_NODES),
        })
    }

    pub fn with_default_nodes(params: GasParams) -> Self {
        Self::new(params, DEFAULT_NODES).expect("default node count is valid")
    }

    pub fn params(&self) -> &GasParams {
        &self.params
    }

    /// Nodes per half line.
    pub fn node_count(&self) -> usize {
        self.half_nodes.len()
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub(crate) fn half_nodes(&self) -> &[f64] {
        &self.half_nodes
    }

    pub(crate) fn half_weights(&self) -> &[f64] {
        &self.half_weights
    }

    pub(crate) fn node_base(&self) -> &[f64] {
        &self.node_base
    }

    /// Cached exact moments `int exp(-C^2)(1 + a|C|) C^n dC`, `n <= 8`.
    pub fn exact_moments(&self) -> &[f64; 9] {
        &self.exact_moments
    }

    /// Full symmetric rule as `(C, weight)` pairs, the weight function included.
    pub fn weighted_rule(&self) -> Vec<(f64, f64)> {
        let mut rule = Vec::with_capacity(2 * self.half_nodes.len());
        for (&c, &w) in self.half_nodes.iter().zip(&self.half_weights).rev() {
            rule.push((-c, w * self.params.weight_c(c)));
        }
        for (&c, &w) in self.half_nodes.iter().zip(&self.half_weights) {
            rule.push((c, w * self.params.weight_c(c)));
        }
        rule
    }

    /// `int exp(-C^2)(1 + a|C|) f(C) dC`.
    pub fn integrate_weighted<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let mut sum = 0.0;
        for (&c, &w) in self.half_nodes.iter().zip(&self.half_weights) {
            let wc = w * self.params.weight_c(c);
            let (fp, fm) = (f(c), f(-c));
            if !fp.is_finite() || !fm.is_finite() {
                return Err(Error::NonFinite("weighted integrand"));
            }
            sum += wc * (fp + fm);
        }
        Ok(sum)
    }

    /// Complex-valued variant of [`integrate_weighted`](Self::integrate_weighted).
    pub fn integrate_weighted_complex<F: Fn(f64) -> Complex64>(&self, f: F) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for (&c, &w) in self.half_nodes.iter().zip(&self.half_weights) {
            let wc = w * self.params.weight_c(c);
            let (fp, fm) = (f(c), f(-c));
            if !(fp.re.is_finite() && fp.im.is_finite() && fm.re.is_finite() && fm.im.is_finite())
            {
                return Err(Error::NonFinite("weighted integrand"));
            }
            sum += (fp + fm) * wc;
        }
        Ok(sum)
    }

    /// `PV int exp(-C^2)(1 + a|C|) f(C) / (C - pole) dC`.
    ///
    /// `f` must be smooth near the pole; a kink at `C = 0` is allowed.
    pub fn integrate_pv<F: Fn(f64) -> f64>(&self, f: F, pole: f64) -> Result<f64> {
        if !pole.is_finite() {
            return Err(Error::Domain(format!("pole must be finite, got {pole}")));
        }
        let l = self.cutoff;
        let g = |c: f64| self.params.weight_c(c) * f(c);
        self.pv_integral(g, -l, l, pole, &[0.0])
    }

    /// `PV int_lo^hi g(x) / (x - pole) dx` for a `g` that is smooth between
    /// consecutive `breakpoints`.
    ///
    /// A pole outside `(lo, hi)` gives an ordinary integral, still graded
    /// toward the pole when it sits close to the interval.
    pub fn pv_integral<F: Fn(f64) -> f64>(
        &self,
        g: F,
        lo: f64,
        hi: f64,
        pole: f64,
        breakpoints: &[f64],
    ) -> Result<f64> {
        if !(lo < hi) {
            return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
        }
        let mut breaks: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&b| b > lo && b < hi)
            .collect();
        breaks.push(lo);
        breaks.push(hi);
        breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
        breaks.dedup();

        let kernel = |x: f64| g(x) / (x - pole);
        let mut total = 0.0;

        if pole > lo && pole < hi {
            // Nearest breakpoints strictly on each side of the pole.
            let left = breaks.iter().copied().filter(|&b| b < pole).fold(lo, f64::max);
            let right = breaks.iter().copied().filter(|&b| b > pole).fold(hi, f64::min);
            let d = 0.5 * (pole - left).min(right - pole);
            total += self.core.integrate(0.0, d, |s| (g(pole + s) - g(pole - s)) / s);
            let mut pieces = breaks.clone();
            pieces.retain(|&b| b <= pole - d || b >= pole + d);
            pieces.push(pole - d);
            pieces.push(pole + d);
            pieces.sort_by(|x, y| x.partial_cmp(y).unwrap());
            pieces.dedup();
            for w in pieces.windows(2) {
                let (a, b) = (w[0], w[1]);
                if a >= pole - d && b <= pole + d {
                    continue;
                }
                total += self.graded(&kernel, a, b, pole);
            }
        } else {
            for w in breaks.windows(2) {
                total += self.graded(&kernel, w[0], w[1], pole);
            }
        }
        if !total.is_finite() {
            return Err(Error::NonFinite("principal-value integrand"));
        }
        Ok(total)
    }

    /// Integral over `[a, b]` on panels whose length grows geometrically with
    /// distance from `pole`, capped at `MAX_PANEL`.
    fn graded<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, pole: f64) -> f64 {
        let mut sum = 0.0;
        if pole <= a || pole >= b {
            let near_left = (pole - a).abs() <= (pole - b).abs();
            let dist = if near_left { (a - pole).abs() } else { (b - pole).abs() };
            let mut step = dist.clamp(1e-300, MAX_PANEL);
            let mut done = 0.0;
            let len = b - a;
            while done < len {
                let h = step.min(len - done);
                let (p, q) = if near_left {
                    (a + done, a + done + h)
                } else {
                    (b - done - h, b - done)
                };
                sum += self.panel.integrate(p, q, f);
                done += h;
                step = (step * 2.0).min(MAX_PANEL).max(h);
            }
        } else {
            sum += self.graded(f, a, pole, pole) + self.graded(f, pole, b, pole);
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SQRT_PI;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scheme(a: f64) -> QuadratureScheme {
        QuadratureScheme::with_default_nodes(GasParams::new(a).unwrap())
    }

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(7);
        for k in 0..14 {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            let v = gl.integrate(-1.0, 1.0, |x| x.powi(k));
            assert!((v - exact).abs() < 1e-14, "degree {k}: {v} vs {exact}");
        }
        let big = GaussLegendre::new(200);
        assert!((big.weights().iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn weighted_examples() {
        assert_relative_eq!(scheme(0.0).integrate_weighted(|_| 1.0).unwrap(), SQRT_PI, epsilon = 1e-14);
        assert_relative_eq!(
            scheme(1.0).integrate_weighted(|_| 1.0).unwrap(),
            SQRT_PI + 1.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            scheme(0.0).integrate_weighted(|c| c.powi(4)).unwrap(),
            0.75 * SQRT_PI,
            epsilon = 1e-14
        );
    }

    #[test]
    fn polynomial_moments_match_exact_values() {
        for a in [0.0, 0.5, 3.0] {
            let s = scheme(a);
            for n in 0..=12u32 {
                let v = s.integrate_weighted(|c| c.powi(n as i32)).unwrap();
                let exact = s.params().exact_moment(n);
                assert!((v - exact).abs() <= 1e-12 * exact.abs().max(1.0), "a={a} n={n}");
            }
        }
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let r = scheme(0.0).integrate_weighted(|c| if c > 5.0 { f64::NAN } else { 1.0 });
        assert_eq!(r, Err(Error::NonFinite("weighted integrand")));
    }

    /// `PV int f(t)/(t - x) dt = int_0^inf (f(x+s) - f(x-s))/s ds`, by a
    /// fine composite Simpson rule.
    fn folded_oracle(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let n = 200_000;
        let h = 12.0 / n as f64;
        let g = |s: f64| {
            if s == 0.0 {
                let e = 1e-6;
                (f(x + e) - f(x - e)) / e
            } else {
                (f(x + s) - f(x - s)) / s
            }
        };
        let mut sum = g(0.0) + g(12.0);
        for i in 1..n {
            let s = i as f64 * h;
            sum += g(s) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        sum * h / 3.0
    }

    #[test]
    fn pv_examples() {
        let s = scheme(0.0);
        assert!(s.integrate_pv(|_| 1.0, 0.0).unwrap().abs() < 1e-14);
        let v = s.integrate_pv(|_| 1.0, 1.0).unwrap();
        let oracle = folded_oracle(|t| (-t * t).exp(), 1.0);
        assert!((v - oracle).abs() < 1e-10, "{v} vs {oracle}");
        // -2 sqrt(pi) D(1), Dawson integral D(1) = 0.538079506912768.
        assert!((v + 2.0 * SQRT_PI * 0.538_079_506_912_768_4).abs() < 1e-12);
    }

    #[test]
    fn pv_with_kinked_weight_matches_folded_oracle() {
        let s = scheme(1.5);
        for pole in [-2.3, -0.01, 0.0, 0.4, 3.1] {
            let v = s.integrate_pv(|c| c * c - 0.3, pole).unwrap();
            let oracle = folded_oracle(|t| (-t * t).exp() * (1.0 + 1.5 * t.abs()) * (t * t - 0.3), pole);
            assert!((v - oracle).abs() < 1e-9, "pole {pole}: {v} vs {oracle}");
        }
    }

    #[test]
    fn pv_of_removable_pole_is_ordinary_integral() {
        let s = scheme(0.7);
        let p = 0.9;
        let pv = s.integrate_pv(|c| (c - p) * c * c, p).unwrap();
        let reg = s.integrate_weighted(|c| c * c).unwrap();
        assert_relative_eq!(pv, reg, max_relative = 1e-12);
    }

    #[test]
    fn pole_outside_interval_is_regular() {
        let s = scheme(0.0);
        let v = s.pv_integral(|x| x.exp(), 0.0, 1.0, 1.0 + 1e-9, &[]).unwrap();
        // int_0^1 e^x/(x - 1 - eps) has a log blow-up; compare with its expansion.
        let oracle = s.pv_integral(|x| x.exp(), 0.0, 1.0, 1.0 + 1e-9, &[0.5]).unwrap();
        assert_relative_eq!(v, oracle, max_relative = 1e-12);
        assert!(v < -20.0);
    }

    proptest! {
        #[test]
        fn pv_is_linear(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, pole in -3.0f64..3.0) {
            let s = scheme(0.5);
            let f = |c: f64| (c1 * c).sin();
            let g = |c: f64| c2 * c * c + 1.0;
            let lhs = s.integrate_pv(|c| f(c) + g(c), pole).unwrap();
            let rhs = s.integrate_pv(f, pole).unwrap() + s.integrate_pv(g, pole).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + lhs.abs()));
        }
    }
}
