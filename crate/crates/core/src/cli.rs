//! Command-line front end: argument parsing, validation and CSV/JSON output.
//!
//! Every command produces either a table or a list of checks. Tables are
//! written as CSV (header row, LF line ends, 12 significant digits) or as a
//! JSON object with a `header`, `columns` and `rows`; checks as CSV rows or
//! JSON entries `{check, status, value, tolerance}`.
//!
//! Exit codes: 0 success, 1 numerical failure (including failed checks),
//! 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::dispersion::{
    count_zeros, dispersion_curve, dispersion_eval, lambda_fn, laurent_order_at_infinity, sokhotsky_jump, Contour,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::limits::{
    fm_general_solution, fm_project_system, fm_project_system_quadrature, fm_residual, fm_test_grid,
    kernel_limit_deviation, lambda_a0, FmCoefficients, FreeMolecularSolution, REFERENCE_DECAY_RATE,
};
use crate::moments::{moments_limit, Region, Side};
use crate::params::GasParams;
use crate::quadrature::{QuadratureScheme, DEFAULT_NODES};
use crate::spectrum::{normalization_check, normalization_points, residual_2_4, DiscreteSolution};

/// Default number of x points for `dispersion-curve`.
pub const DEFAULT_POINTS: usize = 401;

/// Half-width of the default `dispersion-curve` range before intersecting
/// with the cut.
pub const DEFAULT_HALF_RANGE: f64 = 4.0;

/// Fraction of `alpha` used as the default range end when the cut is
/// narrower than [`DEFAULT_HALF_RANGE`].
pub const CUT_FRACTION: f64 = 0.999;

/// Default x range and point count for `fm-solve`.
pub const FM_DEFAULT_RANGE: (f64, f64) = (0.0, 2.0);
pub const FM_DEFAULT_POINTS: usize = 21;

/// Slopes tabulated by `limits-compare`.
pub const LIMIT_SLOPES: [f64; 3] = [0.0, 1e-6, 1e3];

const MAX_NODES: usize = 20_000;
const MAX_POINTS: usize = 1_000_000;

const DEFAULTS_HELP: &str = "\
Defaults:
  --a 1, --nodes 200 (per half line of the velocity rule).
  dispersion-curve: 401 points over [-4, 4] intersected with the cut; when
    the cut (-1/a, 1/a) is narrower the range is +-0.999/a.
  fm-solve: 21 points over [0, 2]; velocities are 64 midpoints of [-4, 4];
    all six constants 0.
  limits-compare: rows a = 0, 1e-6, 1e3, plus --a when it differs.
  Output format: json for spectrum-verify, csv otherwise.

Exit codes: 0 success, 1 numerical failure or failed check, 2 usage error.";

#[derive(Debug, Parser)]
#[command(
    name = "bgk-affine",
    version,
    about = "Spectral analysis of the 1D BGK equation with collision frequency 1 + a|C|",
    after_help = DEFAULTS_HELP,
    allow_negative_numbers = true
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Collision-frequency slope a >= 0
    #[arg(long, global = true, default_value_t = 1.0, allow_hyphen_values = true)]
    pub a: f64,
    /// Lower end of the x grid
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    /// Upper end of the x grid
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    /// Number of x grid points
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Quadrature nodes per half line
    #[arg(long, global = true, default_value_t = DEFAULT_NODES)]
    pub nodes: usize,
    /// Output format
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output to PATH instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Evaluate grids on one thread
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Boundary value lambda+(x) on a grid: x, re_lambda_plus, im_lambda_plus
    DispersionCurve,
    /// Run the invariant suite and report pass/fail per check
    SpectrumVerify,
    /// Distance of the general symbol from the a = 0 form, and of the
    /// kernel from its large-a limit
    LimitsCompare,
    /// Free-molecular solution h(x, C) for six constants
    FmSolve {
        /// A0,A1,A2,A3,At1,At3: decaying mode, invariants 1, C, C^2-1,
        /// linear mode, growing mode
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        coefficients: Vec<f64>,
    },
    /// Dispersion matrix determinant and cofactors at one point
    DispersionEval {
        /// Real part of z
        #[arg(long, allow_hyphen_values = true)]
        z_re: f64,
        /// Imaginary part of z
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        z_im: f64,
        /// Value taken for real z inside the cut
        #[arg(long, value_enum, default_value_t = CutSide::Pv)]
        side: CutSide,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CutSide {
    Pv,
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    DispersionCurve,
    SpectrumVerify,
    LimitsCompare,
    FmSolve,
    DispersionEval,
}

/// Uniform grid `lo, ..., hi` with `points` entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / n)
            .collect()
    }
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub params: GasParams,
    pub nodes: usize,
    pub grid: Option<Grid>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub exec: Execution,
    pub coefficients: FmCoefficients,
    pub z: Complex64,
    pub side: CutSide,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

impl RunConfig {
    /// Validates the parsed arguments; every failure is a usage error.
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let c = &cli.common;
        let params = GasParams::new(c.a).map_err(|e| usage(e.to_string()))?;
        if !(8..=MAX_NODES).contains(&c.nodes) {
            return Err(usage(format!("--nodes must be in 8..={MAX_NODES}, got {}", c.nodes)));
        }
        let command = match cli.command {
            Command::DispersionCurve => CommandKind::DispersionCurve,
            Command::SpectrumVerify => CommandKind::SpectrumVerify,
            Command::LimitsCompare => CommandKind::LimitsCompare,
            Command::FmSolve { .. } => CommandKind::FmSolve,
            Command::DispersionEval { .. } => CommandKind::DispersionEval,
        };
        let grid = match command {
            CommandKind::DispersionCurve => {
                let half = DEFAULT_HALF_RANGE.min(CUT_FRACTION * params.alpha());
                let g = grid_from(c, (-half, half), DEFAULT_POINTS)?;
                for end in [g.lo, g.hi] {
                    if !params.in_cut(end) {
                        return Err(usage(format!(
                            "x = {end} is outside the cut (-{0}, {0})",
                            params.alpha()
                        )));
                    }
                }
                Some(g)
            }
            CommandKind::FmSolve => Some(grid_from(c, FM_DEFAULT_RANGE, FM_DEFAULT_POINTS)?),
            _ => None,
        };
        let mut coefficients = FmCoefficients::default();
        let mut z = Complex64::new(0.0, 0.0);
        let mut side = CutSide::Pv;
        match &cli.command {
            Command::FmSolve { coefficients: v } => {
                if !v.is_empty() {
                    let arr: [f64; 6] = v.as_slice().try_into().map_err(|_| {
                        usage(format!("--coefficients takes six values, got {}", v.len()))
                    })?;
                    if arr.iter().any(|x| !x.is_finite()) {
                        return Err(usage("--coefficients must be finite"));
                    }
                    coefficients = FmCoefficients::from_array(arr);
                }
            }
            Command::DispersionEval { z_re, z_im, side: s } => {
                if !(z_re.is_finite() && z_im.is_finite()) {
                    return Err(usage("--z-re and --z-im must be finite"));
                }
                if *z_im == 0.0 && z_re.abs() == params.alpha() {
                    return Err(usage(format!("z = {z_re} is an endpoint of the cut")));
                }
                z = Complex64::new(*z_re, *z_im);
                side = *s;
            }
            _ => {}
        }
        let format = c.format.unwrap_or(match command {
            CommandKind::SpectrumVerify => Format::Json,
            _ => Format::Csv,
        });
        Ok(RunConfig {
            command,
            params,
            nodes: c.nodes,
            grid,
            format,
            out: c.out.clone(),
            exec: if c.sequential { Execution::Sequential } else { Execution::default() },
            coefficients,
            z,
            side,
        })
    }

    pub fn scheme(&self) -> Result<QuadratureScheme> {
        QuadratureScheme::new(self.params, self.nodes)
    }

    pub fn header(&self) -> Header {
        Header {
            program: "bgk-affine",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            a: self.params.a(),
            nodes: self.nodes,
            grid: self.grid,
            parallel: self.exec.is_parallel(),
            defaults: Defaults {
                nodes: DEFAULT_NODES,
                points: DEFAULT_POINTS,
                x_range: [-DEFAULT_HALF_RANGE, DEFAULT_HALF_RANGE],
                x_range_rule: "intersected with the cut; +-0.999/a when the cut is narrower",
                fm_points: FM_DEFAULT_POINTS,
                fm_x_range: [FM_DEFAULT_RANGE.0, FM_DEFAULT_RANGE.1],
            },
        }
    }
}

fn grid_from(c: &CommonArgs, (lo, hi): (f64, f64), points: usize) -> Result<Grid> {
    let g = Grid {
        lo: c.x_min.unwrap_or(lo),
        hi: c.x_max.unwrap_or(hi),
        points: c.points.unwrap_or(points),
    };
    if !(g.lo.is_finite() && g.hi.is_finite()) {
        return Err(usage("--x-min and --x-max must be finite"));
    }
    if g.points == 0 || g.points > MAX_POINTS {
        return Err(usage(format!("--points must be in 1..={MAX_POINTS}, got {}", g.points)));
    }
    if g.lo > g.hi || (g.points > 1 && g.lo == g.hi) {
        return Err(usage(format!("empty x range [{}, {}] for {} points", g.lo, g.hi, g.points)));
    }
    Ok(g)
}

/// Run metadata written at the top of every JSON document.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub program: &'static str,
    pub version: &'static str,
    pub command: CommandKind,
    pub a: f64,
    pub nodes: usize,
    pub grid: Option<Grid>,
    pub parallel: bool,
    pub defaults: Defaults,
}

#[derive(Debug, Clone, Serialize)]
pub struct Defaults {
    pub nodes: usize,
    pub points: usize,
    pub x_range: [f64; 2],
    pub x_range_rule: &'static str,
    pub fm_points: usize,
    pub fm_x_range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl Serialize for Cell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Num(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Text(t) => s.serialize_str(t),
            _ => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Reported value without a pass/fail criterion.
    Info,
    /// The computation behind the check failed.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub check: String,
    pub status: Status,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl CheckEntry {
    /// Passes when `value <= tolerance`.
    pub fn bound(check: impl Into<String>, value: Result<f64>, tolerance: f64) -> Self {
        Self::judge(check, value, Some(tolerance), |v| v <= tolerance)
    }

    pub fn info(check: impl Into<String>, value: Result<f64>) -> Self {
        Self::judge(check, value, None, |_| true).with_status_if_ok(Status::Info)
    }

    fn judge(check: impl Into<String>, value: Result<f64>, tolerance: Option<f64>, ok: impl Fn(f64) -> bool) -> Self {
        let check = check.into();
        match value {
            Ok(v) => CheckEntry {
                check,
                status: if v.is_finite() && ok(v) { Status::Pass } else { Status::Fail },
                value: v.is_finite().then_some(v),
                tolerance,
                message: None,
            },
            Err(e) => CheckEntry {
                check,
                status: Status::Error,
                value: None,
                tolerance,
                message: Some(e.to_string()),
            },
        }
    }

    fn with_status_if_ok(mut self, status: Status) -> Self {
        if self.status != Status::Error {
            self.status = status;
        }
        self
    }

    pub fn failed(&self) -> bool {
        matches!(self.status, Status::Fail | Status::Error)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Table(Table),
    Checks(Vec<CheckEntry>),
}

impl Output {
    pub fn failed(&self) -> bool {
        match self {
            Output::Table(_) => false,
            Output::Checks(c) => c.iter().any(CheckEntry::failed),
        }
    }
}

/// `v` with 12 significant digits in the shortest of fixed or exponent
/// notation, trailing zeros removed.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        trim_fraction(&format!("{:.*}", (11 - exp) as usize, v)).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_field(cell: &Cell) -> String {
    match cell {
        Cell::Num(v) => format_number(*v),
        Cell::Empty => String::new(),
        Cell::Text(t) => {
            if t.contains([',', '"', '\n', '\r']) {
                format!("\"{}\"", t.replace('"', "\"\""))
            } else {
                t.clone()
            }
        }
    }
}

fn csv_line(out: &mut String, cells: &[Cell]) {
    let fields: Vec<String> = cells.iter().map(csv_field).collect();
    out.push_str(&fields.join(","));
    out.push('\n');
}

pub fn render(header: &Header, output: &Output, format: Format) -> String {
    match (output, format) {
        (Output::Table(t), Format::Csv) => {
            let mut s = String::new();
            let head: Vec<Cell> = t.columns.iter().map(|c| Cell::Text(c.to_string())).collect();
            csv_line(&mut s, &head);
            for row in &t.rows {
                csv_line(&mut s, row);
            }
            s
        }
        (Output::Checks(checks), Format::Csv) => {
            let mut s = String::from("check,status,value,tolerance\n");
            for c in checks {
                let status = serde_json::to_value(c.status).expect("status serializes");
                csv_line(
                    &mut s,
                    &[
                        Cell::Text(c.check.clone()),
                        Cell::Text(status.as_str().unwrap_or_default().to_string()),
                        c.value.map_or(Cell::Empty, Cell::Num),
                        c.tolerance.map_or(Cell::Empty, Cell::Num),
                    ],
                );
            }
            s
        }
        (Output::Table(t), Format::Json) => {
            let doc = serde_json::json!({ "header": header, "columns": t.columns, "rows": t.rows });
            serde_json::to_string_pretty(&doc).expect("table serializes") + "\n"
        }
        (Output::Checks(checks), Format::Json) => {
            let doc = serde_json::json!({
                "header": header,
                "checks": checks,
                "all_passed": !checks.iter().any(CheckEntry::failed),
            });
            serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
        }
    }
}

fn require_finite(rows: &[Vec<Cell>], what: &'static str) -> Result<()> {
    let bad = rows.iter().flatten().any(|c| matches!(c, Cell::Num(v) if !v.is_finite()));
    if bad {
        Err(Error::NonFinite(what))
    } else {
        Ok(())
    }
}

/// `x, re_lambda_plus, im_lambda_plus` on the configured grid.
pub fn cmd_dispersion_curve(cfg: &RunConfig) -> Result<Table> {
    let scheme = cfg.scheme()?;
    let xs = cfg.grid.map(|g| g.values()).unwrap_or_default();
    let vals = dispersion_curve(&scheme, &xs, Side::Plus, cfg.exec)?;
    let rows: Vec<Vec<Cell>> = xs
        .iter()
        .zip(&vals)
        .map(|(&x, v)| vec![Cell::Num(x), Cell::Num(v.re), Cell::Num(v.im)])
        .collect();
    require_finite(&rows, "dispersion curve")?;
    Ok(Table {
        columns: vec!["x", "re_lambda_plus", "im_lambda_plus"],
        rows,
    })
}

/// Deterministic off-cut test points: `|Im z|` log-spaced over
/// `[1e-2, 10]` with both signs, `Re z` spread over `[-4, 4]`.
pub fn comparison_points(count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|k| {
            let im = 10f64.powf(-2.0 + 3.0 * (k % 10) as f64 / 9.0);
            let sign = if (k / 10) % 2 == 0 { 1.0 } else { -1.0 };
            let re = -4.0 + 8.0 * ((7 * k) % count) as f64 / (count - 1).max(1) as f64;
            Complex64::new(re, sign * im)
        })
        .collect()
}

/// Largest absolute and relative deviation of `lambda(z; a)` from the
/// `a = 0` closed form over [`comparison_points`] with 50 points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormDeviation {
    pub absolute: f64,
    pub relative: f64,
}

pub fn closed_form_deviation(scheme: &QuadratureScheme, exec: Execution) -> Result<ClosedFormDeviation> {
    let zs = comparison_points(50);
    let devs = exec.try_map(&zs, |&z| {
        let general = lambda_fn(scheme, z)?;
        let closed = lambda_a0(z);
        let d = (general - closed).norm();
        Ok::<(f64, f64), Error>((d, d / closed.norm()))
    })?;
    Ok(devs.into_iter().fold(
        ClosedFormDeviation {
            absolute: 0.0,
            relative: 0.0,
        },
        |m, (d, r)| ClosedFormDeviation {
            absolute: m.absolute.max(d),
            relative: m.relative.max(r),
        },
    ))
}

/// Points `x_k` of the cut used by the jump checks: `count` cell midpoints
/// of `(-top, top)`, `top = mu(3.6)`, where the weight is not negligible.
pub fn jump_points(params: &GasParams, count: usize) -> Vec<f64> {
    let top = params.mu_of(3.6);
    (0..count)
        .map(|k| -top + 2.0 * top * (k as f64 + 0.5) / count as f64)
        .collect()
}

/// `max |t_n^+ - t_n^- - 2 pi i x C(x)^n rho(x)|` with the boundary values
/// taken as limits of off-cut moments, over [`jump_points`].
pub fn moment_jump_deviation(scheme: &QuadratureScheme, count: usize, exec: Execution) -> Result<f64> {
    let p = *scheme.params();
    let xs = jump_points(&p, count);
    let devs = exec.try_map(&xs, |&x| {
        let plus = moments_limit(scheme, x, Side::Plus)?;
        let minus = moments_limit(scheme, x, Side::Minus)?;
        let cx = p.c_of(x)?;
        let mut worst: f64 = 0.0;
        for n in 0..5 {
            let expected = Complex64::new(0.0, 2.0 * std::f64::consts::PI * x * cx.powi(n as i32) * p.weight(x));
            worst = worst.max((plus.t[n] - minus.t[n] - expected).norm());
        }
        Ok::<f64, Error>(worst)
    })?;
    Ok(devs.into_iter().fold(0.0, f64::max))
}

/// Zero-count contours: three nested cut-avoiding rectangles for `a > 0`,
/// an upper half-disc of radius 6 for `a = 0`.
pub fn zero_count_contours(params: &GasParams) -> Result<Vec<(String, Contour)>> {
    if params.alpha().is_finite() {
        Ok(Contour::nested_family(params.alpha(), 3)?
            .into_iter()
            .enumerate()
            .map(|(k, c)| (format!("zero_count_rectangle_{}", k + 1), c))
            .collect())
    } else {
        Ok(vec![(
            "zero_count_upper_half_disc".to_string(),
            Contour::upper_semicircle(6.0, 1e-2, 512)?,
        )])
    }
}

fn max_of(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    values.into_iter().try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
}

/// The invariant suite for the configured slope.
pub fn cmd_spectrum_verify(cfg: &RunConfig) -> Result<Vec<CheckEntry>> {
    let scheme = cfg.scheme()?;
    let p = *scheme.params();
    let exec = cfg.exec;
    let beta = p.beta();
    let mut checks = Vec::new();

    let integral = |f: &dyn Fn(f64) -> f64| scheme.integrate_weighted(f);
    checks.push(CheckEntry::bound(
        "conservation_number",
        integral(&|_| 1.0).map(|v| (p.r0() * v - 1.0).abs()),
        1e-10,
    ));
    checks.push(CheckEntry::bound(
        "conservation_momentum",
        integral(&|c| c * c).map(|v| (p.r1() * v - 1.0).abs()),
        1e-10,
    ));
    checks.push(CheckEntry::bound(
        "conservation_energy",
        integral(&|c| (c * c - beta).powi(2)).map(|v| (p.r2() * v - 1.0).abs()),
        1e-10,
    ));
    checks.push(CheckEntry::bound(
        "energy_orthogonality",
        integral(&|c| c * c - beta).map(|v| v.abs() / p.exact_moment(0)),
        1e-10,
    ));

    for k in 0..4 {
        let r = DiscreteSolution::new(p, k)
            .and_then(|h| max_of([0.0, 0.7, 2.0].map(|x| residual_2_4(&scheme, &h, x, exec))));
        checks.push(CheckEntry::bound(format!("discrete_residual_h{k}"), r, 1e-8));
    }

    let norm = normalization_points(&scheme, 10, exec).and_then(|pts| {
        max_of(pts.iter().map(|&eta| normalization_check(&scheme, eta).map(|c| c.max_deviation())))
    });
    checks.push(CheckEntry::bound("normalization_max_deviation", norm, 1e-6));

    match zero_count_contours(&p) {
        Ok(contours) => {
            for (name, contour) in contours {
                let n = count_zeros(&scheme, &contour, exec).map(|z| z.zeros.unsigned_abs() as f64);
                checks.push(CheckEntry::bound(name, n, 0.0));
            }
        }
        Err(e) => checks.push(CheckEntry::bound("zero_count", Err(e), 0.0)),
    }

    let fit = laurent_order_at_infinity(&scheme);
    checks.push(CheckEntry::bound(
        "laurent_order_deviation",
        fit.clone().map(|f| (f.order as f64 - 4.0).abs()),
        0.0,
    ));
    checks.push(CheckEntry::info("laurent_raw_order", fit.clone().map(|f| f.raw_order)));
    if p.a() == 0.0 {
        checks.push(CheckEntry::bound(
            "laurent_leading_coefficient_deviation",
            fit.map(|f| (f.leading_coeff - 0.75).norm()),
            1e-4,
        ));
        checks.push(CheckEntry::bound(
            "closed_form_agreement",
            closed_form_deviation(&scheme, exec).map(|d| d.relative),
            1e-8,
        ));
    } else {
        checks.push(CheckEntry::info("laurent_leading_coefficient_re", fit.map(|f| f.leading_coeff.re)));
    }

    checks.push(CheckEntry::bound(
        "moment_jump_deviation",
        moment_jump_deviation(&scheme, 20, exec),
        1e-6,
    ));
    let xs = jump_points(&p, 20);
    let reports = exec.try_map(&xs, |&x| sokhotsky_jump(&scheme, x));
    let ratio_dev = reports.as_ref().map_err(Clone::clone).and_then(|rs| {
        max_of(rs.iter().map(|r| {
            r.ratio
                .map(|q| (q - r.x).norm())
                .ok_or_else(|| Error::Domain(format!("no comparison value at x = {}", r.x)))
        }))
    });
    checks.push(CheckEntry::bound("sokhotsky_ratio_minus_x", ratio_dev, 1e-6));
    let probe = 0.5 * xs[xs.len() - 1];
    checks.push(CheckEntry::info(
        format!("sokhotsky_ratio_re_at_x={}", format_number(probe)),
        sokhotsky_jump(&scheme, probe).and_then(|r| {
            r.ratio
                .map(|q| q.re)
                .ok_or_else(|| Error::Domain("no comparison value".into()))
        }),
    ));

    checks.extend(free_molecular_checks());
    Ok(checks)
}

/// Checks of the free-molecular system; independent of `a`.
pub fn free_molecular_checks() -> Vec<CheckEntry> {
    let mut checks = Vec::new();
    let projection = (fm_project_system() - fm_project_system_quadrature(80, 10.0)).abs().max();
    checks.push(CheckEntry::bound("fm_projection_consistency", Ok(projection), 1e-12));
    let mode_residual = max_of((0..6).flat_map(|i| {
        let mut v = [0.0; 6];
        v[i] = 1.0;
        let sol = FreeMolecularSolution::new(FmCoefficients::from_array(v));
        [0.0, 0.5, 1.0].map(move |x| fm_residual(&sol, x))
    }));
    checks.push(CheckEntry::bound("fm_mode_residual", mode_residual, 1e-8));
    let derived = FreeMolecularSolution::new(FmCoefficients::default()).decay_rate;
    checks.push(CheckEntry::info("fm_decay_rate_derived", Ok(derived)));
    checks.push(CheckEntry::info("fm_decay_rate_reference", Ok(REFERENCE_DECAY_RATE)));
    let reference = FreeMolecularSolution::new(FmCoefficients { a0: 1.0, ..Default::default() })
        .with_decay_rate(REFERENCE_DECAY_RATE);
    checks.push(CheckEntry::info("fm_reference_rate_residual", fm_residual(&reference, 0.5)));
    checks
}

/// Rows `a, lambda_a0_deviation, lambda_a0_relative_deviation,
/// kernel_limit_deviation` for
/// [`LIMIT_SLOPES`] and the configured slope.
pub fn cmd_limits_compare(cfg: &RunConfig) -> Result<Table> {
    let mut slopes = LIMIT_SLOPES.to_vec();
    if !slopes.contains(&cfg.params.a()) {
        slopes.push(cfg.params.a());
    }
    let mut rows = Vec::new();
    for a in slopes {
        let params = GasParams::new(a)?;
        let scheme = QuadratureScheme::new(params, cfg.nodes)?;
        let dev = closed_form_deviation(&scheme, cfg.exec)?;
        rows.push(vec![
            Cell::Num(a),
            Cell::Num(dev.absolute),
            Cell::Num(dev.relative),
            Cell::Num(kernel_limit_deviation(&params)),
        ]);
    }
    require_finite(&rows, "limit comparison")?;
    Ok(Table {
        columns: vec![
            "a",
            "lambda_a0_deviation",
            "lambda_a0_relative_deviation",
            "kernel_limit_deviation",
        ],
        rows,
    })
}

/// Rows `x, C, h` on the x grid and 64 velocities, followed by a
/// `residual` row with the largest transport residual over the x grid.
pub fn cmd_fm_solve(cfg: &RunConfig) -> Result<Table> {
    let sol = FreeMolecularSolution::new(cfg.coefficients);
    let xs = cfg.grid.map(|g| g.values()).unwrap_or_default();
    let cs = fm_test_grid();
    let mut rows = Vec::with_capacity(xs.len() * cs.len() + 1);
    for &x in &xs {
        for &c in &cs {
            rows.push(vec![Cell::Num(x), Cell::Num(c), Cell::Num(fm_general_solution(&sol, x, c))]);
        }
    }
    let residuals = cfg.exec.try_map(&xs, |&x| fm_residual(&sol, x))?;
    let worst = residuals.into_iter().fold(0.0, f64::max);
    rows.push(vec![Cell::Text("residual".into()), Cell::Empty, Cell::Num(worst)]);
    require_finite(&rows, "free-molecular solution")?;
    Ok(Table {
        columns: vec!["x", "C", "h"],
        rows,
    })
}

/// Determinant and, on the cut, cofactors of the dispersion matrix at `z`.
pub fn cmd_dispersion_eval(cfg: &RunConfig) -> Result<Table> {
    let scheme = cfg.scheme()?;
    let z = cfg.z;
    let region = if z.im == 0.0 && cfg.params.in_cut(z.re) {
        match cfg.side {
            CutSide::Pv => Region::PrincipalValue,
            CutSide::Plus => Region::BoundaryPlus,
            CutSide::Minus => Region::BoundaryMinus,
        }
    } else {
        Region::OffCut
    };
    let ev = dispersion_eval(&scheme, z, region)?;
    let region_name = serde_json::to_value(ev.region).expect("region serializes");
    let mut row = vec![
        Cell::Num(z.re),
        Cell::Num(z.im),
        Cell::Text(region_name.as_str().unwrap_or_default().to_string()),
        Cell::Num(ev.det.re),
        Cell::Num(ev.det.im),
    ];
    for k in 0..3 {
        match ev.cofactors {
            Some(c) => row.extend([Cell::Num(c[k].re), Cell::Num(c[k].im)]),
            None => row.extend([Cell::Empty, Cell::Empty]),
        }
    }
    require_finite(std::slice::from_ref(&row), "dispersion value")?;
    Ok(Table {
        columns: vec![
            "z_re", "z_im", "region", "det_re", "det_im", "cof0_re", "cof0_im", "cof1_re", "cof1_im", "cof2_re",
            "cof2_im",
        ],
        rows: vec![row],
    })
}

/// Runs a validated configuration.
pub fn execute(cfg: &RunConfig) -> Result<Output> {
    match cfg.command {
        CommandKind::DispersionCurve => cmd_dispersion_curve(cfg).map(Output::Table),
        CommandKind::SpectrumVerify => cmd_spectrum_verify(cfg).map(Output::Checks),
        CommandKind::LimitsCompare => cmd_limits_compare(cfg).map(Output::Table),
        CommandKind::FmSolve => cmd_fm_solve(cfg).map(Output::Table),
        CommandKind::DispersionEval => cmd_dispersion_eval(cfg).map(Output::Table),
    }
}

/// Exit code for an error: 2 for usage errors, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Usage(_) => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name), runs the command, writes the
/// output and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cfg = match RunConfig::from_cli(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("bgk-affine: {e}");
            return exit_code(&e);
        }
    };
    let output = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("bgk-affine: {e}");
            return exit_code(&e);
        }
    };
    let text = render(&cfg.header(), &output, cfg.format);
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("bgk-affine: cannot write output: {e}");
        return 1;
    }
    if output.failed() {
        eprintln!("bgk-affine: one or more checks failed");
        return 1;
    }
    0
}
