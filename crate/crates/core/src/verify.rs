//! Residual checks of the governing equations, the Fourier–Laplace identities
//! and the half-line example of a nonzero solution with zero initial data.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::fractional::{rl_forcing_weight, TimeSeriesField};
use crate::grid::{Grid, GridFunction};
use crate::levy::{generator_power, semigroup_apply, LevySymbol};
use crate::subordination::{fourier_ml_trajectory, subordinate_trajectory};

/// Closeness required between `field(0)` and `f`.
const INITIAL_MATCH_TOL: f64 = 1e-12;
/// Pole proximity threshold for the transform identity.
pub const POLE_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub equation: String,
    pub tau: f64,
    pub h: f64,
    pub half_width: f64,
    pub points: usize,
    /// First time node included in the norms.
    pub window_start: f64,
    /// Largest discrete L¹ norm over the time nodes.
    pub l1_norm: f64,
    pub max_norm: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualReport {
    fn new(equation: String, field: &TimeSeriesField, window_start: f64, l1: f64, max: f64, tolerance: f64) -> Self {
        let grid = field.grid();
        Self {
            equation,
            tau: field.tau(),
            h: grid.spacing(),
            half_width: grid.half_width(),
            points: grid.points(),
            window_start,
            l1_norm: l1,
            max_norm: max,
            tolerance,
            pass: max <= tolerance,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Usage(format!("report serialization: {e}")))
    }
}

/// Writes reports as a CSV table.
pub fn write_summary_csv<W: Write>(reports: &[ResidualReport], mut out: W) -> Result<()> {
    writeln!(out, "equation,tau,h,L,M,window_start,l1_norm,max_norm,tolerance,pass")?;
    for r in reports {
        writeln!(
            out,
            "{},{:e},{:e},{},{},{},{:e},{:e},{:e},{}",
            r.equation, r.tau, r.h, r.half_width, r.points, r.window_start, r.l1_norm, r.max_norm, r.tolerance, r.pass
        )?;
    }
    Ok(())
}

fn check_initial(field: &TimeSeriesField, f: &GridFunction) -> Result<()> {
    let u0 = &field.frames()[0];
    if u0.grid() != f.grid() {
        return Err(Error::Usage("field and initial data live on different grids".into()));
    }
    let scale = f.max_abs().max(1.0);
    if u0.max_distance(f)? > INITIAL_MATCH_TOL * scale {
        return Err(Error::Usage("field(0) does not match the initial data".into()));
    }
    Ok(())
}

/// Indices `i` in `1..=last` with `t_i >= window_start`.
fn window_indices(field: &TimeSeriesField, window_start: f64, last: usize) -> Result<Vec<usize>> {
    let idx: Vec<usize> = (1..=last)
        .filter(|&i| field.time(i) >= window_start - 1e-12 * field.tau())
        .collect();
    if idx.is_empty() {
        return Err(Error::Usage(format!(
            "no time nodes in the residual window starting at {window_start}"
        )));
    }
    Ok(idx)
}

fn norms(residuals: &[GridFunction]) -> (f64, f64) {
    residuals.iter().fold((0.0f64, 0.0f64), |(l1, max), r| {
        (l1.max(r.l1_norm()), max.max(r.max_abs()))
    })
}

/// Residual of `∂u/∂t = Σ_{j=1}^{n-1} w_j(t) L_x^j f + L_x^n u` at the
/// interior time nodes `t_i >= window_start`.
pub fn residual_higher_order(
    sym: &LevySymbol,
    n: u32,
    field: &TimeSeriesField,
    f: &GridFunction,
    window_start: f64,
    tolerance: f64,
) -> Result<ResidualReport> {
    if n < 1 {
        return Err(Error::Usage("equation order n must be at least 1".into()));
    }
    check_initial(field, f)?;
    let forcing: Vec<GridFunction> = (1..n)
        .map(|j| generator_power(sym, j, f))
        .collect::<Result<_>>()?;
    let dudt = field.time_derivative()?;
    let idx = window_indices(field, window_start, field.last_index() - 1)?;
    let residuals = idx
        .iter()
        .map(|&i| {
            let t = field.time(i);
            let mut r = dudt[i - 1].axpy(-1.0, &generator_power(sym, n, &field.frames()[i])?)?;
            for (j, lf) in (1..n).zip(&forcing) {
                r = r.axpy(-rl_forcing_weight(t, j, n)?, lf)?;
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    let (l1, max) = norms(&residuals);
    Ok(ResidualReport::new(format!("higher_order(n={n})"), field, window_start, l1, max, tolerance))
}

/// Residual of `∂^β u/∂t^β = L_x u` (L1 Caputo scheme) at `t_i >= window_start`.
pub fn residual_fractional(
    sym: &LevySymbol,
    beta: f64,
    field: &TimeSeriesField,
    f: &GridFunction,
    window_start: f64,
    tolerance: f64,
) -> Result<ResidualReport> {
    check_initial(field, f)?;
    let caputo = field.caputo_l1(beta)?;
    let idx = window_indices(field, window_start, field.last_index())?;
    let residuals = idx
        .iter()
        .map(|&i| caputo[i - 1].axpy(-1.0, &generator_power(sym, 1, &field.frames()[i])?))
        .collect::<Result<Vec<_>>>()?;
    let (l1, max) = norms(&residuals);
    Ok(ResidualReport::new(format!("fractional(beta={beta})"), field, window_start, l1, max, tolerance))
}

/// How the space-time field is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionMethod {
    Subordination,
    MittagLeffler,
}

/// `u(t_i)` for `t_i = iτ`, `i = 0..=steps`; `β = 1` gives the semigroup.
pub fn solution_field(
    sym: &LevySymbol,
    beta: f64,
    tau: f64,
    steps: usize,
    f: &GridFunction,
    method: SolutionMethod,
) -> Result<TimeSeriesField> {
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * tau).collect();
    let frames = if beta == 1.0 {
        times.iter().map(|&t| semigroup_apply(sym, t, f)).collect::<Result<Vec<_>>>()?
    } else {
        match method {
            SolutionMethod::Subordination => subordinate_trajectory(sym, beta, &times, f)?,
            SolutionMethod::MittagLeffler => fourier_ml_trajectory(sym, beta, &times, f)?,
        }
    };
    TimeSeriesField::new(tau, frames)
}

/// One level of a refinement study: time step and points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub tau: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub beta: f64,
    pub dim: usize,
    pub half_width: f64,
    /// Standard deviation of the Gaussian initial density.
    pub sigma: f64,
    pub final_time: f64,
    pub window_start: f64,
    pub levels: Vec<Level>,
    pub method: SolutionMethod,
}

impl StudyConfig {
    /// Three levels halving `(τ, h)` from `(1/32, 2L/128)`, with `L = 20`,
    /// a unit Gaussian and residuals on `t ∈ [0.5, 1]`.
    pub fn standard(beta: f64) -> Self {
        Self {
            beta,
            dim: 1,
            half_width: 20.0,
            sigma: 1.0,
            final_time: 1.0,
            window_start: 0.5,
            levels: vec![
                Level { tau: 1.0 / 32.0, points: 128 },
                Level { tau: 1.0 / 64.0, points: 256 },
                Level { tau: 1.0 / 128.0, points: 512 },
            ],
            method: SolutionMethod::Subordination,
        }
    }
}

/// Residual norms across levels and the ratio between consecutive levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub reports: Vec<ResidualReport>,
    pub ratios: Vec<f64>,
    pub required_ratio: f64,
    pub pass: bool,
}

impl RefinementStudy {
    pub fn from_reports(reports: Vec<ResidualReport>, required_ratio: f64) -> Self {
        let ratios: Vec<f64> = reports.windows(2).map(|w| w[0].max_norm / w[1].max_norm).collect();
        let pass = !ratios.is_empty() && ratios.iter().all(|r| *r >= required_ratio);
        Self {
            reports,
            ratios,
            required_ratio,
            pass,
        }
    }
}

/// Studies of both residuals for `u` built with index `config.beta`:
/// `(fractional, higher_order(n))`. The higher-order study is skipped unless
/// `n` is given.
pub fn equivalence_study(
    sym: &LevySymbol,
    n: Option<u32>,
    config: &StudyConfig,
    required_ratio: f64,
) -> Result<(RefinementStudy, Option<RefinementStudy>)> {
    if config.levels.len() < 2 {
        return Err(Error::Usage("a refinement study needs at least two levels".into()));
    }
    let mut fractional = Vec::new();
    let mut higher = Vec::new();
    for level in &config.levels {
        let steps = (config.final_time / level.tau).round() as usize;
        if ((steps as f64) * level.tau - config.final_time).abs() > 1e-9 * config.final_time {
            return Err(Error::Usage(format!(
                "time step {} does not divide the final time {}",
                level.tau, config.final_time
            )));
        }
        let grid = Grid::new(config.dim, config.half_width, level.points)?;
        let f = GridFunction::gaussian_density(grid, config.sigma)?;
        let field = solution_field(sym, config.beta, level.tau, steps, &f, config.method)?;
        if config.beta < 1.0 {
            fractional.push(residual_fractional(sym, config.beta, &field, &f, config.window_start, f64::INFINITY)?);
        }
        if let Some(n) = n {
            higher.push(residual_higher_order(sym, n, &field, &f, config.window_start, f64::INFINITY)?);
        }
    }
    let frac = RefinementStudy::from_reports(fractional, required_ratio);
    let high = n.map(|_| RefinementStudy::from_reports(higher, required_ratio));
    Ok((frac, high))
}

/// Both sides of the Fourier–Laplace identity with `f̂` factored out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformCheck {
    pub n: u32,
    pub psi: Complex64,
    pub s: f64,
    /// `Σ_{j<n} s^{-j/n} ψ^j / (s - ψ^n)`.
    pub lhs: Complex64,
    /// `s^{1/n-1} / (s^{1/n} - ψ)`.
    pub rhs: Complex64,
    pub abs_diff: f64,
    pub rel_diff: f64,
}

pub fn transform_identity(n: u32, psi: Complex64, s: f64) -> Result<TransformCheck> {
    if n < 1 {
        return Err(Error::Usage("identity order n must be at least 1".into()));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Usage(format!("Laplace variable must be positive, got {s}")));
    }
    if !(psi.re <= 0.0 && psi.im.is_finite()) {
        return Err(Error::Usage(format!("symbol value must have Re <= 0, got {psi}")));
    }
    let nf = n as f64;
    let denom = s - psi.powu(n);
    let distance = denom.norm();
    if distance < POLE_THRESHOLD {
        return Err(Error::Pole {
            distance,
            threshold: POLE_THRESHOLD,
        });
    }
    let numer: Complex64 = (0..n).map(|j| psi.powu(j) * s.powf(-(j as f64) / nf)).sum();
    let lhs = numer / denom;
    let root = s.powf(1.0 / nf);
    let rhs = Complex64::new(s.powf(1.0 / nf - 1.0), 0.0) / (root - psi);
    let abs_diff = (lhs - rhs).norm();
    Ok(TransformCheck {
        n,
        psi,
        s,
        lhs,
        rhs,
        abs_diff,
        rel_diff: abs_diff / rhs.norm(),
    })
}

/// `u(t,x) = (4πt)^{-1/2} exp(-(x+1)²/(4t))`, a solution of `u_t = u_xx` on
/// `x >= 0` whose trace at `t = 0+` vanishes there.
pub fn exhibited_solution(t: f64, x: f64) -> f64 {
    (4.0 * PI * t).powf(-0.5) * (-(x + 1.0).powi(2) / (4.0 * t)).exp()
}

/// `u_t - u_xx` from the closed-form derivatives.
pub fn exhibited_analytic_residual(t: f64, x: f64) -> f64 {
    let u = exhibited_solution(t, x);
    let a = (x + 1.0).powi(2) / (4.0 * t * t);
    let ut = u * (a - 0.5 / t);
    let uxx = u * (a - 0.5 / t);
    ut - uxx
}

/// `∫_0^∞ u(t,x) dx = erfc(1/√(4t)) / 2`.
pub fn exhibited_half_line_mass(t: f64) -> f64 {
    0.5 * erfc(1.0 / (4.0 * t).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonuniquenessConfig {
    pub x_max: f64,
    /// Times at which `sup_{x>=0} u` is reported.
    pub trace_times: Vec<f64>,
    /// Finite-difference window `[t_lo, t_hi]`.
    pub window: (f64, f64),
    /// Coarse spacings `(h, τ)`; the second level halves both.
    pub h: f64,
    pub tau: f64,
}

impl Default for NonuniquenessConfig {
    fn default() -> Self {
        Self {
            x_max: 10.0,
            trace_times: vec![0.01, 0.02, 0.05, 0.1, 0.5, 1.0],
            window: (0.1, 1.0),
            h: 0.05,
            tau: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonuniquenessReport {
    pub analytic_residual: f64,
    pub fd_residual_coarse: f64,
    pub fd_residual_fine: f64,
    pub fd_order: f64,
    /// `(t, sup_{x>=0} u(t,x))`.
    pub trace: Vec<(f64, f64)>,
    pub half_line_mass: f64,
    pub half_line_mass_exact: f64,
    pub pass: bool,
}

/// Max of the centered-difference residual `u_t - u_xx` over interior nodes.
fn fd_residual(x_max: f64, window: (f64, f64), h: f64, tau: f64) -> f64 {
    let nx = (x_max / h).round() as usize;
    let nt = ((window.1 - window.0) / tau).round() as usize;
    let mut worst = 0.0f64;
    for it in 1..nt {
        let t = window.0 + it as f64 * tau;
        for ix in 1..nx {
            let x = ix as f64 * h;
            let ut = (exhibited_solution(t + tau, x) - exhibited_solution(t - tau, x)) / (2.0 * tau);
            let uxx = (exhibited_solution(t, x + h) - 2.0 * exhibited_solution(t, x) + exhibited_solution(t, x - h)) / (h * h);
            worst = worst.max((ut - uxx).abs());
        }
    }
    worst
}

/// Composite Simpson rule for `∫_0^{x_max} u(t,x) dx`.
fn simpson_half_line(t: f64, x_max: f64, h: f64) -> f64 {
    let mut n = (x_max / h).round() as usize;
    if n % 2 == 1 {
        n += 1;
    }
    let h = x_max / n as f64;
    let sum: f64 = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * exhibited_solution(t, i as f64 * h)
        })
        .sum();
    sum * h / 3.0
}

pub fn nonuniqueness_demo(config: &NonuniquenessConfig) -> Result<NonuniquenessReport> {
    let (t_lo, t_hi) = config.window;
    if config.x_max < 10.0 {
        return Err(Error::Usage(format!("x_max must be at least 10, got {}", config.x_max)));
    }
    if !(0.01 <= t_lo && t_lo < t_hi && t_hi <= 1.0) {
        return Err(Error::Usage(format!("time window must lie in [0.01, 1], got [{t_lo}, {t_hi}]")));
    }
    if config.trace_times.iter().any(|t| !(0.01..=1.0).contains(t)) {
        return Err(Error::Usage("trace times must lie in [0.01, 1]".into()));
    }
    if !(config.h > 0.0 && config.tau > 0.0) {
        return Err(Error::Usage("spacings must be positive".into()));
    }

    let mut analytic = 0.0f64;
    let nx = (config.x_max / config.h).round() as usize;
    let nt = ((t_hi - t_lo) / config.tau).round() as usize;
    for it in 0..=nt {
        let t = t_lo + it as f64 * config.tau;
        for ix in 0..=nx {
            analytic = analytic.max(exhibited_analytic_residual(t, ix as f64 * config.h).abs());
        }
    }
    let coarse = fd_residual(config.x_max, config.window, config.h, config.tau);
    let fine = fd_residual(config.x_max, config.window, 0.5 * config.h, 0.5 * config.tau);
    let order = (coarse / fine).log2();
    // u(t, ·) is decreasing on x >= 0, so the supremum sits at x = 0
    let trace: Vec<(f64, f64)> = config.trace_times.iter().map(|&t| (t, exhibited_solution(t, 0.0))).collect();
    let mass = simpson_half_line(1.0, config.x_max, 0.5 * config.h);
    let exact = exhibited_half_line_mass(1.0);
    let t_min = config.trace_times.iter().cloned().fold(f64::INFINITY, f64::min);
    let initial_trace = exhibited_solution(t_min, 0.0);
    let pass = analytic <= 1e-6 && order >= 1.8 && initial_trace <= 1e-8 && mass >= 0.2;
    Ok(NonuniquenessReport {
        analytic_residual: analytic,
        fd_residual_coarse: coarse,
        fd_residual_fine: fine,
        fd_order: order,
        trace,
        half_line_mass: mass,
        half_line_mass_exact: exact,
        pass,
    })
}
