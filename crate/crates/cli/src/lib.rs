//! Scenario runner behind the `fracsub` binary.
//!
//! A scenario is a command plus a flat parameter set. Parameters come from an
//! optional JSON document and are overridden by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use fracsub::grid::{Grid, GridFunction};
use fracsub::levy::LevySymbol;
use fracsub::montecarlo::{
    hitting_time_set, ks_critical_value, ks_distance, simulate_ctrw, simulate_marginal_pair, stable_subordinator_set,
    tail_moment, CtrwSpec, JumpLaw, SampleSet, WaitingLaw,
};
use fracsub::stable::{InverseSubordinatorLaw, StableLaw};
use fracsub::subordination::{fourier_ml_solution, subordinate_solution};
use fracsub::verify::{
    equivalence_study, nonuniqueness_demo, transform_identity, write_summary_csv, Level, NonuniquenessConfig,
    RefinementStudy, SolutionMethod, StudyConfig,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] fracsub::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for usage and configuration problems, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Json(_) => 2,
            Self::Library(e) => match e {
                fracsub::Error::Usage(_)
                | fracsub::Error::Domain(_)
                | fracsub::Error::Resolution(_)
                | fracsub::Error::Pole { .. } => 2,
                fracsub::Error::Numerical(_) | fracsub::Error::Io(_) => 1,
            },
            Self::Io { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Density,
    Sample,
    Solve,
    Simulate,
    Ctrw,
    VerifyPde,
    VerifyFractional,
    VerifyTransform,
    VerifyNonuniqueness,
    VerifyMarginals,
    Compare,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Density => "density",
            Self::Sample => "sample",
            Self::Solve => "solve",
            Self::Simulate => "simulate",
            Self::Ctrw => "ctrw",
            Self::VerifyPde => "verify pde",
            Self::VerifyFractional => "verify fractional",
            Self::VerifyTransform => "verify transform",
            Self::VerifyNonuniqueness => "verify nonuniqueness",
            Self::VerifyMarginals => "verify marginals",
            Self::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    /// Draws of `D_1`.
    Stable,
    /// Draws of `E_t`.
    Hitting,
}

/// Every tunable of every command; unset fields take command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub beta: Option<f64>,
    pub t: Option<f64>,
    pub n: Option<u32>,
    pub psi: Option<f64>,
    pub psi_im: Option<f64>,
    pub s: Option<f64>,
    pub alpha: Option<f64>,
    pub dim: Option<usize>,
    pub grid_m: Option<usize>,
    pub grid_l: Option<f64>,
    pub tau: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub tolerance: Option<f64>,
    pub scale: Option<f64>,
    pub jumps: Option<JumpLaw>,
    pub method: Option<SolutionMethod>,
    pub kind: Option<SampleKind>,
}

impl Params {
    /// Fields set in `other` replace those in `self`.
    pub fn overridden_by(self, other: Params) -> Params {
        macro_rules! pick {
            ($($f:ident),*) => { Params { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            beta, t, n, psi, psi_im, s, alpha, dim, grid_m, grid_l, tau, samples, seed, threads, out_dir, tolerance,
            scale, jumps, method, kind
        )
    }
}

/// A JSON scenario document: `{"command": "verify_transform", "n": 3, ...}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub command: Command,
    pub params: Params,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut doc: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)?;
        let command = doc
            .remove("command")
            .ok_or_else(|| CliError::Usage("scenario document needs a \"command\" field".into()))?;
        Ok(Self {
            command: serde_json::from_value(command)?,
            params: serde_json::from_value(serde_json::Value::Object(doc))?,
        })
    }
}

/// Reads a parameter document (without a `command` field).
pub fn read_params(path: &Path) -> Result<Params> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// Printed lines, files written and whether every check passed.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub files: Vec<(String, String)>,
    pub passed: bool,
}

impl Outcome {
    fn new() -> Self {
        Self {
            passed: true,
            ..Self::default()
        }
    }

    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        self.passed &= ok;
        self.lines.push(format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }));
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

struct Output<'a> {
    dir: Option<&'a Path>,
}

impl Output<'_> {
    fn write(&self, outcome: &mut Outcome, name: &str, description: &str, bytes: Vec<u8>) -> Result<()> {
        let Some(dir) = self.dir else { return Ok(()) };
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })?;
        outcome.files.push((name.to_string(), description.to_string()));
        Ok(())
    }
}

fn require<T>(value: Option<T>, flag: &str, command: Command) -> Result<T> {
    value.ok_or_else(|| CliError::Usage(format!("`{}` needs --{flag}", command.name())))
}

fn outer_symbol(p: &Params) -> Result<LevySymbol> {
    Ok(match p.alpha {
        None => LevySymbol::brownian(1.0)?,
        Some(2.0) => LevySymbol::brownian(1.0)?,
        Some(a) => LevySymbol::isotropic_stable(a, 1.0)?,
    })
}

fn initial_density(p: &Params, default_points: usize, default_half_width: f64) -> Result<GridFunction> {
    let grid = Grid::new(
        p.dim.unwrap_or(1),
        p.grid_l.unwrap_or(default_half_width),
        p.grid_m.unwrap_or(default_points),
    )?;
    Ok(GridFunction::gaussian_density(grid, 1.0)?)
}

fn sample_bytes(set: &SampleSet) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    set.write_text(&mut buf)?;
    Ok(buf)
}

fn grid_bytes(u: &GridFunction) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    u.write_csv(&mut buf)?;
    Ok(buf)
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Runs one scenario and writes its artifacts plus `manifest.csv` when an
/// output directory is configured.
pub fn run_scenario(scenario: &Scenario) -> Result<Outcome> {
    let p = &scenario.params;
    if let Some(dir) = &p.out_dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
    }
    let out = Output { dir: p.out_dir.as_deref() };
    let mut outcome = Outcome::new();
    let cmd = scenario.command;
    match cmd {
        Command::Density => density(p, cmd, &out, &mut outcome)?,
        Command::Sample => sample(p, cmd, &out, &mut outcome)?,
        Command::Solve => solve(p, cmd, &out, &mut outcome)?,
        Command::Simulate => simulate(p, cmd, &out, &mut outcome, false)?,
        Command::VerifyMarginals => simulate(p, cmd, &out, &mut outcome, true)?,
        Command::Ctrw => ctrw(p, cmd, &out, &mut outcome)?,
        Command::VerifyPde => pde(p, cmd, &out, &mut outcome, true)?,
        Command::VerifyFractional => pde(p, cmd, &out, &mut outcome, false)?,
        Command::VerifyTransform => transform(p, cmd, &out, &mut outcome)?,
        Command::VerifyNonuniqueness => nonunique(&out, &mut outcome)?,
        Command::Compare => compare(p, cmd, &out, &mut outcome)?,
    }
    if let Some(dir) = &p.out_dir {
        let mut manifest = String::from("file,description\n");
        for (name, desc) in &outcome.files {
            manifest.push_str(&format!("{name},{desc}\n"));
        }
        manifest.push_str(&format!("# command={}\n", cmd.name()));
        manifest.push_str(&format!("# seed={}\n", p.seed.map_or("none".into(), |s| s.to_string())));
        manifest.push_str(&format!("# threads={}\n", p.threads.map_or("default".into(), |t| t.to_string())));
        manifest.push_str(&format!("# passed={}\n", outcome.passed));
        let path = dir.join("manifest.csv");
        fs::write(&path, manifest).map_err(|source| CliError::Io { path, source })?;
    }
    Ok(outcome)
}

fn density(p: &Params, cmd: Command, out: &Output, o: &mut Outcome) -> Result<()> {
    let beta = require(p.beta, "beta", cmd)?;
    let t = require(p.t, "t", cmd)?;
    let law = StableLaw::new(beta)?;
    if let Some(s) = p.s {
        let q = InverseSubordinatorLaw::new(law, t)?;
        o.line(format!("{:.7}", q.pdf(s)?));
        let cut = q.support_cutoff(1e-12);
        let mut data = String::new();
        for i in 0..=400 {
            let s = cut * i as f64 / 400.0;
            data.push_str(&format!("{s:e} {:e}\n", q.pdf(s)?));
        }
        out.write(o, "hitting_density.dat", "s and q(t,s)", data.into_bytes())?;
    } else {
        o.line(format!("{:.7}", law.pdf(t)?));
        let mut data = String::new();
        for i in 0..=400 {
            let x = 10f64.powf(-2.0 + 4.0 * i as f64 / 400.0) * t;
            data.push_str(&format!("{x:e} {:e}\n", law.pdf(x)?));
        }
        out.write(o, "stable_density.dat", "t and g_beta(t)", data.into_bytes())?;
    }
    Ok(())
}

fn sample(p: &Params, cmd: Command, out: &Output, o: &mut Outcome) -> Result<()> {
    let beta = require(p.beta, "beta", cmd)?;
    let n = p.samples.unwrap_or(100_000);
    let seed = p.seed.unwrap_or(0);
    let set = match p.kind.unwrap_or(SampleKind::Hitting) {
        SampleKind::Stable => stable_subordinator_set(beta, n, seed)?,
        SampleKind::Hitting => hitting_time_set(beta, require(p.t, "t", cmd)?, n, seed)?,
    };
    o.line(format!("{set}"));
    o.line(format!("mean {:.7}", set.mean()[0]));
    out.write(o, "samples.txt", "draws", sample_bytes(&set)?)?;
    Ok(())
}

fn solve(p: &Params, cmd: Command, out: &Output, o: &mut Outcome) -> Result<()> {
    let beta = require(p.beta, "beta", cmd)?;
    let t = require(p.t, "t", cmd)?;
    let f = initial_density(p, 512, 20.0)?;
    let sym = outer_symbol(p)?;
    let u = match p.method.unwrap_or(SolutionMethod::Subordination) {
        SolutionMethod::Subordination => subordinate_solution(&sym, beta, t, &f)?,
        SolutionMethod::MittagLeffler => fourier_ml_solution(&sym, beta, t, &f)?,
    };
    o.line(format!("mass {:.10}", u.mass()));
    o.line(format!("variance {:.10}", u.variance()));
    o.line(format!("max {:.10}", u.max_abs()));
    out.write(o, "solution.csv", "u(t,x) on the grid", grid_bytes(&u)?)?;
    Ok(())
}

fn simulate(p: &Params, cmd: Command, out: &Output, o: &mut Outcome, check: bool) -> Result<()> {
    let t = p.t.unwrap_or(1.0);
    let n = p.samples.unwrap_or(100_000);
    let seed = p.seed.unwrap_or(0);
    let dim = p.dim.unwrap_or(1);
    let level = p.tolerance.unwrap_or(0.01);
    let sym = outer_symbol(p)?;
    if let Some(b) = p.beta {
        if b != 0.5 {
            return Err(CliError::Usage(format!("`{}` compares index 1/2 only, got --beta {b}", cmd.name())));
        }
    }
    let (a, b) = simulate_marginal_pair(&sym, t, n, seed, dim)?;
    let threshold = ks_critical_value(level, n, n);
    for axis in 0..dim {
        let d = ks_distance(&a.component(axis)?, &b.component(axis)?)?;
        let detail = format!("axis {axis} KS {d:.6} threshold {threshold:.6}");
        if check {
            o.check("marginals", d < threshold, detail);
        } else {
            o.line(detail);
        }
    }
    o.line(format!("second moment A {:.6}", tail_moment(&a, 2.0)));
    o.line(format!("second moment B {:.6}", tail_moment(&b, 2.0)));
    out.write(o, "brownian_time.txt", "X(|Y_t|) draws", sample_bytes(&a)?)?;
    out.write(o, "inverse_stable_time.txt", "X(E_t) draws", sample_bytes(&b)?)?;
    Ok(())
}

fn ctrw(p: &Params, cmd: Command, out: &Output, o: &mut Outcome) -> Result<()> {
    let beta = p.beta.unwrap_or(0.5);
    let t = p.t.unwrap_or(1.0);
    let c = require(p.scale, "scale", cmd)?;
    let n = p.samples.unwrap_or(100_000);
    let seed = p.seed.unwrap_or(0);
    let spec = CtrwSpec::new(beta, WaitingLaw::Pareto, p.jumps.unwrap_or(JumpLaw::PlusMinusOne), c)?;
    let set = simulate_ctrw(&spec, t, n, seed)?;
    o.line(format!("{set}"));
    o.line(format!("second moment {:.6}", tail_moment(&set, 2.0)));
    if beta == 0.5 {
        let (_, target) = simulate_marginal_pair(&LevySymbol::brownian(1.0)?, t, n, seed.wrapping_add(1), 1)?;
        o.line(format!("KS to X(E_t) {:.6}", ks_distance(&set, &target)?));
    }
    out.write(o, "ctrw.txt", "rescaled CTRW positions", sample_bytes(&set)?)?;
    Ok(())
}

fn pde(p: &Params, cmd: Command, out: &Output, o: &mut Outcome, higher: bool) -> Result<()> {
    let (beta, n) = if higher {
        let n = require(p.n, "n", cmd)?;
        if n == 0 {
            return Err(CliError::Usage("--n must be at least 1".into()));
        }
        (1.0 / n as f64, Some(n))
    } else {
        (require(p.beta, "beta", cmd)?, None)
    };
    let mut config = StudyConfig::standard(beta);
    if let Some(m) = p.grid_m {
        let tau = p.tau.unwrap_or(1.0 / 32.0);
        config.levels = (0..3)
            .map(|i| Level {
                tau: tau / f64::from(1u32 << i),
                points: m << i,
            })
            .collect();
    } else if let Some(tau) = p.tau {
        for (i, level) in config.levels.iter_mut().enumerate() {
            level.tau = tau / f64::from(1u32 << i);
        }
    }
    if let Some(l) = p.grid_l {
        config.half_width = l;
    }
    if let Some(d) = p.dim {
        config.dim = d;
    }
    if let Some(m) = p.method {
        config.method = m;
    }
    let required = p.tolerance.unwrap_or(if beta >= 0.5 { 1.7 } else { 1.5 });
    let sym = outer_symbol(p)?;
    let (frac, high) = equivalence_study(&sym, n, &config, required)?;
    let mut studies: Vec<(&str, RefinementStudy)> = Vec::new();
    if !frac.reports.is_empty() {
        studies.push(("fractional", frac));
    }
    if let Some(h) = high {
        studies.push(("higher_order", h));
    }
    let mut all = Vec::new();
    for (name, study) in &studies {
        for r in &study.reports {
            o.line(format!("{} tau={:e} M={} max={:.6e} l1={:.6e}", r.equation, r.tau, r.points, r.max_norm, r.l1_norm));
        }
        let ratios: Vec<String> = study.ratios.iter().map(|r| format!("{r:.3}")).collect();
        o.check(name, study.pass, format!("refinement ratios [{}], required >= {required}", ratios.join(", ")));
        all.extend(study.reports.iter().cloned());
    }
    let mut csv = Vec::new();
    write_summary_csv(&all, &mut csv)?;
    out.write(o, "residuals.csv", "residual norms per level", csv)?;
    let reports: Vec<&RefinementStudy> = studies.iter().map(|(_, s)| s).collect();
    out.write(o, "residuals.json", "refinement studies", json_bytes(&reports)?)?;
    Ok(())
}

fn transform(p: &Params, cmd: Command, out: &Output, o: &mut Outcome) -> Result<()> {
    let n = require(p.n, "n", cmd)?;
    let psi = Complex64::new(require(p.psi, "psi", cmd)?, p.psi_im.unwrap_or(0.0));
    let s = require(p.s, "s", cmd)?;
    let tol = p.tolerance.unwrap_or(1e-12);
    let r = transform_identity(n, psi, s)?;
    let show = |z: Complex64| {
        if z.im == 0.0 {
            format!("{:.7}", z.re)
        } else {
            format!("{:.7}{:+.7}i", z.re, z.im)
        }
    };
    o.line(format!("lhs {}", show(r.lhs)));
    o.line(format!("rhs {}", show(r.rhs)));
    o.check("transform", r.rel_diff <= tol, format!("abs diff {:.3e}, rel diff {:.3e}", r.abs_diff, r.rel_diff));
    out.write(o, "transform.json", "both sides of the identity", json_bytes(&r)?)?;
    Ok(())
}

fn nonunique(out: &Output, o: &mut Outcome) -> Result<()> {
    let r = nonuniqueness_demo(&NonuniquenessConfig::default())?;
    o.line(format!("analytic residual {:.3e}", r.analytic_residual));
    o.line(format!(
        "finite-difference residual {:.3e} -> {:.3e}, order {:.3}",
        r.fd_residual_coarse, r.fd_residual_fine, r.fd_order
    ));
    for (t, sup) in &r.trace {
        o.line(format!("sup u({t}, x>=0) = {sup:.3e}"));
    }
    o.line(format!("half-line mass at t=1 {:.6} (exact {:.6})", r.half_line_mass, r.half_line_mass_exact));
    o.check("nonuniqueness", r.pass, "zero trace with nonzero solution".into());
    let mut trace = String::new();
    for (t, sup) in &r.trace {
        trace.push_str(&format!("{t:e} {sup:e}\n"));
    }
    out.write(o, "trace.dat", "t and sup_{x>=0} u(t,x)", trace.into_bytes())?;
    out.write(o, "nonuniqueness.json", "demo report", json_bytes(&r)?)?;
    Ok(())
}

fn compare(p: &Params, cmd: Command, out: &Output, o: &mut Outcome) -> Result<()> {
    let beta = require(p.beta, "beta", cmd)?;
    let t = require(p.t, "t", cmd)?;
    let tol = p.tolerance.unwrap_or(1e-6);
    let f = initial_density(p, 512, 20.0)?;
    let sym = outer_symbol(p)?;
    let u = subordinate_solution(&sym, beta, t, &f)?;
    let v = fourier_ml_solution(&sym, beta, t, &f)?;
    let d = u.l1_distance(&v)?;
    o.check("oracle agreement", d <= tol, format!("L1 distance {d:.3e}, tolerance {tol:e}"));
    out.write(o, "subordinated.csv", "quadrature solution", grid_bytes(&u)?)?;
    out.write(o, "mittag_leffler.csv", "Mittag-Leffler solution", grid_bytes(&v)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let base = Params {
            beta: Some(0.3),
            t: Some(2.0),
            ..Params::default()
        };
        let flags = Params {
            t: Some(5.0),
            ..Params::default()
        };
        let merged = base.overridden_by(flags);
        assert_eq!(merged.beta, Some(0.3));
        assert_eq!(merged.t, Some(5.0));
    }

    #[test]
    fn scenario_json() {
        let s = Scenario::from_json(r#"{"command": "verify_transform", "n": 3, "psi": -1.0, "s": 8.0}"#).unwrap();
        assert_eq!(s.command, Command::VerifyTransform);
        let o = run_scenario(&s).unwrap();
        assert!(o.passed);
        assert_eq!(o.lines[0], "lhs 0.0833333");
        assert!(Scenario::from_json(r#"{"command": "nope"}"#).is_err());
        assert!(Scenario::from_json(r#"{"command": "density", "bogus": 1}"#).is_err());
    }

    #[test]
    fn density_example() {
        let s = Scenario {
            command: Command::Density,
            params: Params {
                beta: Some(0.5),
                t: Some(1.0),
                ..Params::default()
            },
        };
        assert_eq!(run_scenario(&s).unwrap().lines, vec!["0.2196956"]);
    }

    #[test]
    fn missing_flag_is_usage_error() {
        let s = Scenario {
            command: Command::Density,
            params: Params::default(),
        };
        assert_eq!(run_scenario(&s).unwrap_err().exit_code(), 2);
    }
}
