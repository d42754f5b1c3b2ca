//! Acceptance suite. Each test prints one `[criterion N] PASS|FAIL` line and
//! asserts the same condition. Runtime budgets are part of the condition.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fracsub::grid::{Grid, GridFunction};
use fracsub::levy::LevySymbol;
use fracsub::montecarlo::{
    hitting_time_set, ks_critical_value, ks_distance, simulate_ctrw, simulate_marginal_pair, symmetric_stable_set,
    tail_moment_prefixes, CtrwSpec, JumpLaw, SampleSet, WaitingLaw,
};
use fracsub::stable::StableLaw;
use fracsub::subordination::{fourier_ml_solution, subordinate_solution};
use fracsub::verify::{equivalence_study, nonuniqueness_demo, transform_identity, NonuniquenessConfig, StudyConfig};

const N: usize = 100_000;
const KS_LEVEL: f64 = 0.01;

fn report(id: u32, name: &str, pass: bool, detail: &str, elapsed: Duration, budget: Option<Duration>) -> bool {
    let in_time = budget.is_none_or(|b| elapsed <= b);
    let ok = pass && in_time;
    let budget = budget.map_or(String::new(), |b| format!(" / budget {:.0} s", b.as_secs_f64()));
    println!(
        "[criterion {id}] {} {name}: {detail} ({:.2} s{budget})",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    ok
}

fn second_moment_with_se(set: &SampleSet) -> (f64, f64) {
    let sq: Vec<f64> = set.values().iter().map(|v| v * v).collect();
    let n = sq.len() as f64;
    let m = sq.iter().sum::<f64>() / n;
    let var = sq.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn criterion_01_half_stable_density_matches_closed_form() {
    let start = Instant::now();
    let law = StableLaw::new(0.5).unwrap();
    let mut worst = 0.0f64;
    for i in 0..50 {
        let t = 10f64.powf(-2.0 + 4.0 * i as f64 / 49.0);
        let exact = (4.0 * PI * t.powi(3)).powf(-0.5) * (-1.0 / (4.0 * t)).exp();
        worst = worst.max((law.pdf(t).unwrap() - exact).abs());
    }
    let ok = report(
        1,
        "density oracle",
        worst <= 1e-10,
        &format!("max |g - closed form| = {worst:.3e} over 50 points (tol 1e-10)"),
        start.elapsed(),
        Some(Duration::from_secs(1)),
    );
    assert!(ok);
}

#[test]
fn criterion_02_laplace_identity() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for beta in [0.3, 1.0 / 3.0, 0.5, 0.8] {
        let law = StableLaw::new(beta).unwrap();
        for i in 0..20 {
            let s = 10f64.powf(-1.0 + 2.0 * i as f64 / 19.0);
            worst = worst.max((law.laplace_of_pdf(s).unwrap() - (-s.powf(beta)).exp()).abs());
        }
    }
    let ok = report(
        2,
        "Laplace identity",
        worst <= 1e-6,
        &format!("max |L[g](s) - exp(-s^beta)| = {worst:.3e} (tol 1e-6)"),
        start.elapsed(),
        Some(Duration::from_secs(10)),
    );
    assert!(ok);
}

#[test]
fn criterion_03_transform_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_101);
    let mut worst = 0.0f64;
    for n in 2..=5u32 {
        for _ in 0..1000 {
            let psi = Complex64::new(rng.random_range(-10.0..=0.0), rng.random_range(-10.0..=10.0));
            let lo = (2.0 * psi.norm().powi(n as i32)).max(1.0);
            let s = rng.random_range(lo..=(2.0 * lo).max(100.0));
            worst = worst.max(transform_identity(n, psi, s).unwrap().rel_diff);
        }
    }
    let ok = report(
        3,
        "transform identity",
        worst <= 1e-12,
        &format!("max |A-B|/|B| = {worst:.3e} over 4000 pairs (tol 1e-12)"),
        start.elapsed(),
        Some(Duration::from_secs(1)),
    );
    assert!(ok);
}

fn equivalence_criterion(id: u32, beta: f64, n: u32, required: f64, budget: u64) -> bool {
    let start = Instant::now();
    let sym = LevySymbol::brownian(1.0).unwrap();
    let config = StudyConfig::standard(beta);
    let (frac, high) = equivalence_study(&sym, Some(n), &config, required).unwrap();
    let high = high.unwrap();
    let fmt = |r: &[f64]| r.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", ");
    report(
        id,
        &format!("equivalence beta=1/{n}"),
        frac.pass && high.pass,
        &format!(
            "Caputo residual ratios [{}], order-{n} residual ratios [{}], required >= {required}; finest M={}",
            fmt(&frac.ratios),
            fmt(&high.ratios),
            config.levels.last().unwrap().points
        ),
        start.elapsed(),
        Some(Duration::from_secs(budget)),
    )
}

#[test]
fn criterion_04_half_order_equivalence() {
    assert!(equivalence_criterion(4, 0.5, 2, 1.7, 120));
}

#[test]
fn criterion_05_third_order_equivalence() {
    assert!(equivalence_criterion(5, 1.0 / 3.0, 3, 1.5, 180));
}

#[test]
fn criterion_06_oracle_agreement() {
    let start = Instant::now();
    let f = GridFunction::gaussian_density(Grid::new(1, 20.0, 512).unwrap(), 1.0).unwrap();
    let mut worst = 0.0f64;
    for sym in [LevySymbol::brownian(1.0).unwrap(), LevySymbol::isotropic_stable(1.5, 1.0).unwrap()] {
        for beta in [1.0 / 3.0, 0.5] {
            for t in [0.25, 1.0, 4.0] {
                let u = subordinate_solution(&sym, beta, t, &f).unwrap();
                let v = fourier_ml_solution(&sym, beta, t, &f).unwrap();
                worst = worst.max(u.l1_distance(&v).unwrap());
            }
        }
    }
    let ok = report(
        6,
        "oracle agreement",
        worst <= 1e-6,
        &format!("max L1 distance {worst:.3e} over 12 cases (tol 1e-6)"),
        start.elapsed(),
        Some(Duration::from_secs(120)),
    );
    assert!(ok);
}

#[test]
fn criterion_07_marginal_equality() {
    let start = Instant::now();
    let sym = LevySymbol::brownian(1.0).unwrap();
    let threshold = ks_critical_value(KS_LEVEL, N, N);
    let mut pass = true;
    let mut parts = Vec::new();
    let mut moment = (0.0, 0.0);
    for (i, t) in [0.5, 1.0, 4.0].into_iter().enumerate() {
        let (a, b) = simulate_marginal_pair(&sym, t, N, 7000 + i as u64, 1).unwrap();
        let d = ks_distance(&a, &b).unwrap();
        pass &= d < threshold;
        parts.push(format!("t={t}: KS {d:.4}"));
        if t == 1.0 {
            moment = second_moment_with_se(&a);
        }
    }
    let want = 4.0 / PI.sqrt();
    pass &= (moment.0 - want).abs() <= 3.0 * moment.1;
    let ok = report(
        7,
        "marginal equality",
        pass,
        &format!(
            "{} (threshold {threshold:.4}); E[X^2] at t=1 {:.4} vs {want:.4} (3 se = {:.4})",
            parts.join(", "),
            moment.0,
            3.0 * moment.1
        ),
        start.elapsed(),
        Some(Duration::from_secs(30)),
    );
    assert!(ok);
}

#[test]
fn criterion_08_ctrw_convergence() {
    let start = Instant::now();
    let (_, target) = simulate_marginal_pair(&LevySymbol::brownian(1.0).unwrap(), 1.0, N, 8000, 1).unwrap();
    let ks = |jumps: JumpLaw, c: f64| {
        let spec = CtrwSpec::new(0.5, WaitingLaw::Pareto, jumps, c).unwrap();
        ks_distance(&simulate_ctrw(&spec, 1.0, N, 8001).unwrap(), &target).unwrap()
    };
    let d: Vec<f64> = [10.0, 100.0, 1000.0].iter().map(|c| ks(JumpLaw::PlusMinusOne, *c)).collect();
    let normal: Vec<f64> = [10.0, 100.0, 1000.0].iter().map(|c| ks(JumpLaw::Normal, *c)).collect();
    let decreasing = d[2] < d[0];
    let close = d[2] <= 0.02;
    let ok = report(
        8,
        "CTRW convergence",
        decreasing && close,
        &format!(
            "+-1 jumps KS at c=10,100,1000: {:.4}, {:.4}, {:.4} (decrease: {decreasing}, <= 0.02 at c=1000: {close}); \
             normal jumps for reference: {:.4}, {:.4}, {:.4}",
            d[0], d[1], d[2], normal[0], normal[1], normal[2]
        ),
        start.elapsed(),
        Some(Duration::from_secs(120)),
    );
    assert!(ok);
}

#[test]
fn criterion_09_self_similarity() {
    let start = Instant::now();
    let sym = LevySymbol::brownian(1.0).unwrap();
    let threshold = ks_critical_value(KS_LEVEL, N, N);
    let (late, late_e) = simulate_marginal_pair(&sym, 16.0, N, 9000, 1).unwrap();
    let (early, early_e) = simulate_marginal_pair(&sym, 1.0, N, 9001, 1).unwrap();
    let double = |s: &SampleSet| SampleSet::new("2Z_t", s.seed(), 1, s.values().iter().map(|v| 2.0 * v).collect()).unwrap();
    let d_abs = ks_distance(&late, &double(&early)).unwrap();
    let d_inv = ks_distance(&late_e, &double(&early_e)).unwrap();
    let ok = report(
        9,
        "self-similarity",
        d_abs < threshold && d_inv < threshold,
        &format!("KS(Z_16, 2 Z_1): X(|Y|) {d_abs:.4}, X(E) {d_inv:.4} (threshold {threshold:.4})"),
        start.elapsed(),
        None,
    );
    assert!(ok);
}

#[test]
fn criterion_10_moment_contrast() {
    let start = Instant::now();
    let e = hitting_time_set(0.5, 1.0, N, 10_000).unwrap();
    let pe = tail_moment_prefixes(&e, 1.0, &[10_000, 30_000, 100_000]).unwrap();
    let (lo, hi) = pe.iter().fold((f64::INFINITY, 0.0f64), |(l, h), (_, v)| (l.min(*v), h.max(*v)));
    let stable_e = hi / lo - 1.0 <= 0.05;
    let s = symmetric_stable_set(1.5, N, 10_001).unwrap();
    let ps = tail_moment_prefixes(&s, 2.0, &[1_000, 10_000, 100_000]).unwrap();
    let growth = ps[2].1 / ps[0].1;
    let fmt = |p: &[(usize, f64)]| p.iter().map(|(n, v)| format!("{n}:{v:.4}")).collect::<Vec<_>>().join(" ");
    let ok = report(
        10,
        "moment contrast",
        stable_e && growth >= 2.0,
        &format!(
            "E|E_1| prefixes [{}] spread {:.2}%; E|S_1|^2 prefixes [{}] growth x{growth:.2} (need >= 2)",
            fmt(&pe),
            100.0 * (hi / lo - 1.0),
            fmt(&ps)
        ),
        start.elapsed(),
        None,
    );
    assert!(ok);
}

#[test]
fn criterion_11_nonuniqueness() {
    let start = Instant::now();
    let r = nonuniqueness_demo(&NonuniquenessConfig::default()).unwrap();
    let trace = r.trace.iter().find(|(t, _)| *t == 0.01).map(|(_, v)| *v).unwrap();
    let pass = r.fd_order >= 1.8 && trace <= 1e-8 && (r.half_line_mass - 0.2397).abs() <= 1e-3;
    let ok = report(
        11,
        "non-uniqueness",
        pass,
        &format!(
            "FD order {:.3} (need >= 1.8), sup u(0.01) = {trace:.3e}, mass at t=1 {:.5}",
            r.fd_order, r.half_line_mass
        ),
        start.elapsed(),
        Some(Duration::from_secs(5)),
    );
    assert!(ok);
}

fn run_cli(args: &[&str], out: &Path) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_fracsub"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs");
    status.status.code().unwrap_or(-1)
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_12_determinism() {
    let start = Instant::now();
    let scenarios: Vec<Vec<&str>> = vec![
        vec!["simulate", "--t", "1", "--samples", "20000", "--seed", "12", "--threads", "3"],
        vec!["ctrw", "--scale", "100", "--samples", "20000", "--seed", "12", "--threads", "2"],
        vec!["solve", "--beta", "0.5", "--t", "2", "--alpha", "1.5", "--threads", "4"],
        vec!["sample", "--beta", "0.3", "--t", "1", "--samples", "5000", "--seed", "4"],
        vec!["verify", "pde", "--n", "2", "--threads", "2"],
    ];
    let mut pass = true;
    let mut compared = 0;
    for args in &scenarios {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let (ca, cb) = (run_cli(args, a.path()), run_cli(args, b.path()));
        let (fa, fb) = (dir_contents(a.path()), dir_contents(b.path()));
        pass &= ca == 0 && cb == 0 && !fa.is_empty() && fa == fb;
        compared += fa.len();
    }
    let ok = report(
        12,
        "determinism",
        pass,
        &format!("{} scenarios run twice, {compared} output files byte-identical: {pass}", scenarios.len()),
        start.elapsed(),
        None,
    );
    assert!(ok);
}
