//! Monte Carlo marginals of `X(|Y_t|)`, `X(E_t)` and continuous-time random
//! walks, with Kolmogorov–Smirnov comparison.
//!
//! Sampling is split into a fixed number of shards. Shard `i` draws from a
//! ChaCha8 stream derived from `(seed, label)` with stream id `i`, so a
//! sample set depends only on `(label, seed, N)` and not on the thread count.

use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::levy::LevySymbol;
use crate::stable::{InverseSubordinatorLaw, StableLaw};

pub const SHARDS: usize = 64;

/// Tagged Monte Carlo draws, stored row-major as `N` points of dimension `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    label: String,
    seed: u64,
    dim: usize,
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new(label: impl Into<String>, seed: u64, dim: usize, values: Vec<f64>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() || label.contains(['\n', '\r']) {
            return Err(Error::Usage("sample label must be a non-empty single line".into()));
        }
        if dim == 0 || values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::Usage(format!(
                "need at least one {dim}-dimensional draw, got {} values",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite draw {v} in sample set '{label}'")));
        }
        Ok(Self {
            label,
            seed,
            dim,
            values,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Coordinate `axis` of every draw, as a scalar set.
    pub fn component(&self, axis: usize) -> Result<SampleSet> {
        if axis >= self.dim {
            return Err(Error::Usage(format!("axis {axis} out of range for dim {}", self.dim)));
        }
        let values = (0..self.len()).map(|i| self.point(i)[axis]).collect();
        SampleSet::new(format!("{}[{axis}]", self.label), self.seed, 1, values)
    }

    /// First `n` draws.
    pub fn prefix(&self, n: usize) -> Result<SampleSet> {
        if n == 0 || n > self.len() {
            return Err(Error::Usage(format!("prefix length {n} out of range 1..={}", self.len())));
        }
        SampleSet::new(self.label.clone(), self.seed, self.dim, self.values[..n * self.dim].to_vec())
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.len() as f64;
        (0..self.dim)
            .map(|a| (0..self.len()).map(|i| self.point(i)[a]).sum::<f64>() / n)
            .collect()
    }

    /// Plain text: `# label=`, `# seed=`, `# N=`, `# dim=` header lines, then
    /// one draw per line with space-separated coordinates.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# label={}", self.label)?;
        writeln!(out, "# seed={}", self.seed)?;
        writeln!(out, "# N={}", self.len())?;
        writeln!(out, "# dim={}", self.dim)?;
        for i in 0..self.len() {
            let row: Vec<String> = self.point(i).iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut label = None;
        let mut seed = None;
        let mut count = None;
        let mut dim = None;
        let mut values = Vec::new();
        let bad = |msg: String| Error::Usage(format!("malformed sample file: {msg}"));
        for line in input.lines() {
            let line = line?;
            if let Some(h) = line.strip_prefix("# ") {
                let (key, val) = h.split_once('=').ok_or_else(|| bad(format!("header '{line}'")))?;
                let num = || val.trim().parse::<u64>().map_err(|_| bad(format!("header '{line}'")));
                match key {
                    "label" => label = Some(val.to_string()),
                    "seed" => seed = Some(num()?),
                    "N" => count = Some(num()? as usize),
                    "dim" => dim = Some(num()? as usize),
                    _ => return Err(bad(format!("unknown header '{key}'"))),
                }
                continue;
            }
            for tok in line.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|_| bad(format!("value '{tok}'")))?);
            }
        }
        let (label, seed, count, dim) = match (label, seed, count, dim) {
            (Some(l), Some(s), Some(n), Some(d)) => (l, s, n, d),
            _ => return Err(bad("missing header".into())),
        };
        let set = SampleSet::new(label, seed, dim, values)?;
        if set.len() != count {
            return Err(bad(format!("header says N={count} but {} draws follow", set.len())));
        }
        Ok(set)
    }
}

impl fmt::Display for SampleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (seed {}, N={}, dim={})", self.label, self.seed, self.len(), self.dim)
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Stream for shard `shard` of the set `(label, seed)`.
pub fn shard_rng(seed: u64, label: &str, shard: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(label));
    rng.set_stream(shard as u64);
    rng
}

/// Draws `n` points of dimension `dim` from `draw`, shard by shard, and
/// concatenates the shards in order.
pub fn sample_sharded<F>(label: &str, seed: u64, n: usize, dim: usize, draw: F) -> Result<SampleSet>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    if n == 0 {
        return Err(Error::Usage("sample size must be at least 1".into()));
    }
    let base = n / SHARDS;
    let extra = n % SHARDS;
    let chunks: Vec<Vec<f64>> = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let count = base + usize::from(shard < extra);
            let mut rng = shard_rng(seed, label, shard);
            let mut out = vec![0.0; count * dim];
            for point in out.chunks_mut(dim) {
                draw(&mut rng, point);
            }
            out
        })
        .collect();
    SampleSet::new(label, seed, dim, chunks.concat())
}

/// Outer processes whose marginal `X(s)` can be sampled directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OuterProcess {
    /// `X(s) ~ N(0, 2Ds I)`.
    Brownian { diffusivity: f64 },
    /// `E exp(ik·X(s)) = exp(-sD‖k‖^α)`, sampled as `√A G` with `A`
    /// positive `α/2`-stable.
    IsotropicStable { alpha: f64, diffusivity: f64 },
}

impl OuterProcess {
    pub fn from_symbol(sym: &LevySymbol) -> Result<Self> {
        match *sym {
            LevySymbol::Brownian { diffusivity } => Ok(Self::Brownian { diffusivity }),
            LevySymbol::IsotropicStable { alpha: 2.0, diffusivity } => {
                Ok(Self::Brownian { diffusivity })
            }
            LevySymbol::IsotropicStable { alpha, diffusivity } => {
                Ok(Self::IsotropicStable { alpha, diffusivity })
            }
            _ => Err(Error::Usage(
                "Monte Carlo outer process must be Brownian or isotropic stable".into(),
            )),
        }
    }

    /// Writes a draw of `X(s)` into `out`.
    pub fn sample_at<R: Rng + ?Sized>(&self, s: f64, rng: &mut R, out: &mut [f64]) {
        let scale = match *self {
            Self::Brownian { diffusivity } => (2.0 * diffusivity * s).sqrt(),
            Self::IsotropicStable { alpha, diffusivity } => {
                let mixing = StableLaw::new(0.5 * alpha)
                    .expect("alpha in (0,2) gives a valid index")
                    .sample(rng);
                (2.0 * (s * diffusivity).powf(2.0 / alpha) * mixing).sqrt()
            }
        };
        for v in out.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *v = scale * g;
        }
    }
}

/// Symmetric `α`-stable variable with `E e^{ikS} = e^{-|k|^α}`.
pub fn sample_symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let outer = if alpha == 2.0 {
        OuterProcess::Brownian { diffusivity: 1.0 }
    } else {
        OuterProcess::IsotropicStable {
            alpha,
            diffusivity: 1.0,
        }
    };
    let mut x = [0.0];
    outer.sample_at(1.0, rng, &mut x);
    x[0]
}

pub fn symmetric_stable_set(alpha: f64, n: usize, seed: u64) -> Result<SampleSet> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::Usage(format!("stable index must lie in (0,2], got {alpha}")));
    }
    sample_sharded(&format!("stable(alpha={alpha})"), seed, n, 1, |rng, p| {
        p[0] = sample_symmetric_stable(alpha, rng)
    })
}

/// Draws of `E_t` for the given index.
pub fn hitting_time_set(beta: f64, t: f64, n: usize, seed: u64) -> Result<SampleSet> {
    let law = InverseSubordinatorLaw::new(StableLaw::new(beta)?, t)?;
    sample_sharded(&format!("E_t(beta={beta},t={t})"), seed, n, 1, |rng, p| {
        p[0] = law.sample(rng)
    })
}

/// Draws of `D_1` for the given index.
pub fn stable_subordinator_set(beta: f64, n: usize, seed: u64) -> Result<SampleSet> {
    let law = StableLaw::new(beta)?;
    sample_sharded(&format!("D_1(beta={beta})"), seed, n, 1, |rng, p| p[0] = law.sample(rng))
}

/// `(A, B)` with `A = X(|Y_t|)`, `Y_t ~ N(0, 2t)`, and `B = X(E_t)` for the
/// inverse `1/2`-stable subordinator.
pub fn simulate_marginal_pair(
    outer: &LevySymbol,
    t: f64,
    n: usize,
    seed: u64,
    dim: usize,
) -> Result<(SampleSet, SampleSet)> {
    if !(1..=2).contains(&dim) {
        return Err(Error::Usage(format!("dimension must be 1 or 2, got {dim}")));
    }
    outer.check_dimension(dim)?;
    let process = OuterProcess::from_symbol(outer)?;
    let hitting = InverseSubordinatorLaw::new(StableLaw::new(0.5)?, t)?;
    let brownian_scale = (2.0 * t).sqrt();
    let a = sample_sharded(&format!("X(|Y_t|),t={t}"), seed, n, dim, |rng, p| {
        let z: f64 = StandardNormal.sample(rng);
        process.sample_at(brownian_scale * z.abs(), rng, p)
    })?;
    let b = sample_sharded(&format!("X(E_t),t={t}"), seed, n, dim, |rng, p| {
        let s = hitting.sample(rng);
        process.sample_at(s, rng, p)
    })?;
    Ok((a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaitingLaw {
    /// `P(J > t) = t^{-β}` for `t >= 1`.
    Pareto,
    /// `J = 1`.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpLaw {
    PlusMinusOne,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtrwSpec {
    pub beta: f64,
    pub waiting: WaitingLaw,
    pub jumps: JumpLaw,
    pub scale: f64,
}

impl CtrwSpec {
    pub fn new(beta: f64, waiting: WaitingLaw, jumps: JumpLaw, scale: f64) -> Result<Self> {
        let spec = Self {
            beta,
            waiting,
            jumps,
            scale,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Usage(format!("waiting-time index must lie in (0,1), got {}", self.beta)));
        }
        if !(self.scale >= 1.0 && self.scale.is_finite()) {
            return Err(Error::Usage(format!("CTRW scale must be >= 1, got {}", self.scale)));
        }
        Ok(())
    }

    /// Space factor mapping `V(N_{ct})` onto `B(E_t)` with `Var B(s) = 2s`.
    ///
    /// Pareto waits give `N_{ct} ≈ c^β E_t / Γ(1-β)`, unit waits give
    /// `N_{ct} ≈ ct`; both jump laws have unit variance.
    pub fn space_factor(&self) -> f64 {
        match self.waiting {
            WaitingLaw::Pareto => (2.0 * gamma(1.0 - self.beta) / self.scale.powf(self.beta)).sqrt(),
            WaitingLaw::Unit => (2.0 / self.scale).sqrt(),
        }
    }

    fn waiting_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.waiting {
            WaitingLaw::Pareto => {
                // 1 - U lies in (0, 1]
                let u: f64 = 1.0 - rng.random::<f64>();
                u.powf(-1.0 / self.beta)
            }
            WaitingLaw::Unit => 1.0,
        }
    }

    /// `N_h = max{n : J_1 + ... + J_n <= h}`.
    pub fn renewal_count<R: Rng + ?Sized>(&self, horizon: f64, rng: &mut R) -> u64 {
        if self.waiting == WaitingLaw::Unit {
            return horizon.max(0.0).floor() as u64;
        }
        let mut elapsed = 0.0;
        let mut count = 0;
        loop {
            elapsed += self.waiting_time(rng);
            if elapsed > horizon {
                return count;
            }
            count += 1;
        }
    }

    /// `V(n)`, the sum of `n` jumps.
    pub fn walk_position<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match self.jumps {
            JumpLaw::PlusMinusOne => {
                let up = Binomial::new(n, 0.5).expect("p = 1/2 is valid").sample(rng);
                2.0 * up as f64 - n as f64
            }
            JumpLaw::Normal => {
                let z: f64 = StandardNormal.sample(rng);
                (n as f64).sqrt() * z
            }
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be positive, got {t}")))
    }
}

fn ctrw_label(spec: &CtrwSpec, t: f64) -> String {
    format!(
        "ctrw(beta={},waits={:?},jumps={:?},c={},t={t})",
        spec.beta, spec.waiting, spec.jumps, spec.scale
    )
}

/// Rescaled positions `space_factor · V(N_{ct})`.
pub fn simulate_ctrw(spec: &CtrwSpec, t: f64, n: usize, seed: u64) -> Result<SampleSet> {
    spec.validate()?;
    check_time(t)?;
    let horizon = spec.scale * t;
    let factor = spec.space_factor();
    sample_sharded(&ctrw_label(spec, t), seed, n, 1, |rng, p| {
        let count = spec.renewal_count(horizon, rng);
        p[0] = factor * spec.walk_position(count, rng);
    })
}

/// Renewal counts `N_{ct}` drawn with the same streams as [`simulate_ctrw`].
pub fn simulate_renewal_counts(spec: &CtrwSpec, t: f64, n: usize, seed: u64) -> Result<Vec<u64>> {
    spec.validate()?;
    check_time(t)?;
    let horizon = spec.scale * t;
    let set = sample_sharded(&ctrw_label(spec, t), seed, n, 1, |rng, p| {
        p[0] = spec.renewal_count(horizon, rng) as f64;
    })?;
    Ok(set.values().iter().map(|v| *v as u64).collect())
}

fn scalar_sorted(a: &SampleSet) -> Result<Vec<f64>> {
    if a.dim() != 1 {
        return Err(Error::Usage(format!(
            "KS statistics need scalar samples, '{}' has dim {}",
            a.label(),
            a.dim()
        )));
    }
    let mut v = a.values().to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_distance(a: &SampleSet, b: &SampleSet) -> Result<f64> {
    let x = scalar_sorted(a)?;
    let y = scalar_sorted(b)?;
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_against_cdf<F: Fn(f64) -> f64>(a: &SampleSet, cdf: F) -> Result<f64> {
    let x = scalar_sorted(a)?;
    let n = x.len() as f64;
    Ok(x.iter().enumerate().fold(0.0f64, |d, (i, v)| {
        let f = cdf(*v);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    }))
}

/// Asymptotic two-sample KS threshold `c(α) √((n+m)/(nm))`,
/// `c(α) = √(-ln(α/2)/2)`.
pub fn ks_critical_value(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(0.5 * alpha).ln() / 2.0).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}

/// Empirical `E‖X‖^ρ`; `ρ = 0` gives exactly 1.
pub fn tail_moment(a: &SampleSet, rho: f64) -> f64 {
    if rho == 0.0 {
        return 1.0;
    }
    let total: f64 = (0..a.len())
        .map(|i| {
            let r2: f64 = a.point(i).iter().map(|v| v * v).sum();
            r2.sqrt().powf(rho)
        })
        .sum();
    total / a.len() as f64
}

/// `tail_moment` on nested prefixes; prefixes longer than the set are skipped.
pub fn tail_moment_prefixes(a: &SampleSet, rho: f64, prefixes: &[usize]) -> Result<Vec<(usize, f64)>> {
    prefixes
        .iter()
        .filter(|n| **n <= a.len())
        .map(|&n| Ok((n, tail_moment(&a.prefix(n)?, rho))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn set(values: Vec<f64>) -> SampleSet {
        SampleSet::new("t", 0, 1, values).unwrap()
    }

    #[test]
    fn ks_examples() {
        let a = set(vec![0.1, 0.5, 0.3, 2.0]);
        assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        let lo = set((0..100).map(f64::from).collect());
        let hi = set((1000..1100).map(f64::from).collect());
        assert_eq!(ks_distance(&lo, &hi).unwrap(), 1.0);
        assert_eq!(ks_distance(&hi, &lo).unwrap(), 1.0);
        let b = set(vec![0.2, 0.4, 0.6]);
        assert_eq!(ks_distance(&a, &b).unwrap(), ks_distance(&b, &a).unwrap());
    }

    #[test]
    fn ks_handles_ties() {
        let a = set(vec![1.0, 1.0, 2.0, 2.0]);
        let b = set(vec![1.0, 2.0]);
        assert_eq!(ks_distance(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn ks_threshold_value() {
        assert_relative_eq!(ks_critical_value(0.01, 100_000, 100_000), 1.627_623_630_7 * (2e-5f64).sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn empty_and_vector_sets_rejected() {
        assert!(matches!(SampleSet::new("x", 0, 1, vec![]), Err(Error::Usage(_))));
        let v = SampleSet::new("x", 0, 2, vec![1.0, 2.0]).unwrap();
        assert!(matches!(ks_distance(&v, &v), Err(Error::Usage(_))));
    }

    #[test]
    fn text_roundtrip() {
        let s = SampleSet::new("pair", 42, 2, vec![1.5, -2.0, 3.25e-9, 0.0]).unwrap();
        let mut buf = Vec::new();
        s.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# label=pair\n# seed=42\n# N=2\n# dim=2\n"));
        assert_eq!(SampleSet::read_text(&buf[..]).unwrap(), s);
    }

    #[test]
    fn sharding_is_reproducible() {
        let draw = |rng: &mut ChaCha8Rng, p: &mut [f64]| p[0] = rng.random();
        let a = sample_sharded("x", 7, 1001, 1, draw).unwrap();
        let b = sample_sharded("x", 7, 1001, 1, draw).unwrap();
        let c = sample_sharded("y", 7, 1001, 1, draw).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values(), c.values());
        assert_eq!(a.len(), 1001);
    }

    #[test]
    fn unit_waits_count_exactly() {
        let spec = CtrwSpec::new(0.5, WaitingLaw::Unit, JumpLaw::PlusMinusOne, 1.0).unwrap();
        for t in [0.5, 1.0, 3.7, 10.0] {
            let counts = simulate_renewal_counts(&spec, t, 50, 1).unwrap();
            assert!(counts.iter().all(|n| *n == t.floor() as u64));
        }
    }

    #[test]
    fn pareto_waits_are_at_least_one() {
        let spec = CtrwSpec::new(0.5, WaitingLaw::Pareto, JumpLaw::Normal, 10.0).unwrap();
        let mut rng = shard_rng(3, "w", 0);
        assert!((0..10_000).all(|_| spec.waiting_time(&mut rng) >= 1.0));
        assert_eq!(spec.renewal_count(0.999, &mut rng), 0);
    }

    #[test]
    fn zero_order_moment_is_one() {
        let s = set(vec![0.0, 3.0, -1.0]);
        assert_eq!(tail_moment(&s, 0.0), 1.0);
        assert_relative_eq!(tail_moment(&s, 2.0), 10.0 / 3.0);
    }

    #[test]
    fn unsupported_outer_rejected() {
        let sym = LevySymbol::coordinate_stable(vec![1.5], 1.0).unwrap();
        assert!(matches!(simulate_marginal_pair(&sym, 1.0, 10, 0, 1), Err(Error::Usage(_))));
    }
}
