//! Numerical integration: adaptive Gauss–Kronrod (21 point) and fixed
//! Gauss–Legendre panels.
//!
//! The adaptive integrator is generic over the integrand's value type so the
//! same code integrates real densities and complex contour integrands.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be accumulated by a quadrature rule.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Stopping rule for [`integrate`]: converged once the error estimate is
/// below `max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            max_intervals: 2000,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-14, 1e-12)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

/// One 21-point Gauss–Kronrod panel on `[a, b]`.
fn gk21<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> Panel<T> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let f_center = f(center);
    let mut kronrod = f_center * WGK[10];
    let mut gauss = T::zero();
    let mut abs_sum = f_center.magnitude() * WGK[10];
    let mut values = [(T::zero(), T::zero()); 10];

    for (j, slot) in values.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let lo = f(center - dx);
        let hi = f(center + dx);
        kronrod = kronrod + (lo + hi) * WGK[j];
        abs_sum += WGK[j] * (lo.magnitude() + hi.magnitude());
        // Gauss nodes are the odd-indexed Kronrod abscissae.
        if j % 2 == 1 {
            gauss = gauss + (lo + hi) * WG[j / 2];
        }
        *slot = (lo, hi);
    }

    let mean = kronrod * 0.5;
    let mut asc = WGK[10] * (f_center - mean).magnitude();
    for (j, (lo, hi)) in values.iter().enumerate() {
        asc += WGK[j] * ((*lo - mean).magnitude() + (*hi - mean).magnitude());
    }

    let abs_half = half.abs();
    let result = kronrod * half;
    let resabs = abs_sum * abs_half;
    let resasc = asc * abs_half;
    let mut err = ((kronrod - gauss) * half).magnitude();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }

    Panel {
        a,
        b,
        value: result,
        error: err,
    }
}

/// Adaptive bisection on the panel with the largest error estimate.
pub fn integrate<T, F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Usage(format!(
            "integration limits must be finite, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(Estimate {
            value: T::zero(),
            error: 0.0,
            intervals: 0,
        });
    }

    let mut panels = vec![gk21(&mut f, a, b)];
    loop {
        let (value, error) = panels
            .iter()
            .fold((T::zero(), 0.0), |(v, e), p| (v + p.value, e + p.error));
        let target = tol.abs.max(tol.rel * value.magnitude());
        if error <= target {
            return Ok(Estimate {
                value,
                error,
                intervals: panels.len(),
            });
        }
        if panels.len() >= tol.max_intervals {
            return Err(Error::Numerical(format!(
                "adaptive quadrature on [{a}, {b}] stopped after {} panels: \
                 error estimate {error:e} exceeds target {target:e} (value magnitude {:e})",
                panels.len(),
                value.magnitude()
            )));
        }

        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::Numerical(format!(
                "adaptive quadrature cannot bisect [{}, {}] any further",
                p.a, p.b
            )));
        }
        panels.push(gk21(&mut f, p.a, mid));
        panels.push(gk21(&mut f, mid, p.b));
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;

    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
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
    (nodes, weights)
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

/// A composite Gauss–Legendre rule: the same `order`-point rule mapped onto
/// each panel `[breaks[i], breaks[i + 1]]`.
pub fn composite_gauss_legendre(breaks: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let panels = breaks.len().saturating_sub(1);
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(c + h * xi);
            weights.push(h * wi);
        }
    }
    (nodes, weights)
}
