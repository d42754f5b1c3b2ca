//! One-sided stable subordinator `D_t` and its inverse (first passage) process
//! `E_t = inf{x > 0 : D_x > t}`.
//!
//! `D_1` has Laplace transform `E[exp(-s D_1)] = exp(-s^β)`. Its density is
//! evaluated from Kanter's representation
//!
//! ```text
//! D_1 = (K(πU) / W)^{(1-β)/β},  U ~ Uniform(0,1),  W ~ Exp(1)
//! K(φ) = [ sin(βφ)^β · sin((1-β)φ)^{1-β} / sin φ ]^{1/(1-β)}
//! ```
//!
//! which yields the single integral
//! `g(x) = β/((1-β)πx) ∫_0^π u e^{-u} dφ` with `u = K(φ) x^{-β/(1-β)}`.
//! For large `x` the integrand concentrates at `φ = π`, so the convergent
//! power series in `x^{-β}` is used there instead.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};

/// Above this value of `x^{-β}` the integral representation is used.
const SERIES_LIMIT: f64 = 0.3;

/// `exp(-745)` underflows to zero in f64.
const UNDERFLOW_EXPONENT: f64 = 740.0;

const DENSITY_TOL: Tolerance = Tolerance {
    abs: 0.0,
    rel: 1e-13,
    max_intervals: 4000,
};

/// Standard one-sided stable law with index `β ∈ (0,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableLaw {
    beta: f64,
    /// `K(0+) = (β^β (1-β)^{1-β})^{1/(1-β)}`, the minimum of the Kanter kernel.
    kernel_floor: f64,
}

impl StableLaw {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Usage(format!(
                "stability index must lie in (0,1), got {beta}"
            )));
        }
        let kernel_floor =
            ((beta * beta.ln() + (1.0 - beta) * (1.0 - beta).ln()) / (1.0 - beta)).exp();
        Ok(Self { beta, kernel_floor })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Kanter's kernel `K(φ)` on `(0, π)`; increasing from `K(0+)` to `+∞`.
    pub fn kanter_kernel(&self, phi: f64) -> f64 {
        let b = self.beta;
        let log_k = (b * (b * phi).sin().ln() + (1.0 - b) * ((1.0 - b) * phi).sin().ln()
            - phi.sin().ln())
            / (1.0 - b);
        log_k.exp()
    }

    /// Density `g_β(t)` of `D_1`.
    pub fn pdf(&self, t: f64) -> Result<f64> {
        check_positive("density argument", t)?;
        if t.is_infinite() {
            return Ok(0.0);
        }
        let z = t.powf(-self.beta);
        if z <= SERIES_LIMIT {
            Ok(z * series_sum(self.beta, z) / (PI * t))
        } else {
            self.pdf_by_integral(t)
        }
    }

    fn pdf_by_integral(&self, t: f64) -> Result<f64> {
        let b = self.beta;
        let eps = t.powf(-b / (1.0 - b));
        if self.kernel_floor * eps > UNDERFLOW_EXPONENT {
            return Ok(0.0);
        }
        let integral = integrate(
            |phi| {
                let u = self.kanter_kernel(phi) * eps;
                if u > UNDERFLOW_EXPONENT {
                    0.0
                } else {
                    u * (-u).exp()
                }
            },
            0.0,
            PI,
            DENSITY_TOL,
        )?;
        Ok(b / ((1.0 - b) * PI * t) * integral.value)
    }

    /// Distribution function `P(D_1 <= t)`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        if t.is_infinite() {
            return Ok(1.0);
        }
        let b = self.beta;
        let eps = t.powf(-b / (1.0 - b));
        if self.kernel_floor * eps > UNDERFLOW_EXPONENT {
            return Ok(0.0);
        }
        let integral = integrate(
            |phi| {
                let u = self.kanter_kernel(phi) * eps;
                if u > UNDERFLOW_EXPONENT {
                    0.0
                } else {
                    (-u).exp()
                }
            },
            0.0,
            PI,
            Tolerance::new(1e-15, 1e-12),
        )?;
        Ok(integral.value / PI)
    }

    /// `∫_0^∞ e^{-st} g_β(t) dt`, integrated numerically from the density.
    ///
    /// The integral runs over `ln t`; below `t_lo` the density is below
    /// `exp(-740)` and above `45/s` the factor `e^{-st}` is below `exp(-45)`.
    pub fn laplace_of_pdf(&self, s: f64) -> Result<f64> {
        check_positive("Laplace variable", s)?;
        let b = self.beta;
        let t_lo = (self.kernel_floor / UNDERFLOW_EXPONENT).powf((1.0 - b) / b);
        let t_hi = 45.0 / s;
        if t_hi <= t_lo {
            return Ok(0.0);
        }
        let mut failure = None;
        let est = integrate(
            |u: f64| {
                let t = u.exp();
                match self.pdf(t) {
                    Ok(g) => (-s * t).exp() * g * t,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            t_lo.ln(),
            t_hi.ln(),
            Tolerance::new(1e-14, 1e-11),
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(est.value),
        }
    }

    /// Draw `D_1` by Kanter's product representation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = Open01.sample(rng);
        let w: f64 = Exp1.sample(rng);
        (self.kanter_kernel(PI * u) / w).powf((1.0 - self.beta) / self.beta)
    }

    /// `σ*` such that `P(E_1 > σ*) <= tail`, from `P(D_1 <= x) <= exp(-K(0+) x^{-β/(1-β)})`.
    ///
    /// For general `t`, `E_t` has the law of `t^β E_1`, so the cutoff scales by `t^β`.
    pub fn hitting_time_cutoff(&self, tail: f64) -> f64 {
        assert!(tail > 0.0 && tail < 1.0, "tail probability must lie in (0,1)");
        ((-tail.ln()) / self.kernel_floor).powf(1.0 - self.beta)
    }
}

/// Law of the hitting time `E_t` for a fixed physical time `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseSubordinatorLaw {
    base: StableLaw,
    t: f64,
}

impl InverseSubordinatorLaw {
    pub fn new(base: StableLaw, t: f64) -> Result<Self> {
        check_positive("time", t)?;
        if !t.is_finite() {
            return Err(Error::Domain(format!("time must be finite, got {t}")));
        }
        Ok(Self { base, t })
    }

    pub fn base(&self) -> StableLaw {
        self.base
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// `q(t,s) = (t/β) g_β(t s^{-1/β}) s^{-1/β-1}`.
    pub fn pdf(&self, s: f64) -> Result<f64> {
        if s.is_nan() || s < 0.0 {
            return Err(Error::Domain(format!(
                "hitting-time density needs s >= 0, got {s}"
            )));
        }
        let b = self.base.beta;
        let scale = self.t.powf(-b);
        let w = s * scale;
        if w <= SERIES_LIMIT {
            // the Wright-type series in s t^{-β}; finite at s = 0
            return Ok(scale * series_sum(b, w) / (PI * b));
        }
        if s.is_infinite() {
            return Ok(0.0);
        }
        let x = self.t * s.powf(-1.0 / b);
        let g = self.base.pdf(x)?;
        Ok(self.t / b * g * s.powf(-1.0 / b - 1.0))
    }

    /// `q(t, 0+) = t^{-β}/Γ(1-β)`.
    pub fn density_at_zero(&self) -> f64 {
        let b = self.base.beta;
        self.t.powf(-b) / gamma(1.0 - b)
    }

    /// `E[E_t] = t^β / Γ(1+β)`.
    pub fn mean(&self) -> f64 {
        let b = self.base.beta;
        self.t.powf(b) / gamma(1.0 + b)
    }

    /// `S*` with `P(E_t > S*) <= tail`.
    pub fn support_cutoff(&self, tail: f64) -> f64 {
        self.t.powf(self.base.beta) * self.base.hitting_time_cutoff(tail)
    }

    /// One-dimensional marginal `E_t =d (t/D_1)^β`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (self.t / self.base.sample(rng)).powf(self.base.beta)
    }
}

/// `Σ_{k>=1} c_k z^{k-1}` with `c_k = (-1)^{k+1} Γ(kβ+1) sin(kπβ) / k!`.
///
/// `g_β(x) = z S(z) / (π x)` with `z = x^{-β}`, and
/// `q(t,s) = t^{-β} S(w) / (πβ)` with `w = s t^{-β}`.
fn series_sum(beta: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    let log_z = if z > 0.0 { z.ln() } else { f64::NEG_INFINITY };
    for k in 1..400u32 {
        let kf = f64::from(k);
        let power = if k == 1 { 0.0 } else { (kf - 1.0) * log_z };
        let magnitude = (ln_gamma(kf * beta + 1.0) - ln_gamma(kf + 1.0) + power).exp();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * magnitude * (kf * PI * beta).sin();
        if k > 2 && magnitude < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be positive, got {v}")))
    }
}
