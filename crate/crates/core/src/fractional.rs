//! Caputo derivatives on uniform time grids, Riemann–Liouville forcing
//! weights and the Mittag-Leffler function.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::quadrature::{integrate, Tolerance};

/// Radius below which `E_β` is summed from its power series.
pub const ML_SERIES_RADIUS: f64 = 1.0;

const ML_TOL: Tolerance = Tolerance {
    abs: 1e-16,
    rel: 1e-13,
    max_intervals: 4000,
};

/// Relative tolerance for deciding that a time grid is uniform.
const UNIFORM_TOL: f64 = 1e-9;

fn check_beta_open(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::Usage(format!("order beta must lie in (0,1), got {beta}")))
    }
}

/// Step of a uniform grid `times[0] < times[1] < ...`.
pub fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 3 {
        return Err(Error::Usage(format!(
            "need at least 3 time nodes (t_0..t_N with N >= 2), got {}",
            times.len()
        )));
    }
    let tau = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Usage("time nodes must be increasing".into()));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - tau).abs() > UNIFORM_TOL * tau {
            return Err(Error::Usage("time grid is not uniform".into()));
        }
    }
    Ok(tau)
}

/// L1 weights `b_j = (j+1)^{1-β} - j^{1-β}`, scaled by `τ^{-β}/Γ(2-β)`.
fn l1_weights(beta: f64, tau: f64, n: usize) -> Vec<f64> {
    let scale = tau.powf(-beta) / gamma(2.0 - beta);
    (0..n)
        .map(|j| {
            let j = j as f64;
            scale * ((j + 1.0).powf(1.0 - beta) - j.powf(1.0 - beta))
        })
        .collect()
}

/// L1 approximation of the Caputo derivative of order `beta` at `t_1..t_N`.
pub fn caputo_l1(times: &[f64], values: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_beta_open(beta)?;
    if times.len() != values.len() {
        return Err(Error::Usage(format!(
            "{} time nodes but {} values",
            times.len(),
            values.len()
        )));
    }
    let tau = uniform_step(times)?;
    let n = times.len() - 1;
    let b = l1_weights(beta, tau, n);
    Ok((1..=n)
        .map(|m| {
            (0..m)
                .map(|j| b[j] * (values[m - j] - values[m - j - 1]))
                .sum()
        })
        .collect())
}

/// Coefficient `t^{j/n-1}/Γ(j/n)` of `L_x^j f` in the `n`-th order Cauchy
/// problem. For `n = 2` this is `1/√(πt)`.
pub fn rl_forcing_weight(t: f64, j: u32, n: u32) -> Result<f64> {
    if n < 2 || j < 1 || j >= n {
        return Err(Error::Usage(format!(
            "forcing weight needs n >= 2 and 1 <= j <= n-1, got j={j}, n={n}"
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("forcing weight needs t > 0, got {t}")));
    }
    let r = j as f64 / n as f64;
    Ok(t.powf(r - 1.0) / gamma(r))
}

/// Mittag-Leffler function `E_β(z) = Σ z^m / Γ(1 + mβ)` for `β ∈ (0,1]`.
///
/// The series is used for `|z| <= 1`; beyond that `Re z <= 0` is required and
/// a Hankel contour integral is evaluated.
pub fn mittag_leffler(beta: f64, z: Complex64) -> Result<Complex64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Usage(format!("Mittag-Leffler order must lie in (0,1], got {beta}")));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Usage(format!("Mittag-Leffler argument must be finite, got {z}")));
    }
    if beta == 1.0 {
        return Ok(z.exp());
    }
    if z.norm() <= ML_SERIES_RADIUS {
        return mittag_leffler_series(beta, z);
    }
    if z.re > 0.0 {
        return Err(Error::Usage(format!(
            "Mittag-Leffler evaluation outside |z| <= {ML_SERIES_RADIUS} needs Re z <= 0, got {z}"
        )));
    }
    mittag_leffler_contour(beta, z)
}

/// Power series of `E_β(z)`, summed until the terms stop contributing.
pub fn mittag_leffler_series(beta: f64, z: Complex64) -> Result<Complex64> {
    let mut sum = Complex64::new(1.0, 0.0);
    if z == Complex64::new(0.0, 0.0) {
        return Ok(sum);
    }
    let ln_r = z.norm().ln();
    let arg = z.arg();
    for m in 1..10_000u32 {
        let mf = m as f64;
        let ln_term = mf * ln_r - ln_gamma(1.0 + mf * beta);
        let term = Complex64::from_polar(ln_term.exp(), mf * arg);
        sum += term;
        // terms decrease monotonically once Γ(1+mβ) outgrows |z|^m
        if ln_term < -40.0 && mf * beta > 1.0 + z.norm().powf(1.0 / beta) {
            return Ok(sum);
        }
    }
    Err(Error::Numerical(format!("Mittag-Leffler series did not converge at z={z}")))
}

/// Hankel contour representation of `E_β(z)` for `Re z <= 0`.
///
/// `E_β(z) = (1/2πi) ∫ e^ζ ζ^{β-1} / (ζ^β - z) dζ` along two rays at
/// `arg ζ = ±θ₀` joined by an arc of radius `r`, with the pole of the
/// integrand kept on the enclosed side.
pub fn mittag_leffler_contour(beta: f64, z: Complex64) -> Result<Complex64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Usage(format!("contour evaluation needs beta in (0,1), got {beta}")));
    }
    if z.re > 0.0 {
        return Err(Error::Usage(format!("contour evaluation needs Re z <= 0, got {z}")));
    }
    if z == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let pole_angle = z.arg().abs() / beta;
    let pole_radius = z.norm().powf(1.0 / beta);
    let theta0 = if pole_angle < PI {
        0.5 * (0.5 * PI + pole_angle)
    } else {
        0.75 * PI
    };
    let radius = if pole_radius >= 1.0 { 0.5 } else { pole_radius + 0.5 };

    let integrand = |rho: f64, theta: f64| -> Complex64 {
        let zeta = Complex64::from_polar(rho, theta);
        let zeta_beta = Complex64::from_polar(rho.powf(beta), beta * theta);
        let zeta_beta_m1 = Complex64::from_polar(rho.powf(beta - 1.0), (beta - 1.0) * theta);
        zeta.exp() * zeta_beta_m1 / (zeta_beta - z)
    };

    let ray_end = radius + 50.0 / theta0.cos().abs();
    let upper_dir = Complex64::from_polar(1.0, theta0);
    let lower_dir = Complex64::from_polar(1.0, -theta0);
    let upper = integrate(|rho| integrand(rho, theta0) * upper_dir, radius, ray_end, ML_TOL)?;
    let lower = integrate(|rho| integrand(rho, -theta0) * lower_dir, radius, ray_end, ML_TOL)?;
    let arc = integrate(
        |theta| integrand(radius, theta) * Complex64::from_polar(radius, theta),
        -theta0,
        theta0,
        ML_TOL,
    )?;
    let rays = (upper.value - lower.value) / Complex64::new(0.0, 2.0 * PI);
    Ok(rays + arc.value / (2.0 * PI))
}

/// A space-time field `u(t_i, ·)` on `t_i = iτ`, `i = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesField {
    tau: f64,
    frames: Vec<GridFunction>,
}

impl TimeSeriesField {
    pub fn new(tau: f64, frames: Vec<GridFunction>) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Usage(format!("time step must be positive, got {tau}")));
        }
        if frames.len() < 3 {
            return Err(Error::Usage(format!(
                "need at least 3 time frames, got {}",
                frames.len()
            )));
        }
        let grid = *frames[0].grid();
        if frames.iter().any(|f| *f.grid() != grid) {
            return Err(Error::Usage("all frames must share one spatial grid".into()));
        }
        Ok(Self { tau, frames })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn grid(&self) -> &Grid {
        self.frames[0].grid()
    }

    pub fn frames(&self) -> &[GridFunction] {
        &self.frames
    }

    /// Index of the last node, `N`.
    pub fn last_index(&self) -> usize {
        self.frames.len() - 1
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.tau
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.frames.len()).map(|i| self.time(i)).collect()
    }

    /// Caputo derivative frames at `t_1..t_N` by the L1 scheme.
    pub fn caputo_l1(&self, beta: f64) -> Result<Vec<GridFunction>> {
        check_beta_open(beta)?;
        let n = self.last_index();
        let b = l1_weights(beta, self.tau, n);
        let grid = *self.grid();
        let len = grid.len();
        let diffs: Vec<Vec<f64>> = (1..=n)
            .map(|m| {
                let hi = self.frames[m].values();
                let lo = self.frames[m - 1].values();
                hi.iter().zip(lo).map(|(a, b)| a - b).collect()
            })
            .collect();
        (1..=n)
            .map(|m| {
                let mut acc = vec![0.0; len];
                for j in 0..m {
                    let d = &diffs[m - j - 1];
                    for (a, v) in acc.iter_mut().zip(d) {
                        *a += b[j] * v;
                    }
                }
                GridFunction::new(grid, acc)
            })
            .collect()
    }

    /// Second-order time derivative at `t_1..t_N`: one-sided at `t_1` and
    /// `t_N`, central in between.
    pub fn time_derivative(&self) -> Result<Vec<GridFunction>> {
        let n = self.last_index();
        let grid = *self.grid();
        let u = |i: usize| self.frames[i].values();
        let h = self.tau;
        (1..=n)
            .map(|i| {
                let values: Vec<f64> = if i < n {
                    u(i + 1)
                        .iter()
                        .zip(u(i - 1))
                        .map(|(a, b)| (a - b) / (2.0 * h))
                        .collect()
                } else {
                    (0..grid.len())
                        .map(|p| (3.0 * u(i)[p] - 4.0 * u(i - 1)[p] + u(i - 2)[p]) / (2.0 * h))
                        .collect()
                };
                GridFunction::new(grid, values)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::erf::erfc;

    fn uniform(n: usize, tau: f64) -> Vec<f64> {
        (0..=n).map(|i| i as f64 * tau).collect()
    }

    #[test]
    fn caputo_of_constant_vanishes() {
        let t = uniform(20, 0.05);
        let d = caputo_l1(&t, &[3.5; 21], 0.4).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn caputo_of_linear_is_exact() {
        let t = uniform(64, 1.0 / 64.0);
        let d = caputo_l1(&t, &t, 0.5).unwrap();
        assert_relative_eq!(d[63], 2.0 / PI.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn caputo_of_square_root_converges() {
        let want = PI.sqrt() / 2.0;
        let err = |n: usize| {
            let t = uniform(n, 1.0 / n as f64);
            let u: Vec<f64> = t.iter().map(|v| v.sqrt()).collect();
            (caputo_l1(&t, &u, 0.5).unwrap()[n - 1] - want).abs()
        };
        assert!(err(1024) < 5e-3);
        assert!(err(1024) < err(256));
    }

    #[test]
    fn caputo_rejects_bad_grids() {
        assert!(matches!(
            caputo_l1(&[0.0, 0.1, 0.3], &[0.0; 3], 0.5),
            Err(Error::Usage(_))
        ));
        assert!(caputo_l1(&[0.0, 0.1], &[0.0; 2], 0.5).is_err());
        assert!(caputo_l1(&uniform(4, 0.1), &[0.0; 5], 1.0).is_err());
    }

    #[test]
    fn forcing_weight_examples() {
        assert_relative_eq!(rl_forcing_weight(1.0, 1, 2).unwrap(), 0.564_189_6, epsilon = 5e-8);
        // Γ(1/3) = 2.678938534707747, Γ(2/3) = 1.354117939426400
        assert_relative_eq!(rl_forcing_weight(1.0, 1, 3).unwrap(), 1.0 / 2.678_938_534_707_747, epsilon = 1e-14);
        assert_relative_eq!(rl_forcing_weight(1.0, 2, 3).unwrap(), 1.0 / 1.354_117_939_426_4, epsilon = 1e-14);
        for t in [0.1, 0.7, 3.0] {
            assert_relative_eq!(
                rl_forcing_weight(t, 1, 2).unwrap(),
                1.0 / (PI * t).sqrt(),
                max_relative = 1e-14
            );
            assert_relative_eq!(
                rl_forcing_weight(t, 1, 3).unwrap(),
                t.powf(-2.0 / 3.0) / gamma(1.0 / 3.0),
                max_relative = 1e-14
            );
        }
        assert!(matches!(rl_forcing_weight(1.0, 0, 3), Err(Error::Usage(_))));
        assert!(matches!(rl_forcing_weight(1.0, 3, 3), Err(Error::Usage(_))));
    }

    #[test]
    fn mittag_leffler_examples() {
        let c = |x: f64| Complex64::new(x, 0.0);
        assert_eq!(mittag_leffler(0.3, c(0.0)).unwrap(), c(1.0));
        assert_relative_eq!(mittag_leffler(1.0, c(1.0)).unwrap().re, std::f64::consts::E, epsilon = 1e-15);
        assert_relative_eq!(mittag_leffler(0.5, c(-1.0)).unwrap().re, 0.427_583_6, epsilon = 5e-8);
        assert!(matches!(mittag_leffler(0.5, c(3.0)), Err(Error::Usage(_))));
        assert!(matches!(mittag_leffler(1.5, c(-1.0)), Err(Error::Usage(_))));
    }

    #[test]
    fn half_order_matches_erfc_form() {
        // E_{1/2}(x) = exp(x²) erfc(-x) for real x
        for x in [-0.3, -1.0, -2.5, -7.0, -20.0] {
            let got = mittag_leffler(0.5, Complex64::new(x, 0.0)).unwrap();
            let want = (x * x).exp() * erfc(-x);
            assert_relative_eq!(got.re, want, max_relative = 1e-10);
            assert!(got.im.abs() < 1e-12);
        }
    }

    #[test]
    fn series_and_contour_agree_on_overlap() {
        for beta in [0.2, 1.0 / 3.0, 0.5, 0.75, 0.9] {
            for r in [0.5, 0.8, 1.0, 1.2, 1.5] {
                for angle in [0.501 * PI, 0.7 * PI, PI, -0.6 * PI] {
                    let z = Complex64::from_polar(r, angle);
                    let s = mittag_leffler_series(beta, z).unwrap();
                    let c = mittag_leffler_contour(beta, z).unwrap();
                    assert!((s - c).norm() < 1e-8, "beta={beta} z={z}: {s} vs {c}");
                }
            }
        }
    }

    #[test]
    fn time_derivative_of_quadratic_is_exact() {
        let g = Grid::new(1, 1.0, 4).unwrap();
        let tau = 0.1;
        let frames = (0..6)
            .map(|i| {
                let t = i as f64 * tau;
                GridFunction::from_fn(g, |x| t * t + x[0] * t).unwrap()
            })
            .collect();
        let field = TimeSeriesField::new(tau, frames).unwrap();
        let d = field.time_derivative().unwrap();
        for (i, frame) in d.iter().enumerate() {
            let t = (i + 1) as f64 * tau;
            let want = GridFunction::from_fn(g, |x| 2.0 * t + x[0]).unwrap();
            assert!(frame.max_distance(&want).unwrap() < 1e-12);
        }
    }

    #[test]
    fn field_caputo_matches_scalar_scheme() {
        let g = Grid::new(1, 2.0, 8).unwrap();
        let tau = 0.125;
        let frames: Vec<_> = (0..9)
            .map(|i| {
                let t = i as f64 * tau;
                GridFunction::from_fn(g, |x| (t * (1.0 + x[0])).sin()).unwrap()
            })
            .collect();
        let field = TimeSeriesField::new(tau, frames.clone()).unwrap();
        let d = field.caputo_l1(0.3).unwrap();
        let times = field.times();
        for p in 0..g.len() {
            let series: Vec<f64> = frames.iter().map(|f| f.values()[p]).collect();
            let want = caputo_l1(&times, &series, 0.3).unwrap();
            for (m, w) in want.iter().enumerate() {
                assert_relative_eq!(d[m].values()[p], *w, epsilon = 1e-14);
            }
        }
    }
}
