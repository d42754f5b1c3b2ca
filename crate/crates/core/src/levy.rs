//! Lévy symbols `ψ(k)` and the spectral action of their semigroups and
//! generators on grid functions.
//!
//! `T(t)f(x) = E[f(x + X_0(t))]` has Fourier multiplier `e^{tψ(k)}` and the
//! generator `L_x` has multiplier `ψ(k)` (forward transform with `e^{-ik·x}`).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Spectrum};

/// One atom `mass · δ_location` of a finitely supported jump measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub location: Vec<f64>,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevySymbol {
    /// `ψ(k) = -D‖k‖²`, generator `DΔ`.
    Brownian { diffusivity: f64 },
    /// `ψ(k) = -D‖k‖^α`, generator `-D(-Δ)^{α/2}`.
    IsotropicStable { alpha: f64, diffusivity: f64 },
    /// `ψ(k) = D Σ_j σ_j (i k_j)^{α_j}` (principal branch), with `σ_j = +1`
    /// for `α_j ∈ [1,2]` and `σ_j = -1` for `α_j < 1` so that `Re ψ <= 0`.
    CoordinateStable { alphas: Vec<f64>, diffusivity: f64 },
    /// Lévy–Khintchine triple with drift `a`, covariance `Q` (row-major) and a
    /// finitely supported jump measure, compensated by `ik·y/(1+‖y‖²)`.
    GeneralTriple {
        drift: Vec<f64>,
        covariance: Vec<f64>,
        jumps: Vec<Jump>,
    },
}

impl LevySymbol {
    pub fn brownian(diffusivity: f64) -> Result<Self> {
        let s = Self::Brownian { diffusivity };
        s.validate()?;
        Ok(s)
    }

    pub fn isotropic_stable(alpha: f64, diffusivity: f64) -> Result<Self> {
        let s = Self::IsotropicStable { alpha, diffusivity };
        s.validate()?;
        Ok(s)
    }

    pub fn coordinate_stable(alphas: Vec<f64>, diffusivity: f64) -> Result<Self> {
        let s = Self::CoordinateStable { alphas, diffusivity };
        s.validate()?;
        Ok(s)
    }

    pub fn general_triple(drift: Vec<f64>, covariance: Vec<f64>, jumps: Vec<Jump>) -> Result<Self> {
        let s = Self::GeneralTriple {
            drift,
            covariance,
            jumps,
        };
        s.validate()?;
        Ok(s)
    }

    /// The zero symbol `ψ ≡ 0` in dimension `d`.
    pub fn zero(dim: usize) -> Self {
        Self::GeneralTriple {
            drift: vec![0.0; dim],
            covariance: vec![0.0; dim * dim],
            jumps: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Usage(format!("{name} must be positive, got {v}")))
            }
        };
        let index = |a: f64| {
            if a > 0.0 && a <= 2.0 {
                Ok(())
            } else {
                Err(Error::Usage(format!("stable index must lie in (0,2], got {a}")))
            }
        };
        match self {
            Self::Brownian { diffusivity } => positive("diffusivity", *diffusivity),
            Self::IsotropicStable { alpha, diffusivity } => {
                index(*alpha)?;
                positive("diffusivity", *diffusivity)
            }
            Self::CoordinateStable { alphas, diffusivity } => {
                if alphas.is_empty() {
                    return Err(Error::Usage("coordinate stable symbol needs at least one index".into()));
                }
                alphas.iter().try_for_each(|a| index(*a))?;
                positive("diffusivity", *diffusivity)
            }
            Self::GeneralTriple {
                drift,
                covariance,
                jumps,
            } => {
                let d = drift.len();
                if d == 0 {
                    return Err(Error::Usage("drift vector must not be empty".into()));
                }
                if covariance.len() != d * d {
                    return Err(Error::Usage(format!(
                        "covariance must have {} entries for d={d}, got {}",
                        d * d,
                        covariance.len()
                    )));
                }
                if drift.iter().chain(covariance).any(|v| !v.is_finite()) {
                    return Err(Error::Usage("drift and covariance must be finite".into()));
                }
                check_nonnegative_definite(covariance, d)?;
                for jump in jumps {
                    if jump.location.len() != d {
                        return Err(Error::Usage("jump location has wrong dimension".into()));
                    }
                    if jump.location.iter().all(|y| *y == 0.0) {
                        return Err(Error::Usage("jump measure must not charge the origin".into()));
                    }
                    if !(jump.mass >= 0.0 && jump.mass.is_finite()) {
                        return Err(Error::Usage(format!("jump mass must be nonnegative, got {}", jump.mass)));
                    }
                }
                Ok(())
            }
        }
    }

    /// Spatial dimension fixed by the symbol, if any.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            Self::Brownian { .. } | Self::IsotropicStable { .. } => None,
            Self::CoordinateStable { alphas, .. } => Some(alphas.len()),
            Self::GeneralTriple { drift, .. } => Some(drift.len()),
        }
    }

    pub fn check_dimension(&self, dim: usize) -> Result<()> {
        match self.dimension() {
            Some(d) if d != dim => Err(Error::Usage(format!(
                "symbol is {d}-dimensional but the grid is {dim}-dimensional"
            ))),
            _ => Ok(()),
        }
    }

    /// `ψ(k)`.
    pub fn eval(&self, k: &[f64]) -> Complex64 {
        let norm2: f64 = k.iter().map(|v| v * v).sum();
        match self {
            Self::Brownian { diffusivity } => Complex64::new(-diffusivity * norm2, 0.0),
            Self::IsotropicStable { alpha, diffusivity } => {
                Complex64::new(-diffusivity * norm2.powf(0.5 * alpha), 0.0)
            }
            Self::CoordinateStable { alphas, diffusivity } => {
                let sum: Complex64 = alphas
                    .iter()
                    .zip(k)
                    .map(|(&a, &kj)| {
                        if kj == 0.0 {
                            return Complex64::new(0.0, 0.0);
                        }
                        // principal branch: arg(i k) = ±π/2
                        let arg = if kj > 0.0 { 0.5 * PI } else { -0.5 * PI };
                        let sign = if a < 1.0 { -1.0 } else { 1.0 };
                        Complex64::from_polar(sign * kj.abs().powf(a), a * arg)
                    })
                    .sum();
                sum * *diffusivity
            }
            Self::GeneralTriple {
                drift,
                covariance,
                jumps,
            } => {
                let d = drift.len();
                let dot = |u: &[f64]| -> f64 { u.iter().zip(k).map(|(a, b)| a * b).sum() };
                let mut quad = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        quad += k[i] * covariance[i * d + j] * k[j];
                    }
                }
                let mut psi = Complex64::new(-0.5 * quad, dot(drift));
                for jump in jumps {
                    let ky = dot(&jump.location);
                    let y2: f64 = jump.location.iter().map(|v| v * v).sum();
                    let term = Complex64::new(ky.cos() - 1.0, ky.sin() - ky / (1.0 + y2));
                    psi += term * jump.mass;
                }
                psi
            }
        }
    }

    fn eval_wavevector(&self, k: [f64; 2], dim: usize) -> Complex64 {
        self.eval(&k[..dim])
    }
}

fn check_nonnegative_definite(q: &[f64], d: usize) -> Result<()> {
    let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = 1e-12 * scale;
    for i in 0..d {
        for j in 0..i {
            if (q[i * d + j] - q[j * d + i]).abs() > tol {
                return Err(Error::Usage("covariance matrix must be symmetric".into()));
            }
        }
    }
    // LDLᵀ without pivoting; a zero pivot is allowed only with a zero column below it
    let mut a = q.to_vec();
    for p in 0..d {
        let pivot = a[p * d + p];
        if pivot < -tol {
            return Err(Error::Usage("covariance matrix must be nonnegative definite".into()));
        }
        if pivot.abs() <= tol {
            if (p + 1..d).any(|i| a[i * d + p].abs() > tol.sqrt()) {
                return Err(Error::Usage("covariance matrix must be nonnegative definite".into()));
            }
            continue;
        }
        for i in p + 1..d {
            let factor = a[i * d + p] / pivot;
            for j in p + 1..d {
                a[i * d + j] -= factor * a[p * d + j];
            }
        }
    }
    Ok(())
}

/// `T(t)f`, the inverse transform of `e^{tψ(k)} f̂(k)`.
pub fn semigroup_apply(sym: &LevySymbol, t: f64, f: &GridFunction) -> Result<GridFunction> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("semigroup time must be >= 0, got {t}")));
    }
    let dim = f.grid().dim();
    sym.check_dimension(dim)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    let out = f
        .spectrum()
        .multiplied(|k| (sym.eval_wavevector(k, dim) * t).exp());
    out.check_resolved("semigroup")?;
    out.to_grid_function()
}

/// `L_x f`, the inverse transform of `ψ(k) f̂(k)`.
pub fn generator_apply(sym: &LevySymbol, f: &GridFunction) -> Result<GridFunction> {
    generator_power(sym, 1, f)
}

/// `L_x^n f` as a single multiplier `ψ(k)^n`.
pub fn generator_power(sym: &LevySymbol, n: u32, f: &GridFunction) -> Result<GridFunction> {
    let dim = f.grid().dim();
    sym.check_dimension(dim)?;
    if n == 0 {
        return Ok(f.clone());
    }
    let out = f
        .spectrum()
        .multiplied(|k| sym.eval_wavevector(k, dim).powu(n));
    out.check_resolved("generator")?;
    out.to_grid_function()
}

/// Per-mode values `ψ(k)` laid out like the spectrum of a function on `grid`.
pub fn symbol_table(sym: &LevySymbol, spectrum: &Spectrum) -> Vec<Complex64> {
    let grid = spectrum.grid();
    let dim = grid.dim();
    (0..grid.len())
        .map(|idx| sym.eval_wavevector(grid.wavevector(idx), dim))
        .collect()
}

/// Heat kernel of `Δ`: `(4πt)^{-d/2} exp(-‖x‖²/(4t))`, with `d = x.len()`.
pub fn brownian_kernel(t: f64, x: &[f64]) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")));
    }
    let d = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok((4.0 * PI * t).powf(-0.5 * d) * (-r2 / (4.0 * t)).exp())
}

/// Mass of the `DΔ` heat kernel at time `t` lying outside `[-L, L]^d`.
pub fn brownian_mass_outside(diffusivity: f64, t: f64, half_width: f64, dim: usize) -> f64 {
    let per_axis = erfc(half_width / (4.0 * diffusivity * t).sqrt());
    -((dim as f64) * (-per_axis).ln_1p()).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use approx::assert_relative_eq;

    #[test]
    fn symbol_examples() {
        let b = LevySymbol::brownian(1.0).unwrap();
        assert_eq!(b.eval(&[2.0]), Complex64::new(-4.0, 0.0));

        let iso = LevySymbol::isotropic_stable(1.0, 1.0).unwrap();
        assert_relative_eq!(iso.eval(&[3.0, 4.0]).re, -5.0, epsilon = 1e-14);

        let coord = LevySymbol::coordinate_stable(vec![2.0, 2.0], 1.0).unwrap();
        for k in [[0.3, -1.2], [2.0, 0.0], [-4.0, 5.5]] {
            let got = coord.eval(&k);
            assert_relative_eq!(got.re, -(k[0] * k[0] + k[1] * k[1]), epsilon = 1e-12);
            assert!(got.im.abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(LevySymbol::brownian(0.0).is_err());
        assert!(LevySymbol::isotropic_stable(2.5, 1.0).is_err());
        assert!(LevySymbol::coordinate_stable(vec![], 1.0).is_err());
        assert!(LevySymbol::general_triple(vec![0.0], vec![-1.0], vec![]).is_err());
        assert!(LevySymbol::general_triple(vec![0.0, 0.0], vec![1.0, 2.0, 2.0, 1.0], vec![]).is_err());
        assert!(LevySymbol::general_triple(
            vec![0.0],
            vec![1.0],
            vec![Jump { location: vec![0.0], mass: 1.0 }]
        )
        .is_err());
        LevySymbol::general_triple(vec![0.0, 0.0], vec![2.0, 1.0, 1.0, 1.0], vec![]).unwrap();
        LevySymbol::general_triple(vec![0.0, 0.0], vec![0.0, 0.0, 0.0, 1.0], vec![]).unwrap();
    }

    #[test]
    fn general_triple_matches_pieces() {
        let a = 0.7;
        let y = 1.5;
        let m = 0.4;
        let sym = LevySymbol::general_triple(vec![a], vec![2.0], vec![Jump { location: vec![y], mass: m }]).unwrap();
        let k = 0.9;
        let want = Complex64::new(0.0, k * a) - k * k
            + m * (Complex64::new(0.0, k * y).exp() - 1.0 - Complex64::new(0.0, k * y / (1.0 + y * y)));
        assert!((sym.eval(&[k]) - want).norm() < 1e-15);
    }

    #[test]
    fn heat_kernel_examples() {
        assert_relative_eq!(brownian_kernel(1.0, &[0.0]).unwrap(), 0.282_094_8, epsilon = 5e-8);
        assert_relative_eq!(brownian_kernel(1.0, &[0.0, 0.0]).unwrap(), 0.079_577_5, epsilon = 5e-8);
        assert!(brownian_kernel(0.0, &[0.0]).is_err());
        let g = Grid::new(1, 30.0, 1024).unwrap();
        let k = GridFunction::from_fn(g, |x| brownian_kernel(2.0, x).unwrap()).unwrap();
        assert_relative_eq!(k.mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn semigroup_at_zero_is_identity() {
        let g = Grid::new(1, 10.0, 64).unwrap();
        let f = GridFunction::from_fn(g, |x| (x[0] * 0.3).sin() * (-x[0] * x[0]).exp()).unwrap();
        let b = LevySymbol::brownian(1.0).unwrap();
        assert_eq!(semigroup_apply(&b, 0.0, &f).unwrap(), f);
        assert!(matches!(semigroup_apply(&b, -1.0, &f), Err(Error::Domain(_))));
    }

    #[test]
    fn dimension_mismatch_is_usage_error() {
        let g = Grid::new(1, 10.0, 64).unwrap();
        let f = GridFunction::gaussian_density(g, 1.0).unwrap();
        let sym = LevySymbol::coordinate_stable(vec![1.5, 1.5], 1.0).unwrap();
        assert!(matches!(semigroup_apply(&sym, 1.0, &f), Err(Error::Usage(_))));
    }

    #[test]
    fn generator_of_zero_is_zero() {
        let g = Grid::new(2, 5.0, 16).unwrap();
        let f = GridFunction::zeros(g);
        let sym = LevySymbol::isotropic_stable(1.3, 2.0).unwrap();
        assert_eq!(generator_apply(&sym, &f).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn drift_semigroup_translates() {
        // T(t)f(x) = f(x + a t)
        let g = Grid::new(1, 20.0, 256).unwrap();
        let f = GridFunction::gaussian_density(g, 1.0).unwrap();
        let sym = LevySymbol::general_triple(vec![1.0], vec![0.0], vec![]).unwrap();
        let moved = semigroup_apply(&sym, 2.0, &f).unwrap();
        let want = GridFunction::from_fn(g, |x| (-(x[0] + 2.0).powi(2) / 2.0).exp() / (2.0 * PI).sqrt()).unwrap();
        assert!(moved.max_distance(&want).unwrap() < 1e-12);
    }

    #[test]
    fn box_mass_outside() {
        assert!(brownian_mass_outside(1.0, 1.0, 20.0, 1) < 1e-40);
        assert_relative_eq!(brownian_mass_outside(1.0, 1.0, 2.0, 1), erfc(1.0), epsilon = 1e-15);
    }
}
