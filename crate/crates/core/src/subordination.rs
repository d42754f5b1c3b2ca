//! Solutions of the fractional Cauchy problem `∂^β u/∂t^β = L_x u`, `u(0) = f`,
//! as `u(t) = ∫ T(s)f q(t,s) ds` and through the Mittag-Leffler multiplier.
//!
//! With `s = t^β σ` the weight `q(t, s) ds` becomes `Q(σ) dσ` where
//! `Q = q(1, ·)` does not depend on `t`. The σ-integral is a composite
//! Gauss–Legendre rule evaluated mode by mode in Fourier space:
//! `û(t,k) = f̂(k) Σ_i w_i Q(σ_i) exp(t^β σ_i ψ(k))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fractional::mittag_leffler;
use crate::grid::GridFunction;
use crate::levy::{symbol_table, LevySymbol};
use crate::quadrature::composite_gauss_legendre;
use crate::stable::{InverseSubordinatorLaw, StableLaw};

/// Probability mass of `E_1` discarded beyond the last panel.
pub const TAIL_MASS: f64 = 1e-12;
/// Gauss–Legendre nodes per panel.
pub const PANEL_ORDER: usize = 20;
/// Depth of the geometric panels `[2^-k, 2^{1-k}]` near `σ = 0`.
const GEOMETRIC_LEVELS: i32 = 30;
/// Admissible deviation of the discrete weight sum from `1 - TAIL_MASS`.
const MASS_TOL: f64 = 1e-9;

/// Panel layout and normalized hitting-time density for one `β`.
#[derive(Debug, Clone)]
pub struct SubordinationRule {
    law: StableLaw,
    breaks: Vec<f64>,
}

/// Nodes `σ_i` and weights `w_i Q(σ_i)` of a refined rule.
#[derive(Debug, Clone)]
pub struct WeightedNodes {
    pub sigma: Vec<f64>,
    pub weight: Vec<f64>,
}

impl WeightedNodes {
    pub fn total_weight(&self) -> f64 {
        self.weight.iter().sum()
    }
}

impl SubordinationRule {
    pub fn new(beta: f64) -> Result<Self> {
        let law = StableLaw::new(beta)?;
        let cutoff = InverseSubordinatorLaw::new(law, 1.0)?.support_cutoff(TAIL_MASS);
        let mut breaks = vec![0.0];
        for k in (0..=GEOMETRIC_LEVELS).rev() {
            breaks.push(2f64.powi(-k));
        }
        let mut x = 1.0;
        while x < cutoff {
            x = (x + 1.0).min(cutoff);
            breaks.push(x);
        }
        Ok(Self { law, breaks })
    }

    pub fn beta(&self) -> f64 {
        self.law.beta()
    }

    /// Upper end `σ*` of the truncated integral.
    pub fn cutoff(&self) -> f64 {
        *self.breaks.last().expect("rule has panels")
    }

    /// Nodes after splitting every panel so that a phase growing at `rate`
    /// per unit σ turns by at most `π` within a panel.
    pub fn nodes(&self, rate: f64) -> Result<WeightedNodes> {
        let mut breaks = vec![self.breaks[0]];
        for w in self.breaks.windows(2) {
            let pieces = ((w[1] - w[0]) * rate / PI).ceil().max(1.0);
            if !pieces.is_finite() || pieces > 1e6 {
                return Err(Error::Numerical(format!(
                    "oscillation rate {rate:e} needs too many quadrature panels"
                )));
            }
            let pieces = pieces as usize;
            let h = (w[1] - w[0]) / pieces as f64;
            for i in 1..pieces {
                breaks.push(w[0] + h * i as f64);
            }
            breaks.push(w[1]);
        }
        let (sigma, w) = composite_gauss_legendre(&breaks, PANEL_ORDER);
        let q = InverseSubordinatorLaw::new(self.law, 1.0)?;
        let weight = sigma
            .iter()
            .zip(&w)
            .map(|(s, w)| Ok(w * q.pdf(*s)?))
            .collect::<Result<Vec<f64>>>()?;
        let nodes = WeightedNodes { sigma, weight };
        let mass = nodes.total_weight();
        if (mass - (1.0 - TAIL_MASS)).abs() > MASS_TOL {
            return Err(Error::Numerical(format!(
                "hitting-time weights sum to {mass:.15} over [0, {:.3}] with {} nodes, expected 1",
                self.cutoff(),
                nodes.sigma.len()
            )));
        }
        Ok(nodes)
    }

    /// `Σ_i w_i Q(σ_i) exp(σ_i c)` for each entry `c` of `scaled_symbol`.
    pub fn multipliers(&self, scaled_symbol: &[Complex64]) -> Result<Vec<Complex64>> {
        let rate = scaled_symbol.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        let nodes = self.nodes(rate)?;
        Ok(scaled_symbol
            .par_iter()
            .map(|c| {
                nodes
                    .sigma
                    .iter()
                    .zip(&nodes.weight)
                    .map(|(s, w)| (c * s).exp() * w)
                    .sum()
            })
            .collect())
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("solution time must be positive, got {t}")))
    }
}

/// `u(t) = ∫ T(s)f q(t,s) ds`.
pub fn subordinate_solution(sym: &LevySymbol, beta: f64, t: f64, f: &GridFunction) -> Result<GridFunction> {
    let rule = SubordinationRule::new(beta)?;
    let mut out = subordinate_trajectory_with(&rule, sym, &[t], f)?;
    Ok(out.pop().expect("one frame per time"))
}

/// `u(t_i)` for several times sharing one rule and one forward transform.
/// `t = 0` yields `f`.
pub fn subordinate_trajectory(sym: &LevySymbol, beta: f64, times: &[f64], f: &GridFunction) -> Result<Vec<GridFunction>> {
    let rule = SubordinationRule::new(beta)?;
    subordinate_trajectory_with(&rule, sym, times, f)
}

pub fn subordinate_trajectory_with(
    rule: &SubordinationRule,
    sym: &LevySymbol,
    times: &[f64],
    f: &GridFunction,
) -> Result<Vec<GridFunction>> {
    sym.check_dimension(f.grid().dim())?;
    let spectrum = f.spectrum();
    let psi = symbol_table(sym, &spectrum);
    times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(f.clone());
            }
            check_time(t)?;
            let scale = t.powf(rule.beta());
            let scaled: Vec<Complex64> = psi.iter().map(|p| p * scale).collect();
            let m = rule.multipliers(&scaled)?;
            let out = spectrum.multiplied_by(&m);
            out.check_resolved("subordinated solution")?;
            out.to_grid_function()
        })
        .collect()
}

/// Inverse transform of `E_β(t^β ψ(k)) f̂(k)`; `β = 1` gives `T(t)f`.
pub fn fourier_ml_solution(sym: &LevySymbol, beta: f64, t: f64, f: &GridFunction) -> Result<GridFunction> {
    let mut out = fourier_ml_trajectory(sym, beta, &[t], f)?;
    Ok(out.pop().expect("one frame per time"))
}

pub fn fourier_ml_trajectory(sym: &LevySymbol, beta: f64, times: &[f64], f: &GridFunction) -> Result<Vec<GridFunction>> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Usage(format!("order beta must lie in (0,1], got {beta}")));
    }
    sym.check_dimension(f.grid().dim())?;
    let spectrum = f.spectrum();
    let psi = symbol_table(sym, &spectrum);
    times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(f.clone());
            }
            check_time(t)?;
            let scale = t.powf(beta);
            let m = psi
                .par_iter()
                .map(|p| mittag_leffler(beta, p * scale))
                .collect::<Result<Vec<Complex64>>>()?;
            let out = spectrum.multiplied_by(&m);
            out.check_resolved("Mittag-Leffler solution")?;
            out.to_grid_function()
        })
        .collect()
}
