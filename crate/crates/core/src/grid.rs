//! Uniform periodic box grids in one or two dimensions, real grid functions,
//! and their discrete Fourier spectra.
//!
//! The box `[-L, L)^d` carries `M` points per axis at `x_j = -L + j h`,
//! `h = 2L/M`. Spectral coefficients use the forward sign `e^{-ik·x}`, so the
//! continuous transform `f̂(k) = ∫ e^{-ik·x} f(x) dx` is approximated by
//! `h^d e^{-ik·x_0} DFT(f)`. Multipliers only need the raw DFT.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Modes with `|n| >= RESOLUTION_BAND * M` on any axis form the band that must
/// be negligible after a multiplier is applied.
const RESOLUTION_BAND: f64 = 7.0 / 16.0;

/// Largest admissible ratio of the top-band amplitude to the peak amplitude.
pub const RESOLUTION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    points: usize,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Usage(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Usage(format!(
                "box half-width must be positive and finite, got {half_width}"
            )));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::Usage(format!(
                "points per axis must be a power of two >= 4, got {points}"
            )));
        }
        Ok(Self {
            dim,
            half_width,
            points,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Total number of nodes, `M^d`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Per-axis indices of a flat (row-major) index.
    fn axes(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.points, idx % self.points]
        }
    }

    /// Coordinates of node `idx`; the second entry is unused when `d = 1`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.axes(idx);
        let y = if self.dim == 2 { self.coordinate(j) } else { 0.0 };
        [self.coordinate(i), y]
    }

    /// Signed mode number of DFT index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        let m = self.points as i64;
        let i = i as i64;
        if i < m / 2 {
            i
        } else {
            i - m
        }
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        PI * self.mode(i) as f64 / self.half_width
    }

    /// Wave vector of flat spectral index `idx`; second entry unused when `d = 1`.
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.axes(idx);
        let ky = if self.dim == 2 { self.wavenumber(j) } else { 0.0 };
        [self.wavenumber(i), ky]
    }

    /// Largest resolved wavenumber `π/h`.
    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    fn in_top_band(&self, idx: usize) -> bool {
        let cut = (RESOLUTION_BAND * self.points as f64) as i64;
        let [i, j] = self.axes(idx);
        self.mode(i).abs() >= cut || (self.dim == 2 && self.mode(j).abs() >= cut)
    }
}

/// A real function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Usage(format!(
                "grid has {} nodes but {} values were supplied",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Usage(format!(
                "grid function value at node {i} is not finite"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Sample `f` at every node; `f` receives a slice of length `d`.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let d = grid.dim();
        let values = (0..grid.len())
            .map(|idx| f(&grid.point(idx)[..d]))
            .collect();
        Self::new(grid, values)
    }

    /// Centered normal density with standard deviation `sigma` per axis.
    pub fn gaussian_density(grid: Grid, sigma: f64) -> Result<Self> {
        let d = grid.dim() as i32;
        let norm = (2.0 * PI * sigma * sigma).powf(-0.5 * d as f64);
        Self::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            norm * (-r2 / (2.0 * sigma * sigma)).exp()
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Discrete integral `h^d Σ f_j`.
    pub fn mass(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn l1_norm(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Usage(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Discrete `L¹` distance.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self.grid.cell_volume()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    pub fn max_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// `self + scale * other`, node by node.
    pub fn axpy(&self, scale: f64, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + scale * b)
            .collect();
        Self::new(self.grid, values)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Riemann-sum approximation of `∫ e^{-ik·x} f(x) dx` at an arbitrary `k`.
    pub fn fourier_at(&self, k: &[f64]) -> Complex64 {
        let d = self.grid.dim();
        let sum: Complex64 = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| {
                let x = self.grid.point(idx);
                let phase: f64 = x[..d].iter().zip(k).map(|(x, k)| x * k).sum();
                Complex64::from_polar(v, -phase)
            })
            .sum();
        sum * self.grid.cell_volume()
    }

    /// Variance of the first coordinate under `f` viewed as a (signed) density.
    pub fn variance(&self) -> f64 {
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (idx, &v) in self.values.iter().enumerate() {
            let x = self.grid.point(idx)[0];
            m0 += v;
            m1 += v * x;
            m2 += v * x * x;
        }
        let mean = m1 / m0;
        m2 / m0 - mean * mean
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut coeffs: Vec<Complex64> =
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_in_place(&self.grid, &mut coeffs, false);
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    /// CSV with a commented header recording `d`, `L`, `M`; one row per node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let g = &self.grid;
        writeln!(out, "# dim={},half_width={},points={}", g.dim, g.half_width, g.points)?;
        if g.dim == 1 {
            writeln!(out, "x,value")?;
        } else {
            writeln!(out, "x,y,value")?;
        }
        for (idx, v) in self.values.iter().enumerate() {
            let p = g.point(idx);
            if g.dim == 1 {
                writeln!(out, "{},{}", p[0], v)?;
            } else {
                writeln!(out, "{},{},{}", p[0], p[1], v)?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Usage("empty grid function file".into()))??;
        let mut dim = None;
        let mut half_width = None;
        let mut points = None;
        for field in header.trim_start_matches('#').trim().split(',') {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("malformed header field '{field}'")))?;
            let bad = |_| Error::Usage(format!("malformed header value '{field}'"));
            match key.trim() {
                "dim" => dim = Some(value.trim().parse::<usize>().map_err(|_| bad(()))?),
                "half_width" => half_width = Some(value.trim().parse::<f64>().map_err(|_| bad(()))?),
                "points" => points = Some(value.trim().parse::<usize>().map_err(|_| bad(()))?),
                _ => {}
            }
        }
        let grid = match (dim, half_width, points) {
            (Some(d), Some(l), Some(m)) => Grid::new(d, l, m)?,
            _ => return Err(Error::Usage("header must record dim, half_width and points".into())),
        };
        let mut values = Vec::with_capacity(grid.len());
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
                continue;
            }
            let last = line.rsplit(',').next().unwrap_or(line);
            values.push(
                last.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Usage(format!("malformed value row '{line}'")))?,
            );
        }
        Self::new(grid, values)
    }
}

/// Raw (unnormalized) DFT coefficients of a grid function.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Multiply every coefficient by `m(k)`.
    pub fn multiplied<F: Fn([f64; 2]) -> Complex64>(&self, m: F) -> Spectrum {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| c * m(self.grid.wavevector(idx)))
            .collect();
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    /// Multiply by precomputed per-mode factors (same layout as the coefficients).
    pub fn multiplied_by(&self, factors: &[Complex64]) -> Spectrum {
        assert_eq!(factors.len(), self.coeffs.len(), "multiplier length mismatch");
        Spectrum {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(factors).map(|(c, m)| c * m).collect(),
        }
    }

    /// Fails when the top band of the spectrum is not negligible against its peak.
    pub fn check_resolved(&self, what: &str) -> Result<()> {
        let mut peak = 0.0f64;
        let mut tail = 0.0f64;
        for (idx, c) in self.coeffs.iter().enumerate() {
            let a = c.norm();
            if !a.is_finite() {
                return Err(Error::Resolution(format!("{what}: non-finite spectral coefficient")));
            }
            peak = peak.max(a);
            if self.grid.in_top_band(idx) {
                tail = tail.max(a);
            }
        }
        if peak > 0.0 && tail > RESOLUTION_TOL * peak {
            return Err(Error::Resolution(format!(
                "{what}: top-band amplitude is {:.3e} of the peak (limit {RESOLUTION_TOL:e}); \
                 refine the grid (M={}, L={})",
                tail / peak,
                self.grid.points,
                self.grid.half_width
            )));
        }
        Ok(())
    }

    /// Inverse transform; the imaginary part is discarded.
    pub fn to_grid_function(&self) -> Result<GridFunction> {
        let mut data = self.coeffs.clone();
        fft_in_place(&self.grid, &mut data, true);
        let n = data.len() as f64;
        GridFunction::new(self.grid, data.iter().map(|c| c.re / n).collect())
    }
}

fn fft_in_place(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let m = grid.points();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    };
    if grid.dim() == 1 {
        fft.process(data);
        return;
    }
    // rows, then columns through a scratch buffer
    for row in data.chunks_exact_mut(m) {
        fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..m {
        for i in 0..m {
            column[i] = data[i * m + j];
        }
        fft.process(&mut column);
        for i in 0..m {
            data[i * m + j] = column[i];
        }
    }
}
