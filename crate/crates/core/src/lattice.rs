//! Uniform position lattice, its conjugate momentum lattice and the unitary
//! transform between them.
//!
//! Conventions (ħ = 1):
//!
//! ```text
//! x_k = x_min + k·dx                     k = 0 … n−1
//! p_j = (j − n/2)·dp,  dp = 2π/(n·dx)    j = 0 … n−1
//! ψ̃(p_j) = dx/√(2π) Σ_k e^{−i p_j x_k} ψ(x_k)
//! ```
//!
//! With these weights Σ|ψ̃|²·dp = Σ|ψ|²·dx exactly, so both arrays are
//! physically normalized densities.

use std::f64::consts::PI;
use std::ops::{Add, Mul};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Domain, Error, Result};

/// Smallest lattice accepted by [`make_grid`].
pub const MIN_POINTS: usize = 16;
/// Fraction of the lattice, on each side, that forms the guard band.
pub const EDGE_FRACTION: f64 = 0.05;
/// Maximum probability allowed inside a guard band.
pub const LEAKAGE_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    dx: f64,
    n: usize,
}

/// Builds the lattice `x_min + k (x_max − x_min)/n`, `k < n`.
pub fn make_grid(x_min: f64, x_max: f64, n: usize) -> Result<Grid1D> {
    if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
        return Err(Error::InvalidGrid(format!(
            "degenerate interval [{x_min}, {x_max}]"
        )));
    }
    Grid1D::from_spacing(x_min, (x_max - x_min) / n as f64, n)
}

impl Grid1D {
    pub fn from_spacing(x_min: f64, dx: f64, n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two ≥ {MIN_POINTS}"
            )));
        }
        if !(dx > 0.0 && dx.is_finite() && x_min.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "spacing dx = {dx} must be positive"
            )));
        }
        Ok(Self { x_min, dx, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    /// Right end of the periodic cell (one spacing past the last point).
    pub fn x_max(&self) -> f64 {
        self.x_min + self.span()
    }

    pub fn span(&self) -> f64 {
        self.n as f64 * self.dx
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.x(k)).collect()
    }

    pub fn dp(&self) -> f64 {
        2.0 * PI / self.span()
    }

    pub fn p(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.dp()
    }

    pub fn ps(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.p(j)).collect()
    }

    /// Largest momentum magnitude on the lattice, π/dx.
    pub fn p_max(&self) -> f64 {
        PI / self.dx
    }

    /// Same number of points, all lengths multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_spacing(self.x_min * factor, self.dx * factor, self.n)
    }

    /// Number of points in each guard band.
    pub fn edge_points(&self) -> usize {
        ((self.n as f64 * EDGE_FRACTION).floor() as usize).max(1)
    }

    /// Interval strictly between the two guard bands.
    pub fn interior(&self) -> (f64, f64) {
        let e = self.edge_points();
        (self.x(e), self.x(self.n - 1 - e))
    }

    /// Returns `Some(k)` if `shift` equals `k·dx` to within 1e-9 cells.
    pub fn cells(&self, shift: f64) -> Option<i64> {
        let c = shift / self.dx;
        let r = c.round();
        ((c - r).abs() < 1e-9).then_some(r as i64)
    }
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

pub(crate) fn fft_plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().unwrap_or_else(|e| e.into_inner());
    if inverse {
        p.plan_fft_inverse(n)
    } else {
        p.plan_fft_forward(n)
    }
}

fn check_len(values: &[Complex64], grid: &Grid1D) -> Result<()> {
    if values.len() != grid.n {
        return Err(Error::LengthMismatch {
            expected: grid.n,
            got: values.len(),
        });
    }
    Ok(())
}

/// Position amplitudes to momentum amplitudes on the centered p-lattice.
pub fn dft_forward(values: &[Complex64], grid: &Grid1D) -> Result<Vec<Complex64>> {
    check_len(values, grid)?;
    let n = grid.n;
    let mut buf: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(k, v)| if k % 2 == 0 { *v } else { -*v })
        .collect();
    fft_plan(n, false).process(&mut buf);
    let scale = grid.dx / (2.0 * PI).sqrt();
    for (j, v) in buf.iter_mut().enumerate() {
        *v *= Complex64::from_polar(scale, -grid.p(j) * grid.x_min);
    }
    Ok(buf)
}

/// Inverse of [`dft_forward`].
pub fn dft_inverse(values: &[Complex64], grid: &Grid1D) -> Result<Vec<Complex64>> {
    check_len(values, grid)?;
    let n = grid.n;
    let mut buf: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(j, v)| v * Complex64::from_polar(1.0, grid.p(j) * grid.x_min))
        .collect();
    fft_plan(n, true).process(&mut buf);
    let scale = grid.dp() / (2.0 * PI).sqrt();
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= if k % 2 == 0 { scale } else { -scale };
    }
    Ok(buf)
}

/// Band-limited evaluation of the momentum amplitude at an arbitrary `p`
/// straight from position samples (direct sum, O(n)).
pub fn momentum_amplitude_at(values: &[Complex64], grid: &Grid1D, p: f64) -> Complex64 {
    // the lattice state is band limited; past Nyquist the sum would only
    // return periodic images
    let nyquist = PI / grid.dx;
    if p < -nyquist || p >= nyquist {
        return Complex64::default();
    }
    let scale = grid.dx / (2.0 * PI).sqrt();
    let sum: Complex64 = values
        .iter()
        .enumerate()
        .map(|(k, v)| v * Complex64::from_polar(1.0, -p * grid.x(k)))
        .sum();
    sum * scale
}

/// Band-limited evaluation of the position amplitude at an arbitrary `x`
/// from momentum samples.
pub fn position_amplitude_at(momentum: &[Complex64], grid: &Grid1D, x: f64) -> Complex64 {
    let scale = grid.dp() / (2.0 * PI).sqrt();
    let sum: Complex64 = momentum
        .iter()
        .enumerate()
        .map(|(j, v)| v * Complex64::from_polar(1.0, grid.p(j) * x))
        .sum();
    sum * scale
}

/// Periodic trapezoidal rule: on the lattice the wrap-around segment is
/// included, so this is `dx · Σ values`.
pub fn quad<T>(values: &[T], dx: f64) -> T
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T> + Default,
{
    values.iter().fold(T::default(), |acc, &v| acc + v) * dx
}

/// Probability carried by the two guard bands of a density sampled on a
/// lattice of `n` points with weight `w`.
pub fn edge_probability(density: &[f64], weight: f64) -> f64 {
    let n = density.len();
    let e = ((n as f64 * EDGE_FRACTION).floor() as usize).max(1);
    let lo: f64 = density[..e].iter().sum();
    let hi: f64 = density[n - e..].iter().sum();
    (lo + hi) * weight
}

/// Boundary guard on position and momentum amplitudes.
pub fn check_leakage(amplitudes: &[Complex64], grid: &Grid1D) -> Result<()> {
    let density: Vec<f64> = amplitudes.iter().map(|a| a.norm_sqr()).collect();
    let px = edge_probability(&density, grid.dx);
    if px > LEAKAGE_LIMIT || !px.is_finite() {
        return Err(Error::Leakage {
            domain: Domain::Position,
            probability: px,
            limit: LEAKAGE_LIMIT,
        });
    }
    let mom = dft_forward(amplitudes, grid)?;
    let density: Vec<f64> = mom.iter().map(|a| a.norm_sqr()).collect();
    let pp = edge_probability(&density, grid.dp());
    if pp > LEAKAGE_LIMIT || !pp.is_finite() {
        return Err(Error::Leakage {
            domain: Domain::Momentum,
            probability: pp,
            limit: LEAKAGE_LIMIT,
        });
    }
    Ok(())
}

/// Circular shift: `out[k] = values[(k + cells) mod n]`.
pub(crate) fn roll(values: &[Complex64], cells: i64) -> Vec<Complex64> {
    let n = values.len() as i64;
    (0..n)
        .map(|k| values[(k + cells).rem_euclid(n) as usize])
        .collect()
}

/// `ψ(x + shift)` on the lattice: exact roll when aligned, otherwise a
/// band-limited phase ramp in momentum space.
pub fn translate(values: &[Complex64], grid: &Grid1D, shift: f64) -> Result<Vec<Complex64>> {
    if let Some(c) = grid.cells(shift) {
        check_len(values, grid)?;
        return Ok(roll(values, c));
    }
    let mut mom = dft_forward(values, grid)?;
    for (j, v) in mom.iter_mut().enumerate() {
        *v *= Complex64::from_polar(1.0, grid.p(j) * shift);
    }
    dft_inverse(&mom, grid)
}
