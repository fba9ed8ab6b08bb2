//! Wigner quasi-probabilities on the lattice, the velocity-axis form and the
//! classical flow that evolves them exactly for linear potentials.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::EvolutionParams;
use crate::error::{Error, Result};
use crate::lattice::{fft_plan, translate, Grid1D};
use crate::states::WaveFunction;

/// Allowed change of the total integral under [`liouville_shift`].
pub const CONSERVATION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisKind {
    Momentum,
    Velocity,
}

/// Real quasi-probability `W[k][j]` at `(x_k, a_j)`, where `a` is momentum
/// or velocity depending on [`AxisKind`].
#[derive(Debug, Clone, PartialEq)]
pub struct WignerMap {
    grid: Grid1D,
    axis_origin: f64,
    d_axis: f64,
    values: Array2<f64>,
    mass: f64,
    kind: AxisKind,
    imag_residue: f64,
}

pub(crate) fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Lattice Wigner transform
///
/// ```text
/// W(x_k, p_j) = dx/2π Σ_l e^{−i p_j l dx} ψ(x_k + l dx/2) ψ*(x_k − l dx/2),  |l| < n
/// ```
///
/// Half-cell samples come from the band-limited interpolant and ψ is zero
/// outside the box. On the lattice momenta the kernel has period n in l, so
/// the whole correlation range folds onto one length-n FFT per row.
pub fn wigner(psi: &WaveFunction) -> Result<WignerMap> {
    psi.check_leakage()?;
    let grid = *psi.grid();
    let n = grid.n();
    let half = translate(psi.amplitudes(), &grid, 0.5 * grid.dx())?;
    let mut u = vec![Complex64::default(); 2 * n];
    for k in 0..n {
        u[2 * k] = psi.amplitudes()[k];
        u[2 * k + 1] = half[k];
    }
    // zero outside the box: a periodic window would correlate a packet with
    // the image of another one across the boundary
    let two_n = 2 * n as i64;
    let zero = Complex64::default();
    let at = |i: i64| {
        if (0..two_n).contains(&i) {
            u[i as usize]
        } else {
            zero
        }
    };
    let fft = fft_plan(n, false);
    let scale = grid.dx() / (2.0 * PI);
    let n_i = n as i64;

    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let c = 2 * k as i64;
            let mut buf = vec![Complex64::default(); n];
            for l in (1 - n_i)..n_i {
                let f = at(c + l) * at(c - l).conj();
                let sign = if l.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                buf[l.rem_euclid(n_i) as usize] += f * sign;
            }
            fft.process(&mut buf);
            let resid = buf.iter().map(|v| v.im.abs()).fold(0.0, f64::max) * scale;
            (buf.iter().map(|v| v.re * scale).collect(), resid)
        })
        .collect();

    let mut values = Array2::zeros((n, n));
    let mut imag_residue: f64 = 0.0;
    for (k, (row, resid)) in rows.into_iter().enumerate() {
        imag_residue = imag_residue.max(resid);
        for (j, v) in row.into_iter().enumerate() {
            values[[k, j]] = v;
        }
    }
    Ok(WignerMap {
        grid,
        axis_origin: grid.p(0),
        d_axis: grid.dp(),
        values,
        mass: psi.mass(),
        kind: AxisKind::Momentum,
        imag_residue,
    })
}

impl WignerMap {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn kind(&self) -> AxisKind {
        self.kind
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn d_axis(&self) -> f64 {
        self.d_axis
    }

    pub fn axis_value(&self, j: usize) -> f64 {
        self.axis_origin + j as f64 * self.d_axis
    }

    pub fn axis(&self) -> Vec<f64> {
        (0..self.values.ncols())
            .map(|j| self.axis_value(j))
            .collect()
    }

    /// Rows are positions, columns the second axis.
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Largest imaginary part discarded by the transform.
    pub fn imag_residue(&self) -> f64 {
        self.imag_residue
    }

    pub fn total(&self) -> f64 {
        self.values.sum() * self.grid.dx() * self.d_axis
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// ∫ W d(axis) at each x_k.
    pub fn position_marginal(&self) -> Vec<f64> {
        self.values
            .rows()
            .into_iter()
            .map(|r| r.sum() * self.d_axis)
            .collect()
    }

    /// ∫ W dx at each axis point.
    pub fn axis_marginal(&self) -> Vec<f64> {
        self.values
            .columns()
            .into_iter()
            .map(|c| c.sum() * self.grid.dx())
            .collect()
    }

    /// Relabels momentum as v = p/m and rescales by m, keeping ∫∫ W dx dv.
    pub fn to_velocity(&self) -> Result<WignerMap> {
        if self.kind != AxisKind::Momentum {
            return Err(Error::WrongAxis {
                expected: AxisKind::Momentum,
                found: self.kind,
            });
        }
        let m = self.mass;
        Ok(WignerMap {
            grid: self.grid,
            axis_origin: self.axis_origin / m,
            d_axis: self.d_axis / m,
            values: self.values.mapv(|w| w * m),
            mass: m,
            kind: AxisKind::Velocity,
            imag_residue: self.imag_residue * m,
        })
    }

    /// Value at row `k` and an arbitrary axis coordinate, linear in the
    /// axis; zero outside the lattice.
    pub fn row_value_at(&self, k: usize, a: f64) -> f64 {
        let f = snap((a - self.axis_origin) / self.d_axis);
        let cols = self.values.ncols();
        linear(f, cols, |j| self.values[[k, j]])
    }

    /// Bilinear interpolation at `(x, a)`; zero outside the lattice.
    pub fn value_at(&self, x: f64, a: f64) -> f64 {
        let fx = snap((x - self.grid.x_min()) / self.grid.dx());
        let rows = self.values.nrows();
        linear(fx, rows, |k| self.row_value_at(k, a))
    }

    /// Same values resampled, linearly in the axis, onto another axis lattice.
    pub fn resample_axis(&self, origin: f64, d_axis: f64, cols: usize) -> WignerMap {
        let mut values = Array2::zeros((self.values.nrows(), cols));
        for k in 0..self.values.nrows() {
            for j in 0..cols {
                values[[k, j]] = self.row_value_at(k, origin + j as f64 * d_axis);
            }
        }
        WignerMap {
            grid: self.grid,
            axis_origin: origin,
            d_axis,
            values,
            mass: self.mass,
            kind: self.kind,
            imag_residue: self.imag_residue,
        }
    }

    fn same_lattice(&self, other: &WignerMap) -> bool {
        self.grid == other.grid
            && self.kind == other.kind
            && self.values.dim() == other.values.dim()
            && (self.d_axis - other.d_axis).abs() <= 1e-14 * self.d_axis.abs()
            && (self.axis_origin - other.axis_origin).abs() <= 1e-12 * self.d_axis.abs()
    }
}

fn snap(f: f64) -> f64 {
    let r = f.round();
    if (f - r).abs() < 1e-9 {
        r
    } else {
        f
    }
}

fn linear(f: f64, len: usize, at: impl Fn(usize) -> f64) -> f64 {
    if !(f >= 0.0) || f > (len - 1) as f64 {
        return 0.0;
    }
    let i = f.floor() as usize;
    let w = f - i as f64;
    if w == 0.0 {
        at(i)
    } else {
        (1.0 - w) * at(i) + w * at(i + 1)
    }
}

/// Evolves a Wigner map along the classical characteristics of a uniform
/// field:
///
/// ```text
/// W_t(x, p) = W₀(x − p t/m − ½ g t², p + m g t)
/// W̄_t(x, v) = W̄₀(x − v t − ½ g t², v + g t)
/// ```
///
/// with g the effective field of `params`. Off-lattice samples are
/// bilinear; samples outside the lattice are zero, and losing more than
/// [`CONSERVATION_TOLERANCE`] of the integral is an error.
pub fn liouville_shift(w0: &WignerMap, params: &EvolutionParams) -> Result<WignerMap> {
    params.validate()?;
    let (g, t) = (params.effective_g(), params.t);
    let m = w0.mass;
    let (n_x, n_a) = w0.values.dim();
    let grid = w0.grid;
    let out: Vec<Vec<f64>> = (0..n_x)
        .into_par_iter()
        .map(|k| {
            let x = grid.x(k);
            (0..n_a)
                .map(|j| {
                    let a = w0.axis_value(j);
                    let (x0, a0) = match w0.kind {
                        AxisKind::Momentum => (x - a * t / m - 0.5 * g * t * t, a + m * g * t),
                        AxisKind::Velocity => (x - a * t - 0.5 * g * t * t, a + g * t),
                    };
                    w0.value_at(x0, a0)
                })
                .collect()
        })
        .collect();
    let mut values = Array2::zeros((n_x, n_a));
    for (k, row) in out.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[[k, j]] = v;
        }
    }
    let shifted = WignerMap {
        values,
        ..w0.clone()
    };
    let lost = (shifted.total() - w0.total()).abs();
    if lost > CONSERVATION_TOLERANCE {
        return Err(Error::LeftSupport { lost });
    }
    Ok(shifted)
}

/// Convex combination Σ wᵢ Wᵢ on the lattice of the first map. Maps whose
/// axis lattice differs are resampled linearly in the axis first.
pub fn mixture(maps: &[WignerMap], weights: &[f64]) -> Result<WignerMap> {
    if maps.is_empty() || maps.len() != weights.len() {
        return Err(Error::param(
            "maps",
            "need one weight per map and at least one map",
        ));
    }
    let first = &maps[0];
    let mut acc = Array2::<f64>::zeros(first.values.dim());
    for (map, &w) in maps.iter().zip(weights) {
        if map.grid != first.grid || map.kind != first.kind {
            return Err(Error::param(
                "maps",
                "maps must share the x-lattice and axis kind",
            ));
        }
        if map.same_lattice(first) {
            acc.scaled_add(w, &map.values);
        } else {
            let r = map.resample_axis(first.axis_origin, first.d_axis, first.values.ncols());
            acc.scaled_add(w, &r.values);
        }
    }
    Ok(WignerMap {
        values: acc,
        ..first.clone()
    })
}

/// Max |a − b| on the lattice of `a`, resampling `b` in the axis if needed.
pub fn velocity_wigner_mismatch(a: &WignerMap, b: &WignerMap) -> Result<f64> {
    if a.kind != b.kind {
        return Err(Error::WrongAxis {
            expected: a.kind,
            found: b.kind,
        });
    }
    if a.grid != b.grid {
        return Err(Error::param("maps", "maps must share the x-lattice"));
    }
    let diff = |other: &Array2<f64>| {
        a.values
            .iter()
            .zip(other.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    if a.same_lattice(b) {
        Ok(diff(&b.values))
    } else {
        let r = b.resample_axis(a.axis_origin, a.d_axis, a.values.ncols());
        Ok(diff(&r.values))
    }
}

/// Max |a − b| over two maps on the same lattice.
pub fn max_abs_difference(a: &WignerMap, b: &WignerMap) -> Result<f64> {
    if !a.same_lattice(b) {
        return Err(Error::param("maps", "maps live on different lattices"));
    }
    Ok(a.values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}
