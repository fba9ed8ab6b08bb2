//! Internal two-level phase of a falling particle: the visibility integral
//! ζ_t, the gravitational phase shift and its closed forms, the proper-time
//! comparison and superpositions of two classical packets.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::composite::{reduced_internal, CompositeState};
use crate::error::{Error, Result};
use crate::lattice::quad;
use crate::states::WaveFunction;

pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;
/// Default surface gravity in m/s².
pub const STANDARD_GRAVITY: f64 = 9.81;
/// Largest GM/(R c²) accepted by [`proper_time`].
pub const WEAK_FIELD_LIMIT: f64 = 1e-3;

/// Natural units (c = 1) or SI, where phases pick up 1/c².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    #[default]
    Natural,
    Si,
}

impl UnitSystem {
    pub fn c_squared(&self) -> f64 {
        match self {
            UnitSystem::Natural => 1.0,
            UnitSystem::Si => SPEED_OF_LIGHT * SPEED_OF_LIGHT,
        }
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::param(
            name,
            format!("must be finite and ≥ 0, got {v}"),
        ));
    }
    Ok(())
}

/// ζ_t = ∫ dx |ψ(x)|² e^{−iωgtx} for the freely evolved state ψ.
pub fn zeta(psi_free_t: &WaveFunction, omega: f64, g: f64, t: f64) -> Result<Complex64> {
    let grid = psi_free_t.grid();
    let k = omega * g * t;
    if k != 0.0 {
        let wavelength = 2.0 * PI / k.abs();
        if wavelength < 4.0 * grid.dx() {
            return Err(Error::Undersampled {
                wavelength,
                limit: 4.0 * grid.dx(),
            });
        }
    }
    let terms: Vec<Complex64> = psi_free_t
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(j, a)| Complex64::from_polar(a.norm_sqr(), -k * grid.x(j)))
        .collect();
    Ok(quad(&terms, grid.dx()))
}

/// 2×2 internal density matrix with the parameters it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub rho: [[Complex64; 2]; 2],
    pub omega: f64,
    pub g: f64,
    pub t: f64,
}

impl QubitState {
    pub fn off_diagonal(&self) -> Complex64 {
        self.rho[0][1]
    }

    /// arg ρ₀₁.
    pub fn phase(&self) -> f64 {
        self.rho[0][1].arg()
    }

    pub fn coherence(&self) -> f64 {
        self.rho[0][1].norm()
    }

    pub fn trace(&self) -> Complex64 {
        self.rho[0][0] + self.rho[1][1]
    }

    pub fn hermiticity_error(&self) -> f64 {
        let off = (self.rho[0][1] - self.rho[1][0].conj()).norm();
        off.max(self.rho[0][0].im.abs())
            .max(self.rho[1][1].im.abs())
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let (a, d) = (self.rho[0][0].re, self.rho[1][1].re);
        let b = self.rho[0][1].norm();
        let mid = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mid - r, mid + r]
    }
}

/// Assembles ρ₀₁ = c₀c₁* e^{iωt − iωg²t³/3} ζ.
///
/// Tracing out a state evolved with this crate's evolvers yields ζ*, not ζ,
/// in this slot; pass `zeta.conj()` to compare with [`qubit_from_composite`].
pub fn qubit_reduced(
    c0: Complex64,
    c1: Complex64,
    omega: f64,
    g: f64,
    t: f64,
    zeta: Complex64,
) -> Result<QubitState> {
    let norm = c0.norm_sqr() + c1.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm_sqr: norm });
    }
    let phase = omega * t - omega * g * g * t * t * t / 3.0;
    let off = c0 * c1.conj() * Complex64::from_polar(1.0, phase) * zeta;
    Ok(QubitState {
        rho: [
            [Complex64::new(c0.norm_sqr(), 0.0), off],
            [off.conj(), Complex64::new(c1.norm_sqr(), 0.0)],
        ],
        omega,
        g,
        t,
    })
}

/// Internal state of an evolved two-level composite, by tracing out position.
pub fn qubit_from_composite(state: &CompositeState, g: f64, t: f64) -> Result<QubitState> {
    if state.spectrum().levels() != 2 {
        return Err(Error::param("state", "need exactly two internal levels"));
    }
    let r = reduced_internal(state)?;
    Ok(QubitState {
        rho: [[r[[0, 0]], r[[0, 1]]], [r[[1, 0]], r[[1, 1]]]],
        omega: state.spectrum().omega()[1],
        g,
        t,
    })
}

/// φ_g = (2√2/3) ω g^{1/2} L^{3/2}, the phase accumulated over a drop of
/// height L.
pub fn phase_shift(omega: f64, g: f64, l: f64, units: UnitSystem) -> Result<f64> {
    non_negative("omega", omega)?;
    non_negative("g", g)?;
    non_negative("L", l)?;
    Ok(2.0 * 2f64.sqrt() / 3.0 * omega * g.sqrt() * l.powf(1.5) / units.c_squared())
}

/// φ_g = ω g² t_d³/3.
pub fn phase_shift_t(omega: f64, g: f64, t_d: f64, units: UnitSystem) -> Result<f64> {
    non_negative("omega", omega)?;
    non_negative("g", g)?;
    non_negative("t_d", t_d)?;
    Ok(omega * g * g * t_d.powi(3) / 3.0 / units.c_squared())
}

/// Drop time √(2L/g).
pub fn detection_time(g: f64, l: f64) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::param("g", format!("must be positive, got {g}")));
    }
    non_negative("L", l)?;
    Ok((2.0 * l / g).sqrt())
}

/// u = φ_g/(ω t_d) = (2/3) g L, independent of ω.
pub fn relative_shift(g: f64, l: f64, units: UnitSystem) -> Result<f64> {
    non_negative("g", g)?;
    non_negative("L", l)?;
    Ok(2.0 / 3.0 * g * l / units.c_squared())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BParameter {
    /// b = ω g t_d σ_x.
    pub b: f64,
    /// b/φ_g, which equals 3σ_x/(2L).
    pub ratio_to_phase: f64,
    pub sigma_over_l: f64,
}

/// Spread of the ζ phase ramp across the packet at detection; ζ ≈ 1 needs
/// b ≪ 1.
pub fn b_parameter(
    omega: f64,
    g: f64,
    l: f64,
    sigma_x: f64,
    units: UnitSystem,
) -> Result<BParameter> {
    non_negative("sigma_x", sigma_x)?;
    let t_d = detection_time(g, l)?;
    let b = omega * g * t_d * sigma_x / units.c_squared();
    let phi = phase_shift_t(omega, g, t_d, units)?;
    Ok(BParameter {
        b,
        ratio_to_phase: if phi > 0.0 { b / phi } else { f64::NAN },
        sigma_over_l: if l > 0.0 { sigma_x / l } else { f64::NAN },
    })
}

/// A sampled radial trajectory outside a mass GM at radius R; x(t) is the
/// height change measured toward the mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub gm: f64,
    pub radius: f64,
}

impl PathSample {
    pub fn new(times: Vec<f64>, positions: Vec<f64>, gm: f64, radius: f64) -> Result<Self> {
        let p = Self {
            times,
            positions,
            gm,
            radius,
        };
        p.validate(UnitSystem::Natural)?;
        Ok(p)
    }

    /// `samples` points of x(s) on a uniform grid over [0, t].
    pub fn from_fn(
        t: f64,
        samples: usize,
        gm: f64,
        radius: f64,
        x: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if samples < 3 {
            return Err(Error::param("samples", "need at least 3 samples"));
        }
        let times: Vec<f64> = (0..samples)
            .map(|k| t * k as f64 / (samples - 1) as f64)
            .collect();
        let positions = times.iter().map(|&s| x(s)).collect();
        Ok(Self {
            times,
            positions,
            gm,
            radius,
        })
    }

    fn validate(&self, units: UnitSystem) -> Result<()> {
        if self.times.len() != self.positions.len() {
            return Err(Error::LengthMismatch {
                expected: self.times.len(),
                got: self.positions.len(),
            });
        }
        if self.times.len() < 3 {
            return Err(Error::param("times", "need at least 3 samples"));
        }
        if let Some(i) = self.times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotoneTimes { index: i + 1 });
        }
        let ratio = self.gm / (self.radius * units.c_squared());
        if !(ratio.abs() < WEAK_FIELD_LIMIT) {
            return Err(Error::WeakField {
                ratio,
                limit: WEAK_FIELD_LIMIT,
            });
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }
}

/// Weights of the 3-point Lagrange derivative at `t` through (t0, t1, t2).
fn lagrange_derivative(ts: [f64; 3], xs: [f64; 3], t: f64) -> f64 {
    let [t0, t1, t2] = ts;
    xs[0] * ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2))
        + xs[1] * ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2))
        + xs[2] * ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1))
}

/// Velocities from 3-point differences (one-sided at the ends), exact for
/// quadratic paths.
fn derivative(ts: &[f64], xs: &[f64]) -> Vec<f64> {
    let n = ts.len();
    (0..n)
        .map(|i| {
            let s = i.saturating_sub(1).min(n - 3);
            lagrange_derivative(
                [ts[s], ts[s + 1], ts[s + 2]],
                [xs[s], xs[s + 1], xs[s + 2]],
                ts[i],
            )
        })
        .collect()
}

/// ∫ over [a, b] of the quadratic through three points, for b among them.
fn quadratic_segment(ts: [f64; 3], ys: [f64; 3], a: f64, b: f64) -> f64 {
    // local coordinates about the middle node keep the primitives O(h)
    let c = ts[1];
    let ts = [ts[0] - c, 0.0, ts[2] - c];
    let (a, b) = (a - c, b - c);
    let prim = |i: usize, t: f64| {
        let (j, k) = match i {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (tj, tk) = (ts[j], ts[k]);
        let denom = (ts[i] - tj) * (ts[i] - tk);
        (t * t * t / 3.0 - (tj + tk) * t * t / 2.0 + tj * tk * t) / denom
    };
    (0..3).map(|i| ys[i] * (prim(i, b) - prim(i, a))).sum()
}

/// Composite Simpson on a non-uniform lattice; an odd trailing interval is
/// closed with the quadratic through the last three points.
fn simpson(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len();
    let mut acc = 0.0;
    let mut i = 0;
    while i + 2 < n {
        acc += quadratic_segment(
            [ts[i], ts[i + 1], ts[i + 2]],
            [ys[i], ys[i + 1], ys[i + 2]],
            ts[i],
            ts[i + 2],
        );
        i += 2;
    }
    if i + 1 < n {
        acc += quadratic_segment(
            [ts[n - 3], ts[n - 2], ts[n - 1]],
            [ys[n - 3], ys[n - 2], ys[n - 1]],
            ts[n - 2],
            ts[n - 1],
        );
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProperTime {
    pub tau: f64,
    /// τ of a static observer at R over the same coordinate time.
    pub tau_static: f64,
    /// g ∫ x ds.
    pub term_grav: f64,
    /// ½ ∫ ẋ² ds.
    pub term_sr: f64,
}

/// Weak-field proper time along the path:
/// τ = (1 − GM/R) t − g ∫ x ds − ½ ∫ ẋ² ds (each term over c² in SI).
pub fn proper_time(path: &PathSample, g_local: f64, units: UnitSystem) -> Result<ProperTime> {
    path.validate(units)?;
    let c2 = units.c_squared();
    let t = path.duration();
    let v = derivative(&path.times, &path.positions);
    let v2: Vec<f64> = v.iter().map(|v| v * v).collect();
    let term_grav = g_local * simpson(&path.times, &path.positions) / c2;
    let term_sr = 0.5 * simpson(&path.times, &v2) / c2;
    let tau_static = (1.0 - path.gm / (path.radius * c2)) * t;
    Ok(ProperTime {
        tau: tau_static - term_grav - term_sr,
        tau_static,
        term_grav,
        term_sr,
    })
}

/// ω(τ_static − τ): the phase lag of a clock carried along the path.
pub fn classical_phase(
    omega: f64,
    path: &PathSample,
    g_local: f64,
    units: UnitSystem,
) -> Result<f64> {
    let p = proper_time(path, g_local, units)?;
    Ok(omega * (p.term_grav + p.term_sr))
}

/// ζ_t for two non-overlapping classical packets at ±ℓ/2 moving with v₁, v₂
/// (point-packet limit):
/// e^{−iωg(v₁+v₂)t²/2} cos(ωgt(ℓ + (v₁ − v₂)t)/2).
pub fn cat_zeta(omega: f64, g: f64, t: f64, ell: f64, v1: f64, v2: f64) -> Complex64 {
    let phase = -0.5 * g * omega * (v1 + v2) * t * t;
    let amp = (0.5 * g * omega * t * (ell + (v1 - v2) * t)).cos();
    Complex64::from_polar(1.0, phase) * amp
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionPhase {
    /// ℓ/(v₂ − v₁), when both packets reach the detector together.
    pub t_d: f64,
    /// Drop height to the detector at −L.
    pub l: f64,
    /// ω g² t_d³/3.
    pub gravitational: f64,
    /// ω L (v₁ + v₂).
    pub kinematic: f64,
    /// ω ℓ (v₁ + v₂)²/(2(v₂ − v₁)).
    pub quantum: f64,
    pub total: f64,
}

/// Phase shift of the two-packet state read out at the common arrival time.
pub fn cat_detection_phase(
    omega: f64,
    g: f64,
    ell: f64,
    v1: f64,
    v2: f64,
) -> Result<DetectionPhase> {
    if !(v2 > v1) {
        return Err(Error::param("v2", "the packets meet only if v₂ > v₁"));
    }
    let t_d = ell / (v2 - v1);
    if !(t_d >= 0.0) {
        return Err(Error::param("ell", "detection time must be non-negative"));
    }
    let l = 0.5 * g * t_d * t_d - 0.5 * (v2 + v1) / (v2 - v1) * ell;
    let gravitational = omega * g * g * t_d.powi(3) / 3.0;
    let kinematic = omega * l * (v1 + v2);
    let quantum = 0.5 * omega * ell * (v1 + v2).powi(2) / (v2 - v1);
    Ok(DetectionPhase {
        t_d,
        l,
        gravitational,
        kinematic,
        quantum,
        total: gravitational + kinematic + quantum,
    })
}
