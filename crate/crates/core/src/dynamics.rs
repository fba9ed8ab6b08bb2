//! Time evolution in a uniform field: exact free and gravitational maps, Weyl
//! displacements, energy eigenfunctions, a Strang split-step integrator and
//! the two equivalence-principle checkers.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{dft_forward, dft_inverse, quad, roll, translate};
use crate::phasespace::{velocity_wigner_mismatch, wigner};
use crate::states::{central_moment, raw_moment, rebase_mass, velocity_amplitude_at, WaveFunction};

/// Relative tolerance on the measured Version-A shift.
pub const SHIFT_TOLERANCE: f64 = 1e-8;

/// Field strength, duration and the gravitational-to-inertial mass ratio.
///
/// The inertial mass is always the mass carried by the evolved state. The
/// ratio `m_g/m_i` rescales the field: `g_eff = (m_g/m_i)·g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub g: f64,
    pub t: f64,
    #[serde(default = "unit_ratio")]
    pub mass_ratio: f64,
    /// Demand that ½·g_eff·t² is a whole number of lattice cells.
    #[serde(default)]
    pub exact_shift: bool,
}

fn unit_ratio() -> f64 {
    1.0
}

impl EvolutionParams {
    pub fn new(g: f64, t: f64) -> Self {
        Self {
            g,
            t,
            mass_ratio: 1.0,
            exact_shift: false,
        }
    }

    pub fn exact(mut self) -> Self {
        self.exact_shift = true;
        self
    }

    /// Unequal inertial and gravitational mass.
    pub fn with_masses(mut self, inertial: f64, gravitational: f64) -> Self {
        self.mass_ratio = gravitational / inertial;
        self
    }

    pub fn with_ratio(mut self, ratio: f64) -> Self {
        self.mass_ratio = ratio;
        self
    }

    /// Coupling `(λ/m)·U(x)` with `U = g x`: the gravitational mass is λ/m.
    pub fn with_lambda_coupling(self, lambda: f64, m: f64) -> Self {
        self.with_masses(m, lambda / m)
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn effective_g(&self) -> f64 {
        self.mass_ratio * self.g
    }

    /// Displacement of the packet center, ½·g_eff·t² (toward −x for g > 0).
    pub fn fall_distance(&self) -> f64 {
        0.5 * self.effective_g() * self.t * self.t
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::param(
                "t",
                format!("must be finite and ≥ 0, got {}", self.t),
            ));
        }
        if !self.g.is_finite() {
            return Err(Error::param("g", "must be finite"));
        }
        if !(self.mass_ratio > 0.0 && self.mass_ratio.is_finite()) {
            return Err(Error::param(
                "mass_ratio",
                format!("must be positive, got {}", self.mass_ratio),
            ));
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param(
            "t",
            format!("must be finite and ≥ 0, got {t}"),
        ));
    }
    Ok(())
}

fn free_amplitudes(psi: &WaveFunction, t: f64) -> Vec<Complex64> {
    let g = psi.grid();
    let m = psi.mass();
    // the rest-mass phase is kept separate: m·t can be large and folding it
    // into each p²t/2m would round away the small level splittings
    let rest = Complex64::from_polar(1.0, -m * t);
    let mut mom = psi.momentum_amplitudes();
    for (j, a) in mom.iter_mut().enumerate() {
        let p = g.p(j);
        *a *= Complex64::from_polar(1.0, -p * p / (2.0 * m) * t) * rest;
    }
    dft_inverse(&mom, g).expect("grid length")
}

/// Free propagation, including the rest-mass phase e^{−imt}.
pub fn free_evolve(psi: &WaveFunction, t: f64) -> Result<WaveFunction> {
    check_time(t)?;
    let out = WaveFunction::from_parts(*psi.grid(), free_amplitudes(psi, t), psi.mass())?;
    out.check_leakage()?;
    Ok(out)
}

/// Exact evolution under `p²/2m + m·g_eff·x`:
///
/// ```text
/// ψ_t(x) = e^{−i m g t x − i m g² t³/6} ψ_t^free(x + ½ g t²)
/// ```
pub fn gravity_evolve(psi: &WaveFunction, params: &EvolutionParams) -> Result<WaveFunction> {
    params.validate()?;
    let grid = *psi.grid();
    let m = psi.mass();
    let (g, t) = (params.effective_g(), params.t);
    let shift = params.fall_distance();
    if params.exact_shift && grid.cells(shift).is_none() {
        return Err(Error::NotGridAligned {
            shift,
            dx: grid.dx(),
        });
    }
    let free = free_amplitudes(psi, t);
    let mut amps = translate(&free, &grid, shift)?;
    let global = -m * g * g * t * t * t / 6.0;
    for (k, a) in amps.iter_mut().enumerate() {
        *a *= Complex64::from_polar(1.0, -m * g * t * grid.x(k) + global);
    }
    let out = WaveFunction::from_parts(grid, amps, m)?;
    out.check_leakage()?;
    Ok(out)
}

/// Symmetric-order displacement `(V(a,b)ψ)(x) = e^{−iab/2} e^{iax} ψ(x − b)`.
pub fn weyl_translate(psi: &WaveFunction, a: f64, b: f64) -> Result<WaveFunction> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::param("a, b", "must be finite"));
    }
    let grid = *psi.grid();
    let mut amps = match grid.cells(-b) {
        Some(c) => roll(psi.amplitudes(), c),
        None => translate(psi.amplitudes(), &grid, -b)?,
    };
    for (k, v) in amps.iter_mut().enumerate() {
        *v *= Complex64::from_polar(1.0, a * grid.x(k) - a * b / 2.0);
    }
    let out = WaveFunction::from_parts(grid, amps, psi.mass())?;
    out.check_leakage()?;
    Ok(out)
}

/// Momentum-space energy eigenfunction ⟨p|E⟩ of `m + p²/2m + m g x`, where
/// `energy` is measured from the rest mass.
pub fn energy_eigenfunction_p(energy: f64, p: f64, m: f64, g: f64) -> Result<Complex64> {
    if g == 0.0 || !g.is_finite() {
        return Err(Error::param("g", "eigenbasis requires a non-zero field"));
    }
    if !(m > 0.0) {
        return Err(Error::param("m", format!("must be positive, got {m}")));
    }
    let amp = 1.0 / (2.0 * PI * m * g).abs().sqrt();
    let phase = -(energy * p - p * p * p / (6.0 * m)) / (m * g);
    Ok(Complex64::from_polar(amp, phase))
}

/// Hann-windowed overlap ∫ dp w(p) ⟨E₁|p⟩⟨p|E₂⟩ over |p| ≤ `p_half_width`.
///
/// For E₁ = E₂ this is `p_half_width/(2π m g)`; it falls off once
/// |E₁ − E₂| exceeds a few `2π m g / p_half_width`.
pub fn energy_overlap(
    e1: f64,
    e2: f64,
    m: f64,
    g: f64,
    p_half_width: f64,
    points: usize,
) -> Result<Complex64> {
    if points < 2 || !(p_half_width > 0.0) {
        return Err(Error::param(
            "points",
            "need ≥ 2 points on a positive window",
        ));
    }
    let dp = 2.0 * p_half_width / points as f64;
    let mut acc = Complex64::default();
    for k in 0..points {
        let p = -p_half_width + (k as f64 + 0.5) * dp;
        let w = 0.5 * (1.0 + (PI * p / p_half_width).cos());
        let a = energy_eigenfunction_p(e1, p, m, g)?;
        let b = energy_eigenfunction_p(e2, p, m, g)?;
        acc += a.conj() * b * w;
    }
    Ok(acc * dp)
}

/// Strang splitting for `m + p²/2m + κ x`: half potential kick, full kinetic
/// drift (rest mass included), half kick.
pub fn split_step_evolve(
    psi: &WaveFunction,
    kappa: f64,
    t: f64,
    n_steps: usize,
) -> Result<WaveFunction> {
    check_time(t)?;
    if n_steps == 0 {
        return Err(Error::param("n_steps", "must be ≥ 1"));
    }
    let grid = *psi.grid();
    let m = psi.mass();
    let dt = t / n_steps as f64;
    let half_kick: Vec<Complex64> = grid
        .xs()
        .iter()
        .map(|x| Complex64::from_polar(1.0, -kappa * x * dt / 2.0))
        .collect();
    let drift: Vec<Complex64> = grid
        .ps()
        .iter()
        .map(|p| Complex64::from_polar(1.0, -(m + p * p / (2.0 * m)) * dt))
        .collect();

    let mut amps = psi.amplitudes().to_vec();
    for _ in 0..n_steps {
        amps.iter_mut().zip(&half_kick).for_each(|(a, k)| *a *= k);
        let mut mom = dft_forward(&amps, &grid)?;
        mom.iter_mut().zip(&drift).for_each(|(a, d)| *a *= d);
        amps = dft_inverse(&mom, &grid)?;
        amps.iter_mut().zip(&half_kick).for_each(|(a, k)| *a *= k);
    }
    let out = WaveFunction::from_parts(grid, amps, m)?;
    out.check_leakage()?;
    Ok(out)
}

/// One row of the moment comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub order: u32,
    pub reference: f64,
    pub probe: f64,
    /// |probe − reference| scaled by the spread raised to `order`.
    pub mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpReport {
    /// Version A: max |ρ_g(x) − ρ_0(x + ½gt²)|. Version B: max |ρ₁(x) − ρ₂(x)|.
    pub max_density_mismatch: f64,
    /// The universal fall distance ½gt².
    pub shift_applied: f64,
    /// Version A: ⟨x⟩_free − ⟨x⟩_g. Version B: the same for the second mass.
    pub measured_shift: f64,
    pub moment_table: Vec<MomentRow>,
    /// Version B: max |(|φ₁(v)|² − |φ₂(v)|²)| at time t.
    pub velocity_density_mismatch: Option<f64>,
    /// Version B: max |W̄₁ − W̄₂| on the first particle's (x, v) lattice.
    pub velocity_wigner_mismatch: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Version A: the field only translates the density of any state.
///
/// Evolves `psi` with and without the field, compares the gravitational
/// density with the free one displaced by the nominal ½gt² (which must be
/// grid-aligned), and compares central moments of order 2–4. The mass ratio
/// in `params` is applied to the field run only, so a violating ratio shows
/// up as a wrong measured shift.
pub fn check_version_a(
    psi: &WaveFunction,
    params: &EvolutionParams,
    tolerance: f64,
) -> Result<EpReport> {
    params.validate()?;
    let grid = *psi.grid();
    let nominal = 0.5 * params.g * params.t * params.t;
    let cells = grid.cells(nominal).ok_or(Error::NotGridAligned {
        shift: nominal,
        dx: grid.dx(),
    })?;

    let free = free_evolve(psi, params.t)?;
    let fell = gravity_evolve(psi, params)?;

    let shifted: Vec<f64> = roll(free.amplitudes(), cells)
        .iter()
        .map(|a| a.norm_sqr())
        .collect();
    let mismatch = fell
        .density()
        .iter()
        .zip(&shifted)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let measured = raw_moment(&free, 1) - raw_moment(&fell, 1);
    let spread = central_moment(&free, 2)?.sqrt();
    let mut table = Vec::with_capacity(3);
    for order in 2..=4 {
        let reference = central_moment(&free, order)?;
        let probe = central_moment(&fell, order)?;
        table.push(MomentRow {
            order,
            reference,
            probe,
            mismatch: (probe - reference).abs() / spread.powi(order as i32),
        });
    }

    let shift_ok = (measured - nominal).abs() <= SHIFT_TOLERANCE * nominal.abs().max(grid.dx());
    let passed = mismatch < tolerance && shift_ok && table.iter().all(|r| r.mismatch < tolerance);
    if !shift_ok {
        log::info!("measured shift {measured:e} differs from ½gt² = {nominal:e}");
    }
    Ok(EpReport {
        max_density_mismatch: mismatch,
        shift_applied: nominal,
        measured_shift: measured,
        moment_table: table,
        velocity_density_mismatch: None,
        velocity_wigner_mismatch: None,
        tolerance,
        passed,
    })
}

/// Version B: particles of different mass prepared with the same velocity
/// wave function keep the same velocity distribution in free fall.
///
/// `psi` is the reference particle and always falls with ratio 1; the mass
/// ratio in `params` is applied to the particle of mass `m2`, which is
/// `rebase_mass(psi, m2)`. `passed` reflects the velocity densities and the
/// velocity moments. The full velocity Wigner maps and the position
/// densities are reported alongside; they are not mass independent for
/// pure states.
pub fn check_version_b(
    psi: &WaveFunction,
    m2: f64,
    params: &EvolutionParams,
    tolerance: f64,
) -> Result<EpReport> {
    params.validate()?;
    let other = rebase_mass(psi, m2)?;
    let reference = EvolutionParams {
        mass_ratio: 1.0,
        ..*params
    };
    let a = gravity_evolve(psi, &reference)?;
    let b = gravity_evolve(&other, params)?;

    let ga = a.grid();
    let v_lattice: Vec<f64> = ga.ps().iter().map(|p| p / a.mass()).collect();
    let dens_a: Vec<f64> = a.momentum_density().iter().map(|d| d * a.mass()).collect();
    let dens_b: Vec<f64> =
        crate::phasespace::par_map(&v_lattice, |&v| velocity_amplitude_at(&b, v).norm_sqr());
    let velocity_mismatch = dens_a
        .iter()
        .zip(&dens_b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);

    let dv = ga.dp() / a.mass();
    let mut table = Vec::with_capacity(4);
    let moment = |d: &[f64], n: i32| {
        let vals: Vec<f64> = d
            .iter()
            .zip(&v_lattice)
            .map(|(r, v)| r * v.powi(n))
            .collect();
        quad(&vals, dv)
    };
    let mean = moment(&dens_a, 1);
    let spread = (moment(&dens_a, 2) - mean * mean)
        .max(0.0)
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let scale = mean.abs().max(spread);
    for order in 1..=4u32 {
        let r = moment(&dens_a, order as i32);
        let p = moment(&dens_b, order as i32);
        table.push(MomentRow {
            order,
            reference: r,
            probe: p,
            mismatch: (p - r).abs() / scale.powi(order as i32),
        });
    }

    let density_mismatch = a
        .density()
        .iter()
        .zip(b.density())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);

    let wa = wigner(&a)?.to_velocity()?;
    let wb = wigner(&b)?.to_velocity()?;
    let wigner_mismatch = velocity_wigner_mismatch(&wa, &wb)?;

    let free_b = free_evolve(&other, params.t)?;
    let measured = raw_moment(&free_b, 1) - raw_moment(&b, 1);

    let passed = velocity_mismatch < tolerance && table.iter().all(|r| r.mismatch < tolerance);
    Ok(EpReport {
        max_density_mismatch: density_mismatch,
        shift_applied: 0.5 * params.g * params.t * params.t,
        measured_shift: measured,
        moment_table: table,
        velocity_density_mismatch: Some(velocity_mismatch),
        velocity_wigner_mismatch: Some(wigner_mismatch),
        tolerance,
        passed,
    })
}

/// Largest pointwise |a − b| between two states on the same lattice.
pub fn max_amplitude_error(a: &WaveFunction, b: &WaveFunction) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest pointwise difference of the two position densities.
pub fn max_density_error(a: &WaveFunction, b: &WaveFunction) -> f64 {
    a.density()
        .iter()
        .zip(b.density())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
