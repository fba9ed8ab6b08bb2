//! Particles with internal levels. Level n adds ω_n to the rest mass, so each
//! branch falls with its own mass; tracing out the levels dephases the
//! translational state.

use std::sync::atomic::{AtomicBool, Ordering};

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{gravity_evolve, EvolutionParams};
use crate::error::{Error, Result};
use crate::lattice::position_amplitude_at;
use crate::phasespace::{mixture, wigner, WignerMap};
use crate::states::{dispersion, raw_moment, WaveFunction, NORM_TOLERANCE};

/// Largest allowed ω_max/m₀.
pub const SPECTRUM_LIMIT: f64 = 0.01;
/// Largest lattice for which [`reduced_translational`] builds a dense matrix.
pub const DENSE_LIMIT: usize = 4096;
/// Largest regime margin accepted by [`echo_protocol`].
pub const ECHO_MARGIN_LIMIT: f64 = 0.1;
/// Expansion parameter above which [`gamma_gaussian`] logs a warning.
pub const GAUSSIAN_VALIDITY: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectrumKind {
    TwoLevel { omega: f64 },
    Harmonic { omega: f64, levels: usize },
    Explicit { omega: Vec<f64> },
}

/// Excitation energies ω_n (ω₀ = 0, non-decreasing) above a base mass m₀.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InternalSpectrum {
    omega: Vec<f64>,
    base_mass: f64,
}

pub fn make_spectrum(kind: &SpectrumKind, base_mass: f64) -> Result<InternalSpectrum> {
    if !(base_mass > 0.0 && base_mass.is_finite()) {
        return Err(Error::param(
            "base_mass",
            format!("must be positive, got {base_mass}"),
        ));
    }
    let omega = match kind {
        SpectrumKind::TwoLevel { omega } => {
            if !(*omega > 0.0) {
                return Err(Error::param(
                    "omega",
                    format!("must be positive, got {omega}"),
                ));
            }
            vec![0.0, *omega]
        }
        SpectrumKind::Harmonic { omega, levels } => {
            if !(*omega > 0.0) || *levels == 0 {
                return Err(Error::param("omega", "need ω > 0 and at least one level"));
            }
            (0..*levels).map(|n| n as f64 * omega).collect()
        }
        SpectrumKind::Explicit { omega } => omega.clone(),
    };
    InternalSpectrum::new(omega, base_mass)
}

impl InternalSpectrum {
    pub fn new(omega: Vec<f64>, base_mass: f64) -> Result<Self> {
        if omega.first() != Some(&0.0) {
            return Err(Error::param("omega", "the ground level must be 0"));
        }
        if omega
            .windows(2)
            .any(|w| !(w[1] >= w[0]) || !w[1].is_finite())
        {
            return Err(Error::param(
                "omega",
                "levels must be finite and non-decreasing",
            ));
        }
        let ratio = omega[omega.len() - 1] / base_mass;
        if ratio >= SPECTRUM_LIMIT {
            return Err(Error::RegimeGuard {
                ratio,
                limit: SPECTRUM_LIMIT,
            });
        }
        Ok(Self { omega, base_mass })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn base_mass(&self) -> f64 {
        self.base_mass
    }

    pub fn levels(&self) -> usize {
        self.omega.len()
    }

    /// m_n = m₀ + ω_n.
    pub fn mass(&self, n: usize) -> f64 {
        self.base_mass + self.omega[n]
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || beta.is_nan() {
        return Err(Error::param(
            "beta",
            format!("must be positive, got {beta}"),
        ));
    }
    Ok(())
}

/// Boltzmann populations e^{−βω_n}/Z(β).
pub fn thermal_weights(spectrum: &InternalSpectrum, beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let raw: Vec<f64> = spectrum.omega.iter().map(|w| (-beta * w).exp()).collect();
    let z: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|r| r / z).collect())
}

/// Z(β) = Σ e^{−βω_n} for complex β.
pub fn partition_function(spectrum: &InternalSpectrum, beta: Complex64) -> Complex64 {
    spectrum.omega.iter().map(|w| (-beta * w).exp()).sum()
}

/// ⟨E⟩ and C_v = β²(⟨E²⟩ − ⟨E⟩²) of the thermal populations.
pub fn mean_energy_and_heat_capacity(spectrum: &InternalSpectrum, beta: f64) -> Result<(f64, f64)> {
    let w = thermal_weights(spectrum, beta)?;
    let e1: f64 = w.iter().zip(&spectrum.omega).map(|(p, e)| p * e).sum();
    let var: f64 = w
        .iter()
        .zip(&spectrum.omega)
        .map(|(p, e)| p * (e - e1) * (e - e1))
        .sum();
    Ok((e1, beta * beta * var))
}

/// Σ c_n |ψ_n⟩ ⊗ |n⟩; branch n carries mass m_n.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeState {
    spectrum: InternalSpectrum,
    c: Vec<Complex64>,
    branches: Vec<WaveFunction>,
}

impl CompositeState {
    pub fn new(
        spectrum: InternalSpectrum,
        c: Vec<Complex64>,
        branches: Vec<WaveFunction>,
    ) -> Result<Self> {
        let levels = spectrum.levels();
        if c.len() != levels || branches.len() != levels {
            return Err(Error::LengthMismatch {
                expected: levels,
                got: c.len().min(branches.len()),
            });
        }
        let norm: f64 = c.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr: norm });
        }
        let grid = *branches[0].grid();
        for (n, b) in branches.iter().enumerate() {
            if *b.grid() != grid {
                return Err(Error::param(
                    "branches",
                    "all branches must share one lattice",
                ));
            }
            let m = spectrum.mass(n);
            if (b.mass() - m).abs() > 1e-12 * m {
                return Err(Error::param(
                    "branches",
                    format!("branch {n} has mass {} but level mass is {m}", b.mass()),
                ));
            }
            let ns = b.norm_sqr();
            if (ns - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::NotNormalized { norm_sqr: ns });
            }
        }
        Ok(Self {
            spectrum,
            c,
            branches,
        })
    }

    /// |ψ⟩ ⊗ Σ c_n |n⟩, with the mass label of `psi` replaced per level.
    pub fn factorized(
        spectrum: InternalSpectrum,
        c: Vec<Complex64>,
        psi: &WaveFunction,
    ) -> Result<Self> {
        let branches = (0..spectrum.levels())
            .map(|n| psi.with_mass(spectrum.mass(n)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(spectrum, c, branches)
    }

    /// Factorized state with real amplitudes √(e^{−βω_n}/Z).
    pub fn thermal(spectrum: InternalSpectrum, beta: f64, psi: &WaveFunction) -> Result<Self> {
        let c = thermal_weights(&spectrum, beta)?
            .into_iter()
            .map(|w| Complex64::new(w.sqrt(), 0.0))
            .collect();
        Self::factorized(spectrum, c, psi)
    }

    pub fn spectrum(&self) -> &InternalSpectrum {
        &self.spectrum
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.c
    }

    pub fn branches(&self) -> &[WaveFunction] {
        &self.branches
    }

    pub fn weights(&self) -> Vec<f64> {
        self.c.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Largest amplitude difference between any branch and branch 0.
    pub fn factorization_deviation(&self) -> f64 {
        let first = self.branches[0].amplitudes();
        self.branches
            .iter()
            .map(|b| {
                b.amplitudes()
                    .iter()
                    .zip(first)
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// Evolves every branch with its own mass; amplitudes c_n are unchanged.
pub fn composite_evolve(
    state: &CompositeState,
    params: &EvolutionParams,
) -> Result<CompositeState> {
    let branches = state
        .branches
        .par_iter()
        .map(|b| gravity_evolve(b, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(CompositeState {
        spectrum: state.spectrum.clone(),
        c: state.c.clone(),
        branches,
    })
}

/// ρ(x_k, x_k') = Σ |c_n|² ψ_n(x_k) ψ_n*(x_k'), normalized so that
/// Σ_k ρ(x_k, x_k)·dx = 1.
pub fn reduced_translational(state: &CompositeState) -> Result<Array2<Complex64>> {
    let n = state.branches[0].grid().n();
    if n > DENSE_LIMIT {
        return Err(Error::MemoryGuard {
            n,
            limit: DENSE_LIMIT,
        });
    }
    let mut rho = Array2::<Complex64>::zeros((n, n));
    for (w, b) in state.weights().iter().zip(&state.branches) {
        let a = b.amplitudes();
        for k in 0..n {
            let ak = a[k] * *w;
            for kk in 0..n {
                rho[[k, kk]] += ak * a[kk].conj();
            }
        }
    }
    Ok(rho)
}

/// Tr ρ² of a lattice density matrix with cell weight `dx`.
pub fn matrix_purity(rho: &Array2<Complex64>, dx: f64) -> f64 {
    rho.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx * dx
}

/// Σ_n |c_n|² |ψ_n(x)|².
pub fn reduced_position_density(state: &CompositeState) -> Vec<f64> {
    let n = state.branches[0].grid().n();
    let mut out = vec![0.0; n];
    for (w, b) in state.weights().iter().zip(&state.branches) {
        for (o, a) in out.iter_mut().zip(b.amplitudes()) {
            *o += w * a.norm_sqr();
        }
    }
    out
}

/// Purity of the reduced translational state, Σ w_n w_n' |⟨ψ_n|ψ_n'⟩|².
pub fn purity(state: &CompositeState) -> Result<f64> {
    let w = state.weights();
    let mut acc = 0.0;
    for (i, bi) in state.branches.iter().enumerate() {
        acc += w[i] * w[i] * bi.norm_sqr().powi(2);
        for j in i + 1..state.branches.len() {
            acc += 2.0 * w[i] * w[j] * bi.overlap(&state.branches[j])?.norm_sqr();
        }
    }
    Ok(acc)
}

/// Internal-level density matrix ρ_nn' = c_n c_n'* ⟨ψ_n'|ψ_n⟩.
pub fn reduced_internal(state: &CompositeState) -> Result<Array2<Complex64>> {
    let l = state.spectrum.levels();
    let mut rho = Array2::zeros((l, l));
    for i in 0..l {
        for j in 0..l {
            let s = state.branches[j].overlap(&state.branches[i])?;
            rho[[i, j]] = state.c[i] * state.c[j].conj() * s;
        }
    }
    Ok(rho)
}

/// ρ(x₁, x₂) at arbitrary points, using the band-limited interpolant of
/// each branch.
pub fn coherence(state: &CompositeState, x1: f64, x2: f64) -> Complex64 {
    let grid = *state.branches[0].grid();
    state
        .weights()
        .iter()
        .zip(&state.branches)
        .map(|(w, b)| {
            let mom = b.momentum_amplitudes();
            let a1 = position_amplitude_at(&mom, &grid, x1);
            let a2 = position_amplitude_at(&mom, &grid, x2);
            a1 * a2.conj() * *w
        })
        .sum()
}

/// |ρ(x₁, x₂)|/√(ρ(x₁,x₁) ρ(x₂,x₂)) with x₁,₂ = ⟨x⟩ ∓ Δx/2. A factorized
/// state gives exactly 1.
pub fn visibility(state: &CompositeState, delta_x: f64) -> f64 {
    let grid = *state.branches[0].grid();
    let rho = reduced_position_density(state);
    let center = rho
        .iter()
        .enumerate()
        .map(|(k, r)| r * grid.x(k))
        .sum::<f64>()
        * grid.dx();
    let (x1, x2) = (center - delta_x / 2.0, center + delta_x / 2.0);
    let off = coherence(state, x1, x2).norm();
    let d1 = coherence(state, x1, x1).re;
    let d2 = coherence(state, x2, x2).re;
    off / (d1 * d2).sqrt()
}

/// Γ_t(Δx) = Σ w_n e^{−iω_n g t Δx}.
pub fn gamma_exact(
    weights: &[f64],
    spectrum: &InternalSpectrum,
    g: f64,
    t: f64,
    delta_x: f64,
) -> Result<Complex64> {
    if weights.len() != spectrum.levels() {
        return Err(Error::LengthMismatch {
            expected: spectrum.levels(),
            got: weights.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm_sqr: total });
    }
    Ok(weights
        .iter()
        .zip(&spectrum.omega)
        .map(|(w, o)| Complex64::from_polar(*w, -o * g * t * delta_x))
        .sum())
}

/// Γ_t(Δx) = Z(β + i g t Δx)/Z(β) for thermal populations.
pub fn gamma_thermal(
    spectrum: &InternalSpectrum,
    beta: f64,
    g: f64,
    t: f64,
    delta_x: f64,
) -> Result<Complex64> {
    check_beta(beta)?;
    let z = partition_function(spectrum, Complex64::new(beta, 0.0));
    Ok(partition_function(spectrum, Complex64::new(beta, g * t * delta_x)) / z)
}

/// Second-order cumulant estimate |Γ| ≈ exp(−½ C_v (g t Δx/β)²).
pub fn gamma_gaussian(
    spectrum: &InternalSpectrum,
    beta: f64,
    g: f64,
    t: f64,
    delta_x: f64,
) -> Result<f64> {
    let (_, cv) = mean_energy_and_heat_capacity(spectrum, beta)?;
    let s = g * t * delta_x / beta;
    if s.abs() > GAUSSIAN_VALIDITY {
        // sweeps cross the limit at many points; one warning is enough
        static WARNED: AtomicBool = AtomicBool::new(false);
        if WARNED.swap(true, Ordering::Relaxed) {
            log::debug!("Gaussian dephasing estimate used outside its range: g t Δx/β = {s:.3}");
        } else {
            log::warn!("Gaussian dephasing estimate used outside its range: g t Δx/β = {s:.3}");
        }
    }
    Ok((-0.5 * cv * s * s).exp())
}

/// τ_d = β/(g Δx √C_v); infinite when C_v = 0.
pub fn dephasing_time(beta: f64, g: f64, delta_x: f64, c_v: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(c_v >= 0.0) {
        return Err(Error::param("c_v", format!("must be ≥ 0, got {c_v}")));
    }
    if c_v == 0.0 || g == 0.0 || delta_x == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(beta / (g * delta_x).abs() / c_v.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionShift {
    pub level: usize,
    pub omega: f64,
    /// δ_n from t²(m₀⁻² − m_n⁻²)/(4σ₀²).
    pub exact: f64,
    /// δ_n from t²ω_n/(2m₀³σ₀²).
    pub expanded: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// max_n t / (√(m₀/ω_n) m₀ σ₀²); 0 when no level is excited.
    pub margin: f64,
    pub shifts: Vec<DispersionShift>,
}

/// How far the branch envelopes have drifted apart by time `t`.
pub fn regime_check(spectrum: &InternalSpectrum, sigma_x0: f64, t: f64) -> Result<RegimeReport> {
    if !(sigma_x0 > 0.0) || !(t >= 0.0) {
        return Err(Error::param("sigma_x0, t", "need σ₀ > 0 and t ≥ 0"));
    }
    let m0 = spectrum.base_mass;
    let s2 = sigma_x0 * sigma_x0;
    let mut margin: f64 = 0.0;
    let mut shifts = Vec::new();
    for (n, &w) in spectrum.omega.iter().enumerate().skip(1) {
        if w > 0.0 {
            margin = margin.max(t / ((m0 / w).sqrt() * m0 * s2));
        }
        let mn = m0 + w;
        shifts.push(DispersionShift {
            level: n,
            omega: w,
            exact: (t * t / (4.0 * s2) * (m0.powi(-2) - mn.powi(-2))).sqrt(),
            expanded: (t * t * w / (2.0 * m0.powi(3) * s2)).sqrt(),
        });
    }
    Ok(RegimeReport { margin, shifts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DephasingReport {
    pub t: f64,
    pub delta_x: f64,
    pub gamma: Complex64,
    pub visibility: f64,
    pub gaussian_approx: f64,
    pub tau_d: f64,
    pub regime_margin: f64,
}

/// Thermal dephasing summary at one (t, Δx) point.
pub fn dephasing_report(
    spectrum: &InternalSpectrum,
    beta: f64,
    g: f64,
    t: f64,
    delta_x: f64,
    sigma_x0: f64,
) -> Result<DephasingReport> {
    let gamma = gamma_thermal(spectrum, beta, g, t, delta_x)?;
    let (_, cv) = mean_energy_and_heat_capacity(spectrum, beta)?;
    Ok(DephasingReport {
        t,
        delta_x,
        gamma,
        visibility: gamma.norm(),
        gaussian_approx: gamma_gaussian(spectrum, beta, g, t, delta_x)?,
        tau_d: dephasing_time(beta, g, delta_x, cv)?,
        regime_margin: regime_check(spectrum, sigma_x0, t)?.margin,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EchoReport {
    pub state_mid: CompositeState,
    pub state_final: CompositeState,
    pub delta_x: f64,
    pub visibility_before: f64,
    pub visibility_mid: f64,
    pub visibility_after: f64,
    pub purity_mid: f64,
    pub purity_after: f64,
}

/// Falls for `t_half` with `g`, then for `t_half` with the field reversed.
///
/// The x-dependent phase picked up in the first leg is undone in the second,
/// so the branches end up differing only by their free spreading. `delta_x`
/// defaults to 4σ₀.
pub fn echo_protocol(
    initial: &CompositeState,
    g: f64,
    t_half: f64,
    delta_x: Option<f64>,
) -> Result<EchoReport> {
    let deviation = initial.factorization_deviation();
    if deviation > 1e-12 {
        return Err(Error::NotFactorized { deviation });
    }
    let sigma0 = dispersion(&initial.branches[0])?.sqrt();
    let margin = regime_check(&initial.spectrum, sigma0, 2.0 * t_half)?.margin;
    if margin >= ECHO_MARGIN_LIMIT {
        return Err(Error::RegimeViolation {
            margin,
            limit: ECHO_MARGIN_LIMIT,
        });
    }
    let dx = delta_x.unwrap_or(4.0 * sigma0);
    let mid = composite_evolve(initial, &EvolutionParams::new(g, t_half))?;
    let fin = composite_evolve(&mid, &EvolutionParams::new(-g, t_half))?;
    Ok(EchoReport {
        visibility_before: visibility(initial, dx),
        visibility_mid: visibility(&mid, dx),
        visibility_after: visibility(&fin, dx),
        purity_mid: purity(&mid)?,
        purity_after: purity(&fin)?,
        delta_x: dx,
        state_mid: mid,
        state_final: fin,
    })
}

/// Σ_n |c_n|² W̄_n on the velocity lattice of branch 0.
pub fn reduced_velocity_wigner(state: &CompositeState) -> Result<WignerMap> {
    let maps = state
        .branches
        .par_iter()
        .map(|b| wigner(b).and_then(|w| w.to_velocity()))
        .collect::<Result<Vec<_>>>()?;
    mixture(&maps, &state.weights())
}

/// Mean position of the reduced density.
pub fn reduced_mean_position(state: &CompositeState) -> f64 {
    state
        .weights()
        .iter()
        .zip(&state.branches)
        .map(|(w, b)| w * raw_moment(b, 1))
        .sum()
}
