//! Translational states: Gaussian packets, cat superpositions, position
//! moments and the velocity representation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Domain, Error, Result};
use crate::lattice::{
    check_leakage, dft_forward, dft_inverse, edge_probability, momentum_amplitude_at, quad, Grid1D,
};

/// Tolerance on ‖ψ‖² accepted by [`WaveFunction::new`].
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Overlap below which cat components are treated as orthogonal.
pub const ORTHOGONAL_OVERLAP: f64 = 1e-10;
/// Half-width of a packet's support in units of `sigma_x`.
pub const SUPPORT_SIGMAS: f64 = 6.0;

/// Complex amplitudes on a [`Grid1D`] for a particle of mass `mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid1D,
    amplitudes: Vec<Complex64>,
    mass: f64,
}

impl WaveFunction {
    /// Wraps amplitudes that are already normalized.
    pub fn new(grid: Grid1D, amplitudes: Vec<Complex64>, mass: f64) -> Result<Self> {
        let psi = Self::from_parts(grid, amplitudes, mass)?;
        let norm_sqr = psi.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(psi)
    }

    /// Wraps and rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(grid: Grid1D, amplitudes: Vec<Complex64>, mass: f64) -> Result<Self> {
        let mut psi = Self::from_parts(grid, amplitudes, mass)?;
        let norm = psi.norm_sqr().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized {
                norm_sqr: norm * norm,
            });
        }
        psi.amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(psi)
    }

    pub(crate) fn from_parts(grid: Grid1D, amplitudes: Vec<Complex64>, mass: f64) -> Result<Self> {
        if amplitudes.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: amplitudes.len(),
            });
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::param(
                "mass",
                format!("must be positive, got {mass}"),
            ));
        }
        Ok(Self {
            grid,
            amplitudes,
            mass,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Same amplitudes, different mass label.
    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        Self::from_parts(self.grid, self.amplitudes.clone(), mass)
    }

    pub fn norm_sqr(&self) -> f64 {
        quad(&self.density(), self.grid.dx())
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn momentum_amplitudes(&self) -> Vec<Complex64> {
        // lengths always match
        dft_forward(&self.amplitudes, &self.grid).expect("grid length")
    }

    pub fn momentum_density(&self) -> Vec<f64> {
        self.momentum_amplitudes()
            .iter()
            .map(|a| a.norm_sqr())
            .collect()
    }

    /// ⟨self|other⟩ on a shared lattice.
    pub fn overlap(&self, other: &WaveFunction) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::param("other", "states live on different grids"));
        }
        let terms: Vec<Complex64> = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .collect();
        Ok(quad(&terms, self.grid.dx()))
    }

    pub fn check_leakage(&self) -> Result<()> {
        check_leakage(&self.amplitudes, &self.grid)
    }

    /// ⟨p̂⟩ and ⟨p̂²⟩ from the momentum density.
    pub fn momentum_moments(&self) -> (f64, f64) {
        let rho = self.momentum_density();
        let ps = self.grid.ps();
        let m1: Vec<f64> = rho.iter().zip(&ps).map(|(r, p)| r * p).collect();
        let m2: Vec<f64> = rho.iter().zip(&ps).map(|(r, p)| r * p * p).collect();
        (quad(&m1, self.grid.dp()), quad(&m2, self.grid.dp()))
    }

    /// Momentum uncertainty Δp.
    pub fn momentum_spread(&self) -> f64 {
        let (m1, m2) = self.momentum_moments();
        (m2 - m1 * m1).max(0.0).sqrt()
    }
}

/// A Gaussian component: mean position, mean velocity, position spread and
/// superposition weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub mean_x: f64,
    pub mean_v: f64,
    pub sigma_x: f64,
    #[serde(default = "unit_weight")]
    pub weight: Complex64,
}

fn unit_weight() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl PacketSpec {
    pub fn new(mean_x: f64, mean_v: f64, sigma_x: f64) -> Self {
        Self {
            mean_x,
            mean_v,
            sigma_x,
            weight: unit_weight(),
        }
    }

    pub fn with_weight(mut self, weight: Complex64) -> Self {
        self.weight = weight;
        self
    }
}

fn raw_packet(grid: &Grid1D, m: f64, spec: &PacketSpec) -> Result<Vec<Complex64>> {
    if !(spec.sigma_x > 0.0 && spec.sigma_x.is_finite()) {
        return Err(Error::param(
            "sigma_x",
            format!("must be positive, got {}", spec.sigma_x),
        ));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::param("mass", format!("must be positive, got {m}")));
    }
    let lo = spec.mean_x - SUPPORT_SIGMAS * spec.sigma_x;
    let hi = spec.mean_x + SUPPORT_SIGMAS * spec.sigma_x;
    let (grid_lo, grid_hi) = (grid.x_min(), grid.x(grid.n() - 1));
    if lo < grid_lo || hi > grid_hi {
        return Err(Error::SupportOutsideGrid {
            lo,
            hi,
            grid_lo,
            grid_hi,
        });
    }
    let amp = (2.0 * PI * spec.sigma_x * spec.sigma_x).powf(-0.25);
    let k = m * spec.mean_v;
    Ok(grid
        .xs()
        .iter()
        .map(|&x| {
            let d = x - spec.mean_x;
            Complex64::from_polar(
                amp * (-d * d / (4.0 * spec.sigma_x * spec.sigma_x)).exp(),
                k * d,
            )
        })
        .collect())
}

/// Unit-norm Gaussian with ⟨x⟩ = `mean_x`, ⟨p⟩ = m·`mean_v`, Δx = `sigma_x`
/// and no x–p correlation. The weight of `spec` is ignored.
pub fn gaussian_packet(grid: &Grid1D, m: f64, spec: &PacketSpec) -> Result<WaveFunction> {
    let amps = raw_packet(grid, m, spec)?;
    let psi = WaveFunction::normalized(*grid, amps, m)?;
    psi.check_leakage()?;
    Ok(psi)
}

/// Weighted superposition of Gaussian components.
///
/// Components are each normalized first. When every pairwise overlap is below
/// [`ORTHOGONAL_OVERLAP`] the state is divided by √Σ|w|²; otherwise the full
/// Gram form Σ w̄ᵢ wⱼ ⟨i|j⟩ is used.
pub fn cat_state(grid: &Grid1D, m: f64, specs: &[PacketSpec]) -> Result<WaveFunction> {
    if specs.is_empty() {
        return Err(Error::param("specs", "at least one component is required"));
    }
    let comps: Vec<WaveFunction> = specs
        .iter()
        .map(|s| gaussian_packet(grid, m, s))
        .collect::<Result<_>>()?;

    let mut gram = Complex64::default();
    let mut diag = 0.0;
    let mut max_overlap: f64 = 0.0;
    for (i, (ci, si)) in comps.iter().zip(specs).enumerate() {
        diag += si.weight.norm_sqr();
        for (cj, sj) in comps.iter().zip(specs).skip(i + 1) {
            let s = ci.overlap(cj)?;
            max_overlap = max_overlap.max(s.norm());
            gram += 2.0 * (si.weight.conj() * sj.weight * s).re;
        }
    }
    let norm_sqr = if max_overlap < ORTHOGONAL_OVERLAP {
        diag
    } else {
        diag + gram.re
    };
    if !(norm_sqr > 0.0) {
        return Err(Error::param("specs", "weights produce a null state"));
    }
    let scale = norm_sqr.sqrt();

    let mut amps = vec![Complex64::default(); grid.n()];
    for (c, s) in comps.iter().zip(specs) {
        for (a, b) in amps.iter_mut().zip(c.amplitudes()) {
            *a += s.weight * b / scale;
        }
    }
    let psi = WaveFunction::new(*grid, amps, m)?;
    psi.check_leakage()?;
    Ok(psi)
}

/// Raw position moment ⟨xⁿ⟩ for n ≤ 4.
pub fn moments(psi: &WaveFunction, order: u32) -> Result<f64> {
    if order > 4 {
        return Err(Error::param(
            "order",
            format!("supported up to 4, got {order}"),
        ));
    }
    psi.check_leakage()?;
    Ok(raw_moment(psi, order))
}

pub(crate) fn raw_moment(psi: &WaveFunction, order: u32) -> f64 {
    let g = psi.grid();
    let vals: Vec<f64> = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, a)| a.norm_sqr() * g.x(k).powi(order as i32))
        .collect();
    quad(&vals, g.dx())
}

/// Moment about the mean, ⟨(x − ⟨x⟩)ⁿ⟩.
pub fn central_moment(psi: &WaveFunction, order: u32) -> Result<f64> {
    if order > 4 {
        return Err(Error::param(
            "order",
            format!("supported up to 4, got {order}"),
        ));
    }
    psi.check_leakage()?;
    let mean = raw_moment(psi, 1);
    let g = psi.grid();
    let vals: Vec<f64> = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, a)| a.norm_sqr() * (g.x(k) - mean).powi(order as i32))
        .collect();
    Ok(quad(&vals, g.dx()))
}

/// Position variance Δx².
pub fn dispersion(psi: &WaveFunction) -> Result<f64> {
    central_moment(psi, 2)
}

/// Velocity-basis amplitudes φ(v) = √m ψ̃(m v), unit normalized over v.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityWaveFunction {
    pub velocities: Vec<f64>,
    pub dv: f64,
    pub amplitudes: Vec<Complex64>,
}

impl VelocityWaveFunction {
    pub fn norm_sqr(&self) -> f64 {
        quad(
            &self
                .amplitudes
                .iter()
                .map(|a| a.norm_sqr())
                .collect::<Vec<_>>(),
            self.dv,
        )
    }
}

pub fn velocity_wavefunction(psi: &WaveFunction) -> VelocityWaveFunction {
    let m = psi.mass();
    let g = psi.grid();
    let root = m.sqrt();
    VelocityWaveFunction {
        velocities: g.ps().iter().map(|p| p / m).collect(),
        dv: g.dp() / m,
        amplitudes: psi.momentum_amplitudes().iter().map(|a| a * root).collect(),
    }
}

/// φ(v) at an arbitrary velocity, evaluated band-limited from the position
/// samples.
pub fn velocity_amplitude_at(psi: &WaveFunction, v: f64) -> Complex64 {
    momentum_amplitude_at(psi.amplitudes(), psi.grid(), psi.mass() * v) * psi.mass().sqrt()
}

/// Re-expresses `psi` as a particle of mass `m2` with the same velocity
/// wave function, on the same position lattice.
///
/// With s = m₂/m₁ the target is ψ̃₂(p) = ψ̃₁(p/s)/√s, i.e. ψ₂(x) = √s ψ₁(s x).
/// Fails with [`Error::Aliasing`] when the rescaled state would not fit
/// inside the guard bands in either position or momentum.
pub fn rebase_mass(psi: &WaveFunction, m2: f64) -> Result<WaveFunction> {
    if !(m2 > 0.0 && m2.is_finite()) {
        return Err(Error::param("m2", format!("must be positive, got {m2}")));
    }
    let g = *psi.grid();
    let m1 = psi.mass();
    let s = m2 / m1;

    // position support: ψ₂ on [a, b] needs ψ₁ on [s a, s b]
    let (lo, hi) = g.interior();
    let outside: f64 = psi
        .density()
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let x = g.x(*k);
            x < s * lo || x > s * hi
        })
        .map(|(_, d)| d)
        .sum::<f64>()
        * g.dx();
    if outside > crate::lattice::LEAKAGE_LIMIT {
        return Err(Error::Aliasing {
            domain: Domain::Position,
            probability: outside,
        });
    }
    // momentum support: ψ̃₂ on [pa, pb] needs ψ̃₁ on [pa/s, pb/s]
    let e = g.edge_points();
    let (plo, phi) = (g.p(e), g.p(g.n() - 1 - e));
    let mom = psi.momentum_density();
    let outside: f64 = mom
        .iter()
        .enumerate()
        .filter(|(j, _)| {
            let p = g.p(*j);
            p < plo / s || p > phi / s
        })
        .map(|(_, d)| d)
        .sum::<f64>()
        * g.dp();
    if outside > crate::lattice::LEAKAGE_LIMIT {
        return Err(Error::Aliasing {
            domain: Domain::Momentum,
            probability: outside,
        });
    }

    let root = (1.0 / s).sqrt();
    let target: Vec<Complex64> = (0..g.n())
        .map(|j| momentum_amplitude_at(psi.amplitudes(), &g, g.p(j) / s) * root)
        .collect();
    let amps = dft_inverse(&target, &g)?;
    let out = WaveFunction::normalized(g, amps, m2)?;
    let guard = edge_probability(&out.density(), g.dx());
    if guard > crate::lattice::LEAKAGE_LIMIT {
        return Err(Error::Aliasing {
            domain: Domain::Position,
            probability: guard,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;

    fn grid() -> Grid1D {
        make_grid(-20.0, 20.0, 1024).unwrap()
    }

    #[test]
    fn gaussian_moments() {
        let g = grid();
        let psi = gaussian_packet(&g, 1.0, &PacketSpec::new(0.0, 0.0, 1.0)).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(moments(&psi, 1).unwrap().abs() < 1e-10);
        assert!((moments(&psi, 2).unwrap() - 1.0).abs() < 1e-8);
        assert!((dispersion(&psi).unwrap() - 1.0).abs() < 1e-8);

        let psi = gaussian_packet(&g, 2.0, &PacketSpec::new(2.0, 0.5, 0.5)).unwrap();
        let (p1, _) = psi.momentum_moments();
        assert!((p1 - 1.0).abs() < 1e-8);
        assert!((moments(&psi, 1).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn minimum_uncertainty_product() {
        let g = grid();
        for spec in [
            PacketSpec::new(0.0, 0.0, 1.0),
            PacketSpec::new(-3.0, 1.5, 0.4),
            PacketSpec::new(5.0, -2.0, 2.0),
        ] {
            let psi = gaussian_packet(&g, 1.7, &spec).unwrap();
            let dx = dispersion(&psi).unwrap().sqrt();
            let dp = psi.momentum_spread();
            assert!((dx * dp - 0.5).abs() < 1e-6, "{spec:?}: {}", dx * dp);
        }
    }

    #[test]
    fn packet_outside_grid_is_rejected() {
        let g = grid();
        let err = gaussian_packet(&g, 1.0, &PacketSpec::new(17.0, 0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::SupportOutsideGrid { .. }));
        assert!(gaussian_packet(&g, 1.0, &PacketSpec::new(0.0, 0.0, -1.0)).is_err());
        assert!(gaussian_packet(&g, 0.0, &PacketSpec::new(0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn cat_two_peaks_and_symmetry() {
        let g = grid();
        let ell = 10.0;
        let specs = [
            PacketSpec::new(ell / 2.0, 0.0, 0.5),
            PacketSpec::new(-ell / 2.0, 0.0, 0.5),
        ];
        let cat = cat_state(&g, 1.0, &specs).unwrap();
        let d = cat.density();
        let k_plus = ((ell / 2.0 - g.x_min()) / g.dx()).round() as usize;
        let k_minus = ((-ell / 2.0 - g.x_min()) / g.dx()).round() as usize;
        let k_mid = ((0.0 - g.x_min()) / g.dx()).round() as usize;
        assert!(d[k_plus] > 0.3 && d[k_minus] > 0.3 && d[k_mid] < 1e-20);
        assert!(moments(&cat, 1).unwrap().abs() < 1e-9);
        // variance of a two-point mixture: ℓ²/4 + σ²
        let var = dispersion(&cat).unwrap();
        assert!((var - (ell * ell / 4.0 + 0.25)).abs() < 1e-6);
    }

    #[test]
    fn single_component_cat_is_the_packet() {
        let g = grid();
        let spec = PacketSpec::new(1.0, 0.3, 0.8);
        let a = cat_state(&g, 1.0, &[spec]).unwrap();
        let b = gaussian_packet(&g, 1.0, &spec).unwrap();
        let err = a
            .amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-15);
    }

    #[test]
    fn cat_normalization_paths() {
        let g = grid();
        // 8σ apart: overlap e^{-8} ≈ 3e-4, Gram path
        let near = [
            PacketSpec::new(-4.0, 0.0, 1.0),
            PacketSpec::new(4.0, 0.0, 1.0),
        ];
        let cat = cat_state(&g, 1.0, &near).unwrap();
        assert!((cat.norm_sqr() - 1.0).abs() < 1e-9);
        // 14σ apart: overlap e^{-24.5} ≈ 2e-11, cross terms ignored
        let far = [
            PacketSpec::new(-7.0, 0.0, 1.0),
            PacketSpec::new(7.0, 0.0, 1.0),
        ];
        let a = gaussian_packet(&g, 1.0, &far[0]).unwrap();
        let b = gaussian_packet(&g, 1.0, &far[1]).unwrap();
        assert!(a.overlap(&b).unwrap().norm() < ORTHOGONAL_OVERLAP);
        let cat = cat_state(&g, 1.0, &far).unwrap();
        assert!((cat.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn moments_reject_high_order() {
        let g = grid();
        let psi = gaussian_packet(&g, 1.0, &PacketSpec::new(0.0, 0.0, 1.0)).unwrap();
        assert!(moments(&psi, 5).is_err());
    }

    #[test]
    fn velocity_wavefunction_peak_and_norm() {
        let g = grid();
        let psi = gaussian_packet(&g, 3.0, &PacketSpec::new(0.0, 1.25, 1.0)).unwrap();
        let phi = velocity_wavefunction(&psi);
        assert!((phi.norm_sqr() - 1.0).abs() < 1e-10);
        let (imax, _) = phi
            .amplitudes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert!((phi.velocities[imax] - 1.25).abs() <= phi.dv);
    }

    #[test]
    fn velocity_wavefunction_is_mass_free_on_scaled_lattices() {
        // mass 1 on g, mass 10 on g/10: identical v-lattices and φ arrays
        let g1 = grid();
        let g10 = g1.scaled(0.1).unwrap();
        let a = gaussian_packet(&g1, 1.0, &PacketSpec::new(1.0, 0.4, 1.5)).unwrap();
        let b = gaussian_packet(&g10, 10.0, &PacketSpec::new(0.1, 0.4, 0.15)).unwrap();
        let pa = velocity_wavefunction(&a);
        let pb = velocity_wavefunction(&b);
        for (va, vb) in pa.velocities.iter().zip(&pb.velocities) {
            assert!((va - vb).abs() < 1e-12);
        }
        let err = pa
            .amplitudes
            .iter()
            .zip(&pb.amplitudes)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn rebase_identity_and_moments() {
        let g = make_grid(-20.0, 20.0, 512).unwrap();
        let psi = gaussian_packet(&g, 1.0, &PacketSpec::new(0.0, 0.5, 1.0)).unwrap();
        let same = rebase_mass(&psi, 1.0).unwrap();
        let err = same
            .amplitudes()
            .iter()
            .zip(psi.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");

        let heavy = rebase_mass(&psi, 2.0).unwrap();
        assert_eq!(heavy.mass(), 2.0);
        let v = |w: &WaveFunction| {
            let (p1, p2) = w.momentum_moments();
            let m = w.mass();
            (p1 / m, (p2 / (m * m) - (p1 / m).powi(2)).sqrt())
        };
        let (v1, dv1) = v(&psi);
        let (v2, dv2) = v(&heavy);
        assert!((v1 - v2).abs() < 1e-9);
        assert!((dv1 - dv2).abs() < 1e-9);
        // position spread shrinks by m1/m2
        let sx = dispersion(&heavy).unwrap().sqrt();
        assert!((sx - 0.5).abs() < 1e-8);
    }

    #[test]
    fn rebase_aliasing_guards() {
        let g = make_grid(-20.0, 20.0, 256).unwrap();
        // wide position support: halving the mass doubles the width
        let wide = gaussian_packet(&g, 1.0, &PacketSpec::new(0.0, 0.0, 2.0)).unwrap();
        assert!(matches!(
            rebase_mass(&wide, 0.5),
            Err(Error::Aliasing {
                domain: Domain::Position,
                ..
            })
        ));
        // wide momentum support: doubling the mass doubles the momentum width
        let narrow = gaussian_packet(&g, 1.0, &PacketSpec::new(0.0, 0.0, 0.25)).unwrap();
        assert!(matches!(
            rebase_mass(&narrow, 2.0),
            Err(Error::Aliasing {
                domain: Domain::Momentum,
                ..
            })
        ));
    }
}
