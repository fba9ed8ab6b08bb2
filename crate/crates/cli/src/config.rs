//! Scenario configuration files (TOML). See `configs/README.md` for the
//! grammar.

use std::path::Path;

use freefall::composite::{make_spectrum, InternalSpectrum, SpectrumKind};
use freefall::dynamics::EvolutionParams;
use freefall::qubitphase::{UnitSystem, STANDARD_GRAVITY};
use freefall::{cat_state, make_grid, Complex64, PacketSpec, WaveFunction};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
    #[error("{section}: {message}")]
    Invalid { section: String, message: String },
}

fn invalid(section: &str, message: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        section: section.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    EpA,
    EpB,
    Dephase,
    Echo,
    QubitPhase,
    Wigner,
    Evolve,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::EpA,
        ScenarioKind::EpB,
        ScenarioKind::Dephase,
        ScenarioKind::Echo,
        ScenarioKind::QubitPhase,
        ScenarioKind::Wigner,
        ScenarioKind::Evolve,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::EpA => "ep-a",
            ScenarioKind::EpB => "ep-b",
            ScenarioKind::Dephase => "dephase",
            ScenarioKind::Echo => "echo",
            ScenarioKind::QubitPhase => "qubit-phase",
            ScenarioKind::Wigner => "wigner",
            ScenarioKind::Evolve => "evolve",
        }
    }

    pub fn summary(&self) -> &'static str {
        match self {
            ScenarioKind::EpA => "field only translates the density (grid-aligned fall)",
            ScenarioKind::EpB => "equal velocity wave functions for two masses after free fall",
            ScenarioKind::Dephase => "thermal dephasing factor over a (t, Δx) sweep",
            ScenarioKind::Echo => "field reversal at T restores visibility and purity",
            ScenarioKind::QubitPhase => "gravitational phase shift of an internal clock",
            ScenarioKind::Wigner => "Wigner map of the evolved state vs the classical flow",
            ScenarioKind::Evolve => "density and moments over a list of times",
        }
    }

    fn required(&self) -> &'static [&'static str] {
        match self {
            ScenarioKind::EpA => &["grid", "state", "evolution"],
            ScenarioKind::EpB => &["grid", "state", "evolution", "ep_b"],
            ScenarioKind::Dephase => &["spectrum", "dephase"],
            ScenarioKind::Echo => &["grid", "state", "spectrum", "echo"],
            ScenarioKind::QubitPhase => &["qubit"],
            ScenarioKind::Wigner => &["grid", "state", "evolution"],
            ScenarioKind::Evolve => &["grid", "state", "evolution", "evolve"],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub mean_x: f64,
    #[serde(default)]
    pub mean_v: f64,
    pub sigma_x: f64,
    /// Complex weight as [re, im].
    #[serde(default)]
    pub weight: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub mass: f64,
    pub packets: Vec<PacketConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub g: f64,
    pub t: f64,
    #[serde(default = "one")]
    pub mass_ratio: f64,
    #[serde(default)]
    pub exact_shift: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub base_mass: f64,
    /// "two-level", "harmonic" or "explicit".
    pub kind: String,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub levels: Option<usize>,
    /// Level energies for `kind = "explicit"`.
    #[serde(default)]
    pub energies: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpBConfig {
    pub m2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephaseConfig {
    pub beta: f64,
    pub g: f64,
    pub delta_x: Vec<f64>,
    pub t_max: f64,
    pub steps: usize,
    /// Initial packet width for the regime margin.
    pub sigma_x0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchoConfig {
    pub beta: f64,
    pub g: f64,
    pub t_half: f64,
    #[serde(default)]
    pub delta_x: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatConfig {
    pub ell: f64,
    pub v1: f64,
    pub v2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitConfig {
    pub omega: f64,
    #[serde(default = "standard_g")]
    pub g: f64,
    /// Drop heights L.
    pub heights: Vec<f64>,
    #[serde(default)]
    pub sigma_x: Option<f64>,
    #[serde(default)]
    pub cat: Option<CatConfig>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerConfig {
    /// Position of the written slice after evolution; defaults to ⟨x⟩.
    #[serde(default)]
    pub slice_x: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub times: Vec<f64>,
    /// Also run the split-step oracle with this many steps per time.
    #[serde(default)]
    pub split_steps: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "tol_ep")]
    pub ep: f64,
    #[serde(default = "tol_identity")]
    pub identity: f64,
    #[serde(default = "tol_echo")]
    pub echo: f64,
    #[serde(default = "tol_wigner")]
    pub wigner: f64,
    #[serde(default = "tol_norm")]
    pub norm: f64,
    #[serde(default = "tol_split")]
    pub split: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ep: tol_ep(),
            identity: tol_identity(),
            echo: tol_echo(),
            wigner: tol_wigner(),
            norm: tol_norm(),
            split: tol_split(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// File name prefix; defaults to the scenario name.
    #[serde(default)]
    pub prefix: Option<String>,
}

fn one() -> f64 {
    1.0
}
fn standard_g() -> f64 {
    STANDARD_GRAVITY
}
fn tol_ep() -> f64 {
    1e-10
}
fn tol_identity() -> f64 {
    1e-12
}
fn tol_echo() -> f64 {
    1e-8
}
fn tol_wigner() -> f64 {
    1e-6
}
fn tol_norm() -> f64 {
    1e-10
}
fn tol_split() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub units: UnitSystem,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub state: Option<StateConfig>,
    #[serde(default)]
    pub evolution: Option<EvolutionConfig>,
    #[serde(default)]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default)]
    pub ep_b: Option<EpBConfig>,
    #[serde(default)]
    pub dephase: Option<DephaseConfig>,
    #[serde(default)]
    pub echo: Option<EchoConfig>,
    #[serde(default)]
    pub qubit: Option<QubitConfig>,
    #[serde(default)]
    pub wigner: Option<WignerConfig>,
    #[serde(default)]
    pub evolve: Option<EvolveConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A configuration with every module-level object already constructed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ScenarioConfig,
    pub state: Option<WaveFunction>,
    pub params: Option<EvolutionParams>,
    pub spectrum: Option<InternalSpectrum>,
}

impl Prepared {
    pub fn prefix(&self) -> &str {
        self.config
            .output
            .prefix
            .as_deref()
            .unwrap_or(self.config.scenario.name())
    }
}

pub fn parse(text: &str, path: &str) -> Result<ScenarioConfig, ConfigError> {
    toml::from_str(text).map_err(|source| ConfigError::Parse {
        path: path.to_string(),
        source,
    })
}

pub fn load(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: name.clone(),
        source,
    })?;
    parse(&text, &name)
}

fn present(cfg: &ScenarioConfig, section: &str) -> bool {
    match section {
        "grid" => cfg.grid.is_some(),
        "state" => cfg.state.is_some(),
        "evolution" => cfg.evolution.is_some(),
        "spectrum" => cfg.spectrum.is_some(),
        "ep_b" => cfg.ep_b.is_some(),
        "dephase" => cfg.dephase.is_some(),
        "echo" => cfg.echo.is_some(),
        "qubit" => cfg.qubit.is_some(),
        "evolve" => cfg.evolve.is_some(),
        _ => true,
    }
}

fn finite_positive(section: &str, name: &str, v: f64) -> Result<(), ConfigError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(
            section,
            format!("`{name}` must be positive, got {v}"),
        ));
    }
    Ok(())
}

fn spectrum_kind(s: &SpectrumConfig) -> Result<SpectrumKind, ConfigError> {
    let need_omega = || {
        s.omega
            .ok_or_else(|| invalid("spectrum", "`omega` is required"))
    };
    match s.kind.as_str() {
        "two-level" => Ok(SpectrumKind::TwoLevel {
            omega: need_omega()?,
        }),
        "harmonic" => Ok(SpectrumKind::Harmonic {
            omega: need_omega()?,
            levels: s
                .levels
                .ok_or_else(|| invalid("spectrum", "`levels` is required for harmonic"))?,
        }),
        "explicit" => Ok(SpectrumKind::Explicit {
            omega: s
                .energies
                .clone()
                .ok_or_else(|| invalid("spectrum", "`energies` is required for explicit"))?,
        }),
        other => Err(invalid(
            "spectrum",
            format!("unknown kind `{other}` (two-level, harmonic, explicit)"),
        )),
    }
}

/// Checks section presence and builds the grid, state, evolution parameters
/// and spectrum through the library constructors, so every precondition is
/// enforced before anything runs.
pub fn prepare(config: ScenarioConfig) -> Result<Prepared, ConfigError> {
    let kind = config.scenario;
    for section in kind.required() {
        if !present(&config, section) {
            return Err(invalid(
                section,
                format!("section is required for scenario `{}`", kind.name()),
            ));
        }
    }

    let grid = match &config.grid {
        Some(g) => Some(make_grid(g.x_min, g.x_max, g.n).map_err(|e| invalid("grid", e))?),
        None => None,
    };

    let state = match (&config.state, grid) {
        (Some(s), Some(g)) => {
            if s.packets.is_empty() {
                return Err(invalid("state", "at least one packet is required"));
            }
            let specs: Vec<PacketSpec> = s
                .packets
                .iter()
                .map(|p| {
                    let spec = PacketSpec::new(p.mean_x, p.mean_v, p.sigma_x);
                    match p.weight {
                        Some([re, im]) => spec.with_weight(Complex64::new(re, im)),
                        None => spec,
                    }
                })
                .collect();
            Some(cat_state(&g, s.mass, &specs).map_err(|e| invalid("state", e))?)
        }
        (Some(_), None) => return Err(invalid("state", "needs a [grid] section")),
        _ => None,
    };

    let params = match &config.evolution {
        Some(e) => {
            let p = EvolutionParams {
                g: e.g,
                t: e.t,
                mass_ratio: e.mass_ratio,
                exact_shift: e.exact_shift,
            };
            p.validate().map_err(|err| invalid("evolution", err))?;
            Some(p)
        }
        None => None,
    };

    let spectrum = match &config.spectrum {
        Some(s) => Some(
            make_spectrum(&spectrum_kind(s)?, s.base_mass).map_err(|e| invalid("spectrum", e))?,
        ),
        None => None,
    };

    match kind {
        ScenarioKind::EpB => {
            finite_positive("ep_b", "m2", config.ep_b.as_ref().unwrap().m2)?;
        }
        ScenarioKind::Dephase => {
            let d = config.dephase.as_ref().unwrap();
            finite_positive("dephase", "beta", d.beta)?;
            finite_positive("dephase", "t_max", d.t_max)?;
            finite_positive("dephase", "sigma_x0", d.sigma_x0)?;
            if d.steps == 0 || d.delta_x.is_empty() {
                return Err(invalid(
                    "dephase",
                    "need steps ≥ 1 and at least one delta_x",
                ));
            }
        }
        ScenarioKind::Echo => {
            let e = config.echo.as_ref().unwrap();
            finite_positive("echo", "beta", e.beta)?;
            finite_positive("echo", "t_half", e.t_half)?;
            if spectrum.as_ref().unwrap().levels() < 2 {
                return Err(invalid("spectrum", "echo needs at least two levels"));
            }
        }
        ScenarioKind::QubitPhase => {
            let q = config.qubit.as_ref().unwrap();
            finite_positive("qubit", "omega", q.omega)?;
            finite_positive("qubit", "g", q.g)?;
            if q.heights.is_empty() || q.heights.iter().any(|h| !(*h >= 0.0)) {
                return Err(invalid(
                    "qubit",
                    "`heights` must be a non-empty list of L ≥ 0",
                ));
            }
            if let Some(c) = &q.cat {
                if !(c.v2 > c.v1) {
                    return Err(invalid("qubit.cat", "need v2 > v1"));
                }
            }
        }
        ScenarioKind::Evolve => {
            let e = config.evolve.as_ref().unwrap();
            if e.times.is_empty() || e.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                return Err(invalid(
                    "evolve",
                    "`times` must be a non-empty list of t ≥ 0",
                ));
            }
            if e.split_steps == Some(0) {
                return Err(invalid("evolve", "`split_steps` must be ≥ 1"));
            }
        }
        ScenarioKind::EpA | ScenarioKind::Wigner => {}
    }

    Ok(Prepared {
        config,
        state,
        params,
        spectrum,
    })
}
