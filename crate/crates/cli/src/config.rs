//! Run configuration: one JSON document, validated at load.

use std::path::Path;

use cavity_kinetics::physics::{PhysicalConstants, ELECTRON_VOLT};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyUnit {
    #[serde(rename = "eV")]
    ElectronVolt,
    #[serde(rename = "J")]
    Joule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Energy {
    pub value: f64,
    pub unit: EnergyUnit,
}

impl Energy {
    pub fn joules(&self) -> f64 {
        match self.unit {
            EnergyUnit::ElectronVolt => self.value * ELECTRON_VOLT,
            EnergyUnit::Joule => self.value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub species: Vec<SpeciesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triple: Option<TripleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavityConfig>,
    pub environment: EnvironmentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<LineConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<EquilibriumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_laser: Option<AtomLaserConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<ModesConfig>,
}

/// Overrides of the CODATA values, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_m_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar_j_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_b_j_per_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesConfig {
    pub name: String,
    pub rest_energy: Energy,
    pub degeneracy: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleConfig {
    pub ground: String,
    pub boson: String,
    pub transition_energy: Energy,
    pub excited_degeneracy: u32,
    /// Kinetic energy of the decaying excited atom; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excited_kinetic: Option<Energy>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub edge_lengths_m: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub temperature_k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chemical_potential: Option<Energy>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineConfig {
    pub t_sp_s: f64,
    /// Defaults to `2/t_sp`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fwhm_rad_per_s: Option<f64>,
    /// Defaults to `fwhm/100`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_spacing_rad_per_s: Option<f64>,
    /// Defaults to `400·fwhm`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_window_rad_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub temperatures_k: Vec<f64>,
    /// Mean occupation for the single-quantum temperature query; default 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupancy_target: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleConfig {
    Excited,
    Ground,
    Boson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub label: String,
    pub role: RoleConfig,
    pub energy: Energy,
    #[serde(default)]
    pub initial: u64,
}

/// Micro-rates of a channel, 1/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RatesConfig {
    /// `α = β_abs = β_em = γ`.
    Uniform(f64),
    Explicit {
        alpha: f64,
        beta_abs: f64,
        beta_em: f64,
        gamma: f64,
    },
    /// Micro-rate of the configured triple at the line center.
    LineCenter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub excited: String,
    pub ground: String,
    pub boson: String,
    pub rates: RatesConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirConfig {
    /// Defaults to 10⁻² of the largest channel micro-rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_per_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub modes: Vec<ModeConfig>,
    pub channels: Vec<ChannelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reservoir: Option<ReservoirConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomLaserConfig {
    pub excited_energy: Energy,
    pub ground_energy: Energy,
    pub ground_modes: usize,
    pub rates: RatesConfig,
    pub excited_population: u64,
    /// Index among the ground modes, 0-based.
    pub seed_mode: usize,
    pub seed_population: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ode,
    Ssa,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSettings {
    pub dt_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragingSettings {
    pub start_s: f64,
    pub batches: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsaSettings {
    pub seed: u64,
    #[serde(default = "one")]
    pub trajectories: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub averaging: Option<AveragingSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_events: Option<u64>,
    #[serde(default)]
    pub record_events: bool,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub method: Method,
    pub t_end_s: f64,
    pub sample_interval_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ode: Option<OdeSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssa: Option<SsaSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub species: String,
    /// Band center, measured above the rest energy.
    pub center_kinetic: Energy,
    pub width_rad_per_s: f64,
    /// Compare against an explicit count of cavity standing waves.
    #[serde(default)]
    pub lattice_check: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub width_rad_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerateConfig {
    pub species: String,
    pub nu_max_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bands: Vec<BandConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumerate: Option<EnumerateConfig>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(
                if path == "." { String::new() } else { path },
                e.into_inner().to_string(),
            )
        })?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    config.schema_version
                ),
            ));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical serialized form: field order fixed by the schema.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical form, hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn physical_constants(&self) -> Result<PhysicalConstants, CliError> {
        let base = PhysicalConstants::CODATA;
        let Some(o) = &self.constants else {
            return Ok(base);
        };
        PhysicalConstants::new(
            o.c_m_per_s.unwrap_or(base.c),
            o.hbar_j_s.unwrap_or(base.hbar),
            o.k_b_j_per_k.unwrap_or(base.k_b),
        )
        .map_err(|e| CliError::from_core("constants", e))
    }

    pub fn species_named(&self, name: &str, path: &str) -> Result<&SpeciesConfig, CliError> {
        self.species
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| CliError::config(path, format!("unknown species `{name}`")))
    }
}

pub fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    section
        .as_ref()
        .ok_or_else(|| CliError::config(name, "section is required by this command"))
}
