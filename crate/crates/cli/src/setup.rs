//! Config sections → library objects, with field paths on failure.

use cavity_kinetics::interaction::{
    BroadbandLimits, DecayChannel, LineShape, RateSet, DEFAULT_FWHM_PER_RATE,
    DEFAULT_HALF_WINDOW_FWHM, DEFAULT_POINTS_PER_FWHM,
};
use cavity_kinetics::kinetics::{ModeRole, ReactionNetwork, ReservoirCoupling};
use cavity_kinetics::physics::{CavitySpec, PhysicalConstants, Species, SpeciesTriple};
use cavity_kinetics::statistics::ThermalEnvironment;

use crate::config::{require, NetworkConfig, RatesConfig, RoleConfig, RunConfig};
use crate::error::CliError;

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub constants: PhysicalConstants,
}

impl<'a> Context<'a> {
    pub fn new(config: &'a RunConfig) -> Result<Self, CliError> {
        Ok(Self {
            constants: config.physical_constants()?,
            config,
        })
    }

    pub fn species(&self, name: &str, path: &str) -> Result<Species, CliError> {
        let s = self.config.species_named(name, path)?;
        Species::new(s.name.clone(), s.rest_energy.joules(), s.degeneracy)
            .map_err(|e| CliError::from_core(path, e))
    }

    pub fn environment(&self) -> Result<ThermalEnvironment, CliError> {
        self.environment_at(self.config.environment.temperature_k)
    }

    pub fn environment_at(&self, temperature: f64) -> Result<ThermalEnvironment, CliError> {
        let mu = self
            .config
            .environment
            .chemical_potential
            .map_or(0.0, |e| e.joules());
        ThermalEnvironment::with_chemical_potential(temperature, mu)
            .map_err(|e| CliError::from_core("environment", e))
    }

    pub fn cavity(&self) -> Result<CavitySpec, CliError> {
        let c = require(&self.config.cavity, "cavity")?;
        CavitySpec::new(c.edge_lengths_m, self.config.environment.temperature_k)
            .map_err(|e| CliError::from_core("cavity.edge_lengths_m", e))
    }

    pub fn triple(&self) -> Result<SpeciesTriple, CliError> {
        let t = require(&self.config.triple, "triple")?;
        let ground = self.species(&t.ground, "triple.ground")?;
        let boson = self.species(&t.boson, "triple.boson")?;
        SpeciesTriple::new(
            ground,
            boson,
            t.transition_energy.joules(),
            t.excited_degeneracy,
        )
        .map_err(|e| CliError::from_core("triple", e))
    }

    pub fn excited_kinetic(&self) -> f64 {
        self.config
            .triple
            .as_ref()
            .and_then(|t| t.excited_kinetic)
            .map_or(0.0, |e| e.joules())
    }

    pub fn line(&self, triple: &SpeciesTriple) -> Result<LineShape, CliError> {
        let l = require(&self.config.line, "line")?;
        if !(l.t_sp_s.is_finite() && l.t_sp_s > 0.0) {
            return Err(CliError::config("line.t_sp_s", "must be finite and > 0"));
        }
        let center = triple.transition_energy / self.constants.hbar;
        let fwhm = l.fwhm_rad_per_s.unwrap_or(DEFAULT_FWHM_PER_RATE / l.t_sp_s);
        let defaults = BroadbandLimits::default();
        let limits = BroadbandLimits {
            grid_factor: l.grid_factor.unwrap_or(defaults.grid_factor),
            width_factor: l.width_factor.unwrap_or(defaults.width_factor),
        };
        LineShape::with_limits(
            center,
            fwhm,
            l.grid_spacing_rad_per_s
                .unwrap_or(fwhm / DEFAULT_POINTS_PER_FWHM),
            l.half_window_rad_per_s
                .unwrap_or(fwhm * DEFAULT_HALF_WINDOW_FWHM),
            limits,
        )
        .map_err(|e| CliError::from_core("line", e))
    }

    pub fn decay_channel(&self) -> Result<DecayChannel, CliError> {
        let triple = self.triple()?;
        let line = self.line(&triple)?;
        let volume = self.cavity()?.volume();
        let t_sp = require(&self.config.line, "line")?.t_sp_s;
        DecayChannel::new(self.constants, triple, t_sp, line, volume)
            .and_then(|c| c.with_excited_kinetic(self.excited_kinetic()))
            .map_err(|e| CliError::from_core("triple", e))
    }

    pub fn rates(&self, rates: &RatesConfig, path: &str) -> Result<RateSet, CliError> {
        let set = match *rates {
            RatesConfig::Uniform(r) => RateSet::uniform(r),
            RatesConfig::Explicit {
                alpha,
                beta_abs,
                beta_em,
                gamma,
            } => RateSet {
                alpha,
                beta_abs,
                beta_em,
                gamma,
            },
            RatesConfig::LineCenter => self
                .decay_channel()?
                .micro_rate_at_offset(0.0)
                .map_err(|e| CliError::from_core(path, e))?,
        };
        set.validate().map_err(|e| CliError::from_core(path, e))?;
        Ok(set)
    }

    /// Network plus its initial occupations.
    pub fn network(&self, net: &NetworkConfig) -> Result<(ReactionNetwork, Vec<u64>), CliError> {
        let mut b = ReactionNetwork::builder(self.constants);
        for m in &net.modes {
            let role = match m.role {
                RoleConfig::Excited => ModeRole::Excited,
                RoleConfig::Ground => ModeRole::Ground,
                RoleConfig::Boson => ModeRole::Boson,
            };
            b.add_mode(m.label.clone(), role, m.energy.joules());
        }
        let index = |label: &str, path: String| {
            net.modes
                .iter()
                .position(|m| m.label == label)
                .ok_or_else(|| CliError::config(path, format!("unknown mode `{label}`")))
        };
        let mut max_rate: f64 = 0.0;
        for (j, ch) in net.channels.iter().enumerate() {
            let rates = self.rates(&ch.rates, &format!("network.channels[{j}].rates"))?;
            max_rate = max_rate.max(rates.max());
            b.add_channel(
                index(&ch.excited, format!("network.channels[{j}].excited"))?,
                index(&ch.ground, format!("network.channels[{j}].ground"))?,
                index(&ch.boson, format!("network.channels[{j}].boson"))?,
                rates,
            );
        }
        if let Some(r) = &net.reservoir {
            b.reservoir(ReservoirCoupling {
                kappa: r.kappa_per_s.unwrap_or(1e-2 * max_rate),
                environment: self.environment()?,
            });
        }
        let network = b.build().map_err(|e| CliError::from_core("network", e))?;
        Ok((network, net.modes.iter().map(|m| m.initial).collect()))
    }
}
