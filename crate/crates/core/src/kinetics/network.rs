use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, Error, Result};
use crate::interaction::RateSet;
use crate::physics::{PhysicalConstants, QuantumEnergy};
use crate::statistics::{bose_factor, ThermalEnvironment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeRole {
    /// `(aφ)_m`
    Excited,
    /// `(a)_n`
    Ground,
    /// `(φ)_k`
    Boson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMode {
    pub label: String,
    pub role: ModeRole,
    /// Single-quantum energy `ħω`, joules.
    pub energy: f64,
}

/// `(aφ)_m ⇌ (a)_n + (φ)_k` between three modes of a network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionChannel {
    pub excited: usize,
    pub ground: usize,
    pub boson: usize,
    pub rates: RateSet,
}

/// Per-channel event rates for one occupation state, 1/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPropensities {
    /// `a + φ → aφ`: `β_abs n_φ n_a`.
    pub absorption: f64,
    /// `α n_aφ`.
    pub spontaneous: f64,
    /// `β_em n_φ n_aφ`.
    pub photon_stimulated: f64,
    /// `γ n_a n_aφ`, the matter-wave stimulated decay.
    pub atom_stimulated: f64,
}

impl ChannelPropensities {
    pub fn decay(&self) -> f64 {
        self.spontaneous + self.photon_stimulated + self.atom_stimulated
    }
}

impl ReactionChannel {
    pub fn propensities(&self, occupations: &[f64]) -> ChannelPropensities {
        let n_excited = occupations[self.excited];
        let n_ground = occupations[self.ground];
        let n_boson = occupations[self.boson];
        ChannelPropensities {
            absorption: self.rates.beta_abs * n_boson * n_ground,
            spontaneous: self.rates.alpha * n_excited,
            photon_stimulated: self.rates.beta_em * n_boson * n_excited,
            atom_stimulated: self.rates.gamma * n_ground * n_excited,
        }
    }

    pub fn touches(&self, mode: usize) -> bool {
        self.excited == mode || self.ground == mode || self.boson == mode
    }
}

pub fn channel_propensities(channel: &ReactionChannel, occupations: &[f64]) -> ChannelPropensities {
    channel.propensities(occupations)
}

/// Absorptions minus decays per unit time; zero in detailed balance.
pub fn equilibrium_residual(channel: &ReactionChannel, occupations: &[f64]) -> f64 {
    let p = channel.propensities(occupations);
    p.absorption - p.decay()
}

/// Per-mode exchange with a thermal reservoir: birth `κ e^{−x}(n + 1)`,
/// death `κ n`, with `x = (ħω − μ)/k_BT`. The stationary law is geometric
/// with mean `1/(e^x − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirCoupling {
    pub kappa: f64,
    pub environment: ThermalEnvironment,
}

impl ReservoirCoupling {
    /// `e^{−(ħω − μ)/k_BT}` for a mode of energy `energy`.
    pub fn boltzmann_factor(&self, consts: &PhysicalConstants, energy: f64) -> Result<f64> {
        let q = QuantumEnergy {
            rest: 0.0,
            kinetic: energy,
        };
        Ok((-self.environment.reduced_energy(consts, q)?).exp())
    }
}

/// `(birth, death)` rates for a mode of energy `energy` holding `n` quanta.
pub fn reservoir_propensities(
    consts: &PhysicalConstants,
    energy: f64,
    n: f64,
    coupling: &ReservoirCoupling,
) -> Result<(f64, f64)> {
    let b = coupling.boltzmann_factor(consts, energy)?;
    Ok((coupling.kappa * b * (n + 1.0), coupling.kappa * n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionNetwork {
    pub constants: PhysicalConstants,
    pub modes: Vec<NetworkMode>,
    pub channels: Vec<ReactionChannel>,
    pub reservoir: Option<ReservoirCoupling>,
    /// Cached `e^{−x}` per mode; empty without a reservoir.
    boltzmann: Vec<f64>,
}

impl ReactionNetwork {
    pub fn builder(constants: PhysicalConstants) -> NetworkBuilder {
        NetworkBuilder {
            constants,
            modes: Vec::new(),
            channels: Vec::new(),
            reservoir: None,
            energy_tolerance: None,
        }
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn mode_index(&self, label: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.label == label)
    }

    pub fn labels(&self) -> Vec<String> {
        self.modes.iter().map(|m| m.label.clone()).collect()
    }

    /// Same network with a different reservoir (or none).
    pub fn with_reservoir(&self, reservoir: Option<ReservoirCoupling>) -> Result<Self> {
        let boltzmann = match &reservoir {
            Some(r) => {
                require_non_negative("kappa", r.kappa)?;
                self.modes
                    .iter()
                    .map(|m| r.boltzmann_factor(&self.constants, m.energy))
                    .collect::<Result<_>>()?
            }
            None => Vec::new(),
        };
        Ok(Self {
            reservoir,
            boltzmann,
            ..self.clone()
        })
    }

    /// Reservoir `(birth, death)` for one mode; zeros without a reservoir.
    pub fn reservoir_rates(&self, mode: usize, n: f64) -> (f64, f64) {
        match &self.reservoir {
            Some(r) => (r.kappa * self.boltzmann[mode] * (n + 1.0), r.kappa * n),
            None => (0.0, 0.0),
        }
    }

    /// Bose-Einstein occupation of every mode.
    pub fn thermal_occupations(&self, env: &ThermalEnvironment) -> Result<Vec<f64>> {
        self.modes
            .iter()
            .map(|m| {
                let q = QuantumEnergy {
                    rest: 0.0,
                    kinetic: m.energy,
                };
                Ok(bose_factor(env.reduced_energy(&self.constants, q)?))
            })
            .collect()
    }

    /// Mean-field `dn/dt`.
    pub fn derivative(&self, occupations: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for ch in &self.channels {
            let p = ch.propensities(occupations);
            let net = p.absorption - p.decay();
            out[ch.excited] += net;
            out[ch.ground] -= net;
            out[ch.boson] -= net;
        }
        if self.reservoir.is_some() {
            for (i, &n) in occupations.iter().enumerate() {
                let (birth, death) = self.reservoir_rates(i, n);
                out[i] += birth - death;
            }
        }
    }

    /// `(Σ n_aφ + Σ n_a, Σ n_aφ + Σ n_φ)`, both invariant under channel events.
    pub fn conserved_totals(&self, occupations: &[f64]) -> (f64, f64) {
        let mut totals = (0.0, 0.0);
        for (m, &n) in self.modes.iter().zip(occupations) {
            match m.role {
                ModeRole::Excited => {
                    totals.0 += n;
                    totals.1 += n;
                }
                ModeRole::Ground => totals.0 += n,
                ModeRole::Boson => totals.1 += n,
            }
        }
        totals
    }

    /// Largest per-mode relaxation rate at the given state, 1/s.
    pub fn stiffness(&self, occupations: &[f64]) -> f64 {
        let mut scale = vec![0.0; self.modes.len()];
        for ch in &self.channels {
            // Sum of |∂(net rate)/∂n| over the three modes.
            let (e, g, b) = (
                occupations[ch.excited],
                occupations[ch.ground],
                occupations[ch.boson],
            );
            let r = &ch.rates;
            let load = r.alpha + r.beta_em * (b + e) + r.gamma * (g + e) + r.beta_abs * (b + g);
            for m in [ch.excited, ch.ground, ch.boson] {
                scale[m] += load;
            }
        }
        if let Some(r) = &self.reservoir {
            for (i, s) in scale.iter_mut().enumerate() {
                *s += r.kappa * (1.0 + self.boltzmann[i]);
            }
        }
        scale.into_iter().fold(0.0, f64::max)
    }
}

pub struct NetworkBuilder {
    constants: PhysicalConstants,
    modes: Vec<NetworkMode>,
    channels: Vec<ReactionChannel>,
    reservoir: Option<ReservoirCoupling>,
    energy_tolerance: Option<f64>,
}

impl NetworkBuilder {
    pub fn add_mode(&mut self, label: impl Into<String>, role: ModeRole, energy: f64) -> usize {
        self.modes.push(NetworkMode {
            label: label.into(),
            role,
            energy,
        });
        self.modes.len() - 1
    }

    pub fn add_channel(
        &mut self,
        excited: usize,
        ground: usize,
        boson: usize,
        rates: RateSet,
    ) -> usize {
        self.channels.push(ReactionChannel {
            excited,
            ground,
            boson,
            rates,
        });
        self.channels.len() - 1
    }

    pub fn reservoir(&mut self, coupling: ReservoirCoupling) -> &mut Self {
        self.reservoir = Some(coupling);
        self
    }

    /// Absolute tolerance on `ħω_aφ − ħω_a − ħω_φ`, joules. Defaults to
    /// 10⁻⁹ of the excited-mode energy.
    pub fn energy_tolerance(&mut self, tolerance: f64) -> &mut Self {
        self.energy_tolerance = Some(tolerance);
        self
    }

    pub fn build(&self) -> Result<ReactionNetwork> {
        let bad = |msg: String| Err(Error::InvalidNetwork(msg));
        for (i, m) in self.modes.iter().enumerate() {
            if !(m.energy.is_finite() && m.energy > 0.0) {
                return bad(format!(
                    "mode `{}` has non-positive energy {}",
                    m.label, m.energy
                ));
            }
            if self.modes[..i].iter().any(|o| o.label == m.label) {
                return bad(format!("duplicate mode label `{}`", m.label));
            }
        }
        let n = self.modes.len();
        for (j, ch) in self.channels.iter().enumerate() {
            let roles = [
                (ch.excited, ModeRole::Excited),
                (ch.ground, ModeRole::Ground),
                (ch.boson, ModeRole::Boson),
            ];
            for (idx, role) in roles {
                if idx >= n {
                    return bad(format!("channel {j} refers to missing mode {idx}"));
                }
                if self.modes[idx].role != role {
                    return bad(format!(
                        "channel {j}: mode `{}` is {:?}, expected {role:?}",
                        self.modes[idx].label, self.modes[idx].role
                    ));
                }
            }
            ch.rates.validate()?;
            let e_excited = self.modes[ch.excited].energy;
            let mismatch = e_excited - self.modes[ch.ground].energy - self.modes[ch.boson].energy;
            let tol = self.energy_tolerance.unwrap_or(1e-9 * e_excited);
            if mismatch.abs() > tol {
                return bad(format!(
                    "channel {j} violates energy conservation by {mismatch:e} J (tolerance {tol:e} J)"
                ));
            }
        }
        let network = ReactionNetwork {
            constants: self.constants,
            modes: self.modes.clone(),
            channels: self.channels.clone(),
            reservoir: None,
            boltzmann: Vec::new(),
        };
        network.with_reservoir(self.reservoir)
    }
}
