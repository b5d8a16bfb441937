//! Species, dispersion relations and cavity mode counting.
//!
//! A boson of rest energy `Mc²` obeys `ħω = √((Mc²)² + (2πħν)²)` with
//! `2πν = c‖k‖`; photons are the massless, doubly degenerate case. Energies
//! are carried as a [`QuantumEnergy`] (rest + kinetic) so that kinetic
//! energies many orders of magnitude below the rest energy stay resolvable
//! in `f64`.
//!
//! Mode enumeration uses a rectangular box with perfectly reflecting walls:
//! standing waves with `k_i = π n_i / L_i`, `n_i ≥ 1`, each lattice point
//! repeated once per degeneracy slot.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_non_negative, require_positive, Error, Result};

/// One electron-volt in joules.
pub const ELECTRON_VOLT: f64 = 1.602_176_634e-19;

/// Upper bound on the number of modes [`enumerate_modes`] will materialize.
pub const MAX_ENUMERATED_MODES: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Speed of light, m/s.
    pub c: f64,
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
}

impl PhysicalConstants {
    /// Exact SI values.
    pub const CODATA: Self = Self {
        c: 299_792_458.0,
        hbar: 1.054_571_817e-34,
        k_b: 1.380_649e-23,
    };

    pub fn new(c: f64, hbar: f64, k_b: f64) -> Result<Self> {
        Ok(Self {
            c: require_positive("c", c)?,
            hbar: require_positive("hbar", hbar)?,
            k_b: require_positive("k_b", k_b)?,
        })
    }

    /// Thermal energy `k_B T` in joules.
    pub fn thermal_energy(&self, temperature: f64) -> f64 {
        self.k_b * temperature
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// A boson kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub name: String,
    /// `Mc²` in joules; zero for massless species.
    pub rest_energy: f64,
    /// Number of internal states sharing one wavevector.
    pub degeneracy: u32,
}

impl Species {
    pub fn new(name: impl Into<String>, rest_energy: f64, degeneracy: u32) -> Result<Self> {
        require_non_negative("rest_energy", rest_energy)?;
        if degeneracy == 0 {
            return Err(invalid("degeneracy", "must be ≥ 1"));
        }
        Ok(Self {
            name: name.into(),
            rest_energy,
            degeneracy,
        })
    }

    /// Massless, two polarizations.
    pub fn photon() -> Self {
        Self {
            name: "photon".to_owned(),
            rest_energy: 0.0,
            degeneracy: 2,
        }
    }

    pub fn is_massless(&self) -> bool {
        self.rest_energy == 0.0
    }

    pub fn at_kinetic(&self, kinetic: f64) -> Result<QuantumEnergy> {
        if !kinetic.is_finite() {
            return Err(invalid("kinetic", format!("must be finite, got {kinetic}")));
        }
        if kinetic < 0.0 {
            return Err(Error::BelowRestEnergy {
                energy: self.rest_energy + kinetic,
                rest_energy: self.rest_energy,
            });
        }
        Ok(QuantumEnergy {
            rest: self.rest_energy,
            kinetic,
        })
    }

    pub fn at_omega(&self, consts: &PhysicalConstants, omega: f64) -> Result<QuantumEnergy> {
        let energy = consts.hbar * omega;
        if !energy.is_finite() {
            return Err(invalid("omega", format!("must be finite, got {omega}")));
        }
        if energy < self.rest_energy || energy < 0.0 {
            return Err(Error::BelowRestEnergy {
                energy,
                rest_energy: self.rest_energy,
            });
        }
        Ok(QuantumEnergy {
            rest: self.rest_energy,
            kinetic: energy - self.rest_energy,
        })
    }

    pub fn at_nu(&self, consts: &PhysicalConstants, nu: f64) -> Result<QuantumEnergy> {
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::NegativeFrequency(nu));
        }
        let momentum = 2.0 * PI * consts.hbar * nu;
        let rest = self.rest_energy;
        // (pc)² / (E + Mc²) avoids the cancellation in E − Mc².
        let kinetic = if rest == 0.0 {
            momentum
        } else {
            momentum * momentum / (rest.hypot(momentum) + rest)
        };
        Ok(QuantumEnergy { rest, kinetic })
    }
}

/// Single-quantum energy split as `Mc² + E_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumEnergy {
    pub rest: f64,
    pub kinetic: f64,
}

impl QuantumEnergy {
    /// `ħω`.
    pub fn total(&self) -> f64 {
        self.rest + self.kinetic
    }

    /// `2πħν = pc = √(E_k (E_k + 2Mc²))`.
    pub fn momentum_energy(&self) -> f64 {
        if self.rest == 0.0 {
            self.kinetic
        } else {
            (self.kinetic * (self.kinetic + 2.0 * self.rest)).sqrt()
        }
    }

    pub fn omega(&self, consts: &PhysicalConstants) -> f64 {
        self.total() / consts.hbar
    }

    pub fn nu(&self, consts: &PhysicalConstants) -> f64 {
        self.momentum_energy() / (2.0 * PI * consts.hbar)
    }

    /// `(pc)² / 2Mc²`; infinite for massless quanta.
    pub fn nonrelativistic_kinetic(&self) -> f64 {
        let p = self.momentum_energy();
        p * p / (2.0 * self.rest)
    }

    /// Number of resonant `ν` values per unit `ω` per unit volume: `ων / πc³`.
    pub fn mode_density_per_omega(&self, consts: &PhysicalConstants) -> f64 {
        self.omega(consts) * self.nu(consts) / (PI * consts.c.powi(3))
    }

    /// `dν/dω = ħω / (2π · 2πħν)`.
    pub fn dnu_domega(&self) -> Result<f64> {
        if self.rest == 0.0 {
            return Ok(1.0 / (2.0 * PI));
        }
        let p = self.momentum_energy();
        if p == 0.0 {
            return Err(Error::RestEnergySingularity(self.rest));
        }
        Ok(self.total() / (2.0 * PI * p))
    }
}

/// `ω(ν)` from the species dispersion relation.
pub fn omega_of_nu(consts: &PhysicalConstants, species: &Species, nu: f64) -> Result<f64> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::NegativeFrequency(nu));
    }
    if species.is_massless() {
        return Ok(2.0 * PI * nu);
    }
    let momentum = 2.0 * PI * consts.hbar * nu;
    Ok(species.rest_energy.hypot(momentum) / consts.hbar)
}

/// Inverse of [`omega_of_nu`].
pub fn nu_of_omega(consts: &PhysicalConstants, species: &Species, omega: f64) -> Result<f64> {
    let q = species.at_omega(consts, omega)?;
    if species.is_massless() {
        return Ok(omega / (2.0 * PI));
    }
    let energy = q.total();
    let rest = species.rest_energy;
    Ok(((energy - rest) * (energy + rest)).sqrt() / (2.0 * PI * consts.hbar))
}

/// `E_k = ħω − Mc²`.
pub fn kinetic_energy(consts: &PhysicalConstants, species: &Species, omega: f64) -> Result<f64> {
    Ok(species.at_omega(consts, omega)?.kinetic)
}

/// `2πħν` for a quantum with the given kinetic energy.
pub fn momentum_energy_of_kinetic(species: &Species, kinetic: f64) -> Result<f64> {
    Ok(species.at_kinetic(kinetic)?.momentum_energy())
}

/// `4πν²/c³ · dν · V`, the per-polarization count of resonant `ν` values.
pub fn planck_mode_count(consts: &PhysicalConstants, nu: f64, d_nu: f64, volume: f64) -> f64 {
    4.0 * PI * nu * nu / consts.c.powi(3) * d_nu * volume
}

/// Resonant `ν` values in the band `ω_center ± dω/2`: `(ων/πc³)·dω·V`.
///
/// Degeneracy is not included.
pub fn resonance_count_in_band(
    consts: &PhysicalConstants,
    species: &Species,
    omega_center: f64,
    d_omega: f64,
    volume: f64,
) -> Result<f64> {
    let q = species.at_omega(consts, omega_center)?;
    resonance_count_at(consts, q, d_omega, volume)
}

/// As [`resonance_count_in_band`], with the band centered on a kinetic energy.
pub fn resonance_count_in_band_kinetic(
    consts: &PhysicalConstants,
    species: &Species,
    kinetic_center: f64,
    d_omega: f64,
    volume: f64,
) -> Result<f64> {
    let q = species.at_kinetic(kinetic_center)?;
    resonance_count_at(consts, q, d_omega, volume)
}

fn resonance_count_at(
    consts: &PhysicalConstants,
    q: QuantumEnergy,
    d_omega: f64,
    volume: f64,
) -> Result<f64> {
    require_non_negative("d_omega", d_omega)?;
    require_positive("volume", volume)?;
    if d_omega == 0.0 {
        return Ok(0.0);
    }
    let half_band = 0.5 * consts.hbar * d_omega;
    let low_kinetic = q.kinetic - half_band;
    let straddles = if q.rest > 0.0 {
        low_kinetic <= 0.0
    } else {
        low_kinetic < 0.0
    };
    if straddles {
        return Err(Error::BandStraddlesRest {
            low: q.total() - half_band,
            high: q.total() + half_band,
            rest_energy: q.rest,
        });
    }
    Ok(q.mode_density_per_omega(consts) * d_omega * volume)
}

/// Reaction `aφ ⇌ a + φ`: ground state `a`, emitted boson `φ` (or any boson
/// `b`), excited state `aφ` with `M_aφ c² = M_a c² + ħω₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesTriple {
    pub ground: Species,
    pub boson: Species,
    pub excited: Species,
    /// `ħω₀ = E_aφ − E_a`, joules.
    pub transition_energy: f64,
}

impl SpeciesTriple {
    /// Builds the excited species from the ground species and transition energy.
    pub fn new(
        ground: Species,
        boson: Species,
        transition_energy: f64,
        excited_degeneracy: u32,
    ) -> Result<Self> {
        require_positive("transition_energy", transition_energy)?;
        let excited = Species::new(
            format!("{}{}", ground.name, boson.name),
            ground.rest_energy + transition_energy,
            excited_degeneracy,
        )?;
        Ok(Self {
            ground,
            boson,
            excited,
            transition_energy,
        })
    }

    /// Validates an explicitly supplied excited species.
    pub fn from_parts(
        ground: Species,
        boson: Species,
        excited: Species,
        transition_energy: f64,
    ) -> Result<Self> {
        require_positive("transition_energy", transition_energy)?;
        let expected = ground.rest_energy + transition_energy;
        if (excited.rest_energy - expected).abs() > 1e-12 * expected {
            return Err(invalid(
                "excited.rest_energy",
                format!(
                    "must equal ground rest energy + transition energy ({expected:e} J), got {:e} J",
                    excited.rest_energy
                ),
            ));
        }
        Ok(Self {
            ground,
            boson,
            excited,
            transition_energy,
        })
    }

    /// Kinetic energy left to the ground atom when an excited atom of kinetic
    /// energy `excited_kinetic` emits a boson of total energy `boson_energy`.
    pub fn ground_kinetic(&self, excited_kinetic: f64, boson_energy: f64) -> Result<f64> {
        let kinetic = (self.transition_energy - boson_energy) + excited_kinetic;
        if !(kinetic >= 0.0) {
            return Err(Error::EnergyConservation(format!(
                "boson energy {boson_energy:e} J exceeds the available {:e} J",
                self.transition_energy + excited_kinetic
            )));
        }
        Ok(kinetic)
    }
}

/// Rectangular cavity held at temperature `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    pub edge_lengths: [f64; 3],
    pub temperature: f64,
}

impl CavitySpec {
    pub fn new(edge_lengths: [f64; 3], temperature: f64) -> Result<Self> {
        for l in edge_lengths {
            require_positive("edge_lengths", l)?;
        }
        require_positive("temperature", temperature)?;
        Ok(Self {
            edge_lengths,
            temperature,
        })
    }

    pub fn cube(edge: f64, temperature: f64) -> Result<Self> {
        Self::new([edge; 3], temperature)
    }

    pub fn volume(&self) -> f64 {
        self.edge_lengths.iter().product()
    }
}

/// One resonant cavity state of one species in one degeneracy slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub species: Arc<Species>,
    pub nu: f64,
    pub omega: f64,
    pub kinetic: f64,
    pub degeneracy_slot: u32,
    pub lattice_index: Option<[u32; 3]>,
}

fn lattice_norm2(edges: &[f64; 3], n: [u64; 3]) -> f64 {
    (0..3)
        .map(|i| {
            let x = n[i] as f64 / edges[i];
            x * x
        })
        .sum()
}

/// Calls `visit(nx, ny, nz_max)` for every column of the standing-wave
/// lattice holding points with `ν ≤ nu_max`.
fn for_each_lattice_column(
    edges: &[f64; 3],
    consts: &PhysicalConstants,
    nu_max: f64,
    mut visit: impl FnMut(u64, u64, u64),
) {
    // ν = (c/2)·√Σ(n_i/L_i)²
    let radius2 = (2.0 * nu_max / consts.c).powi(2);
    let nx_max = (edges[0] * radius2.sqrt()).floor() as u64 + 1;
    for nx in 1..=nx_max {
        let ny_max = (edges[1] * radius2.sqrt()).floor() as u64 + 1;
        let mut any = false;
        for ny in 1..=ny_max {
            let base = lattice_norm2(edges, [nx, ny, 0]);
            let rem = radius2 - base;
            if rem < 0.0 {
                break;
            }
            let mut nz = (edges[2] * rem.sqrt()).floor() as u64;
            while lattice_norm2(edges, [nx, ny, nz + 1]) <= radius2 {
                nz += 1;
            }
            while nz > 0 && lattice_norm2(edges, [nx, ny, nz]) > radius2 {
                nz -= 1;
            }
            if nz > 0 {
                any = true;
                visit(nx, ny, nz);
            }
        }
        if !any && lattice_norm2(edges, [nx, 1, 1]) > radius2 {
            break;
        }
    }
}

/// Number of lattice wavevectors (degeneracy not included) with `ν ≤ nu_max`.
pub fn lattice_count_below(consts: &PhysicalConstants, cavity: &CavitySpec, nu_max: f64) -> u64 {
    if !(nu_max > 0.0) {
        return 0;
    }
    let mut count = 0;
    for_each_lattice_column(&cavity.edge_lengths, consts, nu_max, |_, _, nz| count += nz);
    count
}

/// Number of lattice wavevectors with `nu_low < ν ≤ nu_high`.
pub fn lattice_count_in_band(
    consts: &PhysicalConstants,
    cavity: &CavitySpec,
    nu_low: f64,
    nu_high: f64,
) -> u64 {
    lattice_count_below(consts, cavity, nu_high)
        .saturating_sub(lattice_count_below(consts, cavity, nu_low))
}

/// Continuum estimate `d · (4π/3) ν³ V / c³` of the modes below `nu_max`.
pub fn continuum_count_below(
    consts: &PhysicalConstants,
    species: &Species,
    cavity: &CavitySpec,
    nu_max: f64,
) -> f64 {
    species.degeneracy as f64 * 4.0 * PI / 3.0 * nu_max.powi(3) * cavity.volume() / consts.c.powi(3)
}

/// All standing-wave modes with `ν ≤ nu_max`, ordered by lattice index then slot.
pub fn enumerate_modes(
    consts: &PhysicalConstants,
    species: &Species,
    cavity: &CavitySpec,
    nu_max: f64,
) -> Result<Vec<Mode>> {
    require_positive("nu_max", nu_max)?;
    let points = lattice_count_below(consts, cavity, nu_max);
    let requested = points.saturating_mul(species.degeneracy as u64);
    if requested > MAX_ENUMERATED_MODES {
        return Err(Error::TooManyModes {
            requested,
            limit: MAX_ENUMERATED_MODES,
        });
    }
    let shared = Arc::new(species.clone());
    let edges = cavity.edge_lengths;
    let mut modes = Vec::with_capacity(requested as usize);
    let mut failure = None;
    for_each_lattice_column(&edges, consts, nu_max, |nx, ny, nz_max| {
        for nz in 1..=nz_max {
            let nu = 0.5 * consts.c * lattice_norm2(&edges, [nx, ny, nz]).sqrt();
            let q = match species.at_nu(consts, nu) {
                Ok(q) => q,
                Err(e) => {
                    failure.get_or_insert(e);
                    return;
                }
            };
            let omega = omega_of_nu(consts, species, nu).unwrap_or(q.omega(consts));
            for slot in 0..species.degeneracy {
                modes.push(Mode {
                    species: Arc::clone(&shared),
                    nu,
                    omega,
                    kinetic: q.kinetic,
                    degeneracy_slot: slot,
                    lattice_index: Some([nx as u32, ny as u32, nz as u32]),
                });
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(modes),
    }
}

/// Resonant-value counts over one band for the boson, the recoiling ground
/// atom, and the resulting `(ν_a, ν_φ)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCount {
    pub boson: f64,
    pub ground: f64,
    pub pairs: f64,
}

/// `d𝒩_{a+φ} = min(d𝒩_φ, d𝒩_a)` over a band of width `dω` around the boson
/// frequency, with the ground atom fixed by `ω_a = ω_aφ − ω_φ`.
pub fn pair_count_in_band(
    consts: &PhysicalConstants,
    triple: &SpeciesTriple,
    excited_kinetic: f64,
    omega_boson_center: f64,
    d_omega: f64,
    volume: f64,
) -> Result<PairCount> {
    require_non_negative("excited_kinetic", excited_kinetic)?;
    let boson_q = triple.boson.at_omega(consts, omega_boson_center)?;
    let ground_kinetic = triple.ground_kinetic(excited_kinetic, boson_q.total())?;
    if d_omega == 0.0 {
        return Ok(PairCount {
            boson: 0.0,
            ground: 0.0,
            pairs: 0.0,
        });
    }
    let boson = resonance_count_at(consts, boson_q, d_omega, volume)?;
    let ground =
        resonance_count_in_band_kinetic(consts, &triple.ground, ground_kinetic, d_omega, volume)?;
    Ok(PairCount {
        boson,
        ground,
        pairs: boson.min(ground),
    })
}
