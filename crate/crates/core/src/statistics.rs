//! Bose-Einstein occupations and spectral energy densities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::physics::{PhysicalConstants, QuantumEnergy, Species, SpeciesTriple};

/// Above this reduced energy the Wien form `e^{-z}` is returned directly.
pub const WIEN_THRESHOLD: f64 = 700.0;

/// Below this reduced ground-state energy the Maxwell-Boltzmann population
/// ratio is flagged as unreliable.
pub const MAXWELL_BOLTZMANN_MIN_REDUCED_ENERGY: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalEnvironment {
    /// Kelvin.
    pub temperature: f64,
    /// Joules. Zero when quanta are freely created and destroyed.
    pub chemical_potential: f64,
}

impl ThermalEnvironment {
    pub fn new(temperature: f64) -> Result<Self> {
        Ok(Self {
            temperature: require_positive("temperature", temperature)?,
            chemical_potential: 0.0,
        })
    }

    pub fn with_chemical_potential(temperature: f64, chemical_potential: f64) -> Result<Self> {
        if !chemical_potential.is_finite() {
            return Err(invalid("chemical_potential", "must be finite"));
        }
        Ok(Self {
            chemical_potential,
            ..Self::new(temperature)?
        })
    }

    /// `(E − μ)/k_BT`, computed as `((Mc² − μ) + E_k)/k_BT` so that a
    /// chemical potential pinned at the rest energy leaves only the kinetic part.
    pub fn reduced_energy(&self, consts: &PhysicalConstants, q: QuantumEnergy) -> Result<f64> {
        let excess = (q.rest - self.chemical_potential) + q.kinetic;
        if !(excess > 0.0) {
            return Err(Error::DivergentOccupation {
                energy: q.total(),
                chemical_potential: self.chemical_potential,
            });
        }
        Ok(excess / consts.thermal_energy(self.temperature))
    }
}

/// `1/(e^z − 1)` for `z > 0`.
pub fn bose_factor(z: f64) -> f64 {
    if z > WIEN_THRESHOLD {
        (-z).exp()
    } else {
        1.0 / z.exp_m1()
    }
}

/// `ln(1/(e^z − 1)) = −z − ln(1 − e^{−z})`, finite for every `z > 0`.
pub fn ln_bose_factor(z: f64) -> f64 {
    -z - (-(-z).exp_m1()).ln()
}

/// `ln[n(x + step)/n(x)]` without forming either occupation.
pub fn ln_occupation_ratio(x: f64, step: f64) -> f64 {
    let ln_one_minus = |z: f64| (-(-z).exp_m1()).ln();
    -step + ln_one_minus(x) - ln_one_minus(x + step)
}

/// Mean occupation `n̄ = 1/(e^{(ħω−μ)/k_BT} − 1)`.
pub fn bose_occupation(
    consts: &PhysicalConstants,
    omega: f64,
    env: &ThermalEnvironment,
) -> Result<f64> {
    let z = reduced_energy_of_omega(consts, omega, env)?;
    Ok(bose_factor(z))
}

/// `ln n̄`; stays finite where `n̄` underflows.
pub fn ln_bose_occupation(
    consts: &PhysicalConstants,
    omega: f64,
    env: &ThermalEnvironment,
) -> Result<f64> {
    let z = reduced_energy_of_omega(consts, omega, env)?;
    Ok(ln_bose_factor(z))
}

fn reduced_energy_of_omega(
    consts: &PhysicalConstants,
    omega: f64,
    env: &ThermalEnvironment,
) -> Result<f64> {
    if !omega.is_finite() {
        return Err(invalid("omega", "must be finite"));
    }
    let q = QuantumEnergy {
        rest: 0.0,
        kinetic: consts.hbar * omega,
    };
    env.reduced_energy(consts, q)
}

/// `d · 4πν²/c³ · ħω` evaluated for a quantum of the given species.
pub(crate) fn density_prefactor(
    consts: &PhysicalConstants,
    species: &Species,
    q: QuantumEnergy,
) -> f64 {
    let nu = q.nu(consts);
    species.degeneracy as f64 * 4.0 * PI * nu * nu / consts.c.powi(3) * q.total()
}

fn require_above_rest(species: &Species, q: QuantumEnergy) -> Result<()> {
    if q.kinetic > 0.0 {
        Ok(())
    } else if species.is_massless() {
        Err(invalid("omega", "must be > 0 for a massless species"))
    } else {
        Err(Error::BelowRestEnergy {
            energy: q.total(),
            rest_energy: q.rest,
        })
    }
}

/// Energy per volume per unit `ν`: `ρ = d·(4πν²/c³)·ħω·n̄(ω)`.
///
/// For the photon this is Planck's law.
pub fn spectral_energy_density(
    consts: &PhysicalConstants,
    species: &Species,
    omega: f64,
    env: &ThermalEnvironment,
) -> Result<f64> {
    let q = species.at_omega(consts, omega)?;
    spectral_energy_density_at(consts, species, q, env)
}

/// [`spectral_energy_density`] at an explicit rest + kinetic split.
pub fn spectral_energy_density_at(
    consts: &PhysicalConstants,
    species: &Species,
    q: QuantumEnergy,
    env: &ThermalEnvironment,
) -> Result<f64> {
    require_above_rest(species, q)?;
    let z = env.reduced_energy(consts, q)?;
    Ok(density_prefactor(consts, species, q) * bose_factor(z))
}

/// `ln ρ`, for regimes where `ρ` underflows.
pub fn ln_spectral_energy_density_at(
    consts: &PhysicalConstants,
    species: &Species,
    q: QuantumEnergy,
    env: &ThermalEnvironment,
) -> Result<f64> {
    require_above_rest(species, q)?;
    let z = env.reduced_energy(consts, q)?;
    Ok(density_prefactor(consts, species, q).ln() + ln_bose_factor(z))
}

/// Energy per volume per unit `ω`: `ρ̃ = ρ · dν/dω`.
pub fn angular_spectral_density(
    consts: &PhysicalConstants,
    species: &Species,
    omega: f64,
    env: &ThermalEnvironment,
) -> Result<f64> {
    let q = species.at_omega(consts, omega)?;
    angular_spectral_density_at(consts, species, q, env)
}

pub fn angular_spectral_density_at(
    consts: &PhysicalConstants,
    species: &Species,
    q: QuantumEnergy,
    env: &ThermalEnvironment,
) -> Result<f64> {
    if !species.is_massless() && q.kinetic == 0.0 {
        return Err(Error::RestEnergySingularity(q.rest));
    }
    let rho = spectral_energy_density_at(consts, species, q, env)?;
    if species.is_massless() {
        return Ok(rho / (2.0 * PI));
    }
    Ok(rho * q.dnu_domega()?)
}

/// `ρ̃(q)/ρ(reference)` for two states of one species, evaluated without
/// forming either density, so it survives when both underflow.
pub fn angular_density_ratio(
    consts: &PhysicalConstants,
    species: &Species,
    q: QuantumEnergy,
    reference: QuantumEnergy,
    env: &ThermalEnvironment,
) -> Result<f64> {
    require_above_rest(species, q)?;
    require_above_rest(species, reference)?;
    let z_ref = env.reduced_energy(consts, reference)?;
    env.reduced_energy(consts, q)?;
    let step = ((q.rest - reference.rest) + (q.kinetic - reference.kinetic))
        / consts.thermal_energy(env.temperature);
    let prefactors =
        density_prefactor(consts, species, q) / density_prefactor(consts, species, reference);
    Ok(prefactors * q.dnu_domega()? * ln_occupation_ratio(z_ref, step).exp())
}

/// Excited-to-ground population ratio `N_aφ/N_a` for atoms at rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationRatio {
    /// Bose-Einstein value.
    pub exact: f64,
    /// `(d_aφ/d_a) e^{−ħω₀/k_BT}`.
    pub maxwell_boltzmann: f64,
    pub ln_exact: f64,
    pub ln_maxwell_boltzmann: f64,
    /// `exact/maxwell_boltzmann − 1`.
    pub relative_gap: f64,
    /// `2 e^{−ħω_a/k_BT}`, the bound on `|relative_gap|`.
    pub gap_bound: f64,
    /// Whether `ħω_a/k_BT` is large enough for the Maxwell-Boltzmann form.
    pub maxwell_boltzmann_regime: bool,
}

/// `N_aφ/N_a = (d_aφ/d_a)(e^{ħω_a/k_BT} − 1)/(e^{ħω_aφ/k_BT} − 1)` and its
/// Maxwell-Boltzmann limit.
pub fn equilibrium_population_ratio(
    consts: &PhysicalConstants,
    triple: &SpeciesTriple,
    env: &ThermalEnvironment,
) -> Result<PopulationRatio> {
    let ground = triple.ground.at_kinetic(0.0)?;
    let x_ground = env.reduced_energy(consts, ground)?;
    let x_transition = triple.transition_energy / consts.thermal_energy(env.temperature);
    let ln_degeneracy = (triple.excited.degeneracy as f64 / triple.ground.degeneracy as f64).ln();
    let ln_mb = ln_degeneracy - x_transition;
    let ln_exact = ln_degeneracy + ln_occupation_ratio(x_ground, x_transition);
    let correction = ln_exact - ln_mb;
    Ok(PopulationRatio {
        exact: ln_exact.exp(),
        maxwell_boltzmann: ln_mb.exp(),
        ln_exact,
        ln_maxwell_boltzmann: ln_mb,
        relative_gap: correction.exp_m1(),
        gap_bound: 2.0 * (-x_ground).exp(),
        maxwell_boltzmann_regime: x_ground >= MAXWELL_BOLTZMANN_MIN_REDUCED_ENERGY,
    })
}

/// Temperature at which a mode of frequency `ω` holds `n_target` quanta on
/// average: `T = ħω / (k_B ln(1 + 1/n))`.
pub fn occupancy_temperature(consts: &PhysicalConstants, omega: f64, n_target: f64) -> Result<f64> {
    require_positive("omega", omega)?;
    if !(n_target > 0.0) {
        return Err(invalid("n_target", format!("must be > 0, got {n_target}")));
    }
    Ok(consts.hbar * omega / (consts.k_b * (1.0 / n_target).ln_1p()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::ELECTRON_VOLT;

    const C: PhysicalConstants = PhysicalConstants::CODATA;
    /// Boltzmann constant in eV/K from the exact SI definitions.
    const KB_EV: f64 = 1.380_649e-23 / 1.602_176_634e-19;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn env(t: f64) -> ThermalEnvironment {
        ThermalEnvironment::new(t).unwrap()
    }

    #[test]
    fn occupation_of_one_at_ln2() {
        let e = env(1.0);
        let omega = C.k_b * 2f64.ln() / C.hbar;
        assert!(rel(bose_occupation(&C, omega, &e).unwrap(), 1.0) < 1e-15);
    }

    #[test]
    fn wien_asymptote() {
        let e = env(1.0);
        let omega = 40.0 * C.k_b / C.hbar;
        let n = bose_occupation(&C, omega, &e).unwrap();
        assert!(rel(n, (-40f64).exp()) < 1e-15);
    }

    #[test]
    fn gev_mode_at_room_temperature_in_log_space() {
        let e = env(300.0);
        let omega = 1e9 * ELECTRON_VOLT / C.hbar;
        assert_eq!(bose_occupation(&C, omega, &e).unwrap(), 0.0);
        let ln_n = ln_bose_occupation(&C, omega, &e).unwrap();
        // Boltzmann constant in eV/K; ln(1 − e^{−z}) is far below an ulp of z.
        let z = 1e9 / (KB_EV * 300.0);
        assert!(rel(ln_n, -z) < 1e-12);
    }

    #[test]
    fn divergent_occupation() {
        let e = ThermalEnvironment::with_chemical_potential(10.0, 1e-22).unwrap();
        assert!(matches!(
            bose_occupation(&C, 1e-22 / C.hbar, &e),
            Err(Error::DivergentOccupation { .. })
        ));
        assert!(bose_occupation(&C, 0.0, &env(1.0)).is_err());
    }

    #[test]
    fn small_reduced_energy_is_stable() {
        for z in [1e-12, 1e-9, 1e-6, 1e-3] {
            let n = bose_factor(z);
            // Laurent series 1/z − 1/2 + z/12.
            let series = 1.0 / z - 0.5 + z / 12.0;
            assert!(rel(n, series) < 1e-12, "z = {z}");
            assert!(rel(ln_bose_factor(z), series.ln()) < 1e-12);
        }
    }

    #[test]
    fn planck_law_for_photons() {
        let e = env(5800.0);
        let photon = Species::photon();
        let omega = 2.0 * ELECTRON_VOLT / C.hbar;
        let nu = omega / (2.0 * PI);
        let planck = 2.0 * 4.0 * PI * nu * nu / C.c.powi(3) * C.hbar * omega
            / (C.hbar * omega / (C.k_b * 5800.0)).exp_m1();
        let rho = spectral_energy_density(&C, &photon, omega, &e).unwrap();
        assert!(rel(rho, planck) < 1e-12);
        let tilde = angular_spectral_density(&C, &photon, omega, &e).unwrap();
        assert!(rel(tilde * 2.0 * PI, rho) < 1e-15);
    }

    #[test]
    fn massless_species_reduces_to_photon_exactly() {
        let e = env(1234.5);
        let twin = Species::new("twin", 0.0, 2).unwrap();
        for omega in [1e10, 3.3e13, 7.7e15] {
            assert_eq!(
                spectral_energy_density(&C, &twin, omega, &e).unwrap(),
                spectral_energy_density(&C, &Species::photon(), omega, &e).unwrap()
            );
            assert_eq!(
                angular_spectral_density(&C, &twin, omega, &e).unwrap(),
                angular_spectral_density(&C, &Species::photon(), omega, &e).unwrap()
            );
        }
    }

    #[test]
    fn wien_form_at_high_frequency() {
        let e = env(300.0);
        let photon = Species::photon();
        let z = 30.0;
        let omega = z * C.k_b * 300.0 / C.hbar;
        let nu = omega / (2.0 * PI);
        let wien = 2.0 * 4.0 * PI * nu * nu / C.c.powi(3) * C.hbar * omega * (-z).exp();
        let rho = spectral_energy_density(&C, &photon, omega, &e).unwrap();
        assert!(rel(rho, wien) <= 1.01 * (-z).exp());
    }

    #[test]
    fn massive_dnu_domega_matches_finite_difference() {
        let e = env(1e4);
        let atom = Species::new("light", 1.0 * ELECTRON_VOLT, 3).unwrap();
        let q = atom.at_kinetic(0.3 * ELECTRON_VOLT).unwrap();
        let omega = q.omega(&C);
        let h = omega * 1e-6;
        let nu = |w: f64| crate::physics::nu_of_omega(&C, &atom, w).unwrap();
        let fd = (nu(omega + h) - nu(omega - h)) / (2.0 * h);
        let rho = spectral_energy_density_at(&C, &atom, q, &e).unwrap();
        let tilde = angular_spectral_density_at(&C, &atom, q, &e).unwrap();
        assert!(rel(tilde / rho, fd) < 1e-6);
        let closed = q.total() / (q.total().powi(2) - q.rest.powi(2)).sqrt() / (2.0 * PI);
        assert!(rel(tilde / rho, closed) < 1e-12);
    }

    #[test]
    fn density_ratio_matches_direct_quotient() {
        let atom = Species::new("a", 0.5 * ELECTRON_VOLT, 2).unwrap();
        let e = env(2e4);
        let q0 = atom.at_kinetic(0.1 * ELECTRON_VOLT).unwrap();
        let q = atom.at_kinetic(0.1003 * ELECTRON_VOLT).unwrap();
        let direct = angular_spectral_density_at(&C, &atom, q, &e).unwrap()
            / spectral_energy_density_at(&C, &atom, q0, &e).unwrap();
        let ratio = angular_density_ratio(&C, &atom, q, q0, &e).unwrap();
        assert!(rel(ratio, direct) < 1e-12);

        // Both densities underflow for a GeV atom; the ratio does not.
        let heavy = Species::new("h", 1e9 * ELECTRON_VOLT, 1).unwrap();
        let h0 = heavy.at_kinetic(ELECTRON_VOLT).unwrap();
        let h1 = heavy.at_kinetic(1.001 * ELECTRON_VOLT).unwrap();
        assert_eq!(spectral_energy_density_at(&C, &heavy, h0, &e).unwrap(), 0.0);
        let r = angular_density_ratio(&C, &heavy, h1, h0, &e).unwrap();
        let x = 1e-3 / (KB_EV * 2e4);
        let expected = h1.nu(&C).powi(2) * h1.total() / (h0.nu(&C).powi(2) * h0.total())
            * h1.dnu_domega().unwrap()
            * (-x).exp();
        assert!(rel(r, expected) < 1e-9);
    }

    #[test]
    fn rest_energy_singularity() {
        let atom = Species::new("a", 1.0 * ELECTRON_VOLT, 1).unwrap();
        let q = atom.at_kinetic(0.0).unwrap();
        assert!(matches!(
            angular_spectral_density_at(&C, &atom, q, &env(1e4)),
            Err(Error::RestEnergySingularity(_))
        ));
        assert!(spectral_energy_density_at(&C, &atom, q, &env(1e4)).is_err());
    }

    #[test]
    fn population_ratio_degenerate_levels() {
        let atom = Species::new("a", 1e-3 * ELECTRON_VOLT, 2).unwrap();
        let triple = SpeciesTriple::new(atom, Species::photon(), 1e-30, 2).unwrap();
        let r = equilibrium_population_ratio(&C, &triple, &env(300.0)).unwrap();
        // Direct oracle n(x + y)/n(x) = (e^x − 1)/(e^{x+y} − 1).
        let x = 1e-3 / (KB_EV * 300.0);
        let y = 1e-30 / (C.k_b * 300.0);
        assert!(rel(r.exact, x.exp_m1() / (x + y).exp_m1()) < 1e-12);
        assert!(rel(r.exact, 1.0) < 1e-7);
    }

    #[test]
    fn population_ratio_heavy_atom() {
        let atom = Species::new("a", 1e9 * ELECTRON_VOLT, 3).unwrap();
        let triple = SpeciesTriple::new(atom, Species::photon(), 10.0 * ELECTRON_VOLT, 5).unwrap();
        let r = equilibrium_population_ratio(&C, &triple, &env(6000.0)).unwrap();
        let x0 = 10.0 / (KB_EV * 6000.0);
        assert!(rel(r.ln_maxwell_boltzmann, (5.0f64 / 3.0).ln() - x0) < 1e-12);
        assert_eq!(r.ln_exact, r.ln_maxwell_boltzmann);
        assert!(r.relative_gap.abs() <= r.gap_bound);
        assert!(r.gap_bound < 1e-100);
        assert!(r.maxwell_boltzmann_regime);
    }

    #[test]
    fn population_gap_bound_holds_near_threshold() {
        for x_ground in [0.5_f64, 2.0, 5.0, 12.0] {
            let kt = C.k_b * 100.0;
            let atom = Species::new("a", x_ground * kt, 1).unwrap();
            let triple = SpeciesTriple::new(atom, Species::photon(), 0.7 * kt, 1).unwrap();
            let r = equilibrium_population_ratio(&C, &triple, &env(100.0)).unwrap();
            let direct = x_ground.exp_m1() / (x_ground + 0.7).exp_m1();
            assert!(rel(r.exact, direct) < 1e-12);
            assert!(r.relative_gap.abs() <= r.gap_bound);
        }
    }

    #[test]
    fn occupancy_temperature_inverts_occupation() {
        let t = occupancy_temperature(&C, C.k_b * 2f64.ln() / C.hbar, 1.0).unwrap();
        assert!(rel(t, 1.0) < 1e-12);
        let omega = 1e9 * ELECTRON_VOLT / C.hbar;
        let t = occupancy_temperature(&C, omega, 1.0).unwrap();
        assert!(rel(t, 1e9 * ELECTRON_VOLT / (C.k_b * 2f64.ln())) < 1e-14);
        assert!(t > 1.5e13 && t < 1.9e13);
        let mut last = 0.0;
        for n in [0.1, 1.0, 10.0, 1e3, 1e6] {
            let t = occupancy_temperature(&C, omega, n).unwrap();
            assert!(t > last);
            last = t;
            let back = bose_occupation(&C, omega, &env(t)).unwrap();
            assert!(rel(back, n) < 1e-12);
        }
        assert!(occupancy_temperature(&C, omega, 0.0).is_err());
    }
}
