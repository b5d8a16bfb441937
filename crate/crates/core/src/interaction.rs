//! Line shapes, micro-rates, transition probabilities per unit time, and the
//! macroscopic coefficients `A`, `B_abs`, `B_em` and `C`.
//!
//! All four micro-rates of one `(m, n, k)` channel share the value
//!
//! ```text
//! α = β_abs = β_em = γ = πc³ / (d_φ d_a ω_φ ν_φ) · (1/t_sp) · f_φ(ω_φ − ω_φ0) / V
//! ```
//!
//! The coefficients multiply spectral densities per unit `ν`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_non_negative, require_positive, Error, Result};
use crate::physics::{PhysicalConstants, QuantumEnergy, SpeciesTriple};
use crate::statistics::{
    angular_density_ratio, bose_factor, density_prefactor, ln_bose_factor,
    ln_spectral_energy_density_at, ThermalEnvironment,
};

/// Line width in units of the natural decay rate `1/t_sp` when none is given.
pub const DEFAULT_FWHM_PER_RATE: f64 = 2.0;
/// Default grid points per FWHM.
pub const DEFAULT_POINTS_PER_FWHM: f64 = 100.0;
/// Default half window in FWHM units; keeps the renormalization under 10⁻³.
pub const DEFAULT_HALF_WINDOW_FWHM: f64 = 400.0;
/// Grids larger than this many points are rejected.
pub const MAX_LINE_POINTS: u64 = 200_000_000;

/// Separation-of-scales thresholds `δω ≤ Δω/grid_factor ≤ ω₀/width_factor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BroadbandLimits {
    pub grid_factor: f64,
    pub width_factor: f64,
}

impl Default for BroadbandLimits {
    fn default() -> Self {
        Self {
            grid_factor: 100.0,
            width_factor: 1e4,
        }
    }
}

/// Truncated Lorentzian emission profile sampled on `ω₀ + ℓ·δω`, rescaled so
/// that `Σ_ℓ f(ℓ·δω)·δω = 1` over the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineShape {
    pub center: f64,
    pub fwhm: f64,
    pub grid_spacing: f64,
    pub half_window: f64,
    half_points: u64,
    /// Unnormalized grid sum `Σ L(ℓ·δω)·δω`.
    raw_sum: f64,
}

impl LineShape {
    pub fn new(center: f64, fwhm: f64, grid_spacing: f64, half_window: f64) -> Result<Self> {
        Self::with_limits(
            center,
            fwhm,
            grid_spacing,
            half_window,
            BroadbandLimits::default(),
        )
    }

    pub fn with_limits(
        center: f64,
        fwhm: f64,
        grid_spacing: f64,
        half_window: f64,
        limits: BroadbandLimits,
    ) -> Result<Self> {
        require_positive("center", center)?;
        require_positive("fwhm", fwhm)?;
        require_positive("grid_spacing", grid_spacing)?;
        require_positive("half_window", half_window)?;
        if grid_spacing > fwhm / limits.grid_factor {
            return Err(invalid(
                "grid_spacing",
                format!(
                    "must be ≤ fwhm/{} = {:e}",
                    limits.grid_factor,
                    fwhm / limits.grid_factor
                ),
            ));
        }
        if fwhm / limits.grid_factor > center / limits.width_factor {
            return Err(invalid(
                "fwhm",
                format!(
                    "fwhm/{} must be ≤ center/{} = {:e}",
                    limits.grid_factor,
                    limits.width_factor,
                    center / limits.width_factor
                ),
            ));
        }
        if half_window < fwhm || half_window >= center {
            return Err(invalid(
                "half_window",
                "must cover the FWHM and stay below the line center",
            ));
        }
        let half_points = (half_window / grid_spacing).floor() as u64;
        if 2 * half_points + 1 > MAX_LINE_POINTS {
            return Err(invalid(
                "grid_spacing",
                format!("grid of {} points is too large", 2 * half_points + 1),
            ));
        }
        let mut line = Self {
            center,
            fwhm,
            grid_spacing,
            half_window,
            half_points,
            raw_sum: 1.0,
        };
        // Tails first: summing small terms before large ones.
        let tail: f64 = (1..=half_points)
            .rev()
            .map(|l| line.lorentzian(l as f64 * grid_spacing))
            .sum();
        line.raw_sum = (2.0 * tail + line.lorentzian(0.0)) * grid_spacing;
        Ok(line)
    }

    /// Natural line of a level with lifetime `t_sp`: FWHM `2/t_sp`, 100 points
    /// per FWHM, half window of 400 FWHM.
    pub fn natural(center: f64, t_sp: f64) -> Result<Self> {
        let fwhm = DEFAULT_FWHM_PER_RATE / require_positive("t_sp", t_sp)?;
        Self::new(
            center,
            fwhm,
            fwhm / DEFAULT_POINTS_PER_FWHM,
            fwhm * DEFAULT_HALF_WINDOW_FWHM,
        )
    }

    /// Same line, different grid spacing.
    pub fn with_grid_spacing(&self, grid_spacing: f64) -> Result<Self> {
        Self::new(self.center, self.fwhm, grid_spacing, self.half_window)
    }

    /// Untruncated, unnormalized Lorentzian `(Δω/2π)/(δ² + (Δω/2)²)`.
    pub fn lorentzian(&self, offset: f64) -> f64 {
        let half = 0.5 * self.fwhm;
        self.fwhm / (2.0 * PI) / (offset * offset + half * half)
    }

    /// `1/Σ L·δω`, the factor applied by renormalization.
    pub fn renormalization(&self) -> f64 {
        1.0 / self.raw_sum
    }

    /// `f(δ)`; zero outside the window.
    pub fn value_at_offset(&self, offset: f64) -> f64 {
        if offset.abs() > self.half_window {
            0.0
        } else {
            self.lorentzian(offset) / self.raw_sum
        }
    }

    pub fn value(&self, omega: f64) -> f64 {
        self.value_at_offset(omega - self.center)
    }

    pub fn grid_len(&self) -> usize {
        (2 * self.half_points + 1) as usize
    }

    /// Offsets `ℓ·δω`, `ℓ = −L..=L`.
    pub fn offsets(&self) -> impl Iterator<Item = f64> + '_ {
        let l = self.half_points as i64;
        (-l..=l).map(move |i| i as f64 * self.grid_spacing)
    }

    /// `Σ_ℓ f(ℓ·δω)·δω`.
    pub fn grid_sum(&self) -> f64 {
        self.offsets()
            .map(|d| self.value_at_offset(d) * self.grid_spacing)
            .sum()
    }
}

/// `f_φ(ω − ω₀)`.
pub fn line_value(line: &LineShape, omega: f64) -> f64 {
    line.value(omega)
}

/// Micro-rates of one `(m, n, k)` channel, per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    pub alpha: f64,
    pub beta_abs: f64,
    pub beta_em: f64,
    pub gamma: f64,
}

impl RateSet {
    pub fn uniform(rate: f64) -> Self {
        Self {
            alpha: rate,
            beta_abs: rate,
            beta_em: rate,
            gamma: rate,
        }
    }

    /// Spontaneous decay only.
    pub fn spontaneous_only(alpha: f64) -> Self {
        Self {
            alpha,
            beta_abs: 0.0,
            beta_em: 0.0,
            gamma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("alpha", self.alpha)?;
        require_non_negative("beta_abs", self.beta_abs)?;
        require_non_negative("beta_em", self.beta_em)?;
        require_non_negative("gamma", self.gamma)?;
        Ok(())
    }

    pub fn max(&self) -> f64 {
        self.alpha
            .max(self.beta_abs)
            .max(self.beta_em)
            .max(self.gamma)
    }

    /// Whether all four rates agree to `rel_tol`.
    pub fn is_balanced(&self, rel_tol: f64) -> bool {
        let hi = self.max();
        let lo = self
            .alpha
            .min(self.beta_abs)
            .min(self.beta_em)
            .min(self.gamma);
        hi - lo <= rel_tol * hi
    }
}

/// `aφ → a + φ` in a cavity of volume `V` with spontaneous lifetime `t_sp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayChannel {
    pub constants: PhysicalConstants,
    pub triple: SpeciesTriple,
    pub t_sp: f64,
    pub line: LineShape,
    pub volume: f64,
    /// Kinetic energy of the decaying excited atom, joules.
    pub excited_kinetic: f64,
}

impl DecayChannel {
    pub fn new(
        constants: PhysicalConstants,
        triple: SpeciesTriple,
        t_sp: f64,
        line: LineShape,
        volume: f64,
    ) -> Result<Self> {
        require_positive("t_sp", t_sp)?;
        require_positive("volume", volume)?;
        let line_energy = constants.hbar * line.center;
        if (line_energy - triple.transition_energy).abs() > constants.hbar * line.fwhm {
            return Err(invalid(
                "line.center",
                format!(
                    "ħω₀ = {line_energy:e} J is more than one FWHM from the transition energy {:e} J",
                    triple.transition_energy
                ),
            ));
        }
        triple
            .boson
            .at_omega(&constants, line.center - line.half_window)?;
        Ok(Self {
            constants,
            triple,
            t_sp,
            line,
            volume,
            excited_kinetic: 0.0,
        })
    }

    pub fn with_excited_kinetic(mut self, excited_kinetic: f64) -> Result<Self> {
        self.excited_kinetic = require_non_negative("excited_kinetic", excited_kinetic)?;
        Ok(self)
    }

    pub fn offset_of(&self, omega_boson: f64) -> f64 {
        omega_boson - self.line.center
    }

    fn check_window(&self, offset: f64) -> Result<()> {
        if offset.abs() > self.line.half_window || !offset.is_finite() {
            return Err(Error::OutsideLineWindow {
                offset,
                half_window: self.line.half_window,
            });
        }
        Ok(())
    }

    pub fn boson_at_offset(&self, offset: f64) -> Result<QuantumEnergy> {
        self.triple
            .boson
            .at_omega(&self.constants, self.line.center + offset)
    }

    /// Ground-atom kinetic energy when the boson sits at the line center.
    pub fn ground_kinetic_at_center(&self) -> Result<f64> {
        let boson = self.boson_at_offset(0.0)?;
        self.triple
            .ground_kinetic(self.excited_kinetic, boson.total())
    }

    /// Ground atom fixed by `ω_a = ω_aφ − ω_φ`; must lie strictly above rest.
    pub fn ground_at_offset(&self, offset: f64) -> Result<QuantumEnergy> {
        let kinetic = self.ground_kinetic_at_center()? - self.constants.hbar * offset;
        if !(kinetic > 0.0) {
            return Err(Error::EnergyConservation(format!(
                "ground atom would be left with kinetic energy {kinetic:e} J at offset {offset:e} rad/s"
            )));
        }
        self.triple.ground.at_kinetic(kinetic)
    }

    /// `πc³ / (degeneracy · ω_φ ν_φ) · (1/t_sp) · f_φ`.
    fn rate_prefactor(&self, offset: f64, degeneracy: f64) -> Result<f64> {
        self.check_window(offset)?;
        let boson = self.boson_at_offset(offset)?;
        let c = &self.constants;
        let omega = boson.omega(c);
        let nu = boson.nu(c);
        Ok(PI * c.c.powi(3) / (degeneracy * omega * nu) / self.t_sp
            * self.line.value_at_offset(offset))
    }

    pub fn micro_rate_at_offset(&self, offset: f64) -> Result<RateSet> {
        self.ground_at_offset(offset)?;
        let d = self.triple.boson.degeneracy as f64 * self.triple.ground.degeneracy as f64;
        Ok(RateSet::uniform(
            self.rate_prefactor(offset, d)? / self.volume,
        ))
    }

    pub fn w_em_at_offset(&self, u_k: f64, offset: f64) -> Result<f64> {
        require_non_negative("u_k", u_k)?;
        let boson = self.boson_at_offset(offset)?;
        let d_phi = self.triple.boson.degeneracy as f64;
        Ok(self.rate_prefactor(offset, d_phi)? * u_k / boson.total())
    }

    pub fn w_abs_at_offset(&self, u_k: f64, offset: f64) -> Result<f64> {
        Ok(self.degeneracy_ratio() * self.w_em_at_offset(u_k, offset)?)
    }

    pub fn w_forgotten_at_offset(&self, u_n: f64, offset: f64) -> Result<f64> {
        require_non_negative("u_n", u_n)?;
        let ground = self.ground_at_offset(offset)?;
        let d_a = self.triple.ground.degeneracy as f64;
        Ok(self.rate_prefactor(offset, d_a)? * u_n / ground.total())
    }

    /// `d_aφ / d_a`.
    pub fn degeneracy_ratio(&self) -> f64 {
        self.triple.excited.degeneracy as f64 / self.triple.ground.degeneracy as f64
    }

    /// `c³/(4πħων²)` at a quantum energy.
    fn coefficient_core(&self, q: QuantumEnergy) -> f64 {
        let c = &self.constants;
        let nu = q.nu(c);
        c.c.powi(3) / (4.0 * PI * c.hbar * q.omega(c) * nu * nu)
    }
}

/// `α = β_abs = β_em = γ` for the boson at `omega_boson`.
pub fn micro_rate(channel: &DecayChannel, omega_boson: f64) -> Result<RateSet> {
    channel.micro_rate_at_offset(channel.offset_of(omega_boson))
}

/// Stimulated decay into boson mode `k` and any ground mode of equal energy.
/// `u_k` is the per-mode energy density `[φ]_k ħω_φ`, J/m³.
pub fn w_em(channel: &DecayChannel, u_k: f64, omega_boson: f64) -> Result<f64> {
    channel.w_em_at_offset(u_k, channel.offset_of(omega_boson))
}

/// Absorption of a boson from mode `k` into any excited mode: `(d_aφ/d_a)·W_em`.
pub fn w_abs(channel: &DecayChannel, u_k: f64, omega_boson: f64) -> Result<f64> {
    channel.w_abs_at_offset(u_k, channel.offset_of(omega_boson))
}

/// Decay stimulated by the ground-atom mode `n` into any boson mode of equal
/// energy. `u_n = [a]_n ħω_a`; the ground energy follows from `omega_boson`.
pub fn w_forgotten(channel: &DecayChannel, u_n: f64, omega_boson: f64) -> Result<f64> {
    channel.w_forgotten_at_offset(u_n, channel.offset_of(omega_boson))
}

/// `A = 1/t_sp`.
pub fn einstein_a(channel: &DecayChannel) -> f64 {
    1.0 / channel.t_sp
}

/// `B_em = (1/d_φ) · c³/(4πħω_φ0ν_φ0²) · (1/t_sp)`.
pub fn einstein_b_em(channel: &DecayChannel) -> Result<f64> {
    let boson = channel.boson_at_offset(0.0)?;
    Ok(channel.coefficient_core(boson) / channel.triple.boson.degeneracy as f64 / channel.t_sp)
}

/// `B_abs = (d_aφ/(d_a d_φ)) · c³/(4πħω_φ0ν_φ0²) · (1/t_sp)`.
pub fn einstein_b_abs(channel: &DecayChannel) -> Result<f64> {
    Ok(channel.degeneracy_ratio() * einstein_b_em(channel)?)
}

/// `C = (1/d_a) · c³/(4πħω_a0ν_a0²) · (1/t_sp)` with `ω_a0 = ω_aφ − ω_φ0`.
pub fn coefficient_c(channel: &DecayChannel) -> Result<f64> {
    let ground = channel.ground_at_offset(0.0)?;
    Ok(channel.coefficient_core(ground) / channel.triple.ground.degeneracy as f64 / channel.t_sp)
}

/// `d_φ · 4πν₀²ħω₀/c³`, the value of `A/B_em` required at every temperature.
pub fn einstein_ratio_expected(channel: &DecayChannel) -> Result<f64> {
    let c = &channel.constants;
    let boson = channel.boson_at_offset(0.0)?;
    let nu = boson.nu(c);
    Ok(channel.triple.boson.degeneracy as f64 * 4.0 * PI * nu * nu * boson.total() / c.c.powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BroadbandCheck {
    pub closed_form: f64,
    pub reconstructed: f64,
    pub relative_error: f64,
}

impl BroadbandCheck {
    fn new(closed_form: f64, reconstructed: f64) -> Self {
        Self {
            closed_form,
            reconstructed,
            relative_error: ((reconstructed - closed_form) / closed_form).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BroadbandReport {
    pub grid_points: usize,
    pub grid_spacing: f64,
    pub b_em: BroadbandCheck,
    pub b_abs: BroadbandCheck,
    pub c: BroadbandCheck,
}

/// Rebuilds `B_em`, `B_abs` and `C` by summing the transition probabilities
/// over the line grid with thermal radiation and matter waves.
///
/// Each grid line is one boson mode (`δ𝒩_φ = 1`), so a line carries the
/// per-mode energy density `u_k = ρ̃_φ(ω_ℓ)·δω/d_φ`. The ground atoms at
/// `ω_aℓ = ω_aφ − ω_ℓ` hold `δ𝒩_a = ω_aℓν_aℓ/(ω_ℓν_ℓ)` resonances per line,
/// so `u_n = ρ̃_a(ω_aℓ)·δω/(d_a δ𝒩_a)`.
pub fn broadband_reconstruction(
    channel: &DecayChannel,
    env: &ThermalEnvironment,
) -> Result<BroadbandReport> {
    let c = &channel.constants;
    let triple = &channel.triple;
    let d_phi = triple.boson.degeneracy as f64;
    let d_a = triple.ground.degeneracy as f64;
    let dw = channel.line.grid_spacing;

    // Sums are normalized by the center densities term by term, so heavy
    // ground atoms whose densities underflow still reconstruct.
    let boson0 = channel.boson_at_offset(0.0)?;
    let ground0 = channel.ground_at_offset(0.0)?;
    let mut em_sum = 0.0;
    let mut forgotten_sum = 0.0;
    for offset in channel.line.offsets() {
        let boson = channel.boson_at_offset(offset)?;
        let ground = channel.ground_at_offset(offset)?;
        let u_k = angular_density_ratio(c, &triple.boson, boson, boson0, env)? * dw / d_phi;
        em_sum += d_phi * channel.w_em_at_offset(u_k, offset)?;

        let ground_rays = ground.omega(c) * ground.nu(c) / (boson.omega(c) * boson.nu(c));
        let u_n = angular_density_ratio(c, &triple.ground, ground, ground0, env)? * dw
            / (d_a * ground_rays);
        forgotten_sum += d_a * channel.w_forgotten_at_offset(u_n, offset)?;
    }

    let b_em = einstein_b_em(channel)?;
    let abs_sum = channel.degeneracy_ratio() * em_sum;
    Ok(BroadbandReport {
        grid_points: channel.line.grid_len(),
        grid_spacing: dw,
        b_em: BroadbandCheck::new(b_em, em_sum),
        b_abs: BroadbandCheck::new(einstein_b_abs(channel)?, abs_sum),
        c: BroadbandCheck::new(coefficient_c(channel)?, forgotten_sum),
    })
}

/// Relative weight of matter-wave versus photon stimulation at thermal
/// equilibrium, at the line center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StimulationRatio {
    /// `[a]_n / [φ]_k`.
    pub ground_to_boson_occupation: f64,
    pub ln_ground_to_boson_occupation: f64,
    /// `W_f / W_em` from the transition probabilities (may underflow to 0).
    pub forgotten_to_stimulated: f64,
    /// `ln(W_f/W_em) = ln(d_φ/d_a) + ln n_a − ln n_φ`.
    pub ln_forgotten_to_stimulated: f64,
}

pub fn thermal_stimulation_ratio(
    channel: &DecayChannel,
    env: &ThermalEnvironment,
) -> Result<StimulationRatio> {
    let c = &channel.constants;
    let boson = channel.boson_at_offset(0.0)?;
    let ground = channel.ground_at_offset(0.0)?;
    let x_boson = env.reduced_energy(c, boson)?;
    let x_ground = env.reduced_energy(c, ground)?;
    let (n_boson, n_ground) = (bose_factor(x_boson), bose_factor(x_ground));

    let u_k = n_boson * boson.total() / channel.volume;
    let u_n = n_ground * ground.total() / channel.volume;
    let w_em = channel.w_em_at_offset(u_k, 0.0)?;
    let w_f = channel.w_forgotten_at_offset(u_n, 0.0)?;

    let ln_occ = ln_bose_factor(x_ground) - ln_bose_factor(x_boson);
    let d_ratio = channel.triple.boson.degeneracy as f64 / channel.triple.ground.degeneracy as f64;
    Ok(StimulationRatio {
        ground_to_boson_occupation: finite_or(n_ground / n_boson, ln_occ),
        ln_ground_to_boson_occupation: ln_occ,
        forgotten_to_stimulated: finite_or(w_f / w_em, d_ratio.ln() + ln_occ),
        ln_forgotten_to_stimulated: d_ratio.ln() + ln_occ,
    })
}

/// Direct quotient, or `exp(ln)` where both factors underflowed.
fn finite_or(direct: f64, ln: f64) -> f64 {
    if direct.is_finite() {
        direct
    } else {
        ln.exp()
    }
}

/// Steady-state balance `A N_aφ + B_em ρ_φ N_aφ + C ρ_a N_aφ = B_abs ρ_φ N_a`
/// evaluated with Bose-Einstein populations at the line center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalBalance {
    /// `ln A`, `ln(B_em ρ_φ)`, `ln(C ρ_a)`: decay channels per excited atom.
    pub ln_decay_terms: [f64; 3],
    /// `ln(B_abs ρ_φ N_a / N_aφ)`.
    pub ln_absorption: f64,
    /// `(decay − absorption)/absorption`.
    pub relative_residual: f64,
}

pub fn thermal_balance(channel: &DecayChannel, env: &ThermalEnvironment) -> Result<ThermalBalance> {
    let c = &channel.constants;
    let triple = &channel.triple;
    let boson = channel.boson_at_offset(0.0)?;
    let ground = channel.ground_at_offset(0.0)?;
    let ln_rho_boson = ln_spectral_energy_density_at(c, &triple.boson, boson, env)?;
    let ln_rho_ground = ln_spectral_energy_density_at(c, &triple.ground, ground, env)?;

    let terms = [
        einstein_a(channel).ln(),
        einstein_b_em(channel)?.ln() + ln_rho_boson,
        coefficient_c(channel)?.ln() + ln_rho_ground,
    ];
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ln_decay = top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln();

    // ρ_φ N_a/N_aφ with ħω_aφ = ħω_a + ħω_φ0. The Boltzmann exponents of
    // n_φ and N_aφ/N_a cancel; form the remainder directly so cold baths
    // don't lose every digit to a difference of huge logarithms.
    let ln_one_minus = |z: f64| (-(-z).exp_m1()).ln();
    let x_ground = env.reduced_energy(c, ground)?;
    let x_boson = boson.total() / c.thermal_energy(env.temperature);
    let z_boson = env.reduced_energy(c, boson)?;
    let ln_rho_over_population = density_prefactor(c, &triple.boson, boson).ln()
        - channel.degeneracy_ratio().ln()
        + (x_boson - z_boson)
        - ln_one_minus(z_boson)
        - ln_one_minus(x_ground)
        + ln_one_minus(x_ground + x_boson);
    let ln_absorption = einstein_b_abs(channel)?.ln() + ln_rho_over_population;

    Ok(ThermalBalance {
        ln_decay_terms: terms,
        ln_absorption,
        relative_residual: (ln_decay - ln_absorption).exp_m1(),
    })
}
