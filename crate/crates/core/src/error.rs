use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("negative frequency: {0} Hz")]
    NegativeFrequency(f64),

    #[error("energy {energy:e} J lies below the rest energy {rest_energy:e} J")]
    BelowRestEnergy { energy: f64, rest_energy: f64 },

    #[error("band [{low:e}, {high:e}] J straddles the rest energy {rest_energy:e} J")]
    BandStraddlesRest {
        low: f64,
        high: f64,
        rest_energy: f64,
    },

    #[error("dν/dω diverges at the rest energy {0:e} J")]
    RestEnergySingularity(f64),

    #[error("occupation diverges: excitation energy {energy:e} J ≤ chemical potential {chemical_potential:e} J")]
    DivergentOccupation {
        energy: f64,
        chemical_potential: f64,
    },

    #[error("energy conservation cannot be satisfied: {0}")]
    EnergyConservation(String),

    #[error("lattice enumeration would produce {requested} modes (limit {limit})")]
    TooManyModes { requested: u64, limit: u64 },

    #[error(
        "frequency offset {offset:e} rad/s lies outside the line window ±{half_window:e} rad/s"
    )]
    OutsideLineWindow { offset: f64, half_window: f64 },

    #[error("time step {dt:e} s exceeds the stability limit {limit:e} s")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("occupation of mode {mode} fell to {value:e} at t = {time:e} s")]
    NegativeOccupation { mode: usize, value: f64, time: f64 },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Rejects non-finite or non-positive values.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(
            name,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(invalid(
            name,
            format!("must be finite and ≥ 0, got {value}"),
        ))
    }
}
