use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::kinetics::network::ReactionNetwork;
use crate::kinetics::trajectory::{ClampEvent, Trajectory};

/// Negative excursions down to this value are clamped to zero; anything
/// lower aborts the run.
pub const CLAMP_FLOOR: f64 = -1e-9;

/// `dt` may not exceed this fraction of the inverse stiffness.
pub const STABILITY_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Must be a whole number of steps.
    pub sample_interval: f64,
}

impl OdeConfig {
    pub fn new(dt: f64, t_end: f64, sample_interval: f64) -> Self {
        Self {
            dt,
            t_end,
            sample_interval,
        }
    }

    /// `(steps, stride)`.
    fn grid(&self) -> Result<(u64, u64)> {
        require_positive("dt", self.dt)?;
        require_positive("sample_interval", self.sample_interval)?;
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(invalid(
                "t_end",
                format!("must be finite and ≥ 0, got {}", self.t_end),
            ));
        }
        let whole = |name: &'static str, x: f64| -> Result<u64> {
            let n = (x / self.dt).round();
            if (n * self.dt - x).abs() > 1e-9 * x.max(self.dt) {
                return Err(invalid(
                    name,
                    format!("{x} is not a whole number of steps of {}", self.dt),
                ));
            }
            Ok(n as u64)
        };
        let steps = whole("t_end", self.t_end)?;
        let stride = whole("sample_interval", self.sample_interval)?;
        if stride == 0 {
            return Err(invalid("sample_interval", "shorter than one step"));
        }
        Ok((steps, stride))
    }
}

/// Largest stable step at `state`, or infinity for a frozen network.
pub fn stability_limit(network: &ReactionNetwork, state: &[f64]) -> f64 {
    let s = network.stiffness(state);
    if s > 0.0 {
        STABILITY_FRACTION / s
    } else {
        f64::INFINITY
    }
}

fn check_state(network: &ReactionNetwork, state: &[f64]) -> Result<()> {
    if state.len() != network.mode_count() {
        return Err(Error::InvalidNetwork(format!(
            "initial state has {} entries for {} modes",
            state.len(),
            network.mode_count()
        )));
    }
    if let Some((mode, &value)) = state
        .iter()
        .enumerate()
        .find(|(_, &n)| !(n.is_finite() && n >= 0.0))
    {
        return Err(Error::NegativeOccupation {
            mode,
            value,
            time: 0.0,
        });
    }
    Ok(())
}

/// Classical fixed-step RK4 on the mean-field rate equations.
pub fn run_ode(network: &ReactionNetwork, initial: &[f64], cfg: &OdeConfig) -> Result<Trajectory> {
    check_state(network, initial)?;
    let (steps, stride) = cfg.grid()?;
    let limit = stability_limit(network, initial);
    if cfg.dt > limit {
        return Err(Error::StepTooLarge { dt: cfg.dt, limit });
    }

    let n = initial.len();
    let mut y = initial.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let totals0 = network.conserved_totals(&y);
    let mut drift: f64 = 0.0;
    let mut clamps = Vec::new();
    let mut times = vec![0.0];
    let mut samples = vec![y.clone()];
    let h = cfg.dt;

    for step in 1..=steps {
        network.derivative(&y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        network.derivative(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        network.derivative(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        network.derivative(&tmp, &mut k4);
        let time = step as f64 * h;
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if y[i] < 0.0 {
                if y[i] < CLAMP_FLOOR {
                    return Err(Error::NegativeOccupation {
                        mode: i,
                        value: y[i],
                        time,
                    });
                }
                clamps.push(ClampEvent {
                    time,
                    mode: i,
                    value: y[i],
                });
                y[i] = 0.0;
            }
        }
        let totals = network.conserved_totals(&y);
        drift = drift
            .max(relative_change(totals0.0, totals.0))
            .max(relative_change(totals0.1, totals.1));
        if step % stride == 0 {
            times.push(time);
            samples.push(y.clone());
        }
    }

    Ok(Trajectory {
        mode_labels: network.labels(),
        times,
        samples,
        seed: None,
        stream: 0,
        config_hash: None,
        event_count: 0,
        tally: None,
        events: Vec::new(),
        clamps,
        conservation_drift: drift,
        extinct_at: None,
        hit_event_cap: false,
        time_average: None,
    })
}

fn relative_change(reference: f64, value: f64) -> f64 {
    let d = (value - reference).abs();
    if reference > 0.0 {
        d / reference
    } else {
        d
    }
}
