//! Matter-wave amplification: one excited mode decaying into `d_a`
//! degenerate ground modes, one of which carries a macroscopic seed.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::interaction::RateSet;
use crate::kinetics::network::{ModeRole, ReactionNetwork};
use crate::kinetics::ssa::{run_ssa, SsaConfig};
use crate::kinetics::trajectory::Trajectory;
use crate::physics::PhysicalConstants;

/// `aφ → a_i + φ_i` for `i < ground_modes`, all ground modes at the same
/// energy. Modes are labelled `aphi`, `a0…`, `phi0…`; the ground mode `i`
/// has index `1 + i`.
pub fn atom_laser_network(
    constants: PhysicalConstants,
    excited_energy: f64,
    ground_energy: f64,
    ground_modes: usize,
    rates: RateSet,
) -> Result<ReactionNetwork> {
    if ground_modes == 0 {
        return Err(invalid("ground_modes", "need at least one ground mode"));
    }
    let mut b = ReactionNetwork::builder(constants);
    let excited = b.add_mode("aphi", ModeRole::Excited, excited_energy);
    let grounds: Vec<usize> = (0..ground_modes)
        .map(|i| b.add_mode(format!("a{i}"), ModeRole::Ground, ground_energy))
        .collect();
    for (i, &g) in grounds.iter().enumerate() {
        let k = b.add_mode(
            format!("phi{i}"),
            ModeRole::Boson,
            excited_energy - ground_energy,
        );
        b.add_channel(excited, g, k, rates);
    }
    b.build()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomLaserReport {
    pub seed_mode: usize,
    pub seed_population: u64,
    /// Ground modes degenerate with the seed, including it.
    pub peer_modes: Vec<usize>,
    /// Net decays (decays minus absorptions) into each peer mode.
    pub net_decays: Vec<i64>,
    /// Gross decay events into each peer mode.
    pub decays: Vec<u64>,
    pub seeded_fraction: f64,
    pub uniform_baseline: f64,
    /// Seeded share of the total decay propensity at t = 0.
    pub predicted_initial_fraction: f64,
    /// `γ n_seed n_aφ` summed over channels feeding the seed, at t = 0, 1/s.
    pub initial_forgotten_propensity: f64,
    /// Whether `γ n_seed > 10 (α + β_em n_φ)` held at t = 0 on every seeded channel.
    pub seed_dominates: bool,
}

/// Runs one SSA trajectory from `initial` with the seed mode overwritten by
/// `seed_population`, and tallies where the decays went.
pub fn scenario_atom_laser(
    network: &ReactionNetwork,
    initial: &[u64],
    seed_mode: usize,
    seed_population: u64,
    seed: u64,
    cfg: &SsaConfig,
) -> Result<(Trajectory, AtomLaserReport)> {
    let start = seeded_state(network, initial, seed_mode, seed_population)?;
    let report_base = initial_report(network, &start, seed_mode, seed_population);
    let traj = run_ssa(network, &start, seed, cfg)?;
    let report = finish_report(network, report_base, &traj);
    Ok((traj, report))
}

pub(crate) fn seeded_state(
    network: &ReactionNetwork,
    initial: &[u64],
    seed_mode: usize,
    seed_population: u64,
) -> Result<Vec<u64>> {
    match network.modes.get(seed_mode) {
        Some(m) if m.role == ModeRole::Ground => {}
        _ => {
            return Err(Error::InvalidNetwork(format!(
                "seed mode {seed_mode} is not a ground mode"
            )))
        }
    }
    let mut start = initial.to_vec();
    if seed_mode >= start.len() {
        return Err(Error::InvalidNetwork("initial state is too short".into()));
    }
    start[seed_mode] = seed_population;
    Ok(start)
}

fn initial_report(
    network: &ReactionNetwork,
    start: &[u64],
    seed_mode: usize,
    seed_population: u64,
) -> AtomLaserReport {
    let energy = network.modes[seed_mode].energy;
    let peer_modes: Vec<usize> = network
        .modes
        .iter()
        .enumerate()
        .filter(|(_, m)| m.role == ModeRole::Ground && (m.energy - energy).abs() <= 1e-12 * energy)
        .map(|(i, _)| i)
        .collect();
    let occ: Vec<f64> = start.iter().map(|&n| n as f64).collect();
    let mut seeded = 0.0;
    let mut all = 0.0;
    let mut forgotten = 0.0;
    let mut dominates = true;
    for ch in &network.channels {
        if !peer_modes.contains(&ch.ground) {
            continue;
        }
        let p = ch.propensities(&occ);
        all += p.decay();
        if ch.ground == seed_mode {
            seeded += p.decay();
            forgotten += p.atom_stimulated;
            let r = &ch.rates;
            dominates &= r.gamma * occ[seed_mode] > 10.0 * (r.alpha + r.beta_em * occ[ch.boson]);
        }
    }
    AtomLaserReport {
        seed_mode,
        seed_population,
        uniform_baseline: 1.0 / peer_modes.len() as f64,
        net_decays: vec![0; peer_modes.len()],
        decays: vec![0; peer_modes.len()],
        peer_modes,
        seeded_fraction: f64::NAN,
        predicted_initial_fraction: if all > 0.0 { seeded / all } else { f64::NAN },
        initial_forgotten_propensity: forgotten,
        seed_dominates: dominates,
    }
}

fn finish_report(
    network: &ReactionNetwork,
    mut report: AtomLaserReport,
    traj: &Trajectory,
) -> AtomLaserReport {
    let tally = traj
        .tally
        .as_ref()
        .expect("stochastic trajectories carry a tally");
    for (ch, t) in network.channels.iter().zip(&tally.channels) {
        if let Some(slot) = report.peer_modes.iter().position(|&g| g == ch.ground) {
            report.decays[slot] += t.decays();
            report.net_decays[slot] += t.decays() as i64 - t.absorption as i64;
        }
    }
    let total: u64 = report.decays.iter().sum();
    let seeded = report
        .peer_modes
        .iter()
        .position(|&g| g == report.seed_mode)
        .map_or(0, |s| report.decays[s]);
    report.seeded_fraction = if total > 0 {
        seeded as f64 / total as f64
    } else {
        f64::NAN
    };
    report
}
