use cavity_kinetics::interaction::{
    broadband_reconstruction, coefficient_c, einstein_a, einstein_b_abs, einstein_b_em,
    einstein_ratio_expected, thermal_balance, thermal_stimulation_ratio, BroadbandCheck,
};
use cavity_kinetics::kinetics::{
    atom_laser_network, map_ensemble, run_ode, run_ssa, run_ssa_ensemble, scenario_atom_laser,
    AveragingWindow, EventKind, OdeConfig, ReactionNetwork, SsaConfig, Trajectory,
};
use cavity_kinetics::physics::{
    continuum_count_below, enumerate_modes, lattice_count_in_band, pair_count_in_band,
    resonance_count_in_band_kinetic, MAX_ENUMERATED_MODES,
};
use cavity_kinetics::statistics::occupancy_temperature;
use serde_json::{json, Map, Value};

use crate::config::{require, Method, RunConfig, SimulationConfig};
use crate::error::CliError;
use crate::output::{fmt_num, provenance, q, OutputDir};
use crate::setup::Context;

/// Units of `B` and `C`: `Bρ` is a rate with `ρ` per unit `ν`.
const COEFFICIENT_UNIT: &str = "m^3 J^-1 s^-2";

/// Largest continuum estimate for which the lattice cross-check is attempted.
const MAX_LATTICE_CHECK: f64 = 1e13;

fn check(c: &BroadbandCheck) -> Value {
    json!({
        "closed_form": q(c.closed_form, COEFFICIENT_UNIT),
        "reconstructed": q(c.reconstructed, COEFFICIENT_UNIT),
        "relative_error": q(c.relative_error, "1"),
    })
}

pub fn coefficients(config: &RunConfig, out: &OutputDir) -> Result<Value, CliError> {
    let ctx = Context::new(config)?;
    let channel = ctx.decay_channel()?;
    let env = ctx.environment()?;
    let core = |e| CliError::from_core("triple", e);
    let a = einstein_a(&channel);
    let b_em = einstein_b_em(&channel).map_err(core)?;
    let b_abs = einstein_b_abs(&channel).map_err(core)?;
    let c = coefficient_c(&channel).map_err(core)?;
    let expected = einstein_ratio_expected(&channel).map_err(core)?;
    let rates = channel.micro_rate_at_offset(0.0).map_err(core)?;
    let broadband = broadband_reconstruction(&channel, &env).map_err(core)?;
    let line = &channel.line;

    let summary = json!({
        "provenance": provenance("coefficients", &config.hash(), None),
        "einstein_a": q(a, "1/s"),
        "b_em": q(b_em, COEFFICIENT_UNIT),
        "b_abs": q(b_abs, COEFFICIENT_UNIT),
        "c": q(c, COEFFICIENT_UNIT),
        "ratios": {
            "a_over_b_em": q(a / b_em, "J s m^-3"),
            "a_over_b_em_expected": q(expected, "J s m^-3"),
            "a_over_b_em_relative_error": q((a / b_em - expected) / expected, "1"),
            "b_abs_over_b_em": q(b_abs / b_em, "1"),
            "degeneracy_ratio": q(channel.degeneracy_ratio(), "1"),
        },
        "micro_rate": q(rates.alpha, "1/s"),
        "line": {
            "center": q(line.center, "rad/s"),
            "fwhm": q(line.fwhm, "rad/s"),
            "grid_spacing": q(line.grid_spacing, "rad/s"),
            "half_window": q(line.half_window, "rad/s"),
            "grid_points": q(line.grid_len() as f64, "1"),
        },
        "broadband": {
            "temperature": q(env.temperature, "K"),
            "b_em": check(&broadband.b_em),
            "b_abs": check(&broadband.b_abs),
            "c": check(&broadband.c),
        },
    });
    out.write_json("coefficients.json", &summary)?;
    Ok(summary)
}

pub fn equilibrium(config: &RunConfig, out: &OutputDir) -> Result<Value, CliError> {
    let ctx = Context::new(config)?;
    let channel = ctx.decay_channel()?;
    let temperatures = config.equilibrium.as_ref().map_or_else(
        || vec![config.environment.temperature_k],
        |e| e.temperatures_k.clone(),
    );
    if temperatures.is_empty() {
        return Err(CliError::config(
            "equilibrium.temperatures_k",
            "must not be empty",
        ));
    }
    let mut sweep = Vec::new();
    let mut max_residual: f64 = 0.0;
    for (i, &t) in temperatures.iter().enumerate() {
        let path = format!("equilibrium.temperatures_k[{i}]");
        let env = ctx
            .environment_at(t)
            .map_err(|_| CliError::config(&path, "invalid temperature"))?;
        let balance = thermal_balance(&channel, &env).map_err(|e| CliError::from_core(&path, e))?;
        let ratio =
            thermal_stimulation_ratio(&channel, &env).map_err(|e| CliError::from_core(&path, e))?;
        max_residual = max_residual.max(balance.relative_residual.abs());
        sweep.push(json!({
            "temperature": q(t, "K"),
            "relative_residual": q(balance.relative_residual, "1"),
            "w_f_over_w_em": q(ratio.forgotten_to_stimulated, "1"),
            "ln_w_f_over_w_em": q(ratio.ln_forgotten_to_stimulated, "1"),
            "ground_to_boson_occupation": q(ratio.ground_to_boson_occupation, "1"),
            "ln_ground_to_boson_occupation": q(ratio.ln_ground_to_boson_occupation, "1"),
        }));
    }
    let target = config
        .equilibrium
        .as_ref()
        .and_then(|e| e.occupancy_target)
        .unwrap_or(1.0);
    let rest = channel.triple.ground.rest_energy;
    let single_atom = if rest > 0.0 {
        let t = occupancy_temperature(&ctx.constants, rest / ctx.constants.hbar, target)
            .map_err(|e| CliError::from_core("equilibrium.occupancy_target", e))?;
        json!({
            "rest_energy": q(rest, "J"),
            "occupation": q(target, "1"),
            "temperature": q(t, "K"),
        })
    } else {
        Value::Null
    };
    let summary = json!({
        "provenance": provenance("equilibrium", &config.hash(), None),
        "max_abs_relative_residual": q(max_residual, "1"),
        "sweep": sweep,
        "single_quantum_temperature": single_atom,
    });
    out.write_json("equilibrium.json", &summary)?;
    Ok(summary)
}

fn metadata(network: &ReactionNetwork, config_hash: &str, seed: Option<u64>) -> Vec<String> {
    let mut lines = vec![format!("config_sha256={config_hash}")];
    if let Some(s) = seed {
        lines.push(format!("seed={s}"));
    }
    for m in &network.modes {
        let role = match m.role {
            cavity_kinetics::kinetics::ModeRole::Excited => "excited",
            cavity_kinetics::kinetics::ModeRole::Ground => "ground",
            cavity_kinetics::kinetics::ModeRole::Boson => "boson",
        };
        lines.push(format!(
            "mode={} role={role} energy_j={}",
            m.label,
            fmt_num(m.energy)
        ));
    }
    lines
}

fn trajectory_rows(traj: &Trajectory) -> impl Iterator<Item = Vec<String>> + '_ {
    traj.times.iter().zip(&traj.samples).map(|(t, row)| {
        std::iter::once(fmt_num(*t))
            .chain(row.iter().map(|&x| fmt_num(x)))
            .collect()
    })
}

fn header(labels: &[String]) -> Vec<String> {
    std::iter::once("time_s".to_string())
        .chain(labels.iter().cloned())
        .collect()
}

fn ssa_config(sim: &SimulationConfig) -> Result<(SsaConfig, u64, usize, bool), CliError> {
    let s = require(&sim.ssa, "simulation.ssa")?;
    let cfg = SsaConfig {
        t_end: sim.t_end_s,
        sample_interval: sim.sample_interval_s,
        record_events: s.record_events,
        averaging: s.averaging.map(|a| AveragingWindow {
            start: a.start_s,
            batches: a.batches,
        }),
        max_events: s.max_events,
    };
    if s.trajectories == 0 {
        return Err(CliError::config(
            "simulation.ssa.trajectories",
            "must be ≥ 1",
        ));
    }
    Ok((cfg, s.seed, s.trajectories, s.record_events))
}

fn occupations(labels: &[String], values: &[f64], unit: &str) -> Value {
    let mut m = Map::new();
    for (l, &v) in labels.iter().zip(values) {
        m.insert(l.clone(), q(v, unit));
    }
    Value::Object(m)
}

/// Pearson statistic of observed cause counts against the summed
/// per-event cause probabilities.
fn chi_square(observed: [u64; 3], expected: [f64; 3]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .filter(|(_, e)| *e > 0.0)
        .map(|(&o, e)| (o as f64 - e).powi(2) / e)
        .sum()
}

fn ssa_summary(
    network: &ReactionNetwork,
    traj: &Trajectory,
    ctx: &Context,
) -> Result<Value, CliError> {
    let labels = network.labels();
    let mut v = json!({
        "events": q(traj.event_count as f64, "1"),
        "extinct_at": traj.extinct_at.map(|t| q(t, "s")),
        "hit_event_cap": traj.hit_event_cap,
        "final_state": occupations(&labels, &traj.samples.last().cloned().unwrap_or_default(), "quanta"),
    });
    if let Some(tally) = &traj.tally {
        let causes: Vec<Value> = tally
            .channels
            .iter()
            .map(|c| {
                json!({
                    "absorptions": q(c.absorption as f64, "1"),
                    "observed_causes": {
                        "spontaneous": q(c.spontaneous as f64, "1"),
                        "photon_stimulated": q(c.photon_stimulated as f64, "1"),
                        "atom_stimulated": q(c.atom_stimulated as f64, "1"),
                    },
                    "expected_causes": {
                        "spontaneous": q(c.expected_causes[0], "1"),
                        "photon_stimulated": q(c.expected_causes[1], "1"),
                        "atom_stimulated": q(c.expected_causes[2], "1"),
                    },
                    "chi_square": q(chi_square(c.observed_causes(), c.expected_causes), "1"),
                })
            })
            .collect();
        v["channels"] = Value::Array(causes);
    }
    if let Some(avg) = &traj.time_average {
        let thermal = if network.reservoir.is_some() {
            Some(
                network
                    .thermal_occupations(&ctx.environment()?)
                    .map_err(|e| CliError::from_core("environment", e))?,
            )
        } else {
            None
        };
        let mut m = Map::new();
        for (i, l) in labels.iter().enumerate() {
            let mut entry = json!({
                "mean": q(avg.mean[i], "quanta"),
                "standard_error": q(avg.standard_error[i], "quanta"),
            });
            if let Some(th) = &thermal {
                let tol = (0.05 * th[i]).max(3.0 * avg.standard_error[i]);
                entry["bose_einstein"] = q(th[i], "quanta");
                entry["within_tolerance"] = json!((avg.mean[i] - th[i]).abs() <= tol);
            }
            m.insert(l.clone(), entry);
        }
        v["time_average"] = json!({
            "start": q(avg.start, "s"),
            "end": q(avg.end, "s"),
            "batches": q(avg.batches as f64, "1"),
            "modes": Value::Object(m),
        });
    }
    Ok(v)
}

fn write_events(out: &OutputDir, traj: &Trajectory, meta: &[String]) -> Result<(), CliError> {
    let rows = traj.events.iter().map(|e| {
        let (kind, index) = match e.kind {
            EventKind::Absorption { channel } => ("absorption", channel),
            EventKind::Spontaneous { channel } => ("spontaneous", channel),
            EventKind::PhotonStimulated { channel } => ("photon_stimulated", channel),
            EventKind::AtomStimulated { channel } => ("atom_stimulated", channel),
            EventKind::ReservoirBirth { mode } => ("reservoir_birth", mode),
            EventKind::ReservoirDeath { mode } => ("reservoir_death", mode),
        };
        vec![fmt_num(e.time), kind.to_string(), index.to_string()]
    });
    out.write_csv(
        "ssa_events.csv",
        meta,
        &["time_s".into(), "kind".into(), "index".into()],
        rows,
    )?;
    Ok(())
}

pub fn simulate(
    config: &RunConfig,
    out: &OutputDir,
    seed_override: Option<u64>,
) -> Result<Value, CliError> {
    let ctx = Context::new(config)?;
    let sim = require(&config.simulation, "simulation")?;
    if config.network.is_none() && config.atom_laser.is_none() {
        return Err(CliError::config(
            "network",
            "simulate needs `network` or `atom_laser`",
        ));
    }
    let hash = config.hash();
    let mut seed_used = None;
    let mut summary = Map::new();

    if let Some(net_cfg) = &config.network {
        let (network, initial) = ctx.network(net_cfg)?;
        let labels = network.labels();
        if matches!(sim.method, Method::Ode | Method::Both) {
            let ode = require(&sim.ode, "simulation.ode")?;
            let cfg = OdeConfig::new(ode.dt_s, sim.t_end_s, sim.sample_interval_s);
            let y0: Vec<f64> = initial.iter().map(|&n| n as f64).collect();
            let traj = run_ode(&network, &y0, &cfg)
                .map_err(|e| CliError::from_core("simulation.ode", e))?;
            out.write_csv(
                "ode.csv",
                &metadata(&network, &hash, None),
                &header(&labels),
                trajectory_rows(&traj),
            )?;
            summary.insert(
                "ode".into(),
                json!({
                    "samples": q(traj.times.len() as f64, "1"),
                    "clamp_events": q(traj.clamps.len() as f64, "1"),
                    "conservation_drift": q(traj.conservation_drift, "1"),
                    "final_state": occupations(&labels, traj.samples.last().expect("t = 0 sample"), "quanta"),
                }),
            );
        }
        if matches!(sim.method, Method::Ssa | Method::Both) {
            let (cfg, seed, members, record) = ssa_config(sim)?;
            let seed = seed_override.unwrap_or(seed);
            seed_used = Some(seed);
            let meta = metadata(&network, &hash, Some(seed));
            let core = |e| CliError::from_core("simulation.ssa", e);
            if members == 1 {
                let traj = run_ssa(&network, &initial, seed, &cfg).map_err(core)?;
                out.write_csv("ssa.csv", &meta, &header(&labels), trajectory_rows(&traj))?;
                if record {
                    write_events(out, &traj, &meta)?;
                }
                summary.insert("ssa".into(), ssa_summary(&network, &traj, &ctx)?);
            } else {
                let ens =
                    run_ssa_ensemble(&network, &initial, seed, members, &cfg).map_err(core)?;
                let mut head = vec!["time_s".to_string()];
                for l in &labels {
                    head.push(format!("{l}_mean"));
                    head.push(format!("{l}_se"));
                }
                let rows = ens.times.iter().enumerate().map(|(i, t)| {
                    let mut row = vec![fmt_num(*t)];
                    for m in 0..labels.len() {
                        row.push(fmt_num(ens.mean[i][m]));
                        row.push(fmt_num(ens.standard_error[i][m]));
                    }
                    row
                });
                out.write_csv("ssa_mean.csv", &meta, &head, rows)?;
                summary.insert(
                    "ssa".into(),
                    json!({
                        "trajectories": q(members as f64, "1"),
                        "events": q(ens.total_events as f64, "1"),
                        "extinct_trajectories": q(ens.extinct_members as f64, "1"),
                        "final_mean": occupations(&labels, ens.mean.last().expect("t = 0 sample"), "quanta"),
                    }),
                );
            }
        }
    }

    if let Some(al) = &config.atom_laser {
        let rates = ctx.rates(&al.rates, "atom_laser.rates")?;
        let network = atom_laser_network(
            ctx.constants,
            al.excited_energy.joules(),
            al.ground_energy.joules(),
            al.ground_modes,
            rates,
        )
        .map_err(|e| CliError::from_core("atom_laser", e))?;
        if al.seed_mode >= al.ground_modes {
            return Err(CliError::config(
                "atom_laser.seed_mode",
                "must index one of the ground modes",
            ));
        }
        let (cfg, seed, members, _) = ssa_config(sim)?;
        let seed = seed_override.unwrap_or(seed);
        seed_used = Some(seed);
        let mut initial = vec![0; network.mode_count()];
        initial[0] = al.excited_population;
        let seed_mode = 1 + al.seed_mode;
        let core = |e| CliError::from_core("atom_laser", e);
        let (traj, report) = scenario_atom_laser(
            &network,
            &initial,
            seed_mode,
            al.seed_population,
            seed,
            &cfg,
        )
        .map_err(core)?;
        let labels = network.labels();
        out.write_csv(
            "atom_laser.csv",
            &metadata(&network, &hash, Some(seed)),
            &header(&labels),
            trajectory_rows(&traj),
        )?;
        let mut v = json!({
            "seed_mode": labels[seed_mode],
            "seed_population": q(report.seed_population as f64, "quanta"),
            "decays_per_ground_mode": report.peer_modes.iter().zip(&report.decays)
                .map(|(&m, &d)| (labels[m].clone(), q(d as f64, "1"))).collect::<Map<_, _>>(),
            "seeded_fraction": q(report.seeded_fraction, "1"),
            "uniform_baseline": q(report.uniform_baseline, "1"),
            "predicted_initial_fraction": q(report.predicted_initial_fraction, "1"),
            "initial_forgotten_propensity": q(report.initial_forgotten_propensity, "1/s"),
            "seed_dominates": report.seed_dominates,
        });
        if members > 1 {
            // Spread of the seeded fraction over independent runs.
            let start = {
                let mut s = initial.clone();
                s[seed_mode] = al.seed_population;
                s
            };
            let fractions = map_ensemble(&network, &start, seed, members, &cfg, |t| {
                let tally = t.tally.expect("stochastic run");
                let total: u64 = tally.channels.iter().map(|c| c.decays()).sum();
                let seeded = tally.channels[al.seed_mode].decays();
                if total > 0 {
                    seeded as f64 / total as f64
                } else {
                    f64::NAN
                }
            })
            .map_err(core)?;
            let valid: Vec<f64> = fractions.into_iter().filter(|f| f.is_finite()).collect();
            let n = valid.len() as f64;
            let mean = valid.iter().sum::<f64>() / n;
            let var = valid.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
            v["ensemble_seeded_fraction"] = json!({
                "trajectories": q(n, "1"),
                "mean": q(mean, "1"),
                "standard_error": q((var / n).sqrt(), "1"),
            });
        }
        summary.insert("atom_laser".into(), v);
    }

    summary.insert(
        "provenance".into(),
        provenance("simulate", &hash, seed_used),
    );
    let summary = Value::Object(summary);
    out.write_json("simulate.json", &summary)?;
    Ok(summary)
}

pub fn modes(config: &RunConfig, out: &OutputDir) -> Result<Value, CliError> {
    let ctx = Context::new(config)?;
    let m = require(&config.modes, "modes")?;
    let c = &ctx.constants;
    let cavity = ctx.cavity()?;
    let volume = cavity.volume();
    let mut rows = Vec::new();
    for (i, band) in m.bands.iter().enumerate() {
        let path = format!("modes.bands[{i}]");
        let species = ctx.species(&band.species, &format!("{path}.species"))?;
        let d = species.degeneracy as f64;
        let kinetic = band.center_kinetic.joules();
        let count =
            resonance_count_in_band_kinetic(c, &species, kinetic, band.width_rad_per_s, volume)
                .map_err(|e| CliError::from_core(&path, e))?
                * d;
        if count == 0.0 {
            continue;
        }
        let half = 0.5 * c.hbar * band.width_rad_per_s;
        let at = |k: f64| {
            species
                .at_kinetic(k)
                .map_err(|e| CliError::from_core(&path, e))
        };
        let (lo, mid, hi) = (at(kinetic - half)?, at(kinetic)?, at(kinetic + half)?);
        let lattice = if band.lattice_check {
            let below = continuum_count_below(c, &species, &cavity, hi.nu(c));
            if below > MAX_LATTICE_CHECK {
                return Err(CliError::Runtime(format!(
                    "{path}: lattice check would scan ~{below:e} modes (limit {MAX_LATTICE_CHECK:e})"
                )));
            }
            fmt_num(lattice_count_in_band(c, &cavity, lo.nu(c), hi.nu(c)) as f64 * d)
        } else {
            String::new()
        };
        rows.push(vec![
            species.name.clone(),
            species.degeneracy.to_string(),
            fmt_num(kinetic),
            fmt_num(mid.nu(c)),
            fmt_num(band.width_rad_per_s),
            fmt_num(volume),
            fmt_num(count),
            lattice,
        ]);
    }
    let head: Vec<String> = [
        "species",
        "degeneracy",
        "center_kinetic_j",
        "center_nu_hz",
        "width_rad_per_s",
        "volume_m3",
        "continuum_count",
        "lattice_count",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let hash = config.hash();
    let band_rows = rows.len();
    out.write_csv("modes.csv", &[format!("config_sha256={hash}")], &head, rows)?;

    let mut summary = json!({
        "provenance": provenance("modes", &hash, None),
        "bands_written": q(band_rows as f64, "1"),
        "volume": q(volume, "m^3"),
    });
    if let Some(p) = &m.pair {
        let triple = ctx.triple()?;
        let pc = pair_count_in_band(
            c,
            &triple,
            ctx.excited_kinetic(),
            triple.transition_energy / c.hbar,
            p.width_rad_per_s,
            volume,
        )
        .map_err(|e| CliError::from_core("modes.pair", e))?;
        summary["pair"] = json!({
            "boson_count": q(pc.boson, "1"),
            "ground_count": q(pc.ground, "1"),
            "pairs": q(pc.pairs, "1"),
            "ground_to_boson_ratio": q(pc.ground / pc.boson, "1"),
        });
    }
    if let Some(e) = &m.enumerate {
        let species = ctx.species(&e.species, "modes.enumerate.species")?;
        let list = enumerate_modes(c, &species, &cavity, e.nu_max_hz)
            .map_err(|err| CliError::from_core("modes.enumerate", err))?;
        let rows = list.iter().map(|mode| {
            let [nx, ny, nz] = mode.lattice_index.unwrap_or([0, 0, 0]);
            vec![
                nx.to_string(),
                ny.to_string(),
                nz.to_string(),
                mode.degeneracy_slot.to_string(),
                fmt_num(mode.nu),
                fmt_num(mode.kinetic),
            ]
        });
        let head: Vec<String> = ["nx", "ny", "nz", "slot", "nu_hz", "kinetic_j"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        out.write_csv(
            "mode_list.csv",
            &[
                format!("config_sha256={hash}"),
                format!("species={}", species.name),
            ],
            &head,
            rows,
        )?;
        summary["enumerated"] = json!({
            "species": species.name,
            "modes": q(list.len() as f64, "1"),
            "limit": q(MAX_ENUMERATED_MODES as f64, "1"),
        });
    }
    out.write_json("modes.json", &summary)?;
    Ok(summary)
}
