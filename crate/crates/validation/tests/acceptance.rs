//! Acceptance criteria 1–10. Runs as a plain binary so every criterion
//! prints its verdict; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use cavity_kinetics::interaction::{
    broadband_reconstruction, einstein_a, einstein_b_abs, einstein_b_em, thermal_stimulation_ratio,
    DecayChannel, LineShape, RateSet,
};
use cavity_kinetics::kinetics::{
    atom_laser_network, equilibrium_residual, map_ensemble, run_ode, run_ssa, run_ssa_ensemble,
    scenario_atom_laser, ModeRole, OdeConfig, ReactionNetwork, ReservoirCoupling, SsaConfig,
};
use cavity_kinetics::physics::{
    pair_count_in_band, PhysicalConstants, Species, SpeciesTriple, ELECTRON_VOLT,
};
use cavity_kinetics::statistics::{occupancy_temperature, ThermalEnvironment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C: PhysicalConstants = PhysicalConstants::CODATA;

// Oracle constants (exact SI values), kept separate from the library's.
const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const HBAR: f64 = 1.054_571_817e-34;
const K_B: f64 = 1.380_649e-23;
const EV: f64 = 1.602_176_634e-19;

const RESIDUAL_TOL: f64 = 1e-12;
const EINSTEIN_TOL: f64 = 1e-12;
const BROADBAND_TOL: f64 = 1e-3;
const RATIO_LOG10_RANGE: (f64, f64) = (4.0, 4.7);
const LATTICE_TOL: f64 = 0.05;
const FORGOTTEN_BOUND: f64 = 1e-3;
const SINGLE_ATOM_RANGE: (f64, f64) = (1.5e13, 1.9e13);
const OCCUPATION_REL_TOL: f64 = 0.05;
const SIGMAS: f64 = 3.0;
/// χ² upper 1% point with 2 degrees of freedom, `−2 ln 0.01`.
const CHI2_2DOF_1PCT: f64 = 9.210_340_371_976_184;
const ORDER_RATIO_RANGE: (f64, f64) = (15.0, 17.0);
const SEEDED_FRACTION_MIN: f64 = 0.9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn ev(x: f64) -> f64 {
    x * ELECTRON_VOLT
}

fn photon_channel(ground_ev: f64, transition_ev: f64, d_a: u32, d_excited: u32) -> DecayChannel {
    let ground = Species::new("a", ev(ground_ev), d_a).unwrap();
    let triple =
        SpeciesTriple::new(ground, Species::photon(), ev(transition_ev), d_excited).unwrap();
    let center = triple.transition_energy / C.hbar;
    let fwhm = 1e-6 * center;
    let line = LineShape::new(center, fwhm, 1e-3 * fwhm, 400.0 * fwhm).unwrap();
    DecayChannel::new(C, triple, 2.0 / fwhm, line, 1e-6).unwrap()
}

/// Detailed balance on one channel with equal micro-rates and thermal
/// occupations at random energies and temperatures.
fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let t = 10f64.powf(rng.gen_range(0.0..5.0));
        let kt = K_B * t;
        let x_a = 10f64.powf(rng.gen_range(-3.0..1.7));
        let x_phi = 10f64.powf(rng.gen_range(-3.0..1.7));
        let rate = 10f64.powf(rng.gen_range(-2.0..2.0));
        let (e_a, e_phi) = (x_a * kt, x_phi * kt);
        let mut b = ReactionNetwork::builder(C);
        let m = b.add_mode("aphi", ModeRole::Excited, e_a + e_phi);
        let g = b.add_mode("a", ModeRole::Ground, e_a);
        let k = b.add_mode("phi", ModeRole::Boson, e_phi);
        b.add_channel(m, g, k, RateSet::uniform(rate));
        let net = b.build().unwrap();
        let occ = net
            .thermal_occupations(&ThermalEnvironment::new(t).unwrap())
            .unwrap();
        let ch = &net.channels[0];
        let absorption = ch.propensities(&occ).absorption;
        worst = worst.max((equilibrium_residual(ch, &occ) / absorption).abs());
    }
    Outcome {
        pass: worst <= RESIDUAL_TOL,
        detail: format!("max |residual|/L = {worst:.3e} over 200 draws (tol {RESIDUAL_TOL:e})"),
    }
}

fn criterion_2() -> Outcome {
    let cases = [
        (0.5, 2.0, 1, 1),
        (0.5, 2.0, 3, 5),
        (1e9, 20.0, 1, 2),
        (4e9, 1.5, 2, 1),
        (1e6, 100.0, 4, 4),
    ];
    let mut worst: f64 = 0.0;
    for (ground, transition, d_a, d_x) in cases {
        let ch = photon_channel(ground, transition, d_a, d_x);
        let a = einstein_a(&ch);
        let b_em = einstein_b_em(&ch).unwrap();
        let b_abs = einstein_b_abs(&ch).unwrap();
        let hbar_omega = transition * EV;
        let nu = hbar_omega / (2.0 * PI * HBAR);
        let expected = 8.0 * PI * nu * nu * hbar_omega / SPEED_OF_LIGHT.powi(3);
        worst = worst.max(rel(a / b_em, expected));
        worst = worst.max(rel(b_abs / b_em, d_x as f64 / d_a as f64));
        worst = worst.max(rel(a, 1.0 / ch.t_sp));
    }
    Outcome {
        pass: worst <= EINSTEIN_TOL,
        detail: format!(
            "max relative deviation {worst:.3e} over {} triples",
            cases.len()
        ),
    }
}

fn criterion_3() -> Outcome {
    let ch = photon_channel(1e9, 20.0, 1, 1)
        .with_excited_kinetic(ev(0.025))
        .unwrap();
    let env = ThermalEnvironment::new(1e4).unwrap();
    let errors = |channel: &DecayChannel| {
        let r = broadband_reconstruction(channel, &env).unwrap();
        [
            r.b_em.relative_error,
            r.b_abs.relative_error,
            r.c.relative_error,
        ]
    };
    let coarse = errors(&ch);
    let mut halved = ch.clone();
    halved.line = ch
        .line
        .with_grid_spacing(0.5 * ch.line.grid_spacing)
        .unwrap();
    let fine = errors(&halved);
    let within = coarse.iter().chain(&fine).all(|&e| e <= BROADBAND_TOL);
    let halves = coarse.iter().zip(&fine).all(|(c, f)| *f <= 0.5 * c);
    Outcome {
        pass: within && halves,
        detail: format!(
            "rel. errors (B_em, B_abs, C) at δω = {:.3e} and δω/2 = {:.3e}; ≤ {BROADBAND_TOL:e}: {within}; halving halves: {halves}",
            coarse.iter().cloned().fold(0.0, f64::max),
            fine.iter().cloned().fold(0.0, f64::max),
        ),
    }
}

/// Lattice points `n ∈ ℕ³₊` with `|n| ≤ radius`, by explicit column scan.
fn lattice_points_within(radius: f64) -> u64 {
    let r2 = radius * radius;
    let top = radius.floor() as u64;
    let mut count = 0;
    for nx in 1..=top {
        let rx = r2 - (nx * nx) as f64;
        if rx < 2.0 {
            break;
        }
        for ny in 1..=top {
            let rem = rx - (ny * ny) as f64;
            if rem < 1.0 {
                break;
            }
            let mut nz = rem.sqrt().floor() as u64;
            while ((nz + 1) * (nz + 1)) as f64 <= rem {
                nz += 1;
            }
            while nz > 0 && (nz * nz) as f64 > rem {
                nz -= 1;
            }
            count += nz;
        }
    }
    count
}

/// Lattice modes per unit volume per unit `ω` in a cube tuned so the band
/// `[ν_low, ν_high]` sits near lattice radius 2000.
fn lattice_density(nu_low: f64, nu_high: f64, d_omega: f64) -> f64 {
    let edge = 2000.0 * SPEED_OF_LIGHT / (2.0 * nu_high);
    let radius = |nu: f64| 2.0 * nu * edge / SPEED_OF_LIGHT;
    let count = lattice_points_within(radius(nu_high)) - lattice_points_within(radius(nu_low));
    count as f64 / (edge.powi(3) * d_omega)
}

fn criterion_4() -> Outcome {
    let kinetic = 1e-13 * EV;
    let transition = 20.0 * EV;
    let ground = Species::new("atom", 1e9 * EV, 1).unwrap();
    let triple = SpeciesTriple::new(ground.clone(), Species::photon(), transition, 1).unwrap();
    // Emission at the line center leaves the ground atom with the excited
    // atom's kinetic energy E_k.
    let pc = pair_count_in_band(&C, &triple, kinetic, transition / C.hbar, 1.0, 1e-6).unwrap();
    let ratio = pc.ground / pc.boson;

    // ω_aν_a/(ω_φν_φ) with pc_a = √(E_k(E_k + 2Mc²)).
    let rest = 1e9 * EV;
    let p_a = (kinetic * (kinetic + 2.0 * rest)).sqrt();
    let exact = (rest + kinetic) * p_a / transition.powi(2);

    // Independent lattice counts: ±2% in E_k for the atom, ±1% in ν for the photon.
    let nu_atom = |k: f64| (k * (k + 2.0 * rest)).sqrt() / (2.0 * PI * HBAR);
    let atom_density = lattice_density(
        nu_atom(0.98 * kinetic),
        nu_atom(1.02 * kinetic),
        0.04 * kinetic / HBAR,
    );
    let nu_phi = transition / (2.0 * PI * HBAR);
    let photon_density = lattice_density(0.99 * nu_phi, 1.01 * nu_phi, 2.0 * PI * 0.02 * nu_phi);
    let lattice = atom_density / photon_density;

    let log10 = ratio.log10();
    let in_range = (RATIO_LOG10_RANGE.0..=RATIO_LOG10_RANGE.1).contains(&log10);
    let exact_ok = rel(ratio, exact) <= 1e-9;
    let lattice_ok = rel(lattice, ratio) <= LATTICE_TOL;
    Outcome {
        pass: in_range && exact_ok && lattice_ok,
        detail: format!(
            "ratio {ratio:.6e} (log10 {log10:.4}); closed form {exact:.6e}; lattice {lattice:.6e} ({:.2}% off)",
            100.0 * rel(lattice, ratio)
        ),
    }
}

fn criterion_5() -> Outcome {
    let masses = [1e6, 1e7, 1e8, 1e9, 1e10, 1e11];
    let transitions = [1.0, 3.0, 10.0, 30.0, 100.0];
    let temperatures = [1.0, 10.0, 100.0, 1e3, 1e4];
    let mut worst = f64::NEG_INFINITY;
    let mut points = 0;
    for &m in &masses {
        for &w in &transitions {
            for &t in &temperatures {
                // Excited atoms carry their mean thermal kinetic energy.
                let ch = photon_channel(m, w, 1, 1)
                    .with_excited_kinetic(1.5 * K_B * t)
                    .unwrap();
                let env = ThermalEnvironment::new(t).unwrap();
                let r = thermal_stimulation_ratio(&ch, &env).unwrap();
                worst = worst.max(r.ln_forgotten_to_stimulated);
                points += 1;
            }
        }
    }
    Outcome {
        pass: worst < FORGOTTEN_BOUND.ln(),
        detail: format!(
            "max ln(W_f/W_em) = {worst:.4e} over {points} grid points (bound ln 1e-3 = {:.4})",
            FORGOTTEN_BOUND.ln()
        ),
    }
}

fn criterion_6() -> Outcome {
    let t = occupancy_temperature(&C, 1e9 * ELECTRON_VOLT / C.hbar, 1.0).unwrap();
    let oracle = 1e9 * EV / (K_B * 2f64.ln());
    let in_range = (SINGLE_ATOM_RANGE.0..=SINGLE_ATOM_RANGE.1).contains(&t);
    Outcome {
        pass: in_range && rel(t, oracle) <= 1e-12,
        detail: format!("T = {t:.6e} K (Mc²/(k_B ln 2) = {oracle:.6e} K)"),
    }
}

/// Ten channels over thirty distinct modes, coupled to a reservoir at k_BT = 1 eV
/// with the default κ = 10⁻² × micro-rate.
fn thirty_mode_network(env: ThermalEnvironment) -> ReactionNetwork {
    let mut b = ReactionNetwork::builder(C);
    for j in 0..10 {
        let g_e = ev(0.2 + 0.15 * j as f64);
        let k_e = ev(0.4 + 0.1 * j as f64);
        let m = b.add_mode(format!("aphi{j}"), ModeRole::Excited, g_e + k_e);
        let g = b.add_mode(format!("a{j}"), ModeRole::Ground, g_e);
        let k = b.add_mode(format!("phi{j}"), ModeRole::Boson, k_e);
        b.add_channel(m, g, k, RateSet::uniform(1.0));
    }
    b.reservoir(ReservoirCoupling {
        kappa: 1e-2,
        environment: env,
    });
    b.build().unwrap()
}

fn criterion_7() -> Outcome {
    let env = ThermalEnvironment::new(EV / K_B).unwrap();
    let net = thirty_mode_network(env);
    let cfg = SsaConfig::new(1e6, 1e4).with_averaging(1e3, 20);
    let traj = run_ssa(&net, &vec![0; net.mode_count()], 7, &cfg).unwrap();
    let avg = traj.time_average.as_ref().unwrap();

    let mut occupations_ok = true;
    let mut worst_sigma: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    for (i, m) in net.modes.iter().enumerate() {
        let n_be = 1.0 / (m.energy / EV).exp_m1();
        let dev = (avg.mean[i] - n_be).abs();
        let allowed = (OCCUPATION_REL_TOL * n_be).max(SIGMAS * avg.standard_error[i]);
        occupations_ok &= dev <= allowed;
        worst_sigma = worst_sigma.max(dev / avg.standard_error[i]);
        worst_rel = worst_rel.max(dev / n_be);
    }

    let tally = traj.tally.as_ref().unwrap();
    let mut observed = [0.0; 3];
    let mut expected = [0.0; 3];
    for ch in &tally.channels {
        for c in 0..3 {
            observed[c] += ch.observed_causes()[c] as f64;
            expected[c] += ch.expected_causes[c];
        }
    }
    let chi2: f64 = (0..3)
        .map(|c| (observed[c] - expected[c]).powi(2) / expected[c])
        .sum();
    let events_ok = traj.event_count >= 1_000_000;
    Outcome {
        pass: occupations_ok && chi2 < CHI2_2DOF_1PCT && events_ok,
        detail: format!(
            "{} events; 30 occupations within max(5%, 3 SE): {occupations_ok} (worst {worst_sigma:.2} SE, {:.1}%); cause χ² = {chi2:.3} (< {CHI2_2DOF_1PCT:.4})",
            traj.event_count,
            100.0 * worst_rel
        ),
    }
}

fn decay_network() -> ReactionNetwork {
    let mut b = ReactionNetwork::builder(C);
    let m = b.add_mode("aphi", ModeRole::Excited, ev(2.5));
    let g = b.add_mode("a", ModeRole::Ground, ev(0.5));
    let k = b.add_mode("phi", ModeRole::Boson, ev(2.0));
    b.add_channel(m, g, k, RateSet::spontaneous_only(1.0));
    b.build().unwrap()
}

fn criterion_8() -> Outcome {
    let net = decay_network();
    let n0 = 100.0;
    let cfg = SsaConfig::new(5.0, 0.5);
    let ens = run_ssa_ensemble(&net, &[100, 0, 0], 2026, 10_000, &cfg).unwrap();
    let mut ssa_ok = true;
    let mut worst: f64 = 0.0;
    for (k, &t) in ens.times.iter().enumerate() {
        let exact = n0 * (-t).exp();
        let dev = (ens.mean[k][0] - exact).abs();
        let se = ens.standard_error[k][0];
        if se == 0.0 {
            ssa_ok &= dev == 0.0;
        } else {
            ssa_ok &= dev <= SIGMAS * se;
            worst = worst.max(dev / se);
        }
    }

    let ode_error = |dt: f64| {
        let traj = run_ode(&net, &[n0, 0.0, 0.0], &OdeConfig::new(dt, 5.0, 0.5)).unwrap();
        traj.times
            .iter()
            .zip(&traj.samples)
            .map(|(t, row)| (row[0] - n0 * (-t).exp()).abs())
            .fold(0.0, f64::max)
    };
    let ratio = ode_error(0.05) / ode_error(0.025);
    let order_ok = (ORDER_RATIO_RANGE.0..=ORDER_RATIO_RANGE.1).contains(&ratio);
    Outcome {
        pass: ssa_ok && order_ok,
        detail: format!(
            "SSA 10⁴-member mean within 3 SE at all samples: {ssa_ok} (worst {worst:.2} SE); RK4 error ratio on dt halving {ratio:.3}"
        ),
    }
}

fn decay_fractions(tally: &cavity_kinetics::kinetics::EventTally) -> Vec<f64> {
    let decays: Vec<f64> = tally.channels.iter().map(|c| c.decays() as f64).collect();
    let total: f64 = decays.iter().sum();
    decays.iter().map(|d| d / total).collect()
}

fn criterion_9() -> Outcome {
    let excited = ev(3.0);
    let ground = ev(1.0);
    let rates = RateSet::uniform(1.0);
    let cfg = SsaConfig::new(0.02, 0.002);

    // 10⁴ seed quanta against 200 excited atoms and empty photon modes:
    // γ n_seed = 10⁴ ≫ 10 (α + β_em n_φ). Decays are counted over the
    // early window in which the t = 0 propensities still describe the state.
    let d_a = 4;
    let net = atom_laser_network(C, excited, ground, d_a, rates).unwrap();
    let mut initial = vec![0; net.mode_count()];
    initial[0] = 200;
    let early = SsaConfig::new(2e-3, 2e-4);
    let (_, report) = scenario_atom_laser(&net, &initial, 1, 10_000, 9, &early).unwrap();
    let mut seeded = initial.clone();
    seeded[1] = 10_000;
    let fractions = map_ensemble(&net, &seeded, 9, 200, &early, |t| {
        decay_fractions(t.tally.as_ref().unwrap())[0]
    })
    .unwrap();
    let seeded_mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
    let threshold_ok = report.seed_dominates
        && report.seeded_fraction > SEEDED_FRACTION_MIN
        && seeded_mean > SEEDED_FRACTION_MIN;

    // Zero seed: every one of the d_a ground modes takes 1/d_a on average.
    let members = 1000;
    let runs = map_ensemble(&net, &initial, 10, members, &cfg, |t| {
        decay_fractions(t.tally.as_ref().unwrap())
    })
    .unwrap();
    let mut uniform_ok = true;
    let mut worst: f64 = 0.0;
    for i in 0..d_a {
        let xs: Vec<f64> = runs.iter().map(|f| f[i]).collect();
        let mean = xs.iter().sum::<f64>() / members as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (members - 1) as f64;
        let se = (var / members as f64).sqrt();
        let dev = (mean - 1.0 / d_a as f64).abs();
        uniform_ok &= dev <= SIGMAS * se;
        worst = worst.max(dev / se);
    }
    Outcome {
        pass: threshold_ok && uniform_ok,
        detail: format!(
            "seed 10⁴, d_a = 4: t = 0 share {:.4}, single run {:.4}, 200-member mean {seeded_mean:.4} (> {SEEDED_FRACTION_MIN}); zero seed uniform within 3 SE: {uniform_ok} (worst {worst:.2} SE)",
            report.predicted_initial_fraction,
            report.seeded_fraction
        ),
    }
}

fn run_cli(args: &[&str], out: &Path) -> bool {
    let mut argv: Vec<OsString> = vec!["cavity-kinetics".into()];
    argv.extend(args.iter().map(OsString::from));
    argv.push("--out".into());
    argv.push(out.into());
    cavity_kinetics_cli::run_args(argv).is_ok()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

fn criterion_10() -> Outcome {
    let configs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = tempfile::tempdir().unwrap();
    let ensemble = tmp.path().join("ensemble.json");
    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(configs.join("decay.json")).unwrap())
            .unwrap();
    cfg["simulation"]["ssa"]["trajectories"] = 16.into();
    cfg["simulation"]["ssa"]["record_events"] = false.into();
    std::fs::write(&ensemble, cfg.to_string()).unwrap();

    let reference = configs.join("reference.json");
    let runs: Vec<(&str, PathBuf)> = vec![
        ("coefficients", reference.clone()),
        ("equilibrium", reference.clone()),
        ("modes", reference),
        ("simulate", configs.join("decay.json")),
        ("simulate", configs.join("thermalization.json")),
        ("simulate", configs.join("atom_laser.json")),
        ("simulate", ensemble),
    ];
    let mut compared = 0;
    let mut identical = true;
    for (k, (cmd, path)) in runs.iter().enumerate() {
        let path = path.to_str().unwrap();
        let a = tmp.path().join(format!("{k}a"));
        let b = tmp.path().join(format!("{k}b"));
        if !(run_cli(&[cmd, "--config", path], &a) && run_cli(&[cmd, "--config", path], &b)) {
            return Outcome {
                pass: false,
                detail: format!("`{cmd} --config {path}` failed"),
            };
        }
        let (fa, fb) = (files(&a), files(&b));
        compared += fa.len();
        identical &= !fa.is_empty() && fa == fb;
    }
    Outcome {
        pass: identical,
        detail: format!(
            "{compared} output files over {} runs byte-identical: {identical}",
            runs.len()
        ),
    }
}

fn main() {
    let criteria: [(fn() -> Outcome, Duration); 10] = [
        (criterion_1, Duration::from_secs(1)),
        (criterion_2, Duration::from_secs(1)),
        (criterion_3, Duration::from_secs(10)),
        (criterion_4, Duration::from_secs(30)),
        (criterion_5, Duration::from_secs(1)),
        (criterion_6, Duration::from_secs(1)),
        (criterion_7, Duration::from_secs(120)),
        (criterion_8, Duration::from_secs(60)),
        (criterion_9, Duration::from_secs(60)),
        (criterion_10, Duration::from_secs(120)),
    ];
    let mut failed = Vec::new();
    for (i, (run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let pass = outcome.pass && elapsed <= *budget;
        println!(
            "criterion {:>2}: {}  [{:.2} s / {} s]  {}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            outcome.detail
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
