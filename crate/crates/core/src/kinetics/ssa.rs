use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::kinetics::network::ReactionNetwork;
use crate::kinetics::trajectory::{
    sample_times, BatchAverager, EventKind, EventRecord, EventTally, Trajectory,
};

/// Time-average window `[start, t_end]` split into `batches` equal batches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragingWindow {
    pub start: f64,
    pub batches: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsaConfig {
    pub t_end: f64,
    pub sample_interval: f64,
    pub record_events: bool,
    pub averaging: Option<AveragingWindow>,
    pub max_events: Option<u64>,
}

impl SsaConfig {
    pub fn new(t_end: f64, sample_interval: f64) -> Self {
        Self {
            t_end,
            sample_interval,
            record_events: false,
            averaging: None,
            max_events: None,
        }
    }

    pub fn with_averaging(mut self, start: f64, batches: usize) -> Self {
        self.averaging = Some(AveragingWindow { start, batches });
        self
    }

    fn validate(&self) -> Result<()> {
        require_positive("t_end", self.t_end)?;
        require_positive("sample_interval", self.sample_interval)?;
        if let Some(w) = self.averaging {
            if !(w.start >= 0.0 && w.start < self.t_end) {
                return Err(invalid("averaging.start", "must lie in [0, t_end)"));
            }
            if w.batches < 2 {
                return Err(invalid("averaging.batches", "need at least 2 batches"));
            }
        }
        Ok(())
    }
}

fn check_state(network: &ReactionNetwork, state: &[u64]) -> Result<()> {
    if state.len() != network.mode_count() {
        return Err(Error::InvalidNetwork(format!(
            "initial state has {} entries for {} modes",
            state.len(),
            network.mode_count()
        )));
    }
    if state.iter().any(|&n| n > 1 << 53) {
        return Err(invalid(
            "initial",
            "occupations above 2^53 are not exactly representable",
        ));
    }
    Ok(())
}

/// One exact stochastic trajectory on RNG stream 0 of `seed`.
pub fn run_ssa(
    network: &ReactionNetwork,
    initial: &[u64],
    seed: u64,
    cfg: &SsaConfig,
) -> Result<Trajectory> {
    run_ssa_stream(network, initial, seed, 0, cfg)
}

/// Gillespie direct method. Event order within one draw: per channel
/// (absorption, spontaneous, photon-stimulated, atom-stimulated) in channel
/// order, then per mode (reservoir birth, reservoir death).
pub fn run_ssa_stream(
    network: &ReactionNetwork,
    initial: &[u64],
    seed: u64,
    stream: u64,
    cfg: &SsaConfig,
) -> Result<Trajectory> {
    check_state(network, initial)?;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);

    let modes = network.mode_count();
    let channels = &network.channels;
    let reservoir_on = network.reservoir.is_some();
    let n_entries = 4 * channels.len() + if reservoir_on { 2 * modes } else { 0 };

    let mut state: Vec<f64> = initial.iter().map(|&n| n as f64).collect();
    let totals0 = network.conserved_totals(&state);
    let grid = sample_times(cfg.t_end, cfg.sample_interval);
    let mut samples = Vec::with_capacity(grid.len());
    let mut tally = EventTally::new(channels.len(), modes);
    let mut events = Vec::new();
    let mut averager = cfg
        .averaging
        .map(|w| BatchAverager::new(w.start, cfg.t_end, w.batches, modes));
    let mut props = vec![0.0; n_entries];
    let mut t = 0.0;
    let mut count: u64 = 0;
    let mut extinct_at = None;
    let mut hit_event_cap = false;

    loop {
        let mut total = 0.0;
        for (j, ch) in channels.iter().enumerate() {
            let p = ch.propensities(&state);
            props[4 * j] = p.absorption;
            props[4 * j + 1] = p.spontaneous;
            props[4 * j + 2] = p.photon_stimulated;
            props[4 * j + 3] = p.atom_stimulated;
            total += p.absorption + p.decay();
        }
        if reservoir_on {
            let base = 4 * channels.len();
            for (i, &n) in state.iter().enumerate() {
                let (birth, death) = network.reservoir_rates(i, n);
                props[base + 2 * i] = birth;
                props[base + 2 * i + 1] = death;
                total += birth + death;
            }
        }
        if total <= 0.0 {
            extinct_at = Some(t);
            break;
        }
        if cfg.max_events.is_some_and(|cap| count >= cap) {
            hit_event_cap = true;
            break;
        }

        let u: f64 = 1.0 - rng.gen::<f64>();
        let t_next = t - u.ln() / total;
        if let Some(avg) = averager.as_mut() {
            avg.add(t, t_next.min(cfg.t_end), &state);
        }
        while samples.len() < grid.len() && grid[samples.len()] < t_next {
            samples.push(state.clone());
        }
        if t_next > cfg.t_end {
            break;
        }

        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (e, &p) in props.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                chosen = Some(e);
                if target < acc {
                    break;
                }
            }
        }
        // Rounding can leave `target` just past the running sum; the last
        // positive entry is then the correct pick.
        let e = chosen.expect("positive total propensity has a positive entry");

        let kind = if e < 4 * channels.len() {
            let j = e / 4;
            let ch = &channels[j];
            let t_ch = &mut tally.channels[j];
            if e % 4 == 0 {
                state[ch.excited] += 1.0;
                state[ch.ground] -= 1.0;
                state[ch.boson] -= 1.0;
                t_ch.absorption += 1;
                EventKind::Absorption { channel: j }
            } else {
                let decay = props[4 * j + 1] + props[4 * j + 2] + props[4 * j + 3];
                for c in 0..3 {
                    t_ch.expected_causes[c] += props[4 * j + 1 + c] / decay;
                }
                state[ch.excited] -= 1.0;
                state[ch.ground] += 1.0;
                state[ch.boson] += 1.0;
                match e % 4 {
                    1 => {
                        t_ch.spontaneous += 1;
                        EventKind::Spontaneous { channel: j }
                    }
                    2 => {
                        t_ch.photon_stimulated += 1;
                        EventKind::PhotonStimulated { channel: j }
                    }
                    _ => {
                        t_ch.atom_stimulated += 1;
                        EventKind::AtomStimulated { channel: j }
                    }
                }
            }
        } else {
            let r = e - 4 * channels.len();
            let mode = r / 2;
            if r.is_multiple_of(2) {
                state[mode] += 1.0;
                tally.reservoir_births[mode] += 1;
                EventKind::ReservoirBirth { mode }
            } else {
                state[mode] -= 1.0;
                tally.reservoir_deaths[mode] += 1;
                EventKind::ReservoirDeath { mode }
            }
        };
        debug_assert!(state.iter().all(|&n| n >= 0.0));
        if !reservoir_on {
            assert_eq!(
                network.conserved_totals(&state),
                totals0,
                "channel event broke quantum-number conservation"
            );
        }
        if cfg.record_events {
            events.push(EventRecord { time: t_next, kind });
        }
        t = t_next;
        count += 1;
    }

    if extinct_at.is_some() {
        // Nothing can happen any more: the frozen state holds to t_end.
        if let Some(avg) = averager.as_mut() {
            avg.add(t, cfg.t_end, &state);
        }
        while samples.len() < grid.len() {
            samples.push(state.clone());
        }
    }
    let times = grid[..samples.len()].to_vec();
    let totals = network.conserved_totals(&state);
    let drift = relative_change(totals0.0, totals.0).max(relative_change(totals0.1, totals.1));

    Ok(Trajectory {
        mode_labels: network.labels(),
        times,
        samples,
        seed: Some(seed),
        stream,
        config_hash: None,
        event_count: count,
        tally: Some(tally),
        events,
        clamps: Vec::new(),
        conservation_drift: drift,
        extinct_at,
        hit_event_cap,
        time_average: if hit_event_cap {
            None
        } else {
            averager.map(BatchAverager::finish)
        },
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

/// Runs `members` independent trajectories (stream `i` of `seed` for member
/// `i`) across threads and maps each through `f`; results are in member order.
pub fn map_ensemble<T, F>(
    network: &ReactionNetwork,
    initial: &[u64],
    seed: u64,
    members: usize,
    cfg: &SsaConfig,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Trajectory) -> T + Sync,
{
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(members.max(1));
    let f = &f;
    let mut indexed: Vec<(usize, Result<T>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                scope.spawn(move || {
                    (w..members)
                        .step_by(threads)
                        .map(|i| {
                            (
                                i,
                                run_ssa_stream(network, initial, seed, i as u64, cfg).map(f),
                            )
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("ensemble worker panicked"))
            .collect()
    });
    indexed.sort_by_key(|(i, _)| *i);
    indexed.into_iter().map(|(_, r)| r).collect()
}

/// Ensemble mean and standard error of the mean at each sample time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub mode_labels: Vec<String>,
    pub seed: u64,
    pub members: usize,
    pub times: Vec<f64>,
    pub mean: Vec<Vec<f64>>,
    pub standard_error: Vec<Vec<f64>>,
    pub extinct_members: usize,
    pub total_events: u64,
}

pub fn run_ssa_ensemble(
    network: &ReactionNetwork,
    initial: &[u64],
    seed: u64,
    members: usize,
    cfg: &SsaConfig,
) -> Result<EnsembleSummary> {
    if members < 2 {
        return Err(invalid("members", "an ensemble needs at least 2 members"));
    }
    let runs = map_ensemble(network, initial, seed, members, cfg, |t| {
        (t.samples, t.extinct_at.is_some(), t.event_count)
    })?;
    let times = sample_times(cfg.t_end, cfg.sample_interval);
    let modes = network.mode_count();
    let mut sum = vec![vec![0.0; modes]; times.len()];
    let mut sum_sq = sum.clone();
    let mut extinct = 0;
    let mut events = 0;
    for (samples, ext, n) in &runs {
        if samples.len() != times.len() {
            return Err(invalid(
                "max_events",
                "an ensemble member stopped before t_end",
            ));
        }
        for (row, (s, s2)) in samples.iter().zip(sum.iter_mut().zip(sum_sq.iter_mut())) {
            for m in 0..modes {
                s[m] += row[m];
                s2[m] += row[m] * row[m];
            }
        }
        extinct += usize::from(*ext);
        events += n;
    }
    let m = members as f64;
    let mean: Vec<Vec<f64>> = sum
        .iter()
        .map(|r| r.iter().map(|x| x / m).collect())
        .collect();
    let standard_error = sum_sq
        .iter()
        .zip(&mean)
        .map(|(r2, mu)| {
            r2.iter()
                .zip(mu)
                .map(|(x2, mu)| ((x2 / m - mu * mu).max(0.0) * m / (m - 1.0) / m).sqrt())
                .collect()
        })
        .collect();
    Ok(EnsembleSummary {
        mode_labels: network.labels(),
        seed,
        members,
        times,
        mean,
        standard_error,
        extinct_members: extinct,
        total_events: events,
    })
}
