use serde::{Deserialize, Serialize};

/// Occupations of every network mode at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub time: f64,
    pub occupations: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Absorption { channel: usize },
    Spontaneous { channel: usize },
    PhotonStimulated { channel: usize },
    AtomStimulated { channel: usize },
    ReservoirBirth { mode: usize },
    ReservoirDeath { mode: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
}

/// Per-channel event counts of a stochastic run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelTally {
    pub absorption: u64,
    pub spontaneous: u64,
    pub photon_stimulated: u64,
    pub atom_stimulated: u64,
    /// Sum over decay events of the conditional probability of each cause
    /// (spontaneous, photon, atom) given that a decay happened in this channel.
    pub expected_causes: [f64; 3],
}

impl ChannelTally {
    pub fn decays(&self) -> u64 {
        self.spontaneous + self.photon_stimulated + self.atom_stimulated
    }

    pub fn observed_causes(&self) -> [u64; 3] {
        [
            self.spontaneous,
            self.photon_stimulated,
            self.atom_stimulated,
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventTally {
    pub channels: Vec<ChannelTally>,
    pub reservoir_births: Vec<u64>,
    pub reservoir_deaths: Vec<u64>,
}

impl EventTally {
    pub fn new(channels: usize, modes: usize) -> Self {
        Self {
            channels: vec![ChannelTally::default(); channels],
            reservoir_births: vec![0; modes],
            reservoir_deaths: vec![0; modes],
        }
    }
}

/// Occupation set to zero after a small negative integration excursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampEvent {
    pub time: f64,
    pub mode: usize,
    pub value: f64,
}

/// Time-weighted mean occupations with batch-means standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeAverage {
    pub start: f64,
    pub end: f64,
    pub batches: usize,
    pub mean: Vec<f64>,
    pub standard_error: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub mode_labels: Vec<String>,
    pub times: Vec<f64>,
    /// One row per sample time, one column per mode.
    pub samples: Vec<Vec<f64>>,
    pub seed: Option<u64>,
    /// RNG stream within the seed; ensembles use one stream per member.
    pub stream: u64,
    pub config_hash: Option<String>,
    pub event_count: u64,
    pub tally: Option<EventTally>,
    pub events: Vec<EventRecord>,
    pub clamps: Vec<ClampEvent>,
    /// Largest relative drift of the conserved totals `Σ n_aφ + Σ n_a` and
    /// `Σ n_aφ + Σ n_φ`; meaningful only without a reservoir.
    pub conservation_drift: f64,
    /// Time at which every propensity vanished, if that happened.
    pub extinct_at: Option<f64>,
    /// Whether the run stopped at the configured event cap.
    pub hit_event_cap: bool,
    pub time_average: Option<TimeAverage>,
}

impl Trajectory {
    pub fn column(&self, mode: usize) -> Vec<f64> {
        self.samples.iter().map(|row| row[mode]).collect()
    }

    pub fn final_state(&self) -> Option<SimState> {
        Some(SimState {
            time: *self.times.last()?,
            occupations: self.samples.last()?.clone(),
        })
    }
}

/// Sample times `0, Δ, 2Δ, …, ≤ t_end`.
pub(crate) fn sample_times(t_end: f64, interval: f64) -> Vec<f64> {
    let count = (t_end / interval * (1.0 + 1e-12)).floor() as usize;
    (0..=count).map(|i| i as f64 * interval).collect()
}

/// Accumulates `∫ n(t) dt` over equal-width batches of a window.
pub(crate) struct BatchAverager {
    start: f64,
    end: f64,
    width: f64,
    integrals: Vec<Vec<f64>>,
}

impl BatchAverager {
    pub(crate) fn new(start: f64, end: f64, batches: usize, modes: usize) -> Self {
        Self {
            start,
            end,
            width: (end - start) / batches as f64,
            integrals: vec![vec![0.0; modes]; batches],
        }
    }

    /// Adds a constant state held over `[t0, t1)`.
    pub(crate) fn add<T: Copy + Into<f64>>(&mut self, t0: f64, t1: f64, occupations: &[T]) {
        let lo = t0.max(self.start);
        let hi = t1.min(self.end);
        if hi <= lo {
            return;
        }
        let batches = self.integrals.len();
        let mut b = (((lo - self.start) / self.width) as usize).min(batches - 1);
        let mut t = lo;
        while t < hi && b < batches {
            let edge = if b + 1 == batches {
                self.end
            } else {
                self.start + (b + 1) as f64 * self.width
            };
            let seg_end = hi.min(edge);
            let dt = seg_end - t;
            if dt > 0.0 {
                for (acc, &n) in self.integrals[b].iter_mut().zip(occupations) {
                    *acc += n.into() * dt;
                }
            }
            t = seg_end;
            b += 1;
        }
    }

    pub(crate) fn finish(self) -> TimeAverage {
        let batches = self.integrals.len();
        let modes = self.integrals.first().map_or(0, Vec::len);
        let means: Vec<Vec<f64>> = self
            .integrals
            .iter()
            .map(|row| row.iter().map(|x| x / self.width).collect())
            .collect();
        let mut mean = vec![0.0; modes];
        let mut standard_error = vec![0.0; modes];
        for m in 0..modes {
            let avg = means.iter().map(|r| r[m]).sum::<f64>() / batches as f64;
            let var = if batches > 1 {
                means.iter().map(|r| (r[m] - avg).powi(2)).sum::<f64>() / (batches - 1) as f64
            } else {
                0.0
            };
            mean[m] = avg;
            standard_error[m] = (var / batches as f64).sqrt();
        }
        TimeAverage {
            start: self.start,
            end: self.end,
            batches,
            mean,
            standard_error,
        }
    }
}
