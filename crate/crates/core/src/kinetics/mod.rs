//! Occupation-number kinetics of `aφ ⇌ a + φ` over a finite set of modes.

pub mod network;
pub mod ode;
pub mod scenario;
pub mod ssa;
pub mod trajectory;

pub use network::{
    channel_propensities, equilibrium_residual, reservoir_propensities, ChannelPropensities,
    ModeRole, NetworkBuilder, NetworkMode, ReactionChannel, ReactionNetwork, ReservoirCoupling,
};
pub use ode::{run_ode, stability_limit, OdeConfig};
pub use scenario::{atom_laser_network, scenario_atom_laser, AtomLaserReport};
pub use ssa::{
    map_ensemble, run_ssa, run_ssa_ensemble, run_ssa_stream, AveragingWindow, EnsembleSummary,
    SsaConfig,
};
pub use trajectory::{
    ChannelTally, ClampEvent, EventKind, EventRecord, EventTally, SimState, TimeAverage, Trajectory,
};
