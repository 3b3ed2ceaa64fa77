//! Lockable compression springs built around a capstan clutch: models,
//! quasi-static work-loop simulation, trace analysis, and clutch
//! design-space exploration.
//!
//! A capstan clutch wraps a wire `n` times around a drum so that a small
//! control force holds a force larger by a factor of `e^(2*pi*mu*n)`. Put
//! one on the cable path of a compression spring and the spring locks
//! passively whenever it tries to extend, while compression stays free.
//! This crate covers the four quantitative questions such a mechanism
//! raises:
//!
//! - [`clutch`]: how much force the clutch holds and what it costs to
//!   unlock (locking-force ratio, wrap angle, unlock energy).
//! - [`spring`]: the energy-storage path (linear spring, cable, tensioner).
//! - [`workloop`]: sequential compress/lock/release cycles as a
//!   quasi-static state machine emitting force-deflection traces.
//! - [`analysis`]: storage-and-return efficiency, lock-event losses, and
//!   mass-energy density computed from traces.
//! - [`optimizer`]: grid search with coordinate-descent refinement over
//!   clutch geometries under size and strength constraints.
//!
//! All geometry is in millimeters, forces in newtons, energies in joules
//! (with an explicit N*mm -> J conversion); unit conversions happen only
//! at I/O boundaries.

pub mod analysis;
pub mod clutch;
pub mod error;
pub mod optimizer;
pub mod spring;
pub mod workloop;

pub use analysis::{
    efficiency, integrate_work, mass_energy_density, segment_trace, AnalysisConfig,
    EfficiencyReport, LockEventMetrics, SegmentKind, TraceSegment,
};
pub use clutch::{
    locking_force_ratio, max_holding_force, unlock_energy, wrap_angle, CapstanGeometry,
    HoldingForce, HoldingLimit, SolenoidSpec,
};
pub use error::Error;
pub use optimizer::{
    estimate_clutch_mass, feasible, optimize, Bounds, DesignCandidate, DesignConstraints,
    InfeasibilityReport, MaterialDensities, Objective, OptimizationResult, SearchBudget,
    Violation,
};
pub use spring::{
    baseline_cable_tension, cable_stretch, pulley_angle, spring_force, stored_energy, CableSpec,
    MassBudget, SpringSpec, TensionerSpec,
};
pub use workloop::{
    retained_force_after_lock, EnergyLedger, LockEvent, LockLossModel, MechanismState, Phase,
    Protocol, RetainedForce, SimulationOutcome, SimulationSettings, Simulator, SpringAssembly,
    TraceMeta, TraceSample, WorkLoopTrace,
};

/// Joules per newton-millimeter.
pub const J_PER_NMM: f64 = 1e-3;
