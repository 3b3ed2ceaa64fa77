//! Quasi-static work-loop state machine: sequential compression, passive
//! locking, energy accumulation, and controlled release.
//!
//! The crosshead moves at constant speed; inertia is ignored. Compression
//! is always free (the clutch freewheels), so loading follows the spring
//! line `F = k * x` exactly. When unloading starts with the clutch armed,
//! the capstan bites: the spring extends by a small back-travel
//! `b = engagement_slip + cable_stretch(F_lock)` while the measured force
//! decreases linearly to zero as the cable takes over the load. The drop
//! is capped at the spring line, which also covers the degenerate case
//! where the back-travel exceeds the locked deflection (nothing retained).
//!
//! Every joule is routed to one of four ledger buckets (work returned to
//! the head during lock drops, engagement dissipation, work returned
//! during guided release, energy retained in the spring), so
//! `work_in = drops + dissipation + returned + retained` holds to
//! floating-point accuracy on every simulated trace.

use serde::{Deserialize, Serialize};

use crate::clutch::{CapstanGeometry, SolenoidSpec};
use crate::error::{require_non_negative, Error, Result};
use crate::spring::{cable_stretch, CableSpec, MassBudget, SpringSpec, TensionerSpec};
use crate::J_PER_NMM;

/// Engagement slip committed after calibrating the default loss model so
/// the bundled five-step accumulation protocol analyzes to 80%
/// storage-and-return efficiency (see the acceptance suite).
pub const DEFAULT_ENGAGEMENT_SLIP_MM: f64 = 2.35;

/// Samples closer in time than this replace their predecessor instead of
/// extending the trace, so phase-end landings never create near-duplicate
/// timestamps.
const MIN_SAMPLE_SPACING_S: f64 = 1e-5;

/// Complete mechanism: spring, cable, tensioner, solenoid, clutch geometry,
/// and the clutch-unit mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpringAssembly {
    pub spring: SpringSpec,
    pub cable: CableSpec,
    pub tensioner: TensionerSpec,
    pub solenoid: SolenoidSpec,
    pub geometry: CapstanGeometry,
    /// Mass of the clutch unit (kg), for mass-energy density reporting.
    pub clutch_mass_kg: f64,
}

impl SpringAssembly {
    /// The prototype assembly with all published constants.
    pub fn prototype() -> Self {
        SpringAssembly {
            spring: SpringSpec::prototype(),
            cable: CableSpec::prototype(),
            tensioner: TensionerSpec::prototype(),
            solenoid: SolenoidSpec::prototype(),
            geometry: CapstanGeometry::prototype(),
            clutch_mass_kg: 0.62,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spring.validate()?;
        self.cable.validate()?;
        self.tensioner.validate()?;
        self.solenoid.validate()?;
        self.geometry.validate()?;
        crate::error::require_positive("clutch_mass_kg", self.clutch_mass_kg)?;
        Ok(())
    }

    pub fn mass_budget(&self) -> MassBudget {
        MassBudget {
            spring_side_mass_kg: self.spring.mass_kg,
            clutch_mass_kg: self.clutch_mass_kg,
        }
    }
}

/// Lock-engagement loss model: free back-travel before the capstan bites,
/// optionally extended by elastic cable stretch under the locked force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockLossModel {
    /// Free back-travel before the capstan bites (mm).
    pub engagement_slip_mm: f64,
    /// Add cable stretch under the locked force to the back-travel.
    pub include_cable_compliance: bool,
}

impl Default for LockLossModel {
    fn default() -> Self {
        LockLossModel {
            engagement_slip_mm: DEFAULT_ENGAGEMENT_SLIP_MM,
            include_cable_compliance: true,
        }
    }
}

impl LockLossModel {
    /// An ideal lock: zero back-travel, zero loss.
    pub fn ideal() -> Self {
        LockLossModel {
            engagement_slip_mm: 0.0,
            include_cable_compliance: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("engagement_slip_mm", self.engagement_slip_mm)
    }

    /// Total back-travel when locking against `lock_force_n`.
    pub fn back_travel_mm(&self, lock_force_n: f64, cable: &CableSpec) -> Result<f64> {
        let stretch = if self.include_cable_compliance {
            cable_stretch(cable, lock_force_n)?
        } else {
            0.0
        };
        Ok(self.engagement_slip_mm + stretch)
    }
}

/// One phase of a crosshead protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Phase {
    /// Drive the head down until the spring reaches the target deflection.
    CompressTo { target_mm: f64 },
    /// Raise the head until the measured force falls below the contact
    /// threshold.
    UnloadUntilContactLost,
    /// Fire the solenoid: disengage and disarm the clutch. The head
    /// re-contacts the spring (if needed) so the release stays guided.
    ReleaseClutch,
    /// Keep the head still.
    Hold { duration_s: f64 },
}

/// Ordered crosshead phases plus the constant head speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub phases: Vec<Phase>,
    pub crosshead_speed_mm_per_s: f64,
}

impl Protocol {
    /// The standard energy-accumulation protocol: compress-and-lock at each
    /// listed deflection in turn, then optionally release and return.
    pub fn sequential_accumulation(lock_deflections_mm: &[f64], final_release: bool) -> Self {
        let mut phases = Vec::with_capacity(lock_deflections_mm.len() * 2 + 2);
        for &target_mm in lock_deflections_mm {
            phases.push(Phase::CompressTo { target_mm });
            phases.push(Phase::UnloadUntilContactLost);
        }
        if final_release {
            phases.push(Phase::ReleaseClutch);
            phases.push(Phase::UnloadUntilContactLost);
        }
        Protocol {
            phases,
            crosshead_speed_mm_per_s: 0.5,
        }
    }

    pub fn with_speed(mut self, crosshead_speed_mm_per_s: f64) -> Self {
        self.crosshead_speed_mm_per_s = crosshead_speed_mm_per_s;
        self
    }

    /// Static feasibility: positive speed, targets inside the spring range
    /// and monotone nondecreasing within each accumulation run (a release
    /// resets the floor), finite hold durations.
    pub fn validate(&self, spring: &SpringSpec) -> Result<()> {
        if !self.crosshead_speed_mm_per_s.is_finite() || self.crosshead_speed_mm_per_s <= 0.0 {
            return Err(Error::InvalidProtocol(format!(
                "crosshead speed must be positive, got {}",
                self.crosshead_speed_mm_per_s
            )));
        }
        let mut floor = 0.0_f64;
        for (i, phase) in self.phases.iter().enumerate() {
            match *phase {
                Phase::CompressTo { target_mm } => {
                    if !target_mm.is_finite()
                        || target_mm < 0.0
                        || target_mm > spring.max_deflection_mm
                    {
                        return Err(Error::InvalidProtocol(format!(
                            "phase {i}: compress target {target_mm} mm outside [0, {}]",
                            spring.max_deflection_mm
                        )));
                    }
                    if target_mm < floor {
                        return Err(Error::InvalidProtocol(format!(
                            "phase {i}: compress target {target_mm} mm below previous target \
                             {floor} mm; accumulation targets must not decrease"
                        )));
                    }
                    floor = target_mm;
                }
                Phase::ReleaseClutch => floor = 0.0,
                Phase::Hold { duration_s } => {
                    if !duration_s.is_finite() || duration_s < 0.0 {
                        return Err(Error::InvalidProtocol(format!(
                            "phase {i}: hold duration {duration_s} s invalid"
                        )));
                    }
                }
                Phase::UnloadUntilContactLost => {}
            }
        }
        Ok(())
    }
}

/// Trace emission and contact detection settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSettings {
    /// Trace sample rate (Hz).
    pub sample_rate_hz: f64,
    /// Measured force at or below this is treated as contact lost (N).
    pub contact_force_threshold_n: f64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings {
            sample_rate_hz: 100.0,
            contact_force_threshold_n: 0.5,
        }
    }
}

impl SimulationSettings {
    pub fn validate(&self) -> Result<()> {
        crate::error::require_positive("sample_rate_hz", self.sample_rate_hz)?;
        require_non_negative("contact_force_threshold_n", self.contact_force_threshold_n)?;
        Ok(())
    }
}

/// Instantaneous mechanism state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismState {
    /// Simulation clock (s).
    pub time_s: f64,
    /// Spring deflection (mm).
    pub deflection_mm: f64,
    /// Deflection at which the capstan last bit; present iff engaged.
    pub locked_deflection_mm: Option<f64>,
    /// Capstan currently braking the pulley.
    pub clutch_engaged: bool,
    /// Solenoid de-energized, so the brake engages on any extension.
    pub clutch_armed: bool,
    /// Load head touching the spring.
    pub external_contact: bool,
}

impl MechanismState {
    /// Spring at rest, head away, clutch armed.
    pub fn initial() -> Self {
        MechanismState {
            time_s: 0.0,
            deflection_mm: 0.0,
            locked_deflection_mm: None,
            clutch_engaged: false,
            clutch_armed: true,
            external_contact: false,
        }
    }
}

/// One trace sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub time_s: f64,
    pub deflection_mm: f64,
    pub force_n: f64,
    pub clutch_engaged: bool,
}

/// Provenance carried with a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub sample_rate_hz: f64,
    pub crosshead_speed_mm_per_s: f64,
    pub contact_force_threshold_n: f64,
    pub engagement_slip_mm: f64,
    pub include_cable_compliance: bool,
    pub stiffness_n_per_mm: f64,
}

/// Time series of (time, deflection, measured force, clutch state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkLoopTrace {
    pub samples: Vec<TraceSample>,
    pub meta: TraceMeta,
}

impl WorkLoopTrace {
    /// Checks the trace invariants: strictly increasing time, finite
    /// non-negative force and deflection.
    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.samples.iter().enumerate() {
            if !s.time_s.is_finite() || !s.deflection_mm.is_finite() || !s.force_n.is_finite() {
                return Err(Error::InvalidTrace(format!("sample {i}: non-finite value")));
            }
            if s.force_n < 0.0 {
                return Err(Error::InvalidTrace(format!(
                    "sample {i}: negative force {}",
                    s.force_n
                )));
            }
            if s.deflection_mm < 0.0 {
                return Err(Error::InvalidTrace(format!(
                    "sample {i}: negative deflection {}",
                    s.deflection_mm
                )));
            }
            if i > 0 && s.time_s <= self.samples[i - 1].time_s {
                return Err(Error::InvalidTrace(format!(
                    "sample {i}: time not increasing ({} after {})",
                    s.time_s,
                    self.samples[i - 1].time_s
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Energy bookkeeping for a simulation run (all joules).
///
/// `work_in` is the head work done on the spring during loading;
/// `lock_drop` the work returned to the head along lock-drop segments;
/// `engagement_dissipation` the spring energy absorbed by cable stretch and
/// clutch slip during engagement (never visible on the trace);
/// `returned` the work returned along guided release segments;
/// `retained` the elastic energy still held at the end of the run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub work_in_j: f64,
    pub lock_drop_j: f64,
    pub engagement_dissipation_j: f64,
    pub returned_j: f64,
    pub retained_j: f64,
}

impl EnergyLedger {
    /// `work_in - (drops + dissipation + returned + retained)`; zero up to
    /// floating-point accumulation for any simulated run.
    pub fn closure_residual_j(&self) -> f64 {
        self.work_in_j
            - (self.lock_drop_j + self.engagement_dissipation_j + self.returned_j + self.retained_j)
    }
}

/// One completed lock engagement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockEvent {
    /// Deflection at which the capstan bit (mm).
    pub locked_deflection_mm: f64,
    /// Spring force at that deflection (N).
    pub lock_force_n: f64,
    /// Modeled back-travel b (mm).
    pub back_travel_mm: f64,
    /// Deflection actually retained once contact was lost (mm).
    pub retained_deflection_mm: f64,
    /// Spring force still held by the clutch (N).
    pub retained_force_n: f64,
    /// Work returned to the head during the drop (J).
    pub drop_work_j: f64,
    /// Spring energy absorbed by cable stretch and slip (J).
    pub engagement_dissipation_j: f64,
    /// Back-travel consumed the whole deflection; nothing retained.
    pub full_loss: bool,
}

/// Result of running a protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub trace: WorkLoopTrace,
    pub ledger: EnergyLedger,
    pub lock_events: Vec<LockEvent>,
    pub final_state: MechanismState,
}

/// Outcome of a single step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Sample for this step; `None` for instantaneous transitions.
    pub sample: Option<TraceSample>,
    /// The commanded phase has finished.
    pub phase_complete: bool,
    /// A lock engagement completed during this step.
    pub lock_event: Option<LockEvent>,
}

/// Retained force prediction after a lock engagement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetainedForce {
    pub force_n: f64,
    pub back_travel_mm: f64,
    pub retained_deflection_mm: f64,
    /// Back-travel at least the locked deflection: the lock holds nothing.
    pub full_loss: bool,
}

/// Quasi-static work-loop simulator. Pure given its inputs; a fresh
/// [`MechanismState`] and [`EnergyLedger`] per run keep runs independent.
#[derive(Debug, Clone)]
pub struct Simulator {
    assembly: SpringAssembly,
    loss: LockLossModel,
    settings: SimulationSettings,
    /// Crosshead speed used by [`Simulator::step`]; `run_protocol` takes it
    /// from the protocol instead.
    crosshead_speed_mm_per_s: f64,
}

impl Simulator {
    pub fn new(assembly: SpringAssembly, loss: LockLossModel) -> Result<Self> {
        assembly.validate()?;
        loss.validate()?;
        Ok(Simulator {
            assembly,
            loss,
            settings: SimulationSettings::default(),
            crosshead_speed_mm_per_s: 0.5,
        })
    }

    pub fn with_settings(mut self, settings: SimulationSettings) -> Result<Self> {
        settings.validate()?;
        self.settings = settings;
        Ok(self)
    }

    pub fn with_crosshead_speed(mut self, speed_mm_per_s: f64) -> Result<Self> {
        if !speed_mm_per_s.is_finite() || speed_mm_per_s <= 0.0 {
            return Err(Error::field(
                "crosshead_speed_mm_per_s",
                format!("must be finite and positive, got {speed_mm_per_s}"),
            ));
        }
        self.crosshead_speed_mm_per_s = speed_mm_per_s;
        Ok(self)
    }

    pub fn assembly(&self) -> &SpringAssembly {
        &self.assembly
    }

    pub fn settings(&self) -> &SimulationSettings {
        &self.settings
    }

    fn stiffness(&self) -> f64 {
        self.assembly.spring.stiffness_n_per_mm
    }

    /// Back-travel for a lock at `deflection_mm`.
    fn back_travel_at(&self, deflection_mm: f64) -> Result<f64> {
        let lock_force = self.stiffness() * deflection_mm;
        self.loss.back_travel_mm(lock_force, &self.assembly.cable)
    }

    /// Measured (head) force in the given state.
    ///
    /// Free contact reads the spring line. During an engaged drop the cable
    /// progressively takes the load, so the reading falls linearly over the
    /// back-travel, capped at the spring line.
    pub fn measured_force(&self, state: &MechanismState) -> Result<f64> {
        if !state.external_contact {
            return Ok(0.0);
        }
        let spring_line = self.stiffness() * state.deflection_mm;
        match state.locked_deflection_mm {
            Some(d_lock) if state.clutch_engaged => {
                let b = self.back_travel_at(d_lock)?;
                if b <= 0.0 {
                    return Ok(0.0);
                }
                let f_lock = self.stiffness() * d_lock;
                let travelled = d_lock - state.deflection_mm;
                let drop_line = f_lock * (1.0 - travelled / b);
                Ok(drop_line.min(spring_line).max(0.0))
            }
            _ => Ok(spring_line),
        }
    }

    /// Advances the state by at most `dt_s` under `command`, updating the
    /// energy ledger. Returns the emitted sample, whether the phase is
    /// finished, and any lock event completed in this step.
    pub fn step(
        &self,
        state: &mut MechanismState,
        ledger: &mut EnergyLedger,
        command: &Phase,
        dt_s: f64,
    ) -> Result<StepOutcome> {
        if !dt_s.is_finite() || dt_s <= 0.0 {
            return Err(Error::field(
                "dt_s",
                format!("must be finite and positive, got {dt_s}"),
            ));
        }
        match *command {
            Phase::CompressTo { target_mm } => self.step_compress(state, ledger, target_mm, dt_s),
            Phase::UnloadUntilContactLost => self.step_unload(state, ledger, dt_s),
            Phase::ReleaseClutch => self.step_release(state, dt_s),
            Phase::Hold { duration_s } => self.step_hold(state, duration_s, dt_s),
        }
    }

    fn step_compress(
        &self,
        state: &mut MechanismState,
        ledger: &mut EnergyLedger,
        target_mm: f64,
        dt_s: f64,
    ) -> Result<StepOutcome> {
        let max = self.assembly.spring.max_deflection_mm;
        if !target_mm.is_finite() || target_mm < 0.0 || target_mm > max {
            return Err(Error::OutOfRange {
                what: "compress target_mm".to_string(),
                value: target_mm,
                min: 0.0,
                max,
            });
        }
        if target_mm < state.deflection_mm - 1e-9 {
            return Err(Error::InvalidProtocol(format!(
                "compress target {target_mm} mm below current deflection {} mm \
                 (the clutch blocks extension)",
                state.deflection_mm
            )));
        }
        let k = self.stiffness();
        // Re-contact takes one tick: the head settles onto the held spring
        // and the reading steps up at constant deflection, so the trace
        // carries the force jump as a zero-work interval.
        let needs_settle =
            !state.external_contact && k * state.deflection_mm > self.settings.contact_force_threshold_n;
        // Compression frees the brake and re-arms it for the next extension.
        state.external_contact = true;
        state.clutch_engaged = false;
        state.locked_deflection_mm = None;
        state.clutch_armed = true;
        if needs_settle {
            state.time_s += dt_s;
            return Ok(StepOutcome {
                sample: Some(TraceSample {
                    time_s: state.time_s,
                    deflection_mm: state.deflection_mm,
                    force_n: k * state.deflection_mm,
                    clutch_engaged: false,
                }),
                phase_complete: false,
                lock_event: None,
            });
        }

        if target_mm - state.deflection_mm <= 1e-12 {
            state.deflection_mm = target_mm.min(state.deflection_mm);
            return Ok(StepOutcome {
                sample: None,
                phase_complete: true,
                lock_event: None,
            });
        }

        let speed = self.settings_speed();
        let dx_full = speed * dt_s;
        let x0 = state.deflection_mm;
        let (x1, dt_used, complete) = if x0 + dx_full >= target_mm {
            (target_mm, (target_mm - x0) / speed, true)
        } else {
            (x0 + dx_full, dt_s, false)
        };
        ledger.work_in_j += 0.5 * (k * x0 + k * x1) * (x1 - x0) * J_PER_NMM;
        state.deflection_mm = x1;
        state.time_s += dt_used;
        Ok(StepOutcome {
            sample: Some(TraceSample {
                time_s: state.time_s,
                deflection_mm: x1,
                force_n: k * x1,
                clutch_engaged: false,
            }),
            phase_complete: complete,
            lock_event: None,
        })
    }

    fn step_unload(
        &self,
        state: &mut MechanismState,
        ledger: &mut EnergyLedger,
        dt_s: f64,
    ) -> Result<StepOutcome> {
        if !state.external_contact {
            return Ok(StepOutcome {
                sample: None,
                phase_complete: true,
                lock_event: None,
            });
        }
        let k = self.stiffness();
        let thr = self.settings.contact_force_threshold_n;

        // Arm-to-engage: extension under an armed clutch bites immediately.
        if state.clutch_armed && !state.clutch_engaged {
            state.clutch_engaged = true;
            state.locked_deflection_mm = Some(state.deflection_mm);
        }

        if state.clutch_engaged {
            let d_lock = state
                .locked_deflection_mm
                .expect("engaged clutch always has a lock deflection");
            let f_lock = k * d_lock;
            if f_lock <= thr {
                // Nothing worth holding; the head separates at once.
                state.external_contact = false;
                return Ok(StepOutcome {
                    sample: None,
                    phase_complete: true,
                    lock_event: None,
                });
            }
            let b = self.back_travel_at(d_lock)?;
            if b <= 0.0 {
                // Ideal lock: the reading snaps to zero with no back-travel.
                state.external_contact = false;
                state.time_s += dt_s;
                let event = LockEvent {
                    locked_deflection_mm: d_lock,
                    lock_force_n: f_lock,
                    back_travel_mm: 0.0,
                    retained_deflection_mm: d_lock,
                    retained_force_n: f_lock,
                    drop_work_j: 0.0,
                    engagement_dissipation_j: 0.0,
                    full_loss: false,
                };
                return Ok(StepOutcome {
                    sample: Some(TraceSample {
                        time_s: state.time_s,
                        deflection_mm: d_lock,
                        force_n: 0.0,
                        clutch_engaged: true,
                    }),
                    phase_complete: true,
                    lock_event: Some(event),
                });
            }
            // Contact is lost where the drop line (or the spring line, when
            // the back-travel overruns the travel available) hits the
            // threshold.
            let x_stop_drop = d_lock - b * (1.0 - thr / f_lock);
            let x_stop = x_stop_drop.max(thr / k).max(0.0);
            let full_loss = x_stop_drop < thr / k;

            let speed = self.settings_speed();
            let x0 = state.deflection_mm;
            let f0 = self.measured_force(state)?;
            let dx_full = speed * dt_s;
            let (x1, dt_used, complete) = if x0 - dx_full <= x_stop {
                (x_stop, (x0 - x_stop) / speed, true)
            } else {
                (x0 - dx_full, dt_s, false)
            };
            state.deflection_mm = x1;
            state.time_s += dt_used;
            let f1 = self.measured_force(state)?;
            ledger.lock_drop_j += 0.5 * (f0 + f1) * (x0 - x1) * J_PER_NMM;

            let lock_event = if complete {
                state.external_contact = false;
                let drop_work_j =
                    0.5 * (f_lock + f1) * (d_lock - x_stop) * J_PER_NMM;
                let delta_spring_j = 0.5 * k * (d_lock * d_lock - x_stop * x_stop) * J_PER_NMM;
                let dissipation = (delta_spring_j - drop_work_j).max(0.0);
                ledger.engagement_dissipation_j += dissipation;
                Some(LockEvent {
                    locked_deflection_mm: d_lock,
                    lock_force_n: f_lock,
                    back_travel_mm: b,
                    retained_deflection_mm: x_stop,
                    retained_force_n: k * x_stop,
                    drop_work_j,
                    engagement_dissipation_j: dissipation,
                    full_loss,
                })
            } else {
                None
            };
            return Ok(StepOutcome {
                sample: Some(TraceSample {
                    time_s: state.time_s,
                    deflection_mm: x1,
                    force_n: f1,
                    clutch_engaged: true,
                }),
                phase_complete: complete,
                lock_event,
            });
        }

        // Clutch released: guided return along the spring line.
        let x_stop = (thr / k).min(state.deflection_mm);
        if state.deflection_mm <= x_stop + 1e-15 {
            state.external_contact = false;
            return Ok(StepOutcome {
                sample: None,
                phase_complete: true,
                lock_event: None,
            });
        }
        let speed = self.settings_speed();
        let x0 = state.deflection_mm;
        let dx_full = speed * dt_s;
        let (x1, dt_used, complete) = if x0 - dx_full <= x_stop {
            (x_stop, (x0 - x_stop) / speed, true)
        } else {
            (x0 - dx_full, dt_s, false)
        };
        ledger.returned_j += 0.5 * (k * x0 + k * x1) * (x0 - x1) * J_PER_NMM;
        state.deflection_mm = x1;
        state.time_s += dt_used;
        if complete {
            state.external_contact = false;
        }
        Ok(StepOutcome {
            sample: Some(TraceSample {
                time_s: state.time_s,
                deflection_mm: x1,
                force_n: k * x1,
                clutch_engaged: false,
            }),
            phase_complete: complete,
            lock_event: None,
        })
    }

    fn step_release(&self, state: &mut MechanismState, dt_s: f64) -> Result<StepOutcome> {
        state.clutch_armed = false;
        state.clutch_engaged = false;
        state.locked_deflection_mm = None;
        // The head takes the load back so the release stays quasi-static.
        state.external_contact = true;
        state.time_s += dt_s;
        Ok(StepOutcome {
            sample: Some(TraceSample {
                time_s: state.time_s,
                deflection_mm: state.deflection_mm,
                force_n: self.stiffness() * state.deflection_mm,
                clutch_engaged: false,
            }),
            phase_complete: true,
            lock_event: None,
        })
    }

    fn step_hold(
        &self,
        state: &mut MechanismState,
        duration_s: f64,
        dt_s: f64,
    ) -> Result<StepOutcome> {
        if !duration_s.is_finite() || duration_s < 0.0 {
            return Err(Error::InvalidProtocol(format!(
                "hold duration {duration_s} s invalid"
            )));
        }
        // `step` has no phase-elapsed memory, so `run_protocol` slices the
        // duration into dt-sized calls; a single call just advances dt.
        state.time_s += dt_s;
        let force = self.measured_force(state)?;
        Ok(StepOutcome {
            sample: Some(TraceSample {
                time_s: state.time_s,
                deflection_mm: state.deflection_mm,
                force_n: force,
                clutch_engaged: state.clutch_engaged,
            }),
            phase_complete: false,
            lock_event: None,
        })
    }

    fn settings_speed(&self) -> f64 {
        self.crosshead_speed_mm_per_s
    }

    /// Runs a full protocol from the rest state, emitting a deterministic
    /// trace at the configured sample rate.
    pub fn run_protocol(&self, protocol: &Protocol) -> Result<SimulationOutcome> {
        protocol.validate(&self.assembly.spring)?;
        let mut sim = self.clone();
        sim.crosshead_speed_mm_per_s = protocol.crosshead_speed_mm_per_s;

        let dt = 1.0 / sim.settings.sample_rate_hz;
        let mut state = MechanismState::initial();
        let mut ledger = EnergyLedger::default();
        let mut events = Vec::new();
        let mut samples = vec![TraceSample {
            time_s: 0.0,
            deflection_mm: 0.0,
            force_n: 0.0,
            clutch_engaged: false,
        }];

        for phase in &protocol.phases {
            match *phase {
                Phase::Hold { duration_s } => {
                    let mut remaining = duration_s;
                    while remaining > 1e-12 {
                        let step_dt = remaining.min(dt);
                        let out = sim.step(&mut state, &mut ledger, phase, step_dt)?;
                        if let Some(s) = out.sample {
                            push_sample(&mut samples, s);
                        }
                        remaining -= step_dt;
                    }
                }
                _ => loop {
                    let out = sim.step(&mut state, &mut ledger, phase, dt)?;
                    if let Some(s) = out.sample {
                        push_sample(&mut samples, s);
                    }
                    if let Some(ev) = out.lock_event {
                        events.push(ev);
                    }
                    if out.phase_complete {
                        break;
                    }
                },
            }
        }

        let k = sim.stiffness();
        ledger.retained_j = 0.5 * k * state.deflection_mm * state.deflection_mm * J_PER_NMM;

        let trace = WorkLoopTrace {
            samples,
            meta: TraceMeta {
                sample_rate_hz: sim.settings.sample_rate_hz,
                crosshead_speed_mm_per_s: protocol.crosshead_speed_mm_per_s,
                contact_force_threshold_n: sim.settings.contact_force_threshold_n,
                engagement_slip_mm: sim.loss.engagement_slip_mm,
                include_cable_compliance: sim.loss.include_cable_compliance,
                stiffness_n_per_mm: k,
            },
        };
        trace.validate()?;
        Ok(SimulationOutcome {
            trace,
            ledger,
            lock_events: events,
            final_state: state,
        })
    }
}

fn push_sample(samples: &mut Vec<TraceSample>, sample: TraceSample) {
    match samples.last() {
        Some(last) if sample.time_s - last.time_s < MIN_SAMPLE_SPACING_S && samples.len() > 1 => {
            *samples.last_mut().expect("non-empty") = sample;
        }
        _ => samples.push(sample),
    }
}

/// Spring force still held after a lock engagement, from the loss model:
/// `k * (locked_deflection - back_travel)`, floored at zero with a
/// full-loss flag when the back-travel eats the whole deflection.
pub fn retained_force_after_lock(
    state: &MechanismState,
    assembly: &SpringAssembly,
    loss: &LockLossModel,
) -> Result<RetainedForce> {
    assembly.validate()?;
    loss.validate()?;
    let locked = state.locked_deflection_mm.ok_or_else(|| {
        Error::InvalidField {
            field: "locked_deflection_mm".to_string(),
            reason: "clutch is not engaged".to_string(),
        }
    })?;
    let k = assembly.spring.stiffness_n_per_mm;
    let back_travel = loss.back_travel_mm(k * locked, &assembly.cable)?;
    if back_travel >= locked {
        return Ok(RetainedForce {
            force_n: 0.0,
            back_travel_mm: back_travel,
            retained_deflection_mm: 0.0,
            full_loss: true,
        });
    }
    let retained = locked - back_travel;
    Ok(RetainedForce {
        force_n: k * retained,
        back_travel_mm: back_travel,
        retained_deflection_mm: retained,
        full_loss: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn prototype_sim(loss: LockLossModel) -> Simulator {
        Simulator::new(SpringAssembly::prototype(), loss).unwrap()
    }

    #[test]
    fn compress_kinematics() {
        let sim = prototype_sim(LockLossModel::ideal());
        let mut state = MechanismState::initial();
        let mut ledger = EnergyLedger::default();
        let cmd = Phase::CompressTo { target_mm: 50.0 };
        for _ in 0..200 {
            let out = sim.step(&mut state, &mut ledger, &cmd, 0.01).unwrap();
            assert!(!out.phase_complete);
        }
        // 200 steps x 0.01 s x 0.5 mm/s = 1.0 mm.
        assert_relative_eq!(state.deflection_mm, 1.0, epsilon = 1e-9);
        assert_relative_eq!(state.time_s, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn ideal_lock_zero_loss() {
        let sim = prototype_sim(LockLossModel::ideal());
        let protocol = Protocol::sequential_accumulation(&[50.0], false);
        let out = sim.run_protocol(&protocol).unwrap();
        assert_eq!(out.lock_events.len(), 1);
        let ev = &out.lock_events[0];
        assert_eq!(ev.back_travel_mm, 0.0);
        assert_eq!(ev.drop_work_j, 0.0);
        assert_eq!(ev.engagement_dissipation_j, 0.0);
        assert_relative_eq!(ev.retained_force_n, 740.0, epsilon = 1e-9);
        assert_relative_eq!(out.ledger.closure_residual_j(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn triangle_drop_loss() {
        // Lock at 50 mm with 3 mm total back-travel: the measured drop is a
        // triangle of area ~ 740 N * 3 mm / 2 = 1.11 J (threshold-trimmed).
        let loss = LockLossModel {
            engagement_slip_mm: 3.0,
            include_cable_compliance: false,
        };
        let sim = prototype_sim(loss);
        let protocol = Protocol::sequential_accumulation(&[50.0], false);
        let out = sim.run_protocol(&protocol).unwrap();
        assert_eq!(out.lock_events.len(), 1);
        let ev = &out.lock_events[0];
        assert_relative_eq!(ev.lock_force_n, 740.0, epsilon = 1e-9);
        assert_relative_eq!(ev.drop_work_j, 1.11, max_relative = 2e-3);
        assert!(!ev.full_loss);
        assert_relative_eq!(out.ledger.closure_residual_j(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn retained_energy_single_lock() {
        // Lock at 10 mm with 1 mm back-travel: retained deflection 9 mm,
        // retained energy 14.8 * 81 / 2 = 0.5994 J.
        let loss = LockLossModel {
            engagement_slip_mm: 1.0,
            include_cable_compliance: false,
        };
        let sim = prototype_sim(loss);
        let protocol = Protocol::sequential_accumulation(&[10.0], false);
        let out = sim.run_protocol(&protocol).unwrap();
        let ev = &out.lock_events[0];
        assert_relative_eq!(ev.retained_deflection_mm, 9.0, max_relative = 1e-2);
        assert_relative_eq!(out.ledger.retained_j, 0.5994, max_relative = 1e-2);
        // Closed-form cross-check against the trace-integrated ledger.
        let k = 14.8;
        let expected = 0.5 * k * ev.retained_deflection_mm * ev.retained_deflection_mm * 1e-3;
        assert_relative_eq!(out.ledger.retained_j, expected, max_relative = 1e-12);
    }

    #[test]
    fn retained_force_prediction() {
        let assembly = SpringAssembly::prototype();
        let state = MechanismState {
            locked_deflection_mm: Some(70.0),
            clutch_engaged: true,
            ..MechanismState::initial()
        };
        let loss = LockLossModel {
            engagement_slip_mm: 2.0,
            include_cable_compliance: false,
        };
        let r = retained_force_after_lock(&state, &assembly, &loss).unwrap();
        assert_relative_eq!(r.force_n, 1006.4, epsilon = 1e-9);
        assert!(!r.full_loss);

        let ideal = retained_force_after_lock(&state, &assembly, &LockLossModel::ideal()).unwrap();
        assert_relative_eq!(ideal.force_n, 1036.0, epsilon = 1e-9);

        let state5 = MechanismState {
            locked_deflection_mm: Some(5.0),
            ..state
        };
        let loss6 = LockLossModel {
            engagement_slip_mm: 6.0,
            include_cable_compliance: false,
        };
        let r5 = retained_force_after_lock(&state5, &assembly, &loss6).unwrap();
        assert_eq!(r5.force_n, 0.0);
        assert!(r5.full_loss);
    }

    #[test]
    fn accumulation_is_monotone() {
        let sim = prototype_sim(LockLossModel::default());
        let protocol = Protocol::sequential_accumulation(&[10.0, 30.0, 50.0, 70.0, 90.0], true);
        let out = sim.run_protocol(&protocol).unwrap();
        assert_eq!(out.lock_events.len(), 5);
        let mut prev = 0.0;
        for ev in &out.lock_events {
            let retained_j = 0.5 * 14.8 * ev.retained_deflection_mm.powi(2) * 1e-3;
            assert!(retained_j > prev, "retained energy must grow per event");
            prev = retained_j;
        }
        // Final lock holds more than a kilonewton.
        assert!(out.lock_events[4].retained_force_n >= 1000.0);
    }

    #[test]
    fn loading_slope_is_stiffness_everywhere() {
        let sim = prototype_sim(LockLossModel::default());
        let protocol = Protocol::sequential_accumulation(&[10.0, 30.0], false);
        let out = sim.run_protocol(&protocol).unwrap();
        let s = &out.trace.samples;
        for w in s.windows(2) {
            let dx = w[1].deflection_mm - w[0].deflection_mm;
            if dx > 1e-9 && w[0].force_n > 1.0 {
                let slope = (w[1].force_n - w[0].force_n) / dx;
                assert_relative_eq!(slope, 14.8, max_relative = 1e-6);
            }
            // The clutch never lets deflection pass the lock point while
            // unloading.
            if w[1].clutch_engaged {
                assert!(w[1].deflection_mm <= w[0].deflection_mm + 1e-12);
            }
        }
    }

    #[test]
    fn determinism_bit_identical() {
        let sim = prototype_sim(LockLossModel::default());
        let protocol = Protocol::sequential_accumulation(&[10.0, 30.0, 50.0], true);
        let a = sim.run_protocol(&protocol).unwrap();
        let b = sim.run_protocol(&protocol).unwrap();
        assert_eq!(a.trace.samples, b.trace.samples);
        assert_eq!(a.ledger, b.ledger);
    }

    #[test]
    fn protocol_validation() {
        let spring = SpringSpec::prototype();
        let bad = Protocol::sequential_accumulation(&[30.0, 10.0], false);
        assert!(matches!(
            bad.validate(&spring),
            Err(Error::InvalidProtocol(_))
        ));
        let out_of_range = Protocol::sequential_accumulation(&[120.0], false);
        assert!(matches!(
            out_of_range.validate(&spring),
            Err(Error::InvalidProtocol(_))
        ));
        let zero_speed = Protocol::sequential_accumulation(&[10.0], false).with_speed(0.0);
        assert!(zero_speed.validate(&spring).is_err());
    }

    #[test]
    fn full_loss_lock_retains_nothing() {
        let loss = LockLossModel {
            engagement_slip_mm: 10.0,
            include_cable_compliance: false,
        };
        let sim = prototype_sim(loss);
        let protocol = Protocol::sequential_accumulation(&[5.0], false);
        let out = sim.run_protocol(&protocol).unwrap();
        let ev = &out.lock_events[0];
        assert!(ev.full_loss);
        assert!(ev.retained_force_n < 1.0);
        assert_relative_eq!(out.ledger.closure_residual_j(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn hold_phase_emits_idle_samples() {
        let sim = prototype_sim(LockLossModel::ideal());
        let mut protocol = Protocol::sequential_accumulation(&[10.0], false);
        protocol.phases.push(Phase::Hold { duration_s: 1.0 });
        let out = sim.run_protocol(&protocol).unwrap();
        let n = out.trace.samples.len();
        let tail = &out.trace.samples[n - 50..];
        for w in tail.windows(2) {
            assert_eq!(w[0].deflection_mm, w[1].deflection_mm);
            assert_eq!(w[0].force_n, w[1].force_n);
        }
    }
}
