//! Energy-storage path: linear die spring, cable-and-pulley kinematics,
//! constant-force tensioner, and linear cable compliance.
//!
//! The spring is treated as exactly linear over its working range, so
//! `F = k * dl` and `E = k * dl^2 / 2`. The cable is linear-elastic up to
//! break, anchored by the single published datum of its elongation fraction
//! at breaking strength. Pure functions throughout; thread-safe.

use serde::{Deserialize, Serialize};

use crate::clutch::CapstanGeometry;
use crate::error::{require_positive, Error, Result};
use crate::J_PER_NMM;

/// Linear compression spring plus its non-clutch support structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpringSpec {
    /// Stiffness k (N/mm).
    pub stiffness_n_per_mm: f64,
    /// Free length (mm).
    pub free_length_mm: f64,
    /// Maximal working deflection (mm), the hard stop.
    pub max_deflection_mm: f64,
    /// Mass of the spring side including support structure (kg).
    pub mass_kg: f64,
}

impl SpringSpec {
    /// Prototype die spring: 14.8 N/mm, 305 mm long, 90 mm travel, 1.32 kg
    /// including the anti-buckling shafts.
    pub fn prototype() -> Self {
        SpringSpec {
            stiffness_n_per_mm: 14.8,
            free_length_mm: 305.0,
            max_deflection_mm: 90.0,
            mass_kg: 1.32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("stiffness_n_per_mm", self.stiffness_n_per_mm)?;
        require_positive("free_length_mm", self.free_length_mm)?;
        require_positive("max_deflection_mm", self.max_deflection_mm)?;
        require_positive("mass_kg", self.mass_kg)?;
        if self.max_deflection_mm >= self.free_length_mm {
            return Err(Error::field(
                "max_deflection_mm",
                format!(
                    "must be smaller than free_length_mm ({} >= {})",
                    self.max_deflection_mm, self.free_length_mm
                ),
            ));
        }
        Ok(())
    }
}

/// Flexible cable connecting the spring to the clutch pulley.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CableSpec {
    /// Breaking strength (N).
    pub breaking_strength_n: f64,
    /// Elongation fraction at break, in (0, 0.1].
    pub elongation_fraction_at_break: f64,
    /// Routed length from anchor to drum termination (mm).
    pub routed_length_mm: f64,
    /// Strength derating applied to the holding-force budget, >= 1.
    pub safety_factor: f64,
}

impl CableSpec {
    /// Prototype braided aramid cable: 2.7 kN, <4% elongation, routed over
    /// 400 mm (spring length plus pulley path), no derating.
    pub fn prototype() -> Self {
        CableSpec {
            breaking_strength_n: 2700.0,
            elongation_fraction_at_break: 0.04,
            routed_length_mm: 400.0,
            safety_factor: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("breaking_strength_n", self.breaking_strength_n)?;
        require_positive("routed_length_mm", self.routed_length_mm)?;
        if !self.elongation_fraction_at_break.is_finite()
            || self.elongation_fraction_at_break <= 0.0
            || self.elongation_fraction_at_break > 0.1
        {
            return Err(Error::field(
                "elongation_fraction_at_break",
                format!(
                    "must lie in (0, 0.1], got {}",
                    self.elongation_fraction_at_break
                ),
            ));
        }
        if !self.safety_factor.is_finite() || self.safety_factor < 1.0 {
            return Err(Error::field(
                "safety_factor",
                format!("must be >= 1, got {}", self.safety_factor),
            ));
        }
        Ok(())
    }
}

/// Constant-force torsional spring keeping the cable taut on the pulley.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensionerSpec {
    /// Constant torque on the pulley shaft (mN*m).
    pub torque_mnm: f64,
}

impl TensionerSpec {
    /// Prototype tensioner torque: 145 mN*m.
    pub fn prototype() -> Self {
        TensionerSpec { torque_mnm: 145.0 }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("torque_mnm", self.torque_mnm)
    }
}

/// Mass split between the energy-storing side and the locking side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassBudget {
    /// Spring plus support structure, m_spring (kg).
    pub spring_side_mass_kg: f64,
    /// Clutch unit, m_lock (kg).
    pub clutch_mass_kg: f64,
}

impl MassBudget {
    /// Prototype masses: 1.32 kg spring side, 0.62 kg clutch unit.
    pub fn prototype() -> Self {
        MassBudget {
            spring_side_mass_kg: 1.32,
            clutch_mass_kg: 0.62,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("spring_side_mass_kg", self.spring_side_mass_kg)?;
        require_positive("clutch_mass_kg", self.clutch_mass_kg)?;
        Ok(())
    }
}

/// Spring force k * dl (N) at a deflection within the working range.
pub fn spring_force(spec: &SpringSpec, deflection_mm: f64) -> Result<f64> {
    spec.validate()?;
    check_deflection(spec, deflection_mm)?;
    Ok(spec.stiffness_n_per_mm * deflection_mm)
}

/// Elastic energy k * dl^2 / 2 stored at a deflection (J).
pub fn stored_energy(spec: &SpringSpec, deflection_mm: f64) -> Result<f64> {
    spec.validate()?;
    check_deflection(spec, deflection_mm)?;
    Ok(0.5 * spec.stiffness_n_per_mm * deflection_mm * deflection_mm * J_PER_NMM)
}

/// Cable tension maintained by the tensioner at rest: torque / r_p (N).
/// mN*m over mm is N directly.
pub fn baseline_cable_tension(tensioner: &TensionerSpec, geometry: &CapstanGeometry) -> Result<f64> {
    tensioner.validate()?;
    geometry.validate()?;
    Ok(tensioner.torque_mnm / geometry.pulley_radius_mm)
}

/// Pulley rotation wound by a spring deflection: dl / r_p (rad), for an
/// inextensible cable.
pub fn pulley_angle(deflection_mm: f64, geometry: &CapstanGeometry) -> Result<f64> {
    geometry.validate()?;
    if !deflection_mm.is_finite() || deflection_mm < 0.0 {
        return Err(Error::field(
            "deflection_mm",
            format!("must be finite and non-negative, got {deflection_mm}"),
        ));
    }
    Ok(deflection_mm / geometry.pulley_radius_mm)
}

/// Elastic cable stretch under tension (mm), linear up to break:
/// `routed_length * elongation_at_break * (tension / breaking_strength)`.
pub fn cable_stretch(cable: &CableSpec, tension_n: f64) -> Result<f64> {
    cable.validate()?;
    if !tension_n.is_finite() || tension_n < 0.0 {
        return Err(Error::field(
            "tension_n",
            format!("must be finite and non-negative, got {tension_n}"),
        ));
    }
    if tension_n > cable.breaking_strength_n {
        return Err(Error::CableFailure {
            tension_n,
            breaking_n: cable.breaking_strength_n,
        });
    }
    Ok(cable.routed_length_mm
        * cable.elongation_fraction_at_break
        * (tension_n / cable.breaking_strength_n))
}

fn check_deflection(spec: &SpringSpec, deflection_mm: f64) -> Result<()> {
    if !deflection_mm.is_finite()
        || deflection_mm < 0.0
        || deflection_mm > spec.max_deflection_mm
    {
        return Err(Error::OutOfRange {
            what: "deflection_mm".to_string(),
            value: deflection_mm,
            min: 0.0,
            max: spec.max_deflection_mm,
        });
    }
    Ok(())
}
