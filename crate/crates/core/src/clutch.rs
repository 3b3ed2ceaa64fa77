//! Capstan brake physics: wrap angle, locking-force ratio, maximal holding
//! force, and unlock-energy accounting.
//!
//! The brake is a wire wrapped around a drum. A small pretension force on
//! the free end of the wire is amplified by belt friction, so the ratio of
//! control force to held force is
//!
//! ```text
//! lambda_F = (r_p / r_d) * exp(-mu * theta),    theta = 2*pi * l_d / d_w
//! ```
//!
//! where `r_p` is the cable-pulley radius, `r_d` the drum radius, `l_d` the
//! drum length, `d_w` the wire diameter, and `mu` the static friction
//! coefficient. The wrap count defaults to the geometric packing limit
//! `l_d / d_w`; an explicit override covers builds that wind fewer turns.
//!
//! All operations are pure and stateless; safe to call concurrently.

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::spring::CableSpec;

/// Capstan clutch geometry. Lengths in mm, friction dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapstanGeometry {
    /// Cable pulley radius r_p (mm).
    pub pulley_radius_mm: f64,
    /// Braking drum radius r_d (mm).
    pub drum_radius_mm: f64,
    /// Braking drum length l_d (mm).
    pub drum_length_mm: f64,
    /// Brake wire diameter d_w (mm).
    pub wire_diameter_mm: f64,
    /// Static friction coefficient mu, in (0, 2].
    pub friction_coeff: f64,
    /// Explicit wrap count; `None` uses l_d / d_w.
    pub wrap_count_override: Option<f64>,
}

impl CapstanGeometry {
    /// Prototype clutch geometry: 12 mm pulley, 19 mm drum radius, 20 mm
    /// drum length, 2.4 mm steel wire on aluminum, mu = 0.4.
    pub fn prototype() -> Self {
        CapstanGeometry {
            pulley_radius_mm: 12.0,
            drum_radius_mm: 19.0,
            drum_length_mm: 20.0,
            wire_diameter_mm: 2.4,
            friction_coeff: 0.4,
            wrap_count_override: None,
        }
    }

    /// Validates field ranges. No ordering between pulley and drum radius is
    /// imposed; only the ratio enters the force balance.
    pub fn validate(&self) -> Result<()> {
        require_positive("pulley_radius_mm", self.pulley_radius_mm)?;
        require_positive("drum_radius_mm", self.drum_radius_mm)?;
        require_positive("drum_length_mm", self.drum_length_mm)?;
        require_positive("wire_diameter_mm", self.wire_diameter_mm)?;
        if !self.friction_coeff.is_finite()
            || self.friction_coeff <= 0.0
            || self.friction_coeff > 2.0
        {
            return Err(Error::field(
                "friction_coeff",
                format!("must lie in (0, 2], got {}", self.friction_coeff),
            ));
        }
        if let Some(n) = self.wrap_count_override {
            require_positive("wrap_count_override", n)?;
        }
        Ok(())
    }

    /// Effective wrap count: the override if set, else l_d / d_w.
    pub fn effective_wraps(&self) -> f64 {
        self.wrap_count_override
            .unwrap_or(self.drum_length_mm / self.wire_diameter_mm)
    }

    /// True when the wound wire does not fit on the drum. The default
    /// convention packs wraps edge to edge, so only an override (or a wire
    /// wider than the drum) can overflow. Soft here; the optimizer treats
    /// it as a hard feasibility violation.
    pub fn wraps_overflow_drum(&self) -> bool {
        let rel = 1.0 + 1e-9;
        self.wire_diameter_mm > self.drum_length_mm * rel
            || self.effective_wraps() * self.wire_diameter_mm > self.drum_length_mm * rel
    }
}

/// Solenoid that pretensions the brake wire and pulls it free on release.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolenoidSpec {
    /// Pretension on the wire, F_lock (N).
    pub pretension_force_n: f64,
    /// Drive voltage (V).
    pub drive_voltage_v: f64,
    /// Drive current (A).
    pub drive_current_a: f64,
    /// Actuation time to disengage (s). Zero models an ideal instant pull.
    pub actuation_time_s: f64,
}

impl SolenoidSpec {
    /// Prototype solenoid: 0.65 N pretension, 15 V x 0.6 A spike, 10 ms pull.
    pub fn prototype() -> Self {
        SolenoidSpec {
            pretension_force_n: 0.65,
            drive_voltage_v: 15.0,
            drive_current_a: 0.6,
            actuation_time_s: 0.010,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("pretension_force_n", self.pretension_force_n)?;
        require_positive("drive_voltage_v", self.drive_voltage_v)?;
        require_positive("drive_current_a", self.drive_current_a)?;
        require_non_negative("actuation_time_s", self.actuation_time_s)?;
        Ok(())
    }

    /// Peak electrical power V * I (W). Derived, never stored.
    pub fn peak_power_w(&self) -> f64 {
        self.drive_voltage_v * self.drive_current_a
    }
}

/// Which limit caps the holding force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HoldingLimit {
    /// Capstan amplification of the solenoid pretension binds.
    Capstan,
    /// Cable breaking strength (over the safety factor) binds.
    Cable,
}

/// Maximal holding force together with the limit that binds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoldingForce {
    pub force_n: f64,
    pub limit: HoldingLimit,
    /// Capstan-side limit F_lock / lambda_F (N).
    pub capstan_limit_n: f64,
    /// Cable-side limit, breaking strength / safety factor (N).
    pub cable_limit_n: f64,
}

/// Total wrap angle of the brake wire (rad): 2*pi times the wrap count.
pub fn wrap_angle(geometry: &CapstanGeometry) -> Result<f64> {
    geometry.validate()?;
    Ok(std::f64::consts::TAU * geometry.effective_wraps())
}

/// Locking-force ratio lambda_F = (r_p/r_d) * exp(-mu * wrap_angle).
///
/// Strictly decreasing in mu and l_d, increasing in d_w; bounded by
/// (0, r_p/r_d) for any positive friction.
pub fn locking_force_ratio(geometry: &CapstanGeometry) -> Result<f64> {
    let theta = wrap_angle(geometry)?;
    let ratio = geometry.pulley_radius_mm / geometry.drum_radius_mm;
    Ok(ratio * (-geometry.friction_coeff * theta).exp())
}

/// Maximal force the locked clutch can hold (N): the smaller of the capstan
/// amplification of the solenoid pretension and the cable strength budget.
pub fn max_holding_force(
    geometry: &CapstanGeometry,
    solenoid: &SolenoidSpec,
    cable: &CableSpec,
) -> Result<HoldingForce> {
    geometry.validate()?;
    cable.validate()?;
    if !solenoid.pretension_force_n.is_finite() || solenoid.pretension_force_n <= 0.0 {
        return Err(Error::NoPretension);
    }
    solenoid.validate()?;

    let capstan_limit_n = solenoid.pretension_force_n / locking_force_ratio(geometry)?;
    let cable_limit_n = cable.breaking_strength_n / cable.safety_factor;
    let (force_n, limit) = if capstan_limit_n <= cable_limit_n {
        (capstan_limit_n, HoldingLimit::Capstan)
    } else {
        (cable_limit_n, HoldingLimit::Cable)
    };
    Ok(HoldingForce {
        force_n,
        limit,
        capstan_limit_n,
        cable_limit_n,
    })
}

/// Energy drawn by the solenoid to disengage the clutch: V * I * dt (J).
pub fn unlock_energy(solenoid: &SolenoidSpec) -> Result<f64> {
    solenoid.validate()?;
    Ok(solenoid.peak_power_w() * solenoid.actuation_time_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Frozen from an extended-precision evaluation of (12/19)*exp(-2*pi*0.4*20/2.4).
    const LAMBDA_PROTOTYPE: f64 = 5.065068068634871e-10;
    // Same oracle with six wraps: (12/19)*exp(-2*pi*0.4*6).
    const LAMBDA_SIX_WRAPS: f64 = 1.7841080248112696e-7;

    #[test]
    fn wrap_angle_from_packing() {
        let g = CapstanGeometry::prototype();
        // 2*pi * 20/2.4
        assert_relative_eq!(wrap_angle(&g).unwrap(), 52.35987755982989, epsilon = 1e-12);
    }

    #[test]
    fn wrap_angle_override_is_exact() {
        let g = CapstanGeometry {
            wrap_count_override: Some(6.0),
            ..CapstanGeometry::prototype()
        };
        assert_eq!(wrap_angle(&g).unwrap(), std::f64::consts::TAU * 6.0);
    }

    #[test]
    fn wrap_angle_single_wrap() {
        let g = CapstanGeometry {
            drum_length_mm: 2.4,
            ..CapstanGeometry::prototype()
        };
        assert_relative_eq!(
            wrap_angle(&g).unwrap(),
            std::f64::consts::TAU,
            epsilon = 1e-12
        );
    }

    #[test]
    fn wrap_angle_rejects_bad_geometry() {
        let g = CapstanGeometry {
            wire_diameter_mm: 0.0,
            ..CapstanGeometry::prototype()
        };
        match wrap_angle(&g) {
            Err(Error::InvalidField { field, .. }) => assert_eq!(field, "wire_diameter_mm"),
            other => panic!("expected InvalidField, got {other:?}"),
        }
    }

    #[test]
    fn locking_ratio_prototype_matches_oracle() {
        let lam = locking_force_ratio(&CapstanGeometry::prototype()).unwrap();
        assert!((lam - LAMBDA_PROTOTYPE).abs() / LAMBDA_PROTOTYPE < 1e-9);
        assert!(lam < 0.001);
    }

    #[test]
    fn locking_ratio_six_wraps_matches_oracle() {
        let g = CapstanGeometry {
            wrap_count_override: Some(6.0),
            ..CapstanGeometry::prototype()
        };
        let lam = locking_force_ratio(&g).unwrap();
        assert!((lam - LAMBDA_SIX_WRAPS).abs() / LAMBDA_SIX_WRAPS < 1e-9);
        assert!(lam < 0.001);
    }

    #[test]
    fn locking_ratio_zero_friction_limit() {
        // mu -> 0 leaves the pure radius ratio; mu = 0 itself is rejected,
        // so probe the limit just inside the valid range.
        let g = CapstanGeometry {
            friction_coeff: 1e-300,
            ..CapstanGeometry::prototype()
        };
        assert_relative_eq!(
            locking_force_ratio(&g).unwrap(),
            12.0 / 19.0,
            epsilon = 1e-12
        );
        let bad = CapstanGeometry {
            friction_coeff: 0.0,
            ..CapstanGeometry::prototype()
        };
        assert!(locking_force_ratio(&bad).is_err());
    }

    #[test]
    fn holding_force_prototype_is_cable_limited() {
        let hold = max_holding_force(
            &CapstanGeometry::prototype(),
            &SolenoidSpec::prototype(),
            &CableSpec::prototype(),
        )
        .unwrap();
        assert_eq!(hold.limit, HoldingLimit::Cable);
        assert_relative_eq!(hold.force_n, 2700.0, epsilon = 1e-9);
        // The capstan-side limit dwarfs the cable: 0.65 / 5.065e-10.
        assert!(hold.capstan_limit_n > 1.0e9);
    }

    #[test]
    fn holding_force_capstan_limited() {
        // Geometry tuned so lambda_F = 0.001 exactly: unit radius ratio and
        // mu*theta = ln(1000) over a single wrap.
        let g = CapstanGeometry {
            pulley_radius_mm: 12.0,
            drum_radius_mm: 12.0,
            drum_length_mm: 20.0,
            wire_diameter_mm: 2.4,
            friction_coeff: (1000.0f64).ln() / std::f64::consts::TAU,
            wrap_count_override: Some(1.0),
        };
        let strong_cable = CableSpec {
            breaking_strength_n: 1e9,
            ..CableSpec::prototype()
        };
        let hold = max_holding_force(&g, &SolenoidSpec::prototype(), &strong_cable).unwrap();
        assert_eq!(hold.limit, HoldingLimit::Capstan);
        assert_relative_eq!(hold.force_n, 650.0, epsilon = 1e-6);
    }

    #[test]
    fn holding_force_respects_safety_factor() {
        let cable = CableSpec {
            safety_factor: 2.0,
            ..CableSpec::prototype()
        };
        let hold = max_holding_force(
            &CapstanGeometry::prototype(),
            &SolenoidSpec::prototype(),
            &cable,
        )
        .unwrap();
        assert_relative_eq!(hold.force_n, 1350.0, epsilon = 1e-9);
    }

    #[test]
    fn holding_force_zero_pretension() {
        let solenoid = SolenoidSpec {
            pretension_force_n: 0.0,
            ..SolenoidSpec::prototype()
        };
        assert_eq!(
            max_holding_force(
                &CapstanGeometry::prototype(),
                &solenoid,
                &CableSpec::prototype()
            ),
            Err(Error::NoPretension)
        );
    }

    #[test]
    fn unlock_energy_prototype() {
        let e = unlock_energy(&SolenoidSpec::prototype()).unwrap();
        assert_relative_eq!(e, 0.09, epsilon = 1e-12);
        assert!(e < 0.1);
    }

    #[test]
    fn unlock_energy_scales_with_time() {
        let mut s = SolenoidSpec::prototype();
        s.actuation_time_s = 0.0;
        assert_eq!(unlock_energy(&s).unwrap(), 0.0);
        s.actuation_time_s = 0.020;
        assert_relative_eq!(unlock_energy(&s).unwrap(), 0.18, epsilon = 1e-12);
    }

    #[test]
    fn wraps_overflow_detection() {
        let mut g = CapstanGeometry::prototype();
        assert!(!g.wraps_overflow_drum());
        g.wire_diameter_mm = 25.0;
        assert!(g.wraps_overflow_drum());
        g = CapstanGeometry {
            wrap_count_override: Some(9.0),
            ..CapstanGeometry::prototype()
        };
        // 9 wraps of 2.4 mm need 21.6 mm of drum; only 20 available.
        assert!(g.wraps_overflow_drum());
    }
}
