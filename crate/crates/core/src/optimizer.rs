//! Clutch design-space exploration: deterministic grid search with
//! coordinate-descent refinement under size and strength constraints.
//!
//! The search minimizes the locking-force ratio, maximizes mass-energy
//! density (equivalently, minimizes estimated clutch mass), or a weighted
//! blend. The objective is smooth and monotone in each geometry parameter,
//! so a coarse grid plus local refinement beats stochastic methods and
//! keeps results reproducible: identical inputs give identical rankings,
//! and with refinement disabled the ranking equals brute-force enumeration
//! of the same grid.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clutch::{
    locking_force_ratio, max_holding_force, CapstanGeometry, HoldingLimit, SolenoidSpec,
};
use crate::error::{require_positive, Error, Result};
use crate::spring::{CableSpec, SpringSpec};

/// Mass-model overhead committed after calibrating against the prototype
/// clutch unit: 0.62 kg total for the prototype geometry with steel wire
/// (7.85e-6 kg/mm^3), an aluminum drum shell (2.70e-6 kg/mm^3, 3 mm wall),
/// and this constant covering housing, solenoid, shaft, and bearings.
pub const DEFAULT_CLUTCH_OVERHEAD_KG: f64 = 0.5646266135770082;

/// Inclusive parameter interval; a degenerate interval pins the parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    pub fn new(min: f64, max: f64) -> Self {
        Bounds { min, max }
    }

    /// A single admissible value.
    pub fn fixed(value: f64) -> Self {
        Bounds {
            min: value,
            max: value,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.min == self.max
    }

    fn tol(&self) -> f64 {
        1e-9 * (self.min.abs() + self.max.abs() + 1.0)
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min - self.tol() && value <= self.max + self.tol()
    }

    fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }

    fn validate(&self, field: &str) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() || self.min > self.max {
            return Err(Error::field(
                field,
                format!("bounds [{}, {}] invalid (need min <= max)", self.min, self.max),
            ));
        }
        Ok(())
    }
}

/// Densities and fixed terms of the clutch mass model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialDensities {
    /// Brake wire density (kg/mm^3).
    pub wire_kg_per_mm3: f64,
    /// Drum material density (kg/mm^3).
    pub drum_kg_per_mm3: f64,
    /// Drum shell wall thickness (mm), capped at the drum radius.
    pub drum_wall_thickness_mm: f64,
    /// Housing, solenoid, shaft, and bearing mass (kg).
    pub overhead_kg: f64,
}

impl Default for MaterialDensities {
    fn default() -> Self {
        MaterialDensities {
            wire_kg_per_mm3: 7.85e-6,
            drum_kg_per_mm3: 2.70e-6,
            drum_wall_thickness_mm: 3.0,
            overhead_kg: DEFAULT_CLUTCH_OVERHEAD_KG,
        }
    }
}

impl MaterialDensities {
    pub fn validate(&self) -> Result<()> {
        require_positive("wire_kg_per_mm3", self.wire_kg_per_mm3)?;
        require_positive("drum_kg_per_mm3", self.drum_kg_per_mm3)?;
        require_positive("drum_wall_thickness_mm", self.drum_wall_thickness_mm)?;
        crate::error::require_non_negative("overhead_kg", self.overhead_kg)?;
        Ok(())
    }
}

/// Search space and requirements for clutch candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignConstraints {
    pub pulley_radius_mm: Bounds,
    pub drum_radius_mm: Bounds,
    pub drum_length_mm: Bounds,
    pub wire_diameter_mm: Bounds,
    /// Friction coefficient; degenerate when the material pair is fixed.
    pub friction_coeff: Bounds,
    /// Drum plus wire must fit inside this square envelope (mm).
    pub max_envelope_mm: f64,
    /// Candidates must hold at least this force (N).
    pub required_holding_force_n: f64,
    pub cable: CableSpec,
    pub solenoid: SolenoidSpec,
    pub densities: MaterialDensities,
    /// Spring the clutch will lock; sets the mass-energy density scale.
    pub reference_spring: SpringSpec,
}

impl DesignConstraints {
    /// Search space around the prototype: generous geometry bounds, fixed
    /// steel-on-aluminum friction, 80 mm envelope, 1 kN holding force.
    pub fn prototype() -> Self {
        DesignConstraints {
            pulley_radius_mm: Bounds::new(6.0, 24.0),
            drum_radius_mm: Bounds::new(10.0, 30.0),
            drum_length_mm: Bounds::new(10.0, 40.0),
            wire_diameter_mm: Bounds::new(1.0, 4.0),
            friction_coeff: Bounds::fixed(0.4),
            max_envelope_mm: 80.0,
            required_holding_force_n: 1000.0,
            cable: CableSpec::prototype(),
            solenoid: SolenoidSpec::prototype(),
            densities: MaterialDensities::default(),
            reference_spring: SpringSpec::prototype(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pulley_radius_mm.validate("pulley_radius_mm")?;
        self.drum_radius_mm.validate("drum_radius_mm")?;
        self.drum_length_mm.validate("drum_length_mm")?;
        self.wire_diameter_mm.validate("wire_diameter_mm")?;
        self.friction_coeff.validate("friction_coeff")?;
        for (field, b) in [
            ("pulley_radius_mm", &self.pulley_radius_mm),
            ("drum_radius_mm", &self.drum_radius_mm),
            ("drum_length_mm", &self.drum_length_mm),
            ("wire_diameter_mm", &self.wire_diameter_mm),
        ] {
            if b.min <= 0.0 {
                return Err(Error::field(field, "bounds must be strictly positive"));
            }
        }
        if self.friction_coeff.min <= 0.0 || self.friction_coeff.max > 2.0 {
            return Err(Error::field(
                "friction_coeff",
                "bounds must lie within (0, 2]",
            ));
        }
        require_positive("max_envelope_mm", self.max_envelope_mm)?;
        require_positive("required_holding_force_n", self.required_holding_force_n)?;
        self.cable.validate()?;
        self.solenoid.validate()?;
        self.densities.validate()?;
        self.reference_spring.validate()?;
        Ok(())
    }

    fn bounds(&self) -> [(&'static str, Bounds); 5] {
        [
            ("pulley_radius_mm", self.pulley_radius_mm),
            ("drum_radius_mm", self.drum_radius_mm),
            ("drum_length_mm", self.drum_length_mm),
            ("wire_diameter_mm", self.wire_diameter_mm),
            ("friction_coeff", self.friction_coeff),
        ]
    }
}

/// One way a candidate fails the constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// The wound wire overflows the drum length.
    WrapsDoNotFit {
        wraps: f64,
        wire_diameter_mm: f64,
        drum_length_mm: f64,
    },
    /// Drum plus wire exceed the envelope.
    EnvelopeExceeded { footprint_mm: f64, max_envelope_mm: f64 },
    /// Maximal holding force below the requirement.
    HoldingForceShort {
        available_n: f64,
        required_n: f64,
        limit: HoldingLimit,
    },
    /// A geometry field left its bounds.
    OutOfBounds {
        field: String,
        value: f64,
        min: f64,
        max: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WrapsDoNotFit {
                wraps,
                wire_diameter_mm,
                drum_length_mm,
            } => write!(
                f,
                "wraps do not fit: {wraps:.3} turns of {wire_diameter_mm} mm wire exceed \
                 the {drum_length_mm} mm drum"
            ),
            Violation::EnvelopeExceeded {
                footprint_mm,
                max_envelope_mm,
            } => write!(
                f,
                "envelope exceeded: footprint {footprint_mm:.2} mm > {max_envelope_mm} mm"
            ),
            Violation::HoldingForceShort {
                available_n,
                required_n,
                limit,
            } => match limit {
                HoldingLimit::Cable => write!(
                    f,
                    "cable-limited below requirement: {available_n:.1} N < {required_n:.1} N"
                ),
                HoldingLimit::Capstan => write!(
                    f,
                    "capstan-limited below requirement: {available_n:.1} N < {required_n:.1} N"
                ),
            },
            Violation::OutOfBounds {
                field,
                value,
                min,
                max,
            } => write!(f, "{field} = {value} outside bounds [{min}, {max}]"),
        }
    }
}

/// Kind label used in infeasibility summaries.
impl Violation {
    fn kind(&self) -> &'static str {
        match self {
            Violation::WrapsDoNotFit { .. } => "wraps_do_not_fit",
            Violation::EnvelopeExceeded { .. } => "envelope_exceeded",
            Violation::HoldingForceShort { .. } => "holding_force_short",
            Violation::OutOfBounds { .. } => "out_of_bounds",
        }
    }
}

/// A scored clutch geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignCandidate {
    pub geometry: CapstanGeometry,
    pub lambda_f: f64,
    pub estimated_clutch_mass_kg: f64,
    /// Mass-energy density against the reference spring.
    pub rho_e: f64,
    pub holding_force_n: f64,
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl DesignCandidate {
    /// Scores a geometry against the constraints. The wrap convention for
    /// search candidates is the packing limit (no override).
    pub fn evaluate(geometry: CapstanGeometry, constraints: &DesignConstraints) -> Result<Self> {
        geometry.validate()?;
        let lambda_f = locking_force_ratio(&geometry)?;
        let mass = estimate_clutch_mass(&geometry, &constraints.densities);
        let spring_mass = constraints.reference_spring.mass_kg;
        let rho_e = spring_mass / (spring_mass + mass);
        let holding = max_holding_force(&geometry, &constraints.solenoid, &constraints.cable)?;
        let violations = feasible(&geometry, constraints)?;
        Ok(DesignCandidate {
            geometry,
            lambda_f,
            estimated_clutch_mass_kg: mass,
            rho_e,
            holding_force_n: holding.force_n,
            feasible: violations.is_empty(),
            violations,
        })
    }
}

/// Collects every constraint violation of a geometry (empty = feasible).
pub fn feasible(
    geometry: &CapstanGeometry,
    constraints: &DesignConstraints,
) -> Result<Vec<Violation>> {
    geometry.validate()?;
    constraints.validate()?;
    let mut violations = Vec::new();

    if geometry.wraps_overflow_drum() {
        violations.push(Violation::WrapsDoNotFit {
            wraps: geometry.effective_wraps(),
            wire_diameter_mm: geometry.wire_diameter_mm,
            drum_length_mm: geometry.drum_length_mm,
        });
    }

    let footprint = 2.0 * (geometry.drum_radius_mm + geometry.wire_diameter_mm);
    if footprint > constraints.max_envelope_mm {
        violations.push(Violation::EnvelopeExceeded {
            footprint_mm: footprint,
            max_envelope_mm: constraints.max_envelope_mm,
        });
    }

    let holding = max_holding_force(geometry, &constraints.solenoid, &constraints.cable)?;
    if holding.force_n < constraints.required_holding_force_n {
        violations.push(Violation::HoldingForceShort {
            available_n: holding.force_n,
            required_n: constraints.required_holding_force_n,
            limit: holding.limit,
        });
    }

    let values = [
        geometry.pulley_radius_mm,
        geometry.drum_radius_mm,
        geometry.drum_length_mm,
        geometry.wire_diameter_mm,
        geometry.friction_coeff,
    ];
    for ((field, bounds), value) in constraints.bounds().iter().zip(values) {
        if !bounds.contains(value) {
            violations.push(Violation::OutOfBounds {
                field: (*field).to_string(),
                value,
                min: bounds.min,
                max: bounds.max,
            });
        }
    }
    Ok(violations)
}

/// Clutch mass estimate (kg): wire helix plus drum shell plus overhead.
///
/// Pure formula with no validation so degenerate geometries are usable as
/// limits; both size terms are linear in drum length.
pub fn estimate_clutch_mass(geometry: &CapstanGeometry, densities: &MaterialDensities) -> f64 {
    let d_w = geometry.wire_diameter_mm;
    let r_d = geometry.drum_radius_mm;
    let l_d = geometry.drum_length_mm;

    let wire_volume = if d_w > 0.0 {
        let wraps = geometry
            .wrap_count_override
            .unwrap_or(l_d / d_w);
        wraps * (std::f64::consts::TAU * (r_d + d_w / 2.0))
            * (std::f64::consts::PI * (d_w / 2.0) * (d_w / 2.0))
    } else {
        0.0
    };
    let wall = densities.drum_wall_thickness_mm.min(r_d);
    let inner = r_d - wall;
    let drum_volume = std::f64::consts::PI * (r_d * r_d - inner * inner) * l_d;

    wire_volume * densities.wire_kg_per_mm3
        + drum_volume * densities.drum_kg_per_mm3
        + densities.overhead_kg
}

/// Ranking objective; all variants are minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// Smallest locking-force ratio.
    MinimizeLambdaF,
    /// Largest mass-energy density (equivalently, lightest clutch).
    MaximizeRhoE,
    /// `lambda_weight * ln(lambda_F) + mass_weight * mass_kg`; the log puts
    /// the exponentially-spread ratio on a comparable scale.
    Weighted { lambda_weight: f64, mass_weight: f64 },
}

impl Objective {
    fn score(&self, c: &DesignCandidate) -> f64 {
        match *self {
            Objective::MinimizeLambdaF => c.lambda_f,
            Objective::MaximizeRhoE => -c.rho_e,
            Objective::Weighted {
                lambda_weight,
                mass_weight,
            } => lambda_weight * c.lambda_f.ln() + mass_weight * c.estimated_clutch_mass_kg,
        }
    }
}

/// Search effort limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Upper bound on coarse-grid points; sets the per-dimension resolution.
    pub max_grid_points: usize,
    /// Run coordinate-descent refinement from the best grid points.
    pub refine: bool,
    /// How many top grid candidates seed refinement.
    pub refine_seeds: usize,
    /// Maximum descent rounds per seed.
    pub refine_rounds: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_grid_points: 4096,
            refine: true,
            refine_seeds: 3,
            refine_rounds: 60,
        }
    }
}

/// Why the feasible region is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityReport {
    /// Grid points evaluated.
    pub evaluated: usize,
    /// Violation kinds with the number of grid points they exclude, most
    /// binding first.
    pub violation_counts: Vec<(String, usize)>,
}

/// Ranked feasible candidates plus the non-dominated front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    /// Feasible candidates, best first; deterministic given the inputs.
    pub candidates: Vec<DesignCandidate>,
    /// Non-dominated set in (lambda_F, mass), ascending lambda_F.
    pub pareto_front: Vec<DesignCandidate>,
    /// Total candidate evaluations (grid plus refinement probes).
    pub evaluations: usize,
    /// Present exactly when no grid point was feasible.
    pub infeasibility: Option<InfeasibilityReport>,
}

fn ranking_key(c: &DesignCandidate, objective: &Objective) -> [f64; 7] {
    [
        objective.score(c),
        c.lambda_f,
        c.estimated_clutch_mass_kg,
        c.geometry.drum_radius_mm,
        c.geometry.pulley_radius_mm,
        c.geometry.drum_length_mm,
        c.geometry.wire_diameter_mm,
    ]
}

fn compare_candidates(a: &DesignCandidate, b: &DesignCandidate, objective: &Objective) -> std::cmp::Ordering {
    let ka = ranking_key(a, objective);
    let kb = ranking_key(b, objective);
    for (x, y) in ka.iter().zip(kb.iter()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

fn grid_axis(bounds: Bounds, points: usize) -> Vec<f64> {
    if bounds.is_degenerate() || points <= 1 {
        return vec![bounds.min];
    }
    (0..points)
        .map(|i| bounds.min + (bounds.max - bounds.min) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Explores the design space: coarse grid, feasibility filter, objective
/// ranking, then coordinate descent from the best grid points. Results are
/// independent of evaluation order by construction of the final sort.
pub fn optimize(
    constraints: &DesignConstraints,
    objective: Objective,
    budget: &SearchBudget,
) -> Result<OptimizationResult> {
    constraints.validate()?;

    let dims = constraints.bounds();
    let active: Vec<bool> = dims.iter().map(|(_, b)| !b.is_degenerate()).collect();
    let n_active = active.iter().filter(|&&a| a).count();
    let per_dim = if n_active == 0 {
        1
    } else {
        let p = (budget.max_grid_points.max(1) as f64)
            .powf(1.0 / n_active as f64)
            .floor() as usize;
        p.clamp(2, budget.max_grid_points.max(2))
    };
    let axes: Vec<Vec<f64>> = dims
        .iter()
        .map(|(_, b)| grid_axis(*b, per_dim))
        .collect();

    let mut evaluations = 0usize;
    let mut feasible_pool: Vec<DesignCandidate> = Vec::new();
    let mut violation_counts: std::collections::BTreeMap<&'static str, usize> =
        std::collections::BTreeMap::new();

    let mut idx = [0usize; 5];
    loop {
        let geometry = CapstanGeometry {
            pulley_radius_mm: axes[0][idx[0]],
            drum_radius_mm: axes[1][idx[1]],
            drum_length_mm: axes[2][idx[2]],
            wire_diameter_mm: axes[3][idx[3]],
            friction_coeff: axes[4][idx[4]],
            wrap_count_override: None,
        };
        let candidate = DesignCandidate::evaluate(geometry, constraints)?;
        evaluations += 1;
        if candidate.feasible {
            feasible_pool.push(candidate);
        } else {
            for v in &candidate.violations {
                *violation_counts.entry(v.kind()).or_insert(0) += 1;
            }
        }
        // Advance the mixed-radix index.
        let mut carry = true;
        for d in (0..5).rev() {
            if !carry {
                break;
            }
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                carry = false;
            } else {
                idx[d] = 0;
            }
        }
        if carry {
            break;
        }
    }

    if feasible_pool.is_empty() {
        let mut counts: Vec<(String, usize)> = violation_counts
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        return Ok(OptimizationResult {
            candidates: Vec::new(),
            pareto_front: Vec::new(),
            evaluations,
            infeasibility: Some(InfeasibilityReport {
                evaluated: evaluations,
                violation_counts: counts,
            }),
        });
    }

    feasible_pool.sort_by(|a, b| compare_candidates(a, b, &objective));

    let mut ranked = feasible_pool.clone();
    if budget.refine {
        let spacings: Vec<f64> = dims
            .iter()
            .map(|(_, b)| {
                if b.is_degenerate() {
                    0.0
                } else {
                    (b.max - b.min) / (per_dim.max(2) - 1) as f64
                }
            })
            .collect();
        let seeds: Vec<DesignCandidate> = ranked
            .iter()
            .take(budget.refine_seeds.max(1))
            .cloned()
            .collect();
        for seed in seeds {
            let refined = refine_candidate(
                seed,
                constraints,
                &objective,
                &spacings,
                budget.refine_rounds,
                &mut evaluations,
            )?;
            feasible_pool.push(refined.clone());
            ranked.push(refined);
        }
        ranked.sort_by(|a, b| compare_candidates(a, b, &objective));
        ranked.dedup_by(|a, b| a.geometry == b.geometry);
    }

    let pareto_front = pareto(&feasible_pool);
    Ok(OptimizationResult {
        candidates: ranked,
        pareto_front,
        evaluations,
        infeasibility: None,
    })
}

/// Coordinate descent from a feasible seed; never returns a worse candidate
/// than the seed.
fn refine_candidate(
    seed: DesignCandidate,
    constraints: &DesignConstraints,
    objective: &Objective,
    spacings: &[f64],
    rounds: usize,
    evaluations: &mut usize,
) -> Result<DesignCandidate> {
    let dims = constraints.bounds();
    let mut steps: Vec<f64> = spacings.iter().map(|s| s / 2.0).collect();
    let mut best = seed;

    for _ in 0..rounds {
        let mut improved = false;
        for (d, (_, bounds)) in dims.iter().enumerate() {
            if steps[d] <= 0.0 {
                continue;
            }
            for dir in [-1.0, 1.0] {
                let mut g = best.geometry;
                let value = field_of(&g, d) + dir * steps[d];
                set_field(&mut g, d, bounds.clamp(value));
                if g == best.geometry {
                    continue;
                }
                let trial = DesignCandidate::evaluate(g, constraints)?;
                *evaluations += 1;
                if trial.feasible && objective.score(&trial) < objective.score(&best) {
                    best = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            for s in steps.iter_mut() {
                *s /= 2.0;
            }
            if steps.iter().all(|&s| s < 1e-9) {
                break;
            }
        }
    }
    Ok(best)
}

fn field_of(g: &CapstanGeometry, dim: usize) -> f64 {
    match dim {
        0 => g.pulley_radius_mm,
        1 => g.drum_radius_mm,
        2 => g.drum_length_mm,
        3 => g.wire_diameter_mm,
        _ => g.friction_coeff,
    }
}

fn set_field(g: &mut CapstanGeometry, dim: usize, value: f64) {
    match dim {
        0 => g.pulley_radius_mm = value,
        1 => g.drum_radius_mm = value,
        2 => g.drum_length_mm = value,
        3 => g.wire_diameter_mm = value,
        _ => g.friction_coeff = value,
    }
}

/// Non-dominated set in (lambda_F, mass), both minimized; ascending
/// lambda_F. Skyline sweep after sorting, so O(n log n).
fn pareto(pool: &[DesignCandidate]) -> Vec<DesignCandidate> {
    let mut sorted: Vec<&DesignCandidate> = pool.iter().collect();
    sorted.sort_by(|a, b| {
        a.lambda_f
            .total_cmp(&b.lambda_f)
            .then(a.estimated_clutch_mass_kg.total_cmp(&b.estimated_clutch_mass_kg))
            .then(a.geometry.drum_radius_mm.total_cmp(&b.geometry.drum_radius_mm))
    });
    let mut front: Vec<DesignCandidate> = Vec::new();
    let mut best_mass = f64::INFINITY;
    let mut last_lambda = f64::NAN;
    for c in sorted {
        if c.lambda_f == last_lambda {
            continue; // only the lightest survives per lambda value
        }
        if c.estimated_clutch_mass_kg < best_mass {
            front.push(c.clone());
            best_mass = c.estimated_clutch_mass_kg;
            last_lambda = c.lambda_f;
        }
    }
    front
}
