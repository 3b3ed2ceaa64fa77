//! Toolkit configuration: flat INI-style sections with `key = value` lines.
//!
//! The format trades nesting for line-accurate error reporting: every
//! parse or validation failure points at the offending line. Unknown
//! sections and keys are rejected; missing ones fall back to the prototype
//! defaults, and serializing a parsed config echoes every resolved value.
//!
//! Grammar (one item per line):
//!
//! ```text
//! config  = { blank | comment | section | pair }
//! comment = ("#" | ";") text
//! section = "[" name "]"
//! pair    = key "=" value        ; value: number, bool, word,
//!                                ;        or comma-separated numbers
//! ```

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;

use lockspring::{
    AnalysisConfig, Bounds, CableSpec, CapstanGeometry, DesignConstraints, LockLossModel,
    MaterialDensities, Objective, Protocol, SearchBudget, SimulationSettings, SolenoidSpec,
    SpringAssembly, SpringSpec, TensionerSpec,
};

/// Configuration error carrying the offending line when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            message: message.into(),
        }
    }

    fn plain(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "config line {n}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Capstan geometry plus the clutch-unit mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClutchSection {
    #[serde(flatten)]
    pub geometry: CapstanGeometry,
    /// Measured clutch-unit mass (kg) for density reporting.
    pub mass_kg: f64,
}

/// Crosshead protocol and trace emission settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolSection {
    pub lock_deflections_mm: Vec<f64>,
    pub final_release: bool,
    pub crosshead_speed_mm_per_s: f64,
    pub sample_rate_hz: f64,
    pub contact_force_threshold_n: f64,
}

/// Analyzer settings (stiffness and threshold come from other sections).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSection {
    pub slope_threshold_multiple: f64,
    pub slope_window_samples: usize,
}

/// Objective selector for the config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    MinLambda,
    MaxRhoE,
    Weighted,
}

/// Design-space bounds, mass model, and search budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerSection {
    pub objective: ObjectiveKind,
    pub weight_lambda: f64,
    pub weight_mass: f64,
    pub pulley_radius_min_mm: f64,
    pub pulley_radius_max_mm: f64,
    pub drum_radius_min_mm: f64,
    pub drum_radius_max_mm: f64,
    pub drum_length_min_mm: f64,
    pub drum_length_max_mm: f64,
    pub wire_diameter_min_mm: f64,
    pub wire_diameter_max_mm: f64,
    pub friction_min: f64,
    pub friction_max: f64,
    pub max_envelope_mm: f64,
    pub required_holding_force_n: f64,
    pub wire_density_kg_per_mm3: f64,
    pub drum_density_kg_per_mm3: f64,
    pub drum_wall_thickness_mm: f64,
    pub housing_overhead_kg: f64,
    pub max_grid_points: usize,
    pub refine: bool,
    pub refine_seeds: usize,
    pub refine_rounds: usize,
    /// Candidates listed in the JSON report.
    pub report_top_k: usize,
}

/// Fully resolved toolkit configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolkitConfig {
    pub spring: SpringSpec,
    pub cable: CableSpec,
    pub tensioner: TensionerSpec,
    pub solenoid: SolenoidSpec,
    pub clutch: ClutchSection,
    pub loss_model: LockLossModel,
    pub protocol: ProtocolSection,
    pub analysis: AnalysisSection,
    pub optimizer: OptimizerSection,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        let constraints = DesignConstraints::prototype();
        let budget = SearchBudget::default();
        let densities = MaterialDensities::default();
        ToolkitConfig {
            spring: SpringSpec::prototype(),
            cable: CableSpec::prototype(),
            tensioner: TensionerSpec::prototype(),
            solenoid: SolenoidSpec::prototype(),
            clutch: ClutchSection {
                geometry: CapstanGeometry::prototype(),
                mass_kg: 0.62,
            },
            loss_model: LockLossModel::default(),
            protocol: ProtocolSection {
                lock_deflections_mm: vec![10.0, 30.0, 50.0, 70.0, 90.0],
                final_release: true,
                crosshead_speed_mm_per_s: 0.5,
                sample_rate_hz: 100.0,
                contact_force_threshold_n: 0.5,
            },
            analysis: AnalysisSection {
                slope_threshold_multiple: 3.0,
                slope_window_samples: 5,
            },
            optimizer: OptimizerSection {
                objective: ObjectiveKind::MinLambda,
                weight_lambda: 1.0,
                weight_mass: 1.0,
                pulley_radius_min_mm: constraints.pulley_radius_mm.min,
                pulley_radius_max_mm: constraints.pulley_radius_mm.max,
                drum_radius_min_mm: constraints.drum_radius_mm.min,
                drum_radius_max_mm: constraints.drum_radius_mm.max,
                drum_length_min_mm: constraints.drum_length_mm.min,
                drum_length_max_mm: constraints.drum_length_mm.max,
                wire_diameter_min_mm: constraints.wire_diameter_mm.min,
                wire_diameter_max_mm: constraints.wire_diameter_mm.max,
                friction_min: constraints.friction_coeff.min,
                friction_max: constraints.friction_coeff.max,
                max_envelope_mm: constraints.max_envelope_mm,
                required_holding_force_n: constraints.required_holding_force_n,
                wire_density_kg_per_mm3: densities.wire_kg_per_mm3,
                drum_density_kg_per_mm3: densities.drum_kg_per_mm3,
                drum_wall_thickness_mm: densities.drum_wall_thickness_mm,
                housing_overhead_kg: densities.overhead_kg,
                max_grid_points: budget.max_grid_points,
                refine: budget.refine,
                refine_seeds: budget.refine_seeds,
                refine_rounds: budget.refine_rounds,
                report_top_k: 20,
            },
        }
    }
}

impl ToolkitConfig {
    pub fn assembly(&self) -> SpringAssembly {
        SpringAssembly {
            spring: self.spring,
            cable: self.cable,
            tensioner: self.tensioner,
            solenoid: self.solenoid,
            geometry: self.clutch.geometry,
            clutch_mass_kg: self.clutch.mass_kg,
        }
    }

    pub fn simulation_settings(&self) -> SimulationSettings {
        SimulationSettings {
            sample_rate_hz: self.protocol.sample_rate_hz,
            contact_force_threshold_n: self.protocol.contact_force_threshold_n,
        }
    }

    pub fn protocol(&self) -> Protocol {
        Protocol::sequential_accumulation(
            &self.protocol.lock_deflections_mm,
            self.protocol.final_release,
        )
        .with_speed(self.protocol.crosshead_speed_mm_per_s)
    }

    pub fn analysis_config(&self) -> AnalysisConfig {
        AnalysisConfig {
            stiffness_n_per_mm: self.spring.stiffness_n_per_mm,
            slope_threshold_multiple: self.analysis.slope_threshold_multiple,
            slope_window_samples: self.analysis.slope_window_samples,
            contact_force_threshold_n: self.protocol.contact_force_threshold_n,
            ..AnalysisConfig::default()
        }
    }

    pub fn constraints(&self) -> DesignConstraints {
        let o = &self.optimizer;
        DesignConstraints {
            pulley_radius_mm: Bounds::new(o.pulley_radius_min_mm, o.pulley_radius_max_mm),
            drum_radius_mm: Bounds::new(o.drum_radius_min_mm, o.drum_radius_max_mm),
            drum_length_mm: Bounds::new(o.drum_length_min_mm, o.drum_length_max_mm),
            wire_diameter_mm: Bounds::new(o.wire_diameter_min_mm, o.wire_diameter_max_mm),
            friction_coeff: Bounds::new(o.friction_min, o.friction_max),
            max_envelope_mm: o.max_envelope_mm,
            required_holding_force_n: o.required_holding_force_n,
            cable: self.cable,
            solenoid: self.solenoid,
            densities: MaterialDensities {
                wire_kg_per_mm3: o.wire_density_kg_per_mm3,
                drum_kg_per_mm3: o.drum_density_kg_per_mm3,
                drum_wall_thickness_mm: o.drum_wall_thickness_mm,
                overhead_kg: o.housing_overhead_kg,
            },
            reference_spring: self.spring,
        }
    }

    pub fn objective(&self) -> Objective {
        match self.optimizer.objective {
            ObjectiveKind::MinLambda => Objective::MinimizeLambdaF,
            ObjectiveKind::MaxRhoE => Objective::MaximizeRhoE,
            ObjectiveKind::Weighted => Objective::Weighted {
                lambda_weight: self.optimizer.weight_lambda,
                mass_weight: self.optimizer.weight_mass,
            },
        }
    }

    pub fn budget(&self) -> SearchBudget {
        SearchBudget {
            max_grid_points: self.optimizer.max_grid_points,
            refine: self.optimizer.refine,
            refine_seeds: self.optimizer.refine_seeds,
            refine_rounds: self.optimizer.refine_rounds,
        }
    }
}

const SECTIONS: &[&str] = &[
    "spring",
    "cable",
    "tensioner",
    "solenoid",
    "clutch",
    "loss_model",
    "protocol",
    "analysis",
    "optimizer",
];

/// Parses and fully validates a config file.
pub fn parse_config(path: &Path) -> Result<ToolkitConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::plain(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Parses and fully validates config text. An empty input yields the
/// prototype defaults.
pub fn parse_config_str(text: &str) -> Result<ToolkitConfig, ConfigError> {
    let mut config = ToolkitConfig::default();
    let mut section: Option<String> = None;
    let mut seen: HashMap<(String, String), usize> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line_no, "unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::at(
                    line_no,
                    format!(
                        "unknown section [{name}]; expected one of [{}]",
                        SECTIONS.join("], [")
                    ),
                ));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::at(line_no, format!("expected `key = value`, got `{line}`"))
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigError::at(line_no, "empty key"));
        }
        let section = section
            .as_deref()
            .ok_or_else(|| ConfigError::at(line_no, format!("key `{key}` before any section")))?;
        if seen
            .insert((section.to_string(), key.to_string()), line_no)
            .is_some()
        {
            return Err(ConfigError::at(
                line_no,
                format!("duplicate key `{key}` in [{section}]"),
            ));
        }
        apply_key(&mut config, section, key, value, line_no)?;
    }

    validate_config(&config, &seen)?;
    Ok(config)
}

fn parse_f64(value: &str, key: &str, line: usize) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .map_err(|_| ConfigError::at(line, format!("`{key}` expects a number, got `{value}`")))
}

fn parse_usize(value: &str, key: &str, line: usize) -> Result<usize, ConfigError> {
    value.parse::<usize>().map_err(|_| {
        ConfigError::at(line, format!("`{key}` expects a non-negative integer, got `{value}`"))
    })
}

fn parse_bool(value: &str, key: &str, line: usize) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::at(
            line,
            format!("`{key}` expects true or false, got `{value}`"),
        )),
    }
}

fn parse_list_f64(value: &str, key: &str, line: usize) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|item| {
            let item = item.trim();
            item.parse::<f64>().map_err(|_| {
                ConfigError::at(
                    line,
                    format!("`{key}` expects comma-separated numbers, got `{item}`"),
                )
            })
        })
        .collect()
}

fn apply_key(
    config: &mut ToolkitConfig,
    section: &str,
    key: &str,
    value: &str,
    line: usize,
) -> Result<(), ConfigError> {
    let f = |v: &str| parse_f64(v, key, line);
    match (section, key) {
        ("spring", "stiffness_N_per_mm") => config.spring.stiffness_n_per_mm = f(value)?,
        ("spring", "free_length_mm") => config.spring.free_length_mm = f(value)?,
        ("spring", "max_deflection_mm") => config.spring.max_deflection_mm = f(value)?,
        ("spring", "mass_kg") => config.spring.mass_kg = f(value)?,

        ("cable", "breaking_strength_N") => config.cable.breaking_strength_n = f(value)?,
        ("cable", "elongation_fraction_at_break") => {
            config.cable.elongation_fraction_at_break = f(value)?
        }
        ("cable", "routed_length_mm") => config.cable.routed_length_mm = f(value)?,
        ("cable", "safety_factor") => config.cable.safety_factor = f(value)?,

        ("tensioner", "torque_mNm") => config.tensioner.torque_mnm = f(value)?,

        ("solenoid", "pretension_force_N") => config.solenoid.pretension_force_n = f(value)?,
        ("solenoid", "drive_voltage_V") => config.solenoid.drive_voltage_v = f(value)?,
        ("solenoid", "drive_current_A") => config.solenoid.drive_current_a = f(value)?,
        ("solenoid", "actuation_time_s") => config.solenoid.actuation_time_s = f(value)?,

        ("clutch", "pulley_radius_mm") => config.clutch.geometry.pulley_radius_mm = f(value)?,
        ("clutch", "drum_radius_mm") => config.clutch.geometry.drum_radius_mm = f(value)?,
        ("clutch", "drum_length_mm") => config.clutch.geometry.drum_length_mm = f(value)?,
        ("clutch", "wire_diameter_mm") => config.clutch.geometry.wire_diameter_mm = f(value)?,
        ("clutch", "friction_coeff") => config.clutch.geometry.friction_coeff = f(value)?,
        ("clutch", "wrap_count_override") => {
            config.clutch.geometry.wrap_count_override = Some(f(value)?)
        }
        ("clutch", "mass_kg") => config.clutch.mass_kg = f(value)?,

        ("loss_model", "engagement_slip_mm") => config.loss_model.engagement_slip_mm = f(value)?,
        ("loss_model", "include_cable_compliance") => {
            config.loss_model.include_cable_compliance = parse_bool(value, key, line)?
        }

        ("protocol", "lock_deflections_mm") => {
            config.protocol.lock_deflections_mm = parse_list_f64(value, key, line)?
        }
        ("protocol", "final_release") => {
            config.protocol.final_release = parse_bool(value, key, line)?
        }
        ("protocol", "crosshead_speed_mm_per_s") => {
            config.protocol.crosshead_speed_mm_per_s = f(value)?
        }
        ("protocol", "sample_rate_Hz") => config.protocol.sample_rate_hz = f(value)?,
        ("protocol", "contact_force_threshold_N") => {
            config.protocol.contact_force_threshold_n = f(value)?
        }

        ("analysis", "slope_threshold_multiple") => {
            config.analysis.slope_threshold_multiple = f(value)?
        }
        ("analysis", "slope_window_samples") => {
            config.analysis.slope_window_samples = parse_usize(value, key, line)?
        }

        ("optimizer", "objective") => {
            config.optimizer.objective = match value {
                "min_lambda" => ObjectiveKind::MinLambda,
                "max_rho_e" => ObjectiveKind::MaxRhoE,
                "weighted" => ObjectiveKind::Weighted,
                _ => {
                    return Err(ConfigError::at(
                        line,
                        format!(
                            "`objective` expects min_lambda, max_rho_e, or weighted; got `{value}`"
                        ),
                    ))
                }
            }
        }
        ("optimizer", "weight_lambda") => config.optimizer.weight_lambda = f(value)?,
        ("optimizer", "weight_mass") => config.optimizer.weight_mass = f(value)?,
        ("optimizer", "pulley_radius_min_mm") => config.optimizer.pulley_radius_min_mm = f(value)?,
        ("optimizer", "pulley_radius_max_mm") => config.optimizer.pulley_radius_max_mm = f(value)?,
        ("optimizer", "drum_radius_min_mm") => config.optimizer.drum_radius_min_mm = f(value)?,
        ("optimizer", "drum_radius_max_mm") => config.optimizer.drum_radius_max_mm = f(value)?,
        ("optimizer", "drum_length_min_mm") => config.optimizer.drum_length_min_mm = f(value)?,
        ("optimizer", "drum_length_max_mm") => config.optimizer.drum_length_max_mm = f(value)?,
        ("optimizer", "wire_diameter_min_mm") => {
            config.optimizer.wire_diameter_min_mm = f(value)?
        }
        ("optimizer", "wire_diameter_max_mm") => {
            config.optimizer.wire_diameter_max_mm = f(value)?
        }
        ("optimizer", "friction_min") => config.optimizer.friction_min = f(value)?,
        ("optimizer", "friction_max") => config.optimizer.friction_max = f(value)?,
        ("optimizer", "max_envelope_mm") => config.optimizer.max_envelope_mm = f(value)?,
        ("optimizer", "required_holding_force_N") => {
            config.optimizer.required_holding_force_n = f(value)?
        }
        ("optimizer", "wire_density_kg_per_mm3") => {
            config.optimizer.wire_density_kg_per_mm3 = f(value)?
        }
        ("optimizer", "drum_density_kg_per_mm3") => {
            config.optimizer.drum_density_kg_per_mm3 = f(value)?
        }
        ("optimizer", "drum_wall_thickness_mm") => {
            config.optimizer.drum_wall_thickness_mm = f(value)?
        }
        ("optimizer", "housing_overhead_kg") => config.optimizer.housing_overhead_kg = f(value)?,
        ("optimizer", "max_grid_points") => {
            config.optimizer.max_grid_points = parse_usize(value, key, line)?
        }
        ("optimizer", "refine") => config.optimizer.refine = parse_bool(value, key, line)?,
        ("optimizer", "refine_seeds") => {
            config.optimizer.refine_seeds = parse_usize(value, key, line)?
        }
        ("optimizer", "refine_rounds") => {
            config.optimizer.refine_rounds = parse_usize(value, key, line)?
        }
        ("optimizer", "report_top_k") => {
            config.optimizer.report_top_k = parse_usize(value, key, line)?
        }

        _ => {
            return Err(ConfigError::at(
                line,
                format!("unknown key `{key}` in section [{section}]"),
            ))
        }
    }
    Ok(())
}

/// Maps a core validation error back to the config line that set the value.
fn locate(
    seen: &HashMap<(String, String), usize>,
    section: &str,
    err: &lockspring::Error,
) -> ConfigError {
    let field = match err {
        lockspring::Error::InvalidField { field, .. } => Some(field.clone()),
        _ => None,
    };
    let line = field.as_deref().and_then(|f| {
        seen.iter()
            .find(|((s, k), _)| s == section && k.to_lowercase() == f)
            .map(|(_, &l)| l)
    });
    ConfigError {
        line,
        message: format!("[{section}] {err}"),
    }
}

fn validate_config(
    config: &ToolkitConfig,
    seen: &HashMap<(String, String), usize>,
) -> Result<(), ConfigError> {
    config
        .spring
        .validate()
        .map_err(|e| locate(seen, "spring", &e))?;
    config
        .cable
        .validate()
        .map_err(|e| locate(seen, "cable", &e))?;
    config
        .tensioner
        .validate()
        .map_err(|e| locate(seen, "tensioner", &e))?;
    config
        .solenoid
        .validate()
        .map_err(|e| locate(seen, "solenoid", &e))?;
    config
        .clutch
        .geometry
        .validate()
        .map_err(|e| locate(seen, "clutch", &e))?;
    if config.clutch.mass_kg <= 0.0 || !config.clutch.mass_kg.is_finite() {
        return Err(locate(
            seen,
            "clutch",
            &lockspring::Error::InvalidField {
                field: "mass_kg".to_string(),
                reason: format!("must be finite and strictly positive, got {}", config.clutch.mass_kg),
            },
        ));
    }
    config
        .loss_model
        .validate()
        .map_err(|e| locate(seen, "loss_model", &e))?;
    config
        .simulation_settings()
        .validate()
        .map_err(|e| locate(seen, "protocol", &e))?;
    config
        .protocol()
        .validate(&config.spring)
        .map_err(|e| locate(seen, "protocol", &e))?;
    config
        .analysis_config()
        .validate()
        .map_err(|e| locate(seen, "analysis", &e))?;
    config
        .constraints()
        .validate()
        .map_err(|e| locate(seen, "optimizer", &e))?;
    Ok(())
}

fn fmt_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Serializes a config in canonical section and key order. Parsing the
/// output reproduces the config exactly.
pub fn serialize_config(c: &ToolkitConfig) -> String {
    let mut s = String::new();
    let pair = |out: &mut String, k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };

    s.push_str("[spring]\n");
    pair(&mut s, "stiffness_N_per_mm", c.spring.stiffness_n_per_mm.to_string());
    pair(&mut s, "free_length_mm", c.spring.free_length_mm.to_string());
    pair(&mut s, "max_deflection_mm", c.spring.max_deflection_mm.to_string());
    pair(&mut s, "mass_kg", c.spring.mass_kg.to_string());

    s.push_str("\n[cable]\n");
    pair(&mut s, "breaking_strength_N", c.cable.breaking_strength_n.to_string());
    pair(
        &mut s,
        "elongation_fraction_at_break",
        c.cable.elongation_fraction_at_break.to_string(),
    );
    pair(&mut s, "routed_length_mm", c.cable.routed_length_mm.to_string());
    pair(&mut s, "safety_factor", c.cable.safety_factor.to_string());

    s.push_str("\n[tensioner]\n");
    pair(&mut s, "torque_mNm", c.tensioner.torque_mnm.to_string());

    s.push_str("\n[solenoid]\n");
    pair(&mut s, "pretension_force_N", c.solenoid.pretension_force_n.to_string());
    pair(&mut s, "drive_voltage_V", c.solenoid.drive_voltage_v.to_string());
    pair(&mut s, "drive_current_A", c.solenoid.drive_current_a.to_string());
    pair(&mut s, "actuation_time_s", c.solenoid.actuation_time_s.to_string());

    s.push_str("\n[clutch]\n");
    let g = &c.clutch.geometry;
    pair(&mut s, "pulley_radius_mm", g.pulley_radius_mm.to_string());
    pair(&mut s, "drum_radius_mm", g.drum_radius_mm.to_string());
    pair(&mut s, "drum_length_mm", g.drum_length_mm.to_string());
    pair(&mut s, "wire_diameter_mm", g.wire_diameter_mm.to_string());
    pair(&mut s, "friction_coeff", g.friction_coeff.to_string());
    if let Some(n) = g.wrap_count_override {
        pair(&mut s, "wrap_count_override", n.to_string());
    }
    pair(&mut s, "mass_kg", c.clutch.mass_kg.to_string());

    s.push_str("\n[loss_model]\n");
    pair(&mut s, "engagement_slip_mm", c.loss_model.engagement_slip_mm.to_string());
    pair(
        &mut s,
        "include_cable_compliance",
        c.loss_model.include_cable_compliance.to_string(),
    );

    s.push_str("\n[protocol]\n");
    pair(&mut s, "lock_deflections_mm", fmt_list(&c.protocol.lock_deflections_mm));
    pair(&mut s, "final_release", c.protocol.final_release.to_string());
    pair(
        &mut s,
        "crosshead_speed_mm_per_s",
        c.protocol.crosshead_speed_mm_per_s.to_string(),
    );
    pair(&mut s, "sample_rate_Hz", c.protocol.sample_rate_hz.to_string());
    pair(
        &mut s,
        "contact_force_threshold_N",
        c.protocol.contact_force_threshold_n.to_string(),
    );

    s.push_str("\n[analysis]\n");
    pair(
        &mut s,
        "slope_threshold_multiple",
        c.analysis.slope_threshold_multiple.to_string(),
    );
    pair(
        &mut s,
        "slope_window_samples",
        c.analysis.slope_window_samples.to_string(),
    );

    s.push_str("\n[optimizer]\n");
    let o = &c.optimizer;
    let objective = match o.objective {
        ObjectiveKind::MinLambda => "min_lambda",
        ObjectiveKind::MaxRhoE => "max_rho_e",
        ObjectiveKind::Weighted => "weighted",
    };
    pair(&mut s, "objective", objective.to_string());
    pair(&mut s, "weight_lambda", o.weight_lambda.to_string());
    pair(&mut s, "weight_mass", o.weight_mass.to_string());
    pair(&mut s, "pulley_radius_min_mm", o.pulley_radius_min_mm.to_string());
    pair(&mut s, "pulley_radius_max_mm", o.pulley_radius_max_mm.to_string());
    pair(&mut s, "drum_radius_min_mm", o.drum_radius_min_mm.to_string());
    pair(&mut s, "drum_radius_max_mm", o.drum_radius_max_mm.to_string());
    pair(&mut s, "drum_length_min_mm", o.drum_length_min_mm.to_string());
    pair(&mut s, "drum_length_max_mm", o.drum_length_max_mm.to_string());
    pair(&mut s, "wire_diameter_min_mm", o.wire_diameter_min_mm.to_string());
    pair(&mut s, "wire_diameter_max_mm", o.wire_diameter_max_mm.to_string());
    pair(&mut s, "friction_min", o.friction_min.to_string());
    pair(&mut s, "friction_max", o.friction_max.to_string());
    pair(&mut s, "max_envelope_mm", o.max_envelope_mm.to_string());
    pair(
        &mut s,
        "required_holding_force_N",
        o.required_holding_force_n.to_string(),
    );
    pair(
        &mut s,
        "wire_density_kg_per_mm3",
        o.wire_density_kg_per_mm3.to_string(),
    );
    pair(
        &mut s,
        "drum_density_kg_per_mm3",
        o.drum_density_kg_per_mm3.to_string(),
    );
    pair(
        &mut s,
        "drum_wall_thickness_mm",
        o.drum_wall_thickness_mm.to_string(),
    );
    pair(&mut s, "housing_overhead_kg", o.housing_overhead_kg.to_string());
    pair(&mut s, "max_grid_points", o.max_grid_points.to_string());
    pair(&mut s, "refine", o.refine.to_string());
    pair(&mut s, "refine_seeds", o.refine_seeds.to_string());
    pair(&mut s, "refine_rounds", o.refine_rounds.to_string());
    pair(&mut s, "report_top_k", o.report_top_k.to_string());
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_gives_prototype_defaults() {
        let c = parse_config_str("").unwrap();
        assert_eq!(c, ToolkitConfig::default());
        assert_eq!(c.spring.stiffness_n_per_mm, 14.8);
        assert_eq!(c.clutch.geometry.pulley_radius_mm, 12.0);
    }

    #[test]
    fn round_trip_is_identity() {
        let mut c = ToolkitConfig::default();
        c.spring.stiffness_n_per_mm = 17.25;
        c.clutch.geometry.wrap_count_override = Some(6.0);
        c.protocol.lock_deflections_mm = vec![5.0, 12.5, 44.0];
        c.optimizer.objective = ObjectiveKind::Weighted;
        let text = serialize_config(&c);
        let parsed = parse_config_str(&text).unwrap();
        assert_eq!(parsed, c);
        // And a second generation is byte-identical.
        assert_eq!(serialize_config(&parsed), text);
    }

    #[test]
    fn negative_stiffness_names_key_and_line() {
        let err = parse_config_str("[spring]\nstiffness_N_per_mm = -1\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(err.message.contains("stiffness_n_per_mm"), "{}", err.message);
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let err = parse_config_str("[spring]\nstiffnes = 14.8\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(err.message.contains("unknown key"));
    }

    #[test]
    fn unknown_section_is_rejected() {
        let err = parse_config_str("[sprang]\n").unwrap_err();
        assert_eq!(err.line, Some(1));
        assert!(err.message.contains("unknown section"));
    }

    #[test]
    fn key_without_section_is_rejected() {
        let err = parse_config_str("stiffness_N_per_mm = 14.8\n").unwrap_err();
        assert_eq!(err.line, Some(1));
        assert!(err.message.contains("before any section"));
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let err = parse_config_str("[spring]\nmass_kg = 1\nmass_kg = 2\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.message.contains("duplicate"));
    }

    #[test]
    fn malformed_number_is_rejected() {
        let err = parse_config_str("[spring]\nmass_kg = heavy\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(err.message.contains("expects a number"));
    }

    #[test]
    fn non_monotone_protocol_is_rejected() {
        let err =
            parse_config_str("[protocol]\nlock_deflections_mm = 30, 10\n").unwrap_err();
        assert!(err.message.contains("must not decrease"), "{}", err.message);
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let text = "# leading comment\n\n[spring]\n; semicolon comment\nmass_kg = 2.0\n";
        let c = parse_config_str(text).unwrap();
        assert_eq!(c.spring.mass_kg, 2.0);
    }
}
