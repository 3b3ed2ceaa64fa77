//! Versioned JSON reports. Every report embeds the fully resolved config
//! so results are reproducible from the report alone.

use std::path::Path;

use serde::Serialize;

use lockspring::{DesignCandidate, EfficiencyReport, InfeasibilityReport, OptimizationResult};

use crate::config::ToolkitConfig;

/// Current report schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Reference non-controllable ratchet-and-pawl clutch used as the
/// comparison row in summaries: 0.098 kg spring, 0.057 kg clutch.
pub const REFERENCE_RATCHET_SPRING_KG: f64 = 0.098;
pub const REFERENCE_RATCHET_CLUTCH_KG: f64 = 0.057;

#[derive(Debug, Serialize)]
pub struct AnalysisReport<'a> {
    pub schema_version: u32,
    pub kind: &'static str,
    pub trace_file: String,
    pub trace_samples: usize,
    /// Overall efficiency uses total losses over total loading work;
    /// `events[].eta_after` are the running per-event values.
    pub efficiency: &'a EfficiencyReport,
    pub config: &'a ToolkitConfig,
}

impl<'a> AnalysisReport<'a> {
    pub fn new(
        trace_file: String,
        trace_samples: usize,
        efficiency: &'a EfficiencyReport,
        config: &'a ToolkitConfig,
    ) -> Self {
        AnalysisReport {
            schema_version: SCHEMA_VERSION,
            kind: "analysis",
            trace_file,
            trace_samples,
            efficiency,
            config,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OptimizationReport<'a> {
    pub schema_version: u32,
    pub kind: &'static str,
    pub evaluations: usize,
    /// Ranked feasible candidates, truncated to the configured count.
    pub best: &'a [DesignCandidate],
    pub pareto_front: &'a [DesignCandidate],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infeasibility: Option<&'a InfeasibilityReport>,
    pub config: &'a ToolkitConfig,
}

impl<'a> OptimizationReport<'a> {
    pub fn new(result: &'a OptimizationResult, config: &'a ToolkitConfig) -> Self {
        let top_k = config.optimizer.report_top_k.min(result.candidates.len());
        OptimizationReport {
            schema_version: SCHEMA_VERSION,
            kind: "optimization",
            evaluations: result.evaluations,
            best: &result.candidates[..top_k],
            pareto_front: &result.pareto_front,
            infeasibility: result.infeasibility.as_ref(),
            config,
        }
    }
}

/// Writes a report as pretty-printed JSON.
pub fn write_json<T: Serialize>(report: &T, path: &Path) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(path, json + "\n")
        .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
    Ok(())
}

/// CSV lines for a Pareto front, fixed header
/// `lambda_F,mass_kg,r_p_mm,r_d_mm,l_d_mm,d_w_mm`.
pub fn pareto_front_csv(front: &[DesignCandidate]) -> String {
    let mut s = String::from("lambda_F,mass_kg,r_p_mm,r_d_mm,l_d_mm,d_w_mm\n");
    for c in front {
        s.push_str(&format!(
            "{:e},{},{},{},{},{}\n",
            c.lambda_f,
            c.estimated_clutch_mass_kg,
            c.geometry.pulley_radius_mm,
            c.geometry.drum_radius_mm,
            c.geometry.drum_length_mm,
            c.geometry.wire_diameter_mm,
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analysis_report_embeds_config_and_version() {
        let config = ToolkitConfig::default();
        let efficiency = EfficiencyReport {
            e_spring_j: 10.0,
            e_loss_j: 2.0,
            eta: 0.8,
            returned_j: 7.0,
            events: vec![],
            stored_energy_series_j: vec![],
            segment_counts: [1, 0, 1, 1, 0],
        };
        let report = AnalysisReport::new("t.csv".to_string(), 100, &efficiency, &config);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"schema_version\":1"));
        assert!(json.contains("\"stiffness_n_per_mm\":14.8"));
        assert!(json.contains("\"eta\":0.8"));
    }

    #[test]
    fn pareto_csv_header_is_exact() {
        let csv = pareto_front_csv(&[]);
        assert_eq!(csv, "lambda_F,mass_kg,r_p_mm,r_d_mm,l_d_mm,d_w_mm\n");
    }
}
