//! The five subcommands. File-emitting commands keep stdout data-free and
//! log progress to stderr, so they compose in pipelines.

use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, Context, Result};

use lockspring::{
    baseline_cable_tension, efficiency, locking_force_ratio, mass_energy_density,
    max_holding_force, optimize, pulley_angle, segment_trace, spring_force, stored_energy,
    unlock_energy, wrap_angle, AnalysisConfig, HoldingLimit, MassBudget, Simulator,
    WorkLoopTrace,
};

use crate::config::ToolkitConfig;
use crate::plot::render_analysis_svg;
use crate::report::{
    pareto_front_csv, write_json, AnalysisReport, OptimizationReport,
    REFERENCE_RATCHET_CLUTCH_KG, REFERENCE_RATCHET_SPRING_KG,
};
use crate::trace_io::{read_trace, write_trace};

fn limit_name(limit: HoldingLimit) -> &'static str {
    match limit {
        HoldingLimit::Cable => "cable-limited",
        HoldingLimit::Capstan => "capstan-limited",
    }
}

/// `clutch`: locking-force ratio, wrap angle, holding force, unlock energy.
pub fn cmd_clutch(config: &ToolkitConfig, out: &mut dyn Write) -> Result<()> {
    let geometry = &config.clutch.geometry;
    let theta = wrap_angle(geometry)?;
    let lambda = locking_force_ratio(geometry)?;
    let holding = max_holding_force(geometry, &config.solenoid, &config.cable)?;
    let energy = unlock_energy(&config.solenoid)?;
    let tension = baseline_cable_tension(&config.tensioner, geometry)?;

    writeln!(out, "capstan clutch")?;
    writeln!(out, "  wrap_count          = {:.6}", geometry.effective_wraps())?;
    writeln!(out, "  wrap_angle_rad      = {theta:.6}")?;
    writeln!(out, "  lambda_F            = {lambda:.6e}")?;
    writeln!(
        out,
        "  check: lambda_F < 0.001 -> {}",
        if lambda < 0.001 { "yes" } else { "no" }
    )?;
    writeln!(
        out,
        "  max_holding_force_N = {:.3} ({})",
        holding.force_n,
        limit_name(holding.limit)
    )?;
    writeln!(out, "    capstan_limit_N   = {:.6e}", holding.capstan_limit_n)?;
    writeln!(out, "    cable_limit_N     = {:.3}", holding.cable_limit_n)?;
    writeln!(
        out,
        "  unlock_peak_power_W = {:.3}",
        config.solenoid.peak_power_w()
    )?;
    writeln!(out, "  unlock_energy_J     = {energy:.6}")?;
    writeln!(out, "  cable_tension_rest_N = {tension:.4}")?;
    if geometry.wraps_overflow_drum() {
        eprintln!(
            "warning: {:.3} wraps of {} mm wire exceed the {} mm drum",
            geometry.effective_wraps(),
            geometry.wire_diameter_mm,
            geometry.drum_length_mm
        );
    }
    Ok(())
}

/// `simulate`: run the configured protocol and write the trace CSV.
pub fn cmd_simulate(config: &ToolkitConfig, out_path: &Path) -> Result<()> {
    let sim = Simulator::new(config.assembly(), config.loss_model)?
        .with_settings(config.simulation_settings())?;
    let protocol = config.protocol();
    let outcome = sim.run_protocol(&protocol)?;
    write_trace(&outcome.trace, out_path).map_err(|e| anyhow!("{e}"))?;

    let ledger = &outcome.ledger;
    eprintln!(
        "simulate: {} samples, {:.1} s of motion -> {}",
        outcome.trace.len(),
        outcome
            .trace
            .samples
            .last()
            .map(|s| s.time_s)
            .unwrap_or(0.0),
        out_path.display()
    );
    eprintln!(
        "simulate: work in {:.3} J = drops {:.3} + dissipation {:.3} + returned {:.3} + retained {:.3} (residual {:.2e})",
        ledger.work_in_j,
        ledger.lock_drop_j,
        ledger.engagement_dissipation_j,
        ledger.returned_j,
        ledger.retained_j,
        ledger.closure_residual_j()
    );
    for (i, ev) in outcome.lock_events.iter().enumerate() {
        eprintln!(
            "simulate: lock {} at {:.1} mm holds {:.1} N after {:.2} mm back-travel{}",
            i + 1,
            ev.locked_deflection_mm,
            ev.retained_force_n,
            ev.back_travel_mm,
            if ev.full_loss { " (full loss)" } else { "" }
        );
    }
    Ok(())
}

/// Picks the analyzer settings: explicit config wins, then trace metadata,
/// then defaults.
fn analysis_config_for(trace: &WorkLoopTrace, config: Option<&ToolkitConfig>) -> AnalysisConfig {
    match config {
        Some(c) => c.analysis_config(),
        None => {
            if trace.meta.stiffness_n_per_mm > 0.0 {
                AnalysisConfig::from_trace(trace)
            } else {
                eprintln!(
                    "analyze: trace carries no stiffness metadata; using default {} N/mm",
                    AnalysisConfig::default().stiffness_n_per_mm
                );
                AnalysisConfig::default()
            }
        }
    }
}

/// `analyze`: segment a trace, report efficiency, optionally plot.
pub fn cmd_analyze(
    trace_path: &Path,
    config: Option<&ToolkitConfig>,
    report_path: &Path,
    plot_path: Option<&Path>,
) -> Result<()> {
    let trace = read_trace(trace_path).map_err(|e| anyhow!("{e}"))?;
    let analysis_config = analysis_config_for(&trace, config);
    let segments = segment_trace(&trace, &analysis_config)?;
    let report = efficiency(&trace, &analysis_config)?;

    let resolved_config = config.cloned().unwrap_or_default();
    let json = AnalysisReport::new(
        trace_path.display().to_string(),
        trace.len(),
        &report,
        &resolved_config,
    );
    write_json(&json, report_path)?;
    eprintln!(
        "analyze: {} samples -> {} lock drops, E_spring {:.3} J, E_loss {:.3} J, eta {:.4}",
        trace.len(),
        report.segment_counts[2],
        report.e_spring_j,
        report.e_loss_j,
        report.eta
    );
    eprintln!("analyze: report -> {}", report_path.display());

    if let Some(plot) = plot_path {
        let svg = render_analysis_svg(&trace, &segments, &report);
        std::fs::write(plot, svg)
            .with_context(|| format!("cannot write {}", plot.display()))?;
        eprintln!("analyze: plot -> {}", plot.display());
    }
    Ok(())
}

/// `optimize`: explore the design space, write the JSON report and the
/// Pareto front CSV.
pub fn cmd_optimize(config: &ToolkitConfig, report_path: &Path, front_path: &Path) -> Result<()> {
    let constraints = config.constraints();
    let objective = config.objective();
    let budget = config.budget();
    let result = optimize(&constraints, objective, &budget)?;

    let json = OptimizationReport::new(&result, config);
    write_json(&json, report_path)?;
    std::fs::write(front_path, pareto_front_csv(&result.pareto_front))
        .with_context(|| format!("cannot write {}", front_path.display()))?;

    match &result.infeasibility {
        Some(infeasibility) => {
            eprintln!(
                "optimize: no feasible candidate among {} grid points",
                infeasibility.evaluated
            );
            for (kind, count) in &infeasibility.violation_counts {
                eprintln!("optimize: binding constraint {kind} excluded {count} points");
            }
        }
        None => {
            let best = &result.candidates[0];
            eprintln!(
                "optimize: {} evaluations, {} ranked candidates, best lambda_F {:.4e}, mass {:.3} kg, rho_E {:.3}",
                result.evaluations,
                result.candidates.len(),
                best.lambda_f,
                best.estimated_clutch_mass_kg,
                best.rho_e
            );
            eprintln!(
                "optimize: report -> {}, front ({} points) -> {}",
                report_path.display(),
                result.pareto_front.len(),
                front_path.display()
            );
        }
    }
    Ok(())
}

/// `report`: combined human-readable summary.
pub fn cmd_report(
    config: &ToolkitConfig,
    trace_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let spring = &config.spring;
    let geometry = &config.clutch.geometry;
    let max_force = spring_force(spring, spring.max_deflection_mm)?;
    let max_energy = stored_energy(spring, spring.max_deflection_mm)?;
    let lambda = locking_force_ratio(geometry)?;
    let theta = wrap_angle(geometry)?;
    let holding = max_holding_force(geometry, &config.solenoid, &config.cable)?;
    let energy = unlock_energy(&config.solenoid)?;
    let tension = baseline_cable_tension(&config.tensioner, geometry)?;
    let wind = pulley_angle(spring.max_deflection_mm, geometry)?;
    let rho = mass_energy_density(&config.assembly().mass_budget())?;
    let rho_ref = mass_energy_density(&MassBudget {
        spring_side_mass_kg: REFERENCE_RATCHET_SPRING_KG,
        clutch_mass_kg: REFERENCE_RATCHET_CLUTCH_KG,
    })?;

    writeln!(out, "lockable compression spring summary")?;
    writeln!(out, "===================================")?;
    writeln!(
        out,
        "spring      k = {} N/mm, travel {} mm, free length {} mm",
        spring.stiffness_n_per_mm, spring.max_deflection_mm, spring.free_length_mm
    )?;
    writeln!(out, "  max force             {max_force:.1} N")?;
    writeln!(out, "  max stored energy     {max_energy:.2} J")?;
    writeln!(out, "clutch")?;
    writeln!(
        out,
        "  lambda_F              {:.4e}  (lambda_F < 0.001: {})",
        lambda,
        if lambda < 0.001 { "yes" } else { "no" }
    )?;
    writeln!(
        out,
        "  wrap angle            {:.3} rad ({:.3} wraps)",
        theta,
        geometry.effective_wraps()
    )?;
    writeln!(
        out,
        "  max holding force     {:.1} N ({})",
        holding.force_n,
        limit_name(holding.limit)
    )?;
    writeln!(
        out,
        "  unlock energy         {:.3} J ({:.2}% of max stored)",
        energy,
        100.0 * energy / max_energy
    )?;
    writeln!(out, "  cable tension at rest {tension:.2} N")?;
    writeln!(out, "  pulley wind, full travel {wind:.2} rad")?;
    writeln!(out, "mass-energy density")?;
    writeln!(
        out,
        "  this design           rho_E = {:.3}  ({} kg spring side + {} kg clutch)",
        rho, spring.mass_kg, config.clutch.mass_kg
    )?;
    writeln!(
        out,
        "  reference ratchet     rho_E = {:.3}  ({} kg spring + {} kg clutch)",
        rho_ref, REFERENCE_RATCHET_SPRING_KG, REFERENCE_RATCHET_CLUTCH_KG
    )?;

    if let Some(path) = trace_path {
        let trace = read_trace(path).map_err(|e| anyhow!("{e}"))?;
        let analysis_config = analysis_config_for(&trace, Some(config));
        let report = efficiency(&trace, &analysis_config)?;
        writeln!(out, "efficiency (from {})", path.display())?;
        writeln!(out, "  loading work          {:.3} J", report.e_spring_j)?;
        writeln!(out, "  lock-drop losses      {:.3} J", report.e_loss_j)?;
        writeln!(out, "  eta                   {:.1}%", 100.0 * report.eta)?;
        for ev in &report.events {
            writeln!(
                out,
                "    event {}: lock at {:.1} mm, stored {:.2} J, loss {:.3} J, eta so far {:.1}%",
                ev.event,
                ev.lock_deflection_mm,
                ev.stored_at_lock_j,
                ev.loss_j,
                100.0 * ev.eta_after
            )?;
        }
    }
    Ok(())
}
