//! Trace analysis: work integration, segmentation of force-deflection
//! curves, storage-and-return efficiency, and mass-energy density.
//!
//! A measured work-loop partitions into loading ramps, steep lock-drop
//! spans where the clutch takes over the load, gentle elastic returns, and
//! idle spans. The loss of a work-loop is the area under the lock-drop
//! spans; efficiency is
//!
//! ```text
//! eta = 1 - E_loss / E_spring
//! ```
//!
//! with `E_spring` the total loading work. A drop is distinguished from an
//! elastic return by its slope: unloading steeper than
//! `slope_threshold_multiple * k` is a drop, while elastic returns run at
//! slope `-k`. Only the force-deflection path enters any result, so every
//! metric is invariant under time rescaling and under appended idle
//! samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spring::MassBudget;
use crate::workloop::{TraceSample, WorkLoopTrace};
use crate::J_PER_NMM;

/// Segment classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    /// Deflection increasing; the head does work on the spring.
    Loading,
    /// Gentle unloading at roughly the spring slope, not ending in
    /// separation.
    UnloadingElastic,
    /// Steep unloading while the clutch takes over the load.
    LockDrop,
    /// Gentle unloading that runs down to contact loss.
    ReleasedReturn,
    /// Constant deflection.
    Idle,
}

/// A contiguous span of trace samples with one behavior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSegment {
    pub kind: SegmentKind,
    /// First sample index (inclusive).
    pub start: usize,
    /// Last sample index (inclusive). Adjacent segments share a boundary
    /// sample so works sum to the whole-trace integral.
    pub end: usize,
    /// Signed work over the span (J): positive into the spring.
    pub work_j: f64,
}

/// Analyzer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Nominal spring stiffness k (N/mm) used by the slope rule.
    pub stiffness_n_per_mm: f64,
    /// Unloading steeper than this multiple of k is a lock drop.
    pub slope_threshold_multiple: f64,
    /// Central-difference window (samples) for slope estimation.
    pub slope_window_samples: usize,
    /// Deflection changes at or below this are idle (mm).
    pub idle_deflection_eps_mm: f64,
    /// Force at or below this marks contact loss (N).
    pub contact_force_threshold_n: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            stiffness_n_per_mm: 14.8,
            slope_threshold_multiple: 3.0,
            slope_window_samples: 5,
            idle_deflection_eps_mm: 1e-9,
            contact_force_threshold_n: 0.5,
        }
    }
}

impl AnalysisConfig {
    /// Analyzer configured from a simulated trace's own metadata.
    pub fn from_trace(trace: &WorkLoopTrace) -> Self {
        AnalysisConfig {
            stiffness_n_per_mm: trace.meta.stiffness_n_per_mm,
            contact_force_threshold_n: trace.meta.contact_force_threshold_n,
            ..AnalysisConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::error::require_positive("stiffness_n_per_mm", self.stiffness_n_per_mm)?;
        crate::error::require_positive("slope_threshold_multiple", self.slope_threshold_multiple)?;
        if self.slope_window_samples < 2 {
            return Err(Error::field(
                "slope_window_samples",
                "must be at least 2".to_string(),
            ));
        }
        crate::error::require_non_negative("idle_deflection_eps_mm", self.idle_deflection_eps_mm)?;
        crate::error::require_non_negative(
            "contact_force_threshold_n",
            self.contact_force_threshold_n,
        )?;
        Ok(())
    }
}

/// Per-lock-event metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockEventMetrics {
    /// 1-based event number.
    pub event: usize,
    /// Deflection at the start of the drop (mm).
    pub lock_deflection_mm: f64,
    /// Measured force at the start of the drop (N).
    pub lock_force_n: f64,
    /// Area under the drop (J).
    pub loss_j: f64,
    /// Spring energy at the lock instant, F^2 / (2k) (J).
    pub stored_at_lock_j: f64,
    /// Efficiency after this event: 1 - losses so far / loading work so far.
    pub eta_after: f64,
}

/// Efficiency report for one work-loop trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    /// Total loading work E_spring (J).
    pub e_spring_j: f64,
    /// Total lock-drop loss E_loss (J).
    pub e_loss_j: f64,
    /// 1 - E_loss / E_spring.
    pub eta: f64,
    /// Work returned along released-return segments (J).
    pub returned_j: f64,
    /// Per-event breakdown in trace order.
    pub events: Vec<LockEventMetrics>,
    /// Spring energy at each lock instant (J); grows as deflection
    /// accumulates.
    pub stored_energy_series_j: Vec<f64>,
    /// Segment counts by kind: loading, unloading-elastic, lock-drop,
    /// released-return, idle.
    pub segment_counts: [usize; 5],
}

/// Signed trapezoid integral of force over deflection (J).
///
/// Exact for piecewise-linear force profiles, which makes it an identity
/// on simulated loading ramps.
pub fn integrate_work(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidTrace(format!(
            "need at least 2 samples to integrate, got {}",
            samples.len()
        )));
    }
    let mut work_nmm = 0.0;
    for pair in samples.windows(2) {
        let (x0, f0) = pair[0];
        let (x1, f1) = pair[1];
        work_nmm += 0.5 * (f0 + f1) * (x1 - x0);
    }
    Ok(work_nmm * J_PER_NMM)
}

fn integrate_span(samples: &[TraceSample], start: usize, end: usize) -> f64 {
    let mut work_nmm = 0.0;
    for i in start..end {
        let a = &samples[i];
        let b = &samples[i + 1];
        work_nmm += 0.5 * (a.force_n + b.force_n) * (b.deflection_mm - a.deflection_mm);
    }
    work_nmm * J_PER_NMM
}

/// Partitions a trace into loading, lock-drop, elastic-return,
/// released-return, and idle segments.
///
/// Directional runs come first (sign of the deflection increment with an
/// idle deadband); unloading runs are then split wherever the windowed
/// slope crosses the drop threshold. Slopes are estimated by central
/// differences clipped to the run, so kinks between runs never blur a
/// classification.
pub fn segment_trace(trace: &WorkLoopTrace, config: &AnalysisConfig) -> Result<Vec<TraceSegment>> {
    config.validate()?;
    trace.validate()?;
    let samples = &trace.samples;
    if samples.len() < 2 {
        return Err(Error::InvalidTrace(format!(
            "need at least 2 samples to segment, got {}",
            samples.len()
        )));
    }

    // Direction of each inter-sample interval: +1 loading, -1 unloading, 0 idle.
    let eps = config.idle_deflection_eps_mm;
    let dirs: Vec<i8> = samples
        .windows(2)
        .map(|w| {
            let dx = w[1].deflection_mm - w[0].deflection_mm;
            if dx > eps {
                1
            } else if dx < -eps {
                -1
            } else {
                0
            }
        })
        .collect();

    let mut segments = Vec::new();
    let mut run_start = 0usize;
    let mut i = 1;
    while i <= dirs.len() {
        if i == dirs.len() || dirs[i] != dirs[run_start] {
            // Interval run [run_start, i) covers samples [run_start, i].
            let dir = dirs[run_start];
            let (a, b) = (run_start, i);
            match dir {
                1 => segments.push(make_segment(samples, SegmentKind::Loading, a, b)),
                0 => segments.push(make_segment(samples, SegmentKind::Idle, a, b)),
                _ => split_unloading(samples, a, b, config, &mut segments),
            }
            run_start = i;
        }
        i += 1;
    }
    Ok(segments)
}

fn make_segment(samples: &[TraceSample], kind: SegmentKind, start: usize, end: usize) -> TraceSegment {
    TraceSegment {
        kind,
        start,
        end,
        work_j: integrate_span(samples, start, end),
    }
}

/// Splits one unloading run (intervals [a, b), samples [a, b]) by slope and
/// classifies the gentle parts.
fn split_unloading(
    samples: &[TraceSample],
    a: usize,
    b: usize,
    config: &AnalysisConfig,
    out: &mut Vec<TraceSegment>,
) {
    let threshold = config.slope_threshold_multiple * config.stiffness_n_per_mm;
    let half = (config.slope_window_samples / 2).max(1);

    let interval_slope = |i: usize| -> f64 {
        let dx = samples[i + 1].deflection_mm - samples[i].deflection_mm;
        if dx.abs() < 1e-15 {
            return 0.0;
        }
        (samples[i + 1].force_n - samples[i].force_n) / dx
    };

    // Steepness of each interval in the run: median of the single-interval
    // slopes over a window clipped to the run. The median rides out noise
    // like a secant would, but keeps span boundaries sharp on clean data.
    let steep: Vec<bool> = (a..b)
        .map(|i| {
            let lo = i.saturating_sub(half).max(a);
            let hi = (i + half).min(b - 1);
            let mut slopes: Vec<f64> = (lo..=hi).map(interval_slope).collect();
            slopes.sort_by(f64::total_cmp);
            let median = slopes[slopes.len() / 2];
            median.abs() > threshold
        })
        .collect();

    let mut span_start = a;
    let mut j = a + 1;
    while j <= b {
        if j == b || steep[j - a] != steep[span_start - a] {
            let kind = if steep[span_start - a] {
                SegmentKind::LockDrop
            } else if samples[j].force_n <= config.contact_force_threshold_n {
                SegmentKind::ReleasedReturn
            } else {
                SegmentKind::UnloadingElastic
            };
            out.push(make_segment(samples, kind, span_start, j));
            span_start = j;
        }
        j += 1;
    }
}

/// Computes the efficiency report for a trace.
pub fn efficiency(trace: &WorkLoopTrace, config: &AnalysisConfig) -> Result<EfficiencyReport> {
    let segments = segment_trace(trace, config)?;
    let samples = &trace.samples;

    let mut e_spring_j = 0.0;
    let mut e_loss_j = 0.0;
    let mut returned_j = 0.0;
    let mut counts = [0usize; 5];
    let mut events = Vec::new();
    let mut loading_so_far = 0.0;
    let mut losses_so_far = 0.0;

    for seg in &segments {
        match seg.kind {
            SegmentKind::Loading => {
                counts[0] += 1;
                e_spring_j += seg.work_j;
                loading_so_far += seg.work_j;
            }
            SegmentKind::UnloadingElastic => counts[1] += 1,
            SegmentKind::LockDrop => {
                counts[2] += 1;
                let loss = -seg.work_j;
                e_loss_j += loss;
                losses_so_far += loss;
                let at_lock = &samples[seg.start];
                let stored = at_lock.force_n * at_lock.force_n
                    / (2.0 * config.stiffness_n_per_mm)
                    * J_PER_NMM;
                let eta_after = if loading_so_far > 0.0 {
                    1.0 - losses_so_far / loading_so_far
                } else {
                    0.0
                };
                events.push(LockEventMetrics {
                    event: events.len() + 1,
                    lock_deflection_mm: at_lock.deflection_mm,
                    lock_force_n: at_lock.force_n,
                    loss_j: loss,
                    stored_at_lock_j: stored,
                    eta_after,
                });
            }
            SegmentKind::ReleasedReturn => {
                counts[3] += 1;
                returned_j += -seg.work_j;
            }
            SegmentKind::Idle => counts[4] += 1,
        }
    }

    if e_spring_j <= 0.0 {
        return Err(Error::UndefinedEfficiency);
    }
    let eta = 1.0 - e_loss_j / e_spring_j;
    if !(0.0..=1.0 + 1e-12).contains(&eta) {
        return Err(Error::InvalidTrace(format!(
            "efficiency {eta} outside [0, 1]; losses exceed stored energy"
        )));
    }
    let stored_energy_series_j = events.iter().map(|e| e.stored_at_lock_j).collect();
    Ok(EfficiencyReport {
        e_spring_j,
        e_loss_j,
        eta: eta.min(1.0),
        returned_j,
        events,
        stored_energy_series_j,
        segment_counts: counts,
    })
}

/// Mass-energy density ratio m_spring / (m_spring + m_lock), in (0, 1).
pub fn mass_energy_density(budget: &MassBudget) -> Result<f64> {
    budget.validate()?;
    Ok(budget.spring_side_mass_kg / (budget.spring_side_mass_kg + budget.clutch_mass_kg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workloop::TraceMeta;
    use approx::assert_relative_eq;

    fn trace_from(points: &[(f64, f64)]) -> WorkLoopTrace {
        let samples = points
            .iter()
            .enumerate()
            .map(|(i, &(x, f))| TraceSample {
                time_s: i as f64 * 0.01,
                deflection_mm: x,
                force_n: f,
                clutch_engaged: false,
            })
            .collect();
        WorkLoopTrace {
            samples,
            meta: TraceMeta {
                sample_rate_hz: 100.0,
                crosshead_speed_mm_per_s: 0.5,
                contact_force_threshold_n: 0.5,
                engagement_slip_mm: 0.0,
                include_cable_compliance: false,
                stiffness_n_per_mm: 14.8,
            },
        }
    }

    /// Dense linear ramp 0..=90 mm along the prototype spring line.
    fn ramp(n: usize) -> Vec<(f64, f64)> {
        (0..=n)
            .map(|i| {
                let x = 90.0 * i as f64 / n as f64;
                (x, 14.8 * x)
            })
            .collect()
    }

    #[test]
    fn trapezoid_exact_on_linear_ramp() {
        let w = integrate_work(&ramp(900)).unwrap();
        assert_relative_eq!(w, 59.94, max_relative = 1e-12);
    }

    #[test]
    fn constant_deflection_integrates_to_zero() {
        let w = integrate_work(&[(5.0, 10.0), (5.0, 200.0), (5.0, 0.0)]).unwrap();
        assert_eq!(w, 0.0);
    }

    #[test]
    fn triangle_drop_area() {
        // 740 N falling to 0 over 3 mm of back-travel.
        let w = integrate_work(&[(50.0, 740.0), (48.5, 370.0), (47.0, 0.0)]).unwrap();
        assert_relative_eq!(w, -1.11, max_relative = 1e-12);
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(matches!(
            integrate_work(&[(0.0, 0.0)]),
            Err(Error::InvalidTrace(_))
        ));
    }

    #[test]
    fn segments_injected_triangle() {
        // Loading ramp, elastic unloading, one steep injected drop, more
        // elastic unloading. Dense sampling keeps window effects small.
        let k = 14.8;
        let mut pts: Vec<(f64, f64)> = Vec::new();
        let n = 500;
        for i in 0..=n {
            let x = 50.0 * i as f64 / n as f64;
            pts.push((x, k * x));
        }
        // Elastic return 50 -> 47 at slope -k.
        for i in 1..=60 {
            let x = 50.0 - 3.0 * i as f64 / 60.0;
            pts.push((x, k * x));
        }
        // Steep drop 47 -> 44: 695.6 N down to 200 N (slope ~ -11k).
        for i in 1..=60 {
            let t = i as f64 / 60.0;
            let x = 47.0 - 3.0 * t;
            pts.push((x, 695.6 + (200.0 - 695.6) * t));
        }
        // Elastic again 44 -> 40, from 200 N at slope -k.
        for i in 1..=80 {
            let t = i as f64 / 80.0;
            let x = 44.0 - 4.0 * t;
            pts.push((x, 200.0 - k * 4.0 * t));
        }
        let trace = trace_from(&pts);
        let config = AnalysisConfig::default();
        let segments = segment_trace(&trace, &config).unwrap();
        let drops: Vec<_> = segments
            .iter()
            .filter(|s| s.kind == SegmentKind::LockDrop)
            .collect();
        assert_eq!(drops.len(), 1);
        let injected = 0.5 * (695.6 + 200.0) * 3.0 * 1e-3;
        assert_relative_eq!(-drops[0].work_j, injected, max_relative = 0.01);
    }

    #[test]
    fn pure_compress_release_has_no_drops() {
        let k = 14.8;
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for i in 0..=500 {
            let x = 50.0 * i as f64 / 500.0;
            pts.push((x, k * x));
        }
        for i in 1..=500 {
            let x = 50.0 - 50.0 * i as f64 / 500.0;
            pts.push((x, k * x));
        }
        let trace = trace_from(&pts);
        let segments = segment_trace(&trace, &AnalysisConfig::default()).unwrap();
        assert!(segments.iter().all(|s| s.kind != SegmentKind::LockDrop));
        let report = efficiency(&trace, &AnalysisConfig::default()).unwrap();
        assert_relative_eq!(report.eta, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn segments_partition_the_trace() {
        let k = 14.8;
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for i in 0..=300 {
            let x = 30.0 * i as f64 / 300.0;
            pts.push((x, k * x));
        }
        for i in 1..=100 {
            let t = i as f64 / 100.0;
            pts.push((30.0 - 5.0 * t, 444.0 * (1.0 - t)));
        }
        let trace = trace_from(&pts);
        let segments = segment_trace(&trace, &AnalysisConfig::default()).unwrap();
        let total: f64 = segments.iter().map(|s| s.work_j).sum();
        let whole = integrate_work(
            &trace
                .samples
                .iter()
                .map(|s| (s.deflection_mm, s.force_n))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert_relative_eq!(total, whole, max_relative = 1e-12);
        // Segments tile the index range with shared boundaries.
        assert_eq!(segments[0].start, 0);
        assert_eq!(segments.last().unwrap().end, trace.samples.len() - 1);
        for pair in segments.windows(2) {
            assert_eq!(pair[0].end, pair[1].start);
        }
    }

    #[test]
    fn single_event_efficiency() {
        // Store 18.5 J, lose 1.11 J in one drop: eta = 0.94.
        let k = 14.8;
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for i in 0..=500 {
            let x = 50.0 * i as f64 / 500.0;
            pts.push((x, k * x));
        }
        for i in 1..=100 {
            let t = i as f64 / 100.0;
            pts.push((50.0 - 3.0 * t, 740.0 * (1.0 - t)));
        }
        let trace = trace_from(&pts);
        let report = efficiency(&trace, &AnalysisConfig::default()).unwrap();
        assert_relative_eq!(report.e_spring_j, 18.5, max_relative = 1e-9);
        assert_relative_eq!(report.e_loss_j, 1.11, max_relative = 1e-9);
        assert_relative_eq!(report.eta, 0.94, max_relative = 1e-6);
        assert_eq!(report.events.len(), 1);
        assert_relative_eq!(report.events[0].stored_at_lock_j, 18.5, max_relative = 1e-9);
    }

    #[test]
    fn efficiency_undefined_without_loading() {
        let trace = trace_from(&[(5.0, 74.0), (5.0, 74.0), (5.0, 74.0)]);
        assert_eq!(
            efficiency(&trace, &AnalysisConfig::default()),
            Err(Error::UndefinedEfficiency)
        );
    }

    #[test]
    fn efficiency_invariant_under_time_rescaling() {
        let k = 14.8;
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for i in 0..=400 {
            let x = 40.0 * i as f64 / 400.0;
            pts.push((x, k * x));
        }
        for i in 1..=80 {
            let t = i as f64 / 80.0;
            pts.push((40.0 - 4.0 * t, 592.0 * (1.0 - t)));
        }
        let mut trace = trace_from(&pts);
        let base = efficiency(&trace, &AnalysisConfig::default()).unwrap();
        for s in &mut trace.samples {
            s.time_s *= 977.31;
        }
        let scaled = efficiency(&trace, &AnalysisConfig::default()).unwrap();
        assert!((base.eta - scaled.eta).abs() < 1e-15);
    }

    #[test]
    fn efficiency_invariant_under_appended_idle() {
        let k = 14.8;
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for i in 0..=400 {
            let x = 40.0 * i as f64 / 400.0;
            pts.push((x, k * x));
        }
        for i in 1..=80 {
            let t = i as f64 / 80.0;
            pts.push((40.0 - 4.0 * t, 592.0 * (1.0 - t)));
        }
        let trace = trace_from(&pts);
        let base = efficiency(&trace, &AnalysisConfig::default()).unwrap();
        let mut padded = trace.clone();
        let last = *padded.samples.last().unwrap();
        for i in 1..=200 {
            padded.samples.push(TraceSample {
                time_s: last.time_s + i as f64 * 0.01,
                ..last
            });
        }
        let with_idle = efficiency(&padded, &AnalysisConfig::default()).unwrap();
        assert!((base.eta - with_idle.eta).abs() < 1e-15);
        assert_eq!(base.e_loss_j, with_idle.e_loss_j);
    }

    #[test]
    fn density_prototype_values() {
        let rho = mass_energy_density(&MassBudget::prototype()).unwrap();
        assert!((rho - 0.68).abs() < 0.005);
        let ratchet = MassBudget {
            spring_side_mass_kg: 0.098,
            clutch_mass_kg: 0.057,
        };
        let rho2 = mass_energy_density(&ratchet).unwrap();
        assert!((rho2 - 0.63).abs() < 0.005);
    }

    #[test]
    fn density_rejects_missing_lock() {
        let m = MassBudget {
            spring_side_mass_kg: 1.0,
            clutch_mass_kg: 0.0,
        };
        assert!(mass_energy_density(&m).is_err());
    }

    #[test]
    fn density_scale_invariant() {
        let a = mass_energy_density(&MassBudget {
            spring_side_mass_kg: 1.32,
            clutch_mass_kg: 0.62,
        })
        .unwrap();
        let b = mass_energy_density(&MassBudget {
            spring_side_mass_kg: 13.2,
            clutch_mass_kg: 6.2,
        })
        .unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-14);
    }
}
