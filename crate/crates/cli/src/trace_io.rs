//! Work-loop trace CSV: `time_s,deflection_mm,force_N,clutch_engaged` rows
//! preceded by `# key=value` metadata comments.
//!
//! Deflection and force are written with six significant digits by
//! default; time with microsecond resolution so dense traces keep strictly
//! increasing timestamps. Reading a written trace reproduces it at the
//! declared precision, and writing it again is byte-identical.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use lockspring::{TraceMeta, TraceSample, WorkLoopTrace};

/// Exact column header required in trace files.
pub const TRACE_HEADER: &str = "time_s,deflection_mm,force_N,clutch_engaged";

/// Default significant digits for deflection and force columns.
pub const DEFAULT_PRECISION: usize = 6;

/// Trace file error carrying the offending line when known.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceIoError {
    pub line: Option<usize>,
    pub message: String,
}

impl TraceIoError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        TraceIoError {
            line: Some(line),
            message: message.into(),
        }
    }

    fn plain(message: impl Into<String>) -> Self {
        TraceIoError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for TraceIoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "trace line {n}: {}", self.message),
            None => write!(f, "trace: {}", self.message),
        }
    }
}

impl std::error::Error for TraceIoError {}

/// Formats a value with `sig` significant digits, exponent style.
fn fmt_sig(value: f64, sig: usize) -> String {
    format!("{value:.*e}", sig.saturating_sub(1))
}

/// Renders a trace to CSV text.
pub fn trace_to_string(trace: &WorkLoopTrace, precision: usize) -> String {
    let m = &trace.meta;
    let mut s = String::new();
    let _ = writeln!(s, "# sample_rate_Hz={}", m.sample_rate_hz);
    let _ = writeln!(s, "# crosshead_speed_mm_per_s={}", m.crosshead_speed_mm_per_s);
    let _ = writeln!(s, "# contact_force_threshold_N={}", m.contact_force_threshold_n);
    let _ = writeln!(s, "# engagement_slip_mm={}", m.engagement_slip_mm);
    let _ = writeln!(s, "# include_cable_compliance={}", m.include_cable_compliance);
    let _ = writeln!(s, "# stiffness_N_per_mm={}", m.stiffness_n_per_mm);
    let _ = writeln!(s, "# precision_sig_digits={precision}");
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for sample in &trace.samples {
        let _ = writeln!(
            s,
            "{:.6},{},{},{}",
            sample.time_s,
            fmt_sig(sample.deflection_mm, precision),
            fmt_sig(sample.force_n, precision),
            u8::from(sample.clutch_engaged),
        );
    }
    s
}

/// Writes a trace CSV at the default precision.
pub fn write_trace(trace: &WorkLoopTrace, path: &Path) -> Result<(), TraceIoError> {
    trace
        .validate()
        .map_err(|e| TraceIoError::plain(e.to_string()))?;
    std::fs::write(path, trace_to_string(trace, DEFAULT_PRECISION))
        .map_err(|e| TraceIoError::plain(format!("cannot write {}: {e}", path.display())))
}

/// Parses a trace CSV.
pub fn read_trace(path: &Path) -> Result<WorkLoopTrace, TraceIoError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| TraceIoError::plain(format!("cannot read {}: {e}", path.display())))?;
    trace_from_str(&text)
}

/// Parses trace CSV text: metadata comments, the exact header, then rows.
pub fn trace_from_str(text: &str) -> Result<WorkLoopTrace, TraceIoError> {
    let mut meta = TraceMeta {
        sample_rate_hz: 0.0,
        crosshead_speed_mm_per_s: 0.0,
        contact_force_threshold_n: 0.0,
        engagement_slip_mm: 0.0,
        include_cable_compliance: false,
        stiffness_n_per_mm: 0.0,
    };
    let mut samples: Vec<TraceSample> = Vec::new();
    let mut header_seen = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.trim().split_once('=') {
                apply_meta(&mut meta, key.trim(), value.trim(), line_no)?;
            }
            continue;
        }
        if !header_seen {
            if line != TRACE_HEADER {
                return Err(TraceIoError::at(
                    line_no,
                    format!("expected header `{TRACE_HEADER}`, got `{line}`"),
                ));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(TraceIoError::at(
                line_no,
                format!("expected 4 comma-separated fields, got {}", fields.len()),
            ));
        }
        let num = |s: &str, what: &str| -> Result<f64, TraceIoError> {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| TraceIoError::at(line_no, format!("{what}: `{s}` is not a number")))?;
            if !v.is_finite() {
                return Err(TraceIoError::at(line_no, format!("{what}: `{s}` is not finite")));
            }
            Ok(v)
        };
        let time_s = num(fields[0], "time_s")?;
        let deflection_mm = num(fields[1], "deflection_mm")?;
        let force_n = num(fields[2], "force_N")?;
        let clutch_engaged = match fields[3].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(TraceIoError::at(
                    line_no,
                    format!("clutch_engaged must be 0 or 1, got `{other}`"),
                ))
            }
        };
        if let Some(prev) = samples.last() {
            if time_s <= prev.time_s {
                return Err(TraceIoError::at(
                    line_no,
                    format!("time not increasing: {time_s} after {}", prev.time_s),
                ));
            }
        }
        if force_n < 0.0 {
            return Err(TraceIoError::at(line_no, format!("negative force {force_n}")));
        }
        if deflection_mm < 0.0 {
            return Err(TraceIoError::at(
                line_no,
                format!("negative deflection {deflection_mm}"),
            ));
        }
        samples.push(TraceSample {
            time_s,
            deflection_mm,
            force_n,
            clutch_engaged,
        });
    }

    if !header_seen {
        return Err(TraceIoError::plain(format!(
            "missing header `{TRACE_HEADER}`"
        )));
    }
    if samples.is_empty() {
        return Err(TraceIoError::plain("no samples"));
    }
    Ok(WorkLoopTrace { samples, meta })
}

fn apply_meta(
    meta: &mut TraceMeta,
    key: &str,
    value: &str,
    line_no: usize,
) -> Result<(), TraceIoError> {
    let parse_f64 = |v: &str| -> Result<f64, TraceIoError> {
        v.parse()
            .map_err(|_| TraceIoError::at(line_no, format!("metadata {key}: `{v}` is not a number")))
    };
    match key {
        "sample_rate_Hz" => meta.sample_rate_hz = parse_f64(value)?,
        "crosshead_speed_mm_per_s" => meta.crosshead_speed_mm_per_s = parse_f64(value)?,
        "contact_force_threshold_N" => meta.contact_force_threshold_n = parse_f64(value)?,
        "engagement_slip_mm" => meta.engagement_slip_mm = parse_f64(value)?,
        "include_cable_compliance" => meta.include_cable_compliance = value == "true",
        "stiffness_N_per_mm" => meta.stiffness_n_per_mm = parse_f64(value)?,
        "precision_sig_digits" => {}
        _ => {} // foreign metadata is carried by instruments; ignore
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use lockspring::{LockLossModel, Protocol, Simulator, SpringAssembly};

    fn sample_trace() -> WorkLoopTrace {
        let sim = Simulator::new(SpringAssembly::prototype(), LockLossModel::default()).unwrap();
        sim.run_protocol(&Protocol::sequential_accumulation(&[10.0, 30.0], true))
            .unwrap()
            .trace
    }

    #[test]
    fn round_trip_at_declared_precision() {
        let trace = sample_trace();
        let text = trace_to_string(&trace, DEFAULT_PRECISION);
        let parsed = trace_from_str(&text).unwrap();
        assert_eq!(parsed.samples.len(), trace.samples.len());
        for (a, b) in trace.samples.iter().zip(&parsed.samples) {
            assert!((a.time_s - b.time_s).abs() < 1e-6);
            let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(1e-12);
            assert!(rel(a.deflection_mm, b.deflection_mm) < 1e-5);
            assert!(rel(a.force_n, b.force_n) < 1e-5);
            assert_eq!(a.clutch_engaged, b.clutch_engaged);
        }
        assert_eq!(parsed.meta, trace.meta);
        // Second generation is byte-identical.
        assert_eq!(trace_to_string(&parsed, DEFAULT_PRECISION), text);
    }

    #[test]
    fn minimal_three_row_file() {
        let text = format!("{TRACE_HEADER}\n0.0,0.0,0.0,0\n0.01,5e-3,7.4e-2,0\n0.02,1e-2,1.48e-1,1\n");
        let trace = trace_from_str(&text).unwrap();
        assert_eq!(trace.samples.len(), 3);
        assert!(trace.samples[2].clutch_engaged);
    }

    #[test]
    fn shuffled_rows_name_first_offender() {
        let text = format!(
            "{TRACE_HEADER}\n0.00,0.0,0.0,0\n0.02,1.0,14.8,0\n0.01,0.5,7.4,0\n"
        );
        let err = trace_from_str(&text).unwrap_err();
        assert_eq!(err.line, Some(4));
        assert!(err.message.contains("time not increasing"));
    }

    #[test]
    fn malformed_row_is_located() {
        let text = format!("{TRACE_HEADER}\n0.0,abc,0.0,0\n");
        let err = trace_from_str(&text).unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(err.message.contains("not a number"));
    }

    #[test]
    fn wrong_header_rejected() {
        let err = trace_from_str("time,defl,force,clutch\n0,0,0,0\n").unwrap_err();
        assert_eq!(err.line, Some(1));
        assert!(err.message.contains("expected header"));
    }

    #[test]
    fn empty_file_has_no_samples() {
        let err = trace_from_str(&format!("{TRACE_HEADER}\n")).unwrap_err();
        assert!(err.message.contains("no samples"));
    }

    #[test]
    fn bad_clutch_flag_rejected() {
        let text = format!("{TRACE_HEADER}\n0.0,0.0,0.0,2\n");
        let err = trace_from_str(&text).unwrap_err();
        assert!(err.message.contains("clutch_engaged"));
    }
}
