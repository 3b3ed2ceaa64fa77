//! Static SVG rendering: force-deflection curve on top, per-event stored
//! energy and efficiency below. No display server needed; output is a
//! self-contained vector file.

use std::fmt::Write as _;

use lockspring::{EfficiencyReport, SegmentKind, TraceSegment, WorkLoopTrace};

const WIDTH: f64 = 860.0;
const PANEL_HEIGHT: f64 = 340.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 70.0;
const MARGIN_TOP: f64 = 34.0;
const MARGIN_BOTTOM: f64 = 52.0;

struct Axes {
    x0: f64,
    y0: f64, // top-left of the plot rectangle
    w: f64,
    h: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Axes {
    fn sx(&self, x: f64) -> f64 {
        self.x0 + (x - self.xmin) / (self.xmax - self.xmin) * self.w
    }

    fn sy(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.ymin) / (self.ymax - self.ymin) * self.h
    }
}

/// Rounds a raw step to 1, 2, or 5 times a power of ten.
fn nice_step(raw: f64) -> f64 {
    if raw <= 0.0 || !raw.is_finite() {
        return 1.0;
    }
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(min: f64, max: f64) -> Vec<f64> {
    let step = nice_step((max - min) / 5.0);
    let first = (min / step).ceil() * step;
    let mut t = Vec::new();
    let mut v = first;
    while v <= max + 1e-9 * step {
        t.push(v);
        v += step;
    }
    t
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if !(0.01..1000.0).contains(&a) {
        format!("{v:.0e}")
    } else if a < 1.0 {
        format!("{v:.2}")
    } else {
        let s = format!("{v:.1}");
        s.strip_suffix(".0").unwrap_or(&s).to_string()
    }
}

fn polyline(svg: &mut String, points: &[(f64, f64)], color: &str, width: f64) {
    if points.len() < 2 {
        return;
    }
    let coords: Vec<String> = points
        .iter()
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect();
    let _ = writeln!(
        svg,
        r##"<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{}"/>"##,
        coords.join(" ")
    );
}

fn frame_and_axes(
    svg: &mut String,
    axes: &Axes,
    x_label: &str,
    y_label: &str,
    title: &str,
) {
    let _ = writeln!(
        svg,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="white" stroke="#444" stroke-width="1"/>"##,
        axes.x0, axes.y0, axes.w, axes.h
    );
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" font-size="15" font-weight="bold" text-anchor="middle">{title}</text>"##,
        axes.x0 + axes.w / 2.0,
        axes.y0 - 10.0
    );
    for t in ticks(axes.xmin, axes.xmax) {
        let x = axes.sx(t);
        let y1 = axes.y0 + axes.h;
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{y1:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444" stroke-width="1"/>"##,
            y1 + 5.0
        );
        let _ = writeln!(
            svg,
            r##"<text x="{x:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"##,
            y1 + 19.0,
            fmt_tick(t)
        );
    }
    for t in ticks(axes.ymin, axes.ymax) {
        let y = axes.sy(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#444" stroke-width="1"/>"##,
            axes.x0 - 5.0,
            axes.x0
        );
        let _ = writeln!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{}</text>"##,
            axes.x0 - 9.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{x_label}</text>"##,
        axes.x0 + axes.w / 2.0,
        axes.y0 + axes.h + 40.0
    );
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{y_label}</text>"##,
        axes.x0 - 48.0,
        axes.y0 + axes.h / 2.0,
        axes.x0 - 48.0,
        axes.y0 + axes.h / 2.0
    );
}

/// Renders the two-panel analysis figure: the measured force-deflection
/// path with lock drops in red, and per-event stored energy (left axis)
/// with running efficiency (right axis).
pub fn render_analysis_svg(
    trace: &WorkLoopTrace,
    segments: &[TraceSegment],
    report: &EfficiencyReport,
) -> String {
    let total_height = 2.0 * PANEL_HEIGHT + 20.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{total_height}" viewBox="0 0 {WIDTH} {total_height}">"##
    );
    let _ = writeln!(
        svg,
        r##"<rect width="{WIDTH}" height="{total_height}" fill="white"/>"##
    );

    // Panel 1: force vs deflection.
    let samples = &trace.samples;
    let xmax = samples
        .iter()
        .map(|s| s.deflection_mm)
        .fold(1e-9, f64::max);
    let ymax = samples.iter().map(|s| s.force_n).fold(1e-9, f64::max);
    let p1 = Axes {
        x0: MARGIN_LEFT,
        y0: MARGIN_TOP,
        w: WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        h: PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM,
        xmin: 0.0,
        xmax: xmax * 1.05,
        ymin: 0.0,
        ymax: ymax * 1.08,
    };
    frame_and_axes(
        &mut svg,
        &p1,
        "deflection (mm)",
        "force (N)",
        "Measured force vs deflection",
    );
    let path: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| (p1.sx(s.deflection_mm), p1.sy(s.force_n)))
        .collect();
    polyline(&mut svg, &path, "#2662a8", 1.2);
    for seg in segments {
        if seg.kind == SegmentKind::LockDrop {
            let pts: Vec<(f64, f64)> = samples[seg.start..=seg.end]
                .iter()
                .map(|s| (p1.sx(s.deflection_mm), p1.sy(s.force_n)))
                .collect();
            polyline(&mut svg, &pts, "#c23b22", 2.0);
        }
    }

    // Panel 2: stored energy and efficiency per lock event.
    let y2_top = PANEL_HEIGHT + 20.0;
    let n_events = report.events.len();
    let emax = report
        .stored_energy_series_j
        .iter()
        .copied()
        .fold(1e-9, f64::max);
    let p2 = Axes {
        x0: MARGIN_LEFT,
        y0: y2_top + MARGIN_TOP,
        w: WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        h: PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM,
        xmin: 0.5,
        xmax: n_events.max(2) as f64 + 0.5,
        ymin: 0.0,
        ymax: emax * 1.15,
    };
    frame_and_axes(
        &mut svg,
        &p2,
        "lock event",
        "stored energy (J)",
        "Stored energy and efficiency per lock event",
    );
    let energy_pts: Vec<(f64, f64)> = report
        .events
        .iter()
        .map(|e| (p2.sx(e.event as f64), p2.sy(e.stored_at_lock_j)))
        .collect();
    polyline(&mut svg, &energy_pts, "#c23b22", 1.8);
    for (x, y) in &energy_pts {
        let _ = writeln!(svg, r##"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="#c23b22"/>"##);
    }

    // Efficiency on a right-hand 0..1 axis.
    let eta_y = |eta: f64| p2.y0 + p2.h - eta.clamp(0.0, 1.0) * p2.h;
    let eta_pts: Vec<(f64, f64)> = report
        .events
        .iter()
        .map(|e| (p2.sx(e.event as f64), eta_y(e.eta_after)))
        .collect();
    polyline(&mut svg, &eta_pts, "#222222", 1.8);
    for (x, y) in &eta_pts {
        let _ = writeln!(
            svg,
            r##"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="#222222"/>"##,
            x - 3.5,
            y - 3.5
        );
    }
    let right_x = p2.x0 + p2.w;
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let y = eta_y(frac);
        let _ = writeln!(
            svg,
            r##"<line x1="{right_x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#444" stroke-width="1"/>"##,
            right_x + 5.0
        );
        let _ = writeln!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="start">{frac:.2}</text>"##,
            right_x + 9.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(90 {:.2} {:.2})">efficiency</text>"##,
        right_x + 52.0,
        p2.y0 + p2.h / 2.0,
        right_x + 52.0,
        p2.y0 + p2.h / 2.0
    );
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="end">overall efficiency: {:.3}</text>"##,
        right_x,
        p2.y0 - 10.0,
        report.eta
    );

    svg.push_str("</svg>\n");
    svg
}
