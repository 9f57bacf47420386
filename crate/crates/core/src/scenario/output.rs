use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Metrics, Scenario, ScenarioError, SimulationLog, SweepRow, VerdictKind};

pub const STEP_COLUMNS: [&str; 18] = [
    "k",
    "t",
    "x",
    "y",
    "yaw",
    "vx",
    "e_y",
    "e_psi",
    "delta_deg",
    "accel",
    "u_op_ddelta",
    "u_op_daccel",
    "applied_ddelta",
    "applied_daccel",
    "verdict",
    "qp_status",
    "qp_iters",
    "objective",
];

const METRIC_COLUMNS: [&str; 13] = [
    "delta",
    "detection_step",
    "infeasibility_step",
    "lead_samples",
    "d_mpc",
    "d_opt",
    "d_gap",
    "detection_error",
    "min_clearance",
    "collision",
    "interventions",
    "safety_events",
    "aborted",
];

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn metric_fields(m: &Metrics) -> Vec<String> {
    vec![
        num(m.delta),
        opt(m.detection_step),
        opt(m.infeasibility_step),
        opt(m.lead_samples),
        opt_num(m.d_mpc),
        opt_num(m.d_opt),
        opt_num(m.distance_gap()),
        m.detection_error.as_str().to_string(),
        num(m.min_clearance),
        m.collision.to_string(),
        m.interventions.to_string(),
        m.safety_events.to_string(),
        m.aborted.to_string(),
    ]
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Csv { path: path.to_path_buf(), source }
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io { path: path.to_path_buf(), source }
}

/// Per-step CSV; an empty log yields the header alone.
pub fn step_csv(log: &SimulationLog, out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STEP_COLUMNS)?;
    for r in &log.records {
        w.write_record([
            r.k.to_string(),
            num(r.t),
            num(r.state.x),
            num(r.state.y),
            num(r.state.yaw),
            num(r.state.vx),
            num(r.error.e_y),
            num(r.error.e_psi),
            num(r.state.delta.to_degrees()),
            num(r.state.accel),
            num(r.u_op.delta_dot),
            num(r.u_op.accel_dot),
            num(r.applied.delta_dot),
            num(r.applied.accel_dot),
            r.verdict.as_str().to_string(),
            r.qp_status.as_str().to_string(),
            r.qp_iters.to_string(),
            opt_num(r.objective),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn metrics_csv(metrics: &Metrics, path: &Path) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(METRIC_COLUMNS).map_err(csv_error(path))?;
    w.write_record(metric_fields(metrics)).map_err(csv_error(path))?;
    w.flush().map_err(io_error(path))
}

struct Frame {
    x0: f64,
    y1: f64,
    sx: f64,
    sy: f64,
}

impl Frame {
    fn point(&self, x: f64, y: f64) -> String {
        format!("{:.2},{:.2}", (x - self.x0) * self.sx + 20.0, (self.y1 - y) * self.sy + 20.0)
    }

    fn polyline(&self, pts: impl Iterator<Item = (f64, f64)>, style: &str) -> String {
        let coords: Vec<String> = pts.map(|(x, y)| self.point(x, y)).collect();
        format!("<polyline fill=\"none\" {style} points=\"{}\"/>\n", coords.join(" "))
    }
}

/// Trajectory plot: road centerline, tracker path, driven path, obstacle
/// and a marker where the backup took over. The lateral axis is stretched.
pub fn trajectory_svg(scenario: &Scenario, log: &SimulationLog) -> String {
    let xs: Vec<(f64, f64)> = log.records.iter().map(|r| (r.state.x, r.state.y)).collect();
    let (mut xmin, mut xmax) = (scenario.initial.x, scenario.initial.x + 1.0);
    for &(x, _) in &xs {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
    }
    let within = |p: &crate::path::PathPoint<f64>| p.x >= xmin - 5.0 && p.x <= xmax + 5.0;
    let road: Vec<(f64, f64)> = scenario.road.points().iter().filter(|p| within(p)).map(|p| (p.x, p.y)).collect();
    let ppc: Vec<(f64, f64)> = scenario.ppc_path.points().iter().filter(|p| within(p)).map(|p| (p.x, p.y)).collect();
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(_, y) in xs.iter().chain(road.iter()).chain(ppc.iter()) {
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    if !ymin.is_finite() {
        (ymin, ymax) = (-1.0, 1.0);
    }
    let (ymin, ymax) = (ymin - 3.0, ymax + 3.0);
    let (width, height) = (1200.0, 400.0);
    let frame = Frame {
        x0: xmin - 5.0,
        y1: ymax,
        sx: (width - 40.0) / (xmax - xmin + 10.0),
        sy: (height - 40.0) / (ymax - ymin),
    };

    let mut svg = String::new();
    let _ = writeln!(svg, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">");
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&frame.polyline(road.into_iter(), "stroke=\"gray\" stroke-dasharray=\"6,4\" stroke-width=\"1\""));
    svg.push_str(&frame.polyline(ppc.into_iter(), "stroke=\"steelblue\" stroke-width=\"1\""));
    if let Some(rect) = scenario.obstacle_rect() {
        let corners: Vec<String> = rect.corners().iter().map(|&(x, y)| frame.point(x, y)).collect();
        let _ = writeln!(svg, "<polygon class=\"obstacle\" fill=\"firebrick\" fill-opacity=\"0.6\" points=\"{}\"/>", corners.join(" "));
    }
    svg.push_str(&frame.polyline(xs.into_iter(), "stroke=\"black\" stroke-width=\"2\""));
    if let Some(r) = log.records.iter().find(|r| r.verdict == VerdictKind::Detection) {
        let p = frame.point(r.state.x, r.state.y);
        let (cx, cy) = p.split_once(',').unwrap_or(("0", "0"));
        let _ = writeln!(
            svg,
            "<circle class=\"takeover\" data-k=\"{}\" data-station=\"{:.6}\" cx=\"{cx}\" cy=\"{cy}\" r=\"6\" fill=\"orange\" stroke=\"black\"/>",
            r.k, r.station
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn write_file(path: &Path, text: &str) -> Result<(), ScenarioError> {
    fs::write(path, text).map_err(io_error(path))
}

/// Writes `steps.csv`, `metrics.csv` and `trajectory.svg` into `dir`.
pub fn emit_outputs(scenario: &Scenario, log: &SimulationLog, metrics: &Metrics, dir: &Path) -> Result<(), ScenarioError> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let steps = dir.join("steps.csv");
    let file = fs::File::create(&steps).map_err(io_error(&steps))?;
    step_csv(log, std::io::BufWriter::new(file)).map_err(csv_error(&steps))?;
    metrics_csv(metrics, &dir.join("metrics.csv"))?;
    write_file(&dir.join("trajectory.svg"), &trajectory_svg(scenario, log))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub title: String,
    pub labels: Vec<String>,
    pub counts: Vec<usize>,
}

impl Histogram {
    fn new(title: &str, labels: Vec<String>) -> Self {
        let counts = vec![0; labels.len()];
        Self { title: title.to_string(), labels, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin,count\n");
        for (l, c) in self.labels.iter().zip(&self.counts) {
            let _ = writeln!(out, "{l},{c}");
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let bins = self.counts.len().max(1);
        let peak = self.counts.iter().copied().max().unwrap_or(0).max(1);
        let (width, height, base) = (60.0 * bins as f64 + 40.0, 320.0, 280.0);
        let mut svg = String::new();
        let _ = writeln!(svg, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">");
        svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        let _ = writeln!(svg, "<text x=\"20\" y=\"18\" font-size=\"14\">{}</text>", self.title);
        for (i, (label, &count)) in self.labels.iter().zip(&self.counts).enumerate() {
            let h = 230.0 * count as f64 / peak as f64;
            let x = 20.0 + 60.0 * i as f64;
            let _ = writeln!(
                svg,
                "<rect class=\"bin\" data-count=\"{count}\" x=\"{:.1}\" y=\"{:.1}\" width=\"50\" height=\"{h:.1}\" fill=\"steelblue\"/>",
                x + 5.0,
                base - h
            );
            let _ = writeln!(svg, "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\">{count}</text>", x + 22.0, base - h - 4.0);
            let _ = writeln!(svg, "<text x=\"{:.1}\" y=\"300\" font-size=\"10\">{label}</text>", x + 5.0);
        }
        svg.push_str("</svg>\n");
        svg
    }
}

/// `d_mpc − d_opt` in half-meter bins from 0 to 6 m, with underflow,
/// overflow and a bin for scenarios where the gap is undefined.
pub fn distance_histogram(metrics: &[Option<Metrics>]) -> Histogram {
    let mut labels = vec!["none".to_string(), "<0".to_string()];
    labels.extend((0..12).map(|i| format!("{:.1}-{:.1}", 0.5 * i as f64, 0.5 * (i + 1) as f64)));
    labels.push(">=6".to_string());
    let mut hist = Histogram::new("d_mpc - d_opt [m]", labels);
    for m in metrics {
        let bin = match m.and_then(|m| m.distance_gap()) {
            None => 0,
            Some(g) if g < 0.0 => 1,
            Some(g) if g >= 6.0 => 14,
            Some(g) => 2 + (g / 0.5).floor() as usize,
        };
        hist.counts[bin] += 1;
    }
    hist
}

/// Lead samples `1..=8` with bins for `≤ 0`, `> 8` and undefined.
pub fn lead_histogram(metrics: &[Option<Metrics>]) -> Histogram {
    let mut labels = vec!["none".to_string(), "<=0".to_string()];
    labels.extend((1..=8).map(|i| i.to_string()));
    labels.push(">8".to_string());
    let mut hist = Histogram::new("lead samples", labels);
    for m in metrics {
        let bin = match m.and_then(|m| m.lead_samples) {
            None => 0,
            Some(l) if l <= 0 => 1,
            Some(l) if l > 8 => 10,
            Some(l) => 1 + l as usize,
        };
        hist.counts[bin] += 1;
    }
    hist
}

/// Writes `sweep_metrics.csv` and the two histograms (CSV and SVG).
pub fn emit_sweep_outputs(rows: &[SweepRow], dir: &Path) -> Result<(), ScenarioError> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let path = dir.join("sweep_metrics.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_error(&path))?;
    let mut header = vec!["omega", "speed", "error"];
    header.extend(METRIC_COLUMNS);
    w.write_record(&header).map_err(csv_error(&path))?;
    for row in rows {
        let mut fields = vec![format!("{}", row.omega), format!("{}", row.speed)];
        match &row.outcome {
            Ok(m) => {
                fields.push(String::new());
                fields.extend(metric_fields(m));
            }
            Err(e) => {
                fields.push(e.clone());
                fields.extend(std::iter::repeat_n(String::new(), METRIC_COLUMNS.len()));
            }
        }
        w.write_record(&fields).map_err(csv_error(&path))?;
    }
    w.flush().map_err(io_error(&path))?;

    let metrics: Vec<Option<Metrics>> = rows.iter().map(|r| r.outcome.as_ref().ok().copied()).collect();
    for (name, hist) in [("hist_distance", distance_histogram(&metrics)), ("hist_lead", lead_histogram(&metrics))] {
        write_file(&dir.join(format!("{name}.csv")), &hist.to_csv())?;
        write_file(&dir.join(format!("{name}.svg")), &hist.to_svg())?;
    }
    Ok(())
}
