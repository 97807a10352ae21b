//! CSV and SVG emission.
//!
//! Series CSV columns: `sweep_param,sweep_value,iteration,metric,mean,std,runs`,
//! rows sorted by (sweep value, iteration, metric), reals printed with six
//! decimals, `\n` line endings. Charts are rendered from the six-decimal
//! values so a chart rebuilt from its own CSV is identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::engine::Trajectory;
use crate::error::{EvocError, Result};
use crate::experiments::{Metric, SeriesRow, SeriesTable, SweepParam};
use crate::fitness::FitnessTable;
use crate::model::{Role, World};

pub const SERIES_HEADER: &str = "sweep_param,sweep_value,iteration,metric,mean,std,runs";
const NORMALIZED_COLUMN: &str = "mean_normalized";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvocError + '_ {
    move |source| EvocError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Rounds to the six decimals the CSV carries.
pub fn quantize(v: f64) -> f64 {
    format!("{v:.6}").parse().expect("formatted float parses")
}

/// Renders a series table. With `normalize_by`, fitness rows gain a
/// trailing `mean_normalized` column (mean / normalize_by); diversity rows
/// leave it empty.
pub fn render_series_csv(table: &SeriesTable, normalize_by: Option<f64>) -> String {
    let mut sorted = table.clone();
    sorted.sort();
    let mut out = String::from(SERIES_HEADER);
    if normalize_by.is_some() {
        out.push(',');
        out.push_str(NORMALIZED_COLUMN);
    }
    out.push('\n');
    for r in &sorted.rows {
        let _ = write!(
            out,
            "{},{:.6},{},{},{:.6},{:.6},{}",
            sorted.sweep_param, r.sweep_value, r.iteration, r.metric, r.mean, r.std, r.runs
        );
        if let Some(scale) = normalize_by {
            out.push(',');
            if r.metric == Metric::Fitness {
                let _ = write!(out, "{:.6}", r.mean / scale);
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_series_csv(table: &SeriesTable, path: &Path) -> Result<()> {
    write_file(path, &render_series_csv(table, None))
}

pub fn write_series_csv_normalized(table: &SeriesTable, path: &Path, scale: f64) -> Result<()> {
    write_file(path, &render_series_csv(table, Some(scale)))
}

pub fn parse_series_csv(text: &str) -> Result<SeriesTable> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l).unwrap_or_default();
    let columns = match header.strip_prefix(SERIES_HEADER) {
        Some("") => 7,
        Some(rest) if rest == format!(",{NORMALIZED_COLUMN}") => 8,
        _ => {
            return Err(EvocError::MalformedCsv {
                line: 1,
                reason: format!("unexpected header {header:?}"),
            })
        }
    };
    let mut param: Option<SweepParam> = None;
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let bad = |reason: String| EvocError::MalformedCsv {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(bad(format!("expected {columns} fields, got {}", fields.len())));
        }
        let p: SweepParam = fields[0].parse().map_err(|e: EvocError| bad(e.to_string()))?;
        match param {
            None => param = Some(p),
            Some(q) if q != p => return Err(bad("mixed sweep parameters".into())),
            _ => {}
        }
        let real = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
        rows.push(SeriesRow {
            sweep_value: real(fields[1])?,
            iteration: fields[2].parse().map_err(|e| bad(format!("iteration: {e}")))?,
            metric: fields[3].parse().map_err(|e: EvocError| bad(e.to_string()))?,
            mean: real(fields[4])?,
            std: real(fields[5])?,
            runs: fields[6].parse().map_err(|e| bad(format!("runs: {e}")))?,
        });
    }
    let sweep_param = param.ok_or(EvocError::MalformedCsv {
        line: 2,
        reason: "no data rows".into(),
    })?;
    Ok(SeriesTable { sweep_param, rows })
}

pub fn read_series_csv(path: &Path) -> Result<SeriesTable> {
    parse_series_csv(&fs::read_to_string(path).map_err(io_err(path))?)
}

/// One chart line: a metric's mean at one sweep value, in pixel space.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub metric: Metric,
    pub sweep_value: f64,
    pub points: Vec<(f64, f64)>,
}

const PANEL_W: f64 = 720.0;
const PANEL_H: f64 = 360.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

struct Axes {
    x_min: f64,
    x_max: f64,
    y_max: f64,
}

impl Axes {
    fn of(table: &SeriesTable, metric: Metric) -> Self {
        let rows = table.rows.iter().filter(|r| r.metric == metric);
        let (mut x_min, mut x_max, mut y_max) = (u64::MAX, 0u64, 0.0f64);
        for r in rows {
            x_min = x_min.min(r.iteration);
            x_max = x_max.max(r.iteration);
            y_max = y_max.max(quantize(r.mean));
        }
        Axes {
            x_min: x_min as f64,
            x_max: (x_max.max(x_min + 1)) as f64,
            y_max: nice_ceiling(y_max),
        }
    }

    fn project(&self, panel: usize, iteration: f64, value: f64) -> (f64, f64) {
        let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
        let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
        let x = MARGIN_L + (iteration - self.x_min) / (self.x_max - self.x_min) * plot_w;
        let y = panel as f64 * PANEL_H + MARGIN_T + plot_h * (1.0 - value / self.y_max);
        (round2(x), round2(y))
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn nice_ceiling(v: f64) -> f64 {
    if v <= 1.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&c| c >= v)
        .unwrap_or(10.0 * mag)
}

/// Pixel-space polylines, one per (metric, sweep value), computed from the
/// CSV-precision values.
pub fn chart_polylines(table: &SeriesTable) -> Vec<Polyline> {
    let mut out = Vec::new();
    for (panel, metric) in table.metrics().into_iter().enumerate() {
        let axes = Axes::of(table, metric);
        for value in table.sweep_values() {
            let points = table
                .series(value, metric)
                .into_iter()
                .map(|(it, mean)| axes.project(panel, it as f64, quantize(mean)))
                .collect();
            out.push(Polyline {
                metric,
                sweep_value: quantize(value),
                points,
            });
        }
    }
    out
}

pub fn render_chart(table: &SeriesTable) -> Result<String> {
    if table.is_empty() {
        return Err(EvocError::InvalidConfig("cannot chart an empty table".into()));
    }
    let metrics = table.metrics();
    let height = PANEL_H * metrics.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W}" height="{height}" viewBox="0 0 {PANEL_W} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let lines = chart_polylines(table);
    for (panel, metric) in metrics.iter().enumerate() {
        let axes = Axes::of(table, *metric);
        let (x0, y0) = axes.project(panel, axes.x_min, 0.0);
        let (x1, y1) = axes.project(panel, axes.x_max, axes.y_max);
        let _ = writeln!(
            svg,
            r##"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="#000"/>"##
        );
        for k in 0..=4 {
            let v = axes.y_max * k as f64 / 4.0;
            let (_, y) = axes.project(panel, axes.x_min, v);
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                x0 - 6.0,
                y + 4.0,
                trim(v)
            );
        }
        for k in 0..=4 {
            let it = axes.x_min + (axes.x_max - axes.x_min) * k as f64 / 4.0;
            let (x, _) = axes.project(panel, it, 0.0);
            let _ = writeln!(
                svg,
                r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
                y0 + 18.0,
                it.round()
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">iteration</text>"#,
            (x0 + x1) / 2.0,
            y0 + 38.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x0}" y="{}" font-weight="bold">mean {metric} by {}</text>"#,
            y1 - 14.0,
            table.sweep_param
        );

        for (k, line) in lines.iter().filter(|l| l.metric == *metric).enumerate() {
            let colour = PALETTE[k % PALETTE.len()];
            let pts: Vec<String> = line.points.iter().map(|(x, y)| format!("{x},{y}")).collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" data-sweep-value="{:.6}" points="{}"/>"#,
                line.sweep_value,
                pts.join(" ")
            );
            let ly = y1 + 10.0 + 18.0 * k as f64;
            let lx = x1 + 16.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{} = {}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                table.sweep_param,
                trim(line.sweep_value)
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn trim(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_owned()
}

/// Writes the chart; an empty table is a usage error and creates no file.
pub fn write_chart(table: &SeriesTable, path: &Path) -> Result<()> {
    let svg = render_chart(table)?;
    write_file(path, &svg)
}

/// Per-iteration statistics of a single run.
pub fn render_run_csv(trajectory: &Trajectory) -> String {
    let mut out = String::from("iteration,mean_fitness,diversity\n");
    for r in &trajectory.records {
        let _ = writeln!(out, "{},{:.6},{}", r.iteration, r.mean_fitness, r.diversity);
    }
    out
}

/// One row per agent of a world snapshot.
pub fn render_agents_csv(world: &World) -> String {
    let mut out = String::from("id,row,col,role,action,fitness,sym_estimate,mov_estimate\n");
    for a in world.agents() {
        let role = match a.role {
            Role::Leader => "leader",
            Role::Follower => "follower",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6},{:.6}",
            a.id,
            a.position.0,
            a.position.1,
            role,
            a.implemented,
            a.implemented_fitness.value(),
            a.operator_state.sym_estimate,
            a.operator_state.mov_estimate
        );
    }
    out
}

pub fn write_run_csv(trajectory: &Trajectory, path: &Path) -> Result<()> {
    write_file(path, &render_run_csv(trajectory))
}

pub fn write_agents_csv(world: &World, path: &Path) -> Result<()> {
    write_file(path, &render_agents_csv(world))
}

/// The whole landscape, best first.
pub fn render_landscape_csv(table: &FitnessTable) -> String {
    let mut out = String::from("rank,left_arm,right_arm,left_leg,right_leg,head,hips,fitness,normalized\n");
    let max = table.max().value();
    for (rank, (action, f)) in table.enumerate().into_iter().enumerate() {
        let p = action.parts();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:.6},{:.6}",
            rank + 1,
            p[0],
            p[1],
            p[2],
            p[3],
            p[4],
            p[5],
            f.value(),
            f.value() / max
        );
    }
    out
}

pub fn write_landscape_csv(table: &FitnessTable, path: &Path) -> Result<()> {
    write_file(path, &render_landscape_csv(table))
}
