//! CSV, SVG and run-manifest writers.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use plotters::prelude::*;

use super::config::{PlotConfig, ScenarioConfig};
use super::run::Table;

pub fn write_csv(path: &Path, table: &Table) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.render()))?;
    }
    w.flush()
}

/// The resolved configuration with version and wall time in comments, so
/// that it parses back as a scenario file.
pub fn write_manifest(path: &Path, config: &ScenarioConfig, wall_seconds: f64) -> io::Result<()> {
    let text = format!(
        "# spinrelax {} run manifest\n# wall time: {wall_seconds:.3} s\n# re-run with `spinrelax run <this file>`\n\n{}",
        crate::VERSION,
        config.to_toml()
    );
    std::fs::write(path, text)
}

fn to_io(e: impl std::fmt::Display) -> io::Error {
    io::Error::other(e.to_string())
}

type Series = BTreeMap<String, Vec<(f64, f64)>>;

fn collect_series(table: &Table, plot: &PlotConfig) -> Series {
    let col = |name: &str| table.columns.iter().position(|c| c == name);
    let (xi, yi) = (col(&plot.x), col(&plot.y));
    let si = plot.series.as_deref().and_then(col);
    let mut out = Series::new();
    let (Some(xi), Some(yi)) = (xi, yi) else {
        return out;
    };
    for row in &table.rows {
        let (Some(x), Some(y)) = (row[xi].as_f64(), row[yi].as_f64()) else {
            continue;
        };
        if (plot.log_x && x <= 0.0) || (plot.log_y && y <= 0.0) {
            continue;
        }
        let key = match si {
            Some(i) => format!(
                "{} = {}",
                table.columns[i],
                row[i].as_f64().map_or("NA".into(), |v| format!("{v}"))
            ),
            None => plot.y.clone(),
        };
        out.entry(key).or_default().push((x, y));
    }
    out
}

fn bounds(series: &Series, pick: impl Fn(&(f64, f64)) -> f64, log: bool) -> (f64, f64) {
    let vals = series.values().flatten().map(pick);
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return if log { (1.0, 10.0) } else { (0.0, 1.0) };
    }
    if hi > lo {
        if log {
            (lo, hi)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    } else if log {
        (lo / 2.0, lo * 2.0)
    } else {
        (lo - 0.5 * lo.abs().max(1.0), lo + 0.5 * lo.abs().max(1.0))
    }
}

fn draw<X, Y>(path: &Path, plot: &PlotConfig, series: &Series, x: X, y: Y) -> io::Result<()>
where
    X: plotters::coord::ranged1d::AsRangedCoord<Value = f64>,
    Y: plotters::coord::ranged1d::AsRangedCoord<Value = f64>,
    X::CoordDescType: plotters::coord::ranged1d::ValueFormatter<f64>,
    Y::CoordDescType: plotters::coord::ranged1d::ValueFormatter<f64>,
{
    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(to_io)?;
    let mut chart = ChartBuilder::on(&root)
        .margin(16)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x, y)
        .map_err(to_io)?;
    chart
        .configure_mesh()
        .x_desc(plot.x.as_str())
        .y_desc(plot.y.as_str())
        .draw()
        .map_err(to_io)?;
    for (i, (name, points)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(points.iter().copied(), color.stroke_width(2)))
            .map_err(to_io)?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(to_io)?;
    root.present().map_err(to_io)
}

pub fn write_plot(path: &Path, table: &Table, plot: &PlotConfig) -> io::Result<()> {
    let series = collect_series(table, plot);
    let (x0, x1) = bounds(&series, |p| p.0, plot.log_x);
    let (y0, y1) = bounds(&series, |p| p.1, plot.log_y);
    match (plot.log_x, plot.log_y) {
        (false, false) => draw(path, plot, &series, x0..x1, y0..y1),
        (true, false) => draw(path, plot, &series, (x0..x1).log_scale(), y0..y1),
        (false, true) => draw(path, plot, &series, x0..x1, (y0..y1).log_scale()),
        (true, true) => draw(path, plot, &series, (x0..x1).log_scale(), (y0..y1).log_scale()),
    }
}
