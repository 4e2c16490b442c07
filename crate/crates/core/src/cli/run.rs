//! Evaluation of sweep points for each mode. Every point yields one flat row
//! whose cells follow [`ScenarioConfig::columns`].

use rayon::prelude::*;

use super::config::{FidSolver, Mode, ScenarioConfig};
use crate::error::{Error, Result};
use crate::evolution::{
    delta_gamma2, evolve_fid_fd, evolve_fid_spectral, extract_t2, truncation_tail, FidTrace, LongitudinalGradient,
    RelaxationResult,
};
use crate::model::{mode_decay_rate, CellGeometry, ModeIndex};
use crate::perturbation::{gradient_rate_bound, perturbation_parameter, second_order_closed_form, second_order_rate};
use crate::serf::{default_by_grid, divergence_free_config, linewidth_broadening, mean_sx, SerfScenario};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Na,
}

impl Cell {
    /// Floats carry 17 significant digits; non-finite values print as `NA`.
    pub fn render(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Num(_) | Cell::Na => "NA".to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) if v.is_finite() => Some(*v),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

/// Rows of one run, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Number of rows that carry an error.
    pub failures: usize,
    /// Human-readable lines for the console.
    pub notes: Vec<String>,
}

fn failed(width: usize, e: &Error) -> Vec<Cell> {
    let mut cells = vec![Cell::Na; width - 1];
    cells.push(Cell::Text(e.to_string()));
    cells
}

fn fid_point(config: &ScenarioConfig, names: &[String], point: &[f64]) -> Result<Vec<Cell>> {
    let mut geom = config.geometry()?;
    let mut spin = config.spin_params()?;
    let mut gamma_g = config.gradient.gamma_g;
    for (name, &v) in names.iter().zip(point) {
        match name.as_str() {
            "gamma_g" => gamma_g = v,
            "gamma0" => spin = spin.with_base_rate(v)?,
            "diffusion" => spin = spin.with_diffusion(v)?,
            "length" => geom = CellGeometry::new(v, geom.modes, geom.grid_points)?,
            _ => unreachable!("axis names are validated"),
        }
    }
    let g = gamma_g / spin.gyro;
    let r = delta_gamma2(&geom, &spin, g, config.t2_options())?;
    let epsilon = perturbation_parameter(&geom, &spin, g)
        .map(Cell::Num)
        .unwrap_or(Cell::Na);
    Ok(vec![
        Cell::Num(r.t2),
        Cell::Num(r.gamma2),
        Cell::Num(r.delta_gamma2),
        Cell::Num(r.phase_rate),
        Cell::Num(gradient_rate_bound(&geom, &spin, g)),
        epsilon,
        Cell::Num(truncation_tail(&geom, &spin, g)),
        Cell::Na,
    ])
}

fn serf_template(config: &ScenarioConfig, names: &[String], point: &[f64]) -> Result<SerfScenario> {
    let mut s = config.serf_scenario()?;
    let mut case = config.gradient.case;
    let mut gz = config.gradient.gz;
    for (name, &v) in names.iter().zip(point) {
        match name.as_str() {
            "gx" => s.gradient.g[0] = v,
            "gy" => s.gradient.g[1] = v,
            "gz" => {
                gz = v;
                s.gradient.g[2] = v;
            }
            "case" => case = Some(v as u8),
            "gamma0" => s.spin = s.spin.with_base_rate(v)?,
            "diffusion" => s.spin = s.spin.with_diffusion(v)?,
            "q" => s.spin = s.spin.with_slow_down(v)?,
            "length" => s.geom = CellGeometry::new(v, s.geom.modes, s.geom.grid_points)?,
            "by" => s.by = v,
            _ => unreachable!("axis names are validated"),
        }
    }
    if let Some(case) = case {
        s.gradient = divergence_free_config(case, gz)?;
    }
    s.validate()?;
    Ok(s)
}

fn serf_point(config: &ScenarioConfig, names: &[String], point: &[f64]) -> Result<Vec<Cell>> {
    let s = serf_template(config, names, point)?;
    let grid = default_by_grid(&s, config.solver.by_points)?;
    let opts = config.serf_options();
    let b = linewidth_broadening(&s, &grid, &opts)?;
    Ok(vec![
        Cell::Num(b.w()),
        Cell::Num(b.w0()),
        Cell::Num(b.delta_w),
        Cell::Num(b.sweep.b_min),
        Cell::Num(b.sweep.b_max),
        Cell::Int(b.sweep.extensions as i64),
        Cell::Na,
    ])
}

fn symmetry_point(config: &ScenarioConfig, names: &[String], point: &[f64]) -> Result<Vec<Cell>> {
    let mut s = serf_template(config, names, point)?;
    if !names.iter().any(|n| n == "by") {
        s.by = config.gradient.by.unwrap_or_else(|| s.linewidth_scale());
    }
    let opts = config.serf_options();
    let sx = mean_sx(&s, &opts)?;
    let swapped = mean_sx(&s.swapped(crate::Axis::X, crate::Axis::Z), &opts)?;
    let control = mean_sx(&s.swapped(crate::Axis::Y, crate::Axis::Z), &opts)?;
    let scale = sx.abs().max(f64::MIN_POSITIVE);
    Ok(vec![
        Cell::Num(sx),
        Cell::Num(swapped),
        Cell::Num((sx - swapped).abs() / scale),
        Cell::Num((sx - control).abs() / scale),
        Cell::Na,
    ])
}

/// Rows `m = 1..=table_rows` of the second-order rate of mode `(m, 1, 1)`.
pub fn perturbation_table(config: &ScenarioConfig) -> Result<Table> {
    let geom = config.geometry()?;
    let spin = config.spin_params()?;
    let g = config.gradient.gamma_g / spin.gyro;
    let columns = vec!["m", "closed_form", "summed", "rel_diff", "error"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    let mut failures = 0;
    for m in 1..=config.solver.table_rows {
        let closed = second_order_closed_form(&geom, &spin, g, m);
        let summed = ModeIndex::new(m, 1, 1).and_then(|idx| second_order_rate(&geom, &spin, g, idx));
        let row = match summed {
            Ok(s) => {
                let rel = closed.map(|c| if c == 0.0 && s == 0.0 { 0.0 } else { ((s - c) / c).abs() });
                vec![
                    Cell::Int(m as i64),
                    closed.map(Cell::Num).unwrap_or(Cell::Na),
                    Cell::Num(s),
                    rel.map(Cell::Num).unwrap_or(Cell::Na),
                    Cell::Na,
                ]
            }
            Err(e) => {
                failures += 1;
                let mut r = failed(4, &e);
                r.insert(0, Cell::Int(m as i64));
                r
            }
        };
        rows.push(row);
    }
    Ok(Table {
        columns,
        rows,
        failures,
        notes: Vec::new(),
    })
}

fn single_fid(config: &ScenarioConfig) -> Result<(FidTrace, Result<RelaxationResult>)> {
    let geom = config.geometry()?;
    let spin = config.spin_params()?;
    let field = LongitudinalGradient {
        g: config.gradient.gamma_g / spin.gyro,
        subtract_offset: config.gradient.subtract_offset,
    };
    let n = config.solver.n_steps;
    let evolve = |t_end: f64| match config.solver.fid_solver {
        FidSolver::Spectral => evolve_fid_spectral(&geom, &spin, field, t_end, n),
        FidSolver::FiniteDifference => evolve_fid_fd(&geom, &spin, field, t_end, n),
    };
    if let Some(t_end) = config.solver.t_end {
        let trace = evolve(t_end)?;
        let r = extract_t2(&trace);
        return Ok((trace, r));
    }
    let unit = 1.0 / mode_decay_rate(&geom, &spin, ModeIndex { m: 1, n: 1, l: 1 });
    let mut horizon = config.solver.horizon;
    loop {
        let trace = evolve(horizon * unit)?;
        match extract_t2(&trace) {
            Err(Error::InsufficientHorizon { .. }) if horizon * 2.0 <= config.solver.max_horizon => horizon *= 2.0,
            r => return Ok((trace, r)),
        }
    }
}

fn fid_table(config: &ScenarioConfig) -> Table {
    let columns = config.columns();
    match single_fid(config) {
        Ok((trace, r)) => {
            let rows = trace
                .times()
                .iter()
                .zip(trace.values())
                .map(|(t, v)| vec![Cell::Num(*t), Cell::Num(v.re), Cell::Num(v.im), Cell::Num(v.norm())])
                .collect();
            let mut notes = Vec::new();
            if let Some(w) = &trace.truncation_warning {
                notes.push(format!("warning: {w}"));
            }
            let failures = match r {
                Ok(r) => {
                    notes.push(format!("T2 = {:.10e} s", r.t2));
                    notes.push(format!("Gamma2 = {:.10e} 1/s", r.gamma2));
                    notes.push(format!("phase rate = {:.10e} 1/s", r.phase_rate));
                    0
                }
                Err(e) => {
                    notes.push(format!("error: {e}"));
                    1
                }
            };
            Table {
                columns,
                rows,
                failures,
                notes,
            }
        }
        Err(e) => Table {
            columns,
            rows: Vec::new(),
            failures: 1,
            notes: vec![format!("error: {e}")],
        },
    }
}

/// Runs every point of the configuration on the current thread pool.
pub fn run_config(config: &ScenarioConfig) -> Table {
    match config.mode {
        Mode::Fid => return fid_table(config),
        Mode::PerturbationTable => {
            return perturbation_table(config).unwrap_or_else(|e| Table {
                columns: config.columns(),
                rows: Vec::new(),
                failures: 1,
                notes: vec![format!("error: {e}")],
            })
        }
        _ => {}
    }
    let columns = config.columns();
    let names: Vec<String> = config.sweep.axis.iter().map(|a| a.name.clone()).collect();
    let width = columns.len() - names.len();
    let points = config.sweep_points();
    let eval = |p: &Vec<f64>| match config.mode {
        Mode::FidSweep => fid_point(config, &names, p),
        Mode::SerfSweep => serf_point(config, &names, p),
        Mode::Symmetry => symmetry_point(config, &names, p),
        Mode::Fid | Mode::PerturbationTable => unreachable!(),
    };
    let results: Vec<Result<Vec<Cell>>> = points.par_iter().map(eval).collect();
    let mut rows = Vec::with_capacity(points.len());
    let mut failures = 0;
    let mut notes = Vec::new();
    for (p, r) in points.iter().zip(results) {
        let mut row: Vec<Cell> = p.iter().map(|v| Cell::Num(*v)).collect();
        match r {
            Ok(cells) => row.extend(cells),
            Err(e) => {
                failures += 1;
                notes.push(format!("error at {p:?}: {e}"));
                row.extend(failed(width, &e));
            }
        }
        rows.push(row);
    }
    Table {
        columns,
        rows,
        failures,
        notes,
    }
}
