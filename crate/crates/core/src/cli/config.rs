//! Scenario files: a TOML document with sections `cell`, `spin`,
//! `gradient`, `sweep`, `solver` and `output`. Unknown keys are rejected and
//! every physical value is re-validated after parsing, with errors located
//! by file and line.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::evolution::T2Options;
use crate::model::{
    CellGeometry, GradientField, SpinParams, DEFAULT_GRID_POINTS, DEFAULT_MODES, DEFAULT_VELOCITY_BOUND,
};
use crate::serf::{divergence_free_config, SerfOptions, SerfScenario, SerfSolver, SlowDownConvention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Fid,
    FidSweep,
    SerfSweep,
    Symmetry,
    PerturbationTable,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Fid => "fid",
            Mode::FidSweep => "fid-sweep",
            Mode::SerfSweep => "serf-sweep",
            Mode::Symmetry => "symmetry",
            Mode::PerturbationTable => "perturbation-table",
        }
    }

    /// Sweep axes accepted by this mode.
    pub fn axes(self) -> &'static [&'static str] {
        match self {
            Mode::Fid | Mode::PerturbationTable => &[],
            Mode::FidSweep => &["gamma_g", "gamma0", "length", "diffusion"],
            Mode::SerfSweep => &["gx", "gy", "gz", "case", "gamma0", "length", "diffusion", "q"],
            Mode::Symmetry => &["by", "gx", "gy", "gz", "gamma0"],
        }
    }
}

/// Whether `gyro` is given as a rate or in angular units (multiplied by
/// `2 pi` on input).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Units {
    #[default]
    Rate,
    Angular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FidSolver {
    #[default]
    Spectral,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellConfig {
    pub length: f64,
    pub modes: usize,
    pub grid_points: usize,
}

impl Default for CellConfig {
    fn default() -> Self {
        CellConfig {
            length: 0.2,
            modes: DEFAULT_MODES,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinConfig {
    pub diffusion: f64,
    pub gyro: f64,
    pub base_rate: f64,
    pub pump_rate: f64,
    pub slow_down: f64,
}

impl Default for SpinConfig {
    fn default() -> Self {
        SpinConfig {
            diffusion: 0.2,
            gyro: 1.0,
            base_rate: 20.0,
            pump_rate: 1.0,
            slow_down: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradientConfig {
    /// Longitudinal gradient for free-induction decay, as a precession-rate
    /// gradient `gamma g` (1/s/cm). The field is `B_z = g x`.
    pub gamma_g: f64,
    /// Compensate the constant part `g L / 2` of the longitudinal field.
    pub subtract_offset: bool,
    pub gx: f64,
    pub gy: f64,
    pub gz: f64,
    /// Divergence-free configuration (1, 2 or 3) derived from `gz`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<u8>,
    /// Uniform transverse field for single-point steady-state runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub by: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default)]
    pub scale: Scale,
}

impl AxisConfig {
    pub fn grid(&self) -> Result<Vec<f64>, String> {
        let values = match (&self.values, self.start, self.stop, self.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => {
                if n == 0 {
                    return Err("count must be at least 1".into());
                }
                if n == 1 {
                    return Ok(vec![a]);
                }
                let step = |i: usize| i as f64 / (n - 1) as f64;
                match self.scale {
                    Scale::Linear => (0..n).map(|i| a + (b - a) * step(i)).collect(),
                    Scale::Log => {
                        if !(a > 0.0 && b > 0.0) {
                            return Err("log scale needs positive start and stop".into());
                        }
                        (0..n).map(|i| a * (b / a).powf(step(i))).collect()
                    }
                }
            }
            _ => return Err("give either `values` or all of `start`, `stop`, `count`".into()),
        };
        if values.is_empty() {
            return Err("sweep grid is empty".into());
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err("sweep values must be finite".into());
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: Vec<AxisConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub n_steps: usize,
    /// Initial and maximal FID horizon in units of `1 / Gamma_111`.
    pub horizon: f64,
    pub max_horizon: f64,
    /// Fixed FID horizon for `fid` mode (seconds); automatic when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    pub fid_solver: FidSolver,
    pub serf_solver: SerfSolver,
    pub tol: f64,
    pub by_points: usize,
    pub max_extensions: usize,
    pub refine_tol: f64,
    pub convention: SlowDownConvention,
    pub units: Units,
    /// Rows of the perturbation table (`m = 1..=table_rows`).
    pub table_rows: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let t2 = T2Options::default();
        let serf = SerfOptions::default();
        SolverConfig {
            n_steps: t2.n_steps,
            horizon: t2.horizon,
            max_horizon: t2.max_horizon,
            t_end: None,
            fid_solver: FidSolver::Spectral,
            serf_solver: serf.solver,
            tol: serf.tol,
            by_points: 41,
            max_extensions: serf.max_extensions,
            refine_tol: serf.refine_tol,
            convention: SlowDownConvention::LiteralQ,
            units: Units::Rate,
            table_rows: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotConfig {
    pub x: String,
    pub y: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    #[serde(default)]
    pub log_x: bool,
    #[serde(default)]
    pub log_y: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    pub plot: Vec<PlotConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    #[serde(default)]
    pub cell: CellConfig,
    #[serde(default)]
    pub spin: SpinConfig,
    #[serde(default)]
    pub gradient: GradientConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Parse or validation failure with its location in the source file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.path, line, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Line (1-based) of `key = ...` inside `[section]`, or of the section
/// header when the key is absent.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == section && header.is_none() {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

/// Line of the `index`-th `[[section]]` entry.
fn locate_array_entry(text: &str, section: &str, index: usize) -> Option<usize> {
    let tag = format!("[[{section}]]");
    text.lines()
        .enumerate()
        .filter(|(_, l)| l.trim() == tag)
        .nth(index)
        .map(|(i, _)| i + 1)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ScenarioConfig {
    pub fn parse(text: &str, path: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError {
            path: path.to_string(),
            line: e.span().map(|s| line_of_offset(text, s.start)),
            message: e.message().to_string(),
        })?;
        config.validate(text, path)?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: shown.clone(),
            line: None,
            message: format!("cannot read: {e}"),
        })?;
        Self::parse(&text, &shown)
    }

    fn validate(&self, text: &str, path: &str) -> Result<(), ConfigError> {
        let err = |section: &str, key: &str, message: String| ConfigError {
            path: path.to_string(),
            line: locate(text, section, key),
            message,
        };
        let lib = |section: &str, e: Error| {
            let key = match &e {
                Error::InvalidParameter { name, .. } => *name,
                _ => "",
            };
            err(section, key, e.to_string())
        };

        let geom = self.geometry().map_err(|e| lib("cell", e))?;
        let spin = self.spin_params().map_err(|e| lib("spin", e))?;
        geom.check_diffusion(&spin, DEFAULT_VELOCITY_BOUND)
            .map_err(|e| err("spin", "diffusion", e.to_string()))?;

        let g = &self.gradient;
        for (key, v) in [("gamma_g", g.gamma_g), ("gx", g.gx), ("gy", g.gy), ("gz", g.gz)] {
            if !v.is_finite() {
                return Err(err("gradient", key, format!("`{key}` must be finite")));
            }
        }
        if let Some(case) = g.case {
            divergence_free_config(case, g.gz).map_err(|e| err("gradient", "case", e.to_string()))?;
            if g.gx != 0.0 || g.gy != 0.0 {
                return Err(err(
                    "gradient",
                    "case",
                    "`case` derives gx and gy from gz; do not set them".into(),
                ));
            }
        }
        if let Some(by) = g.by {
            if !by.is_finite() {
                return Err(err("gradient", "by", "`by` must be finite".into()));
            }
        }

        let allowed = self.mode.axes();
        let mut seen = Vec::new();
        for (i, axis) in self.sweep.axis.iter().enumerate() {
            let here = |message: String| ConfigError {
                path: path.to_string(),
                line: locate_array_entry(text, "sweep.axis", i),
                message,
            };
            if !allowed.contains(&axis.name.as_str()) {
                return Err(here(format!(
                    "mode `{}` cannot sweep `{}` (allowed: {})",
                    self.mode.as_str(),
                    axis.name,
                    if allowed.is_empty() {
                        "none".to_string()
                    } else {
                        allowed.join(", ")
                    }
                )));
            }
            if seen.contains(&axis.name) {
                return Err(here(format!("axis `{}` given twice", axis.name)));
            }
            let grid = axis.grid().map_err(|m| here(format!("axis `{}`: {m}", axis.name)))?;
            if axis.name == "case" && grid.iter().any(|v| ![1.0, 2.0, 3.0].contains(v)) {
                return Err(here("axis `case`: values must be 1, 2 or 3".into()));
            }
            seen.push(axis.name.clone());
        }
        let has_case = g.case.is_some() || seen.iter().any(|n| n == "case");
        if has_case && seen.iter().any(|n| n == "gx" || n == "gy") {
            return Err(err(
                "sweep",
                "axis",
                "a divergence-free `case` derives gx and gy from gz; do not sweep them".into(),
            ));
        }
        if self.mode == Mode::FidSweep && self.sweep.axis.is_empty() {
            return Err(err(
                "sweep",
                "axis",
                "fid-sweep needs at least one [[sweep.axis]]".into(),
            ));
        }
        if self.mode == Mode::SerfSweep && self.sweep.axis.is_empty() {
            return Err(err(
                "sweep",
                "axis",
                "serf-sweep needs at least one [[sweep.axis]]".into(),
            ));
        }

        let s = &self.solver;
        if s.n_steps == 0 {
            return Err(err("solver", "n_steps", "`n_steps` must be at least 1".into()));
        }
        if !(s.horizon > 0.0 && s.max_horizon >= s.horizon) {
            return Err(err("solver", "horizon", "need 0 < horizon <= max_horizon".into()));
        }
        if let Some(t) = s.t_end {
            if !(t.is_finite() && t > 0.0) {
                return Err(err("solver", "t_end", "`t_end` must be > 0".into()));
            }
        }
        if self.mode != Mode::Fid && s.fid_solver != FidSolver::Spectral {
            return Err(err(
                "solver",
                "fid_solver",
                "only `fid` mode supports the finite-difference FID solver".into(),
            ));
        }
        if !(s.tol > 0.0 && s.tol <= 1e-10) {
            return Err(err(
                "solver",
                "tol",
                format!("`tol` must be in (0, 1e-10], got {}", s.tol),
            ));
        }
        if s.by_points < 5 {
            return Err(err("solver", "by_points", "`by_points` must be at least 5".into()));
        }
        if !(s.refine_tol > 0.0 && s.refine_tol < 1.0) {
            return Err(err("solver", "refine_tol", "`refine_tol` must be in (0, 1)".into()));
        }
        if s.table_rows == 0 || s.table_rows > geom.modes {
            return Err(err(
                "solver",
                "table_rows",
                format!("`table_rows` must be in 1..={} (cell.modes)", geom.modes),
            ));
        }

        let columns = self.columns();
        for (i, plot) in self.output.plot.iter().enumerate() {
            let here = |message: String| ConfigError {
                path: path.to_string(),
                line: locate_array_entry(text, "output.plot", i),
                message,
            };
            for c in [Some(&plot.x), Some(&plot.y), plot.series.as_ref()]
                .into_iter()
                .flatten()
            {
                if !columns.iter().any(|k| k == c) {
                    return Err(here(format!("unknown column `{c}` (columns: {})", columns.join(", "))));
                }
            }
        }
        Ok(())
    }

    /// Applies command-line overrides. `angular` converts `gyro` to a rate
    /// here, so the resolved configuration is always in rate units.
    pub fn resolve(mut self, convention: Option<SlowDownConvention>, units: Option<Units>) -> Self {
        if let Some(c) = convention {
            self.solver.convention = c;
        }
        if let Some(u) = units {
            self.solver.units = u;
        }
        if self.solver.units == Units::Angular {
            self.spin.gyro *= 2.0 * PI;
            self.solver.units = Units::Rate;
        }
        self
    }

    pub fn geometry(&self) -> crate::Result<CellGeometry> {
        CellGeometry::new(self.cell.length, self.cell.modes, self.cell.grid_points)
    }

    /// Spin parameters with `gyro` in the configured units converted to a
    /// rate.
    pub fn spin_params(&self) -> crate::Result<SpinParams> {
        let gyro = match self.solver.units {
            Units::Rate => self.spin.gyro,
            Units::Angular => self.spin.gyro * 2.0 * PI,
        };
        SpinParams::new(
            self.spin.diffusion,
            gyro,
            self.spin.base_rate,
            self.spin.pump_rate,
            self.spin.slow_down,
        )
    }

    pub fn gradient_field(&self) -> crate::Result<GradientField> {
        let g = &self.gradient;
        match g.case {
            Some(case) => divergence_free_config(case, g.gz),
            None => Ok(GradientField::new([g.gx, g.gy, g.gz])),
        }
    }

    pub fn serf_scenario(&self) -> crate::Result<SerfScenario> {
        let s = SerfScenario::new(self.geometry()?, self.spin_params()?, self.gradient_field()?)?;
        Ok(s.with_convention(self.solver.convention))
    }

    pub fn t2_options(&self) -> T2Options {
        T2Options {
            n_steps: self.solver.n_steps,
            horizon: self.solver.horizon,
            max_horizon: self.solver.max_horizon,
        }
    }

    pub fn serf_options(&self) -> SerfOptions {
        SerfOptions {
            solver: self.solver.serf_solver,
            tol: self.solver.tol,
            refine_tol: self.solver.refine_tol,
            max_extensions: self.solver.max_extensions,
            ..SerfOptions::default()
        }
    }

    /// Column order of the CSV written for this mode.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self.sweep.axis.iter().map(|a| a.name.clone()).collect();
        let outputs: &[&str] = match self.mode {
            Mode::Fid => &["t", "re", "im", "modulus"],
            Mode::FidSweep => &[
                "T2",
                "Gamma2",
                "delta_Gamma2",
                "omega_fit",
                "bound",
                "epsilon",
                "truncation_tail",
                "error",
            ],
            Mode::SerfSweep => &["w", "w0", "delta_w", "b_min", "b_max", "extensions", "error"],
            Mode::Symmetry => &["sx", "sx_swapped", "residual", "control_residual", "error"],
            Mode::PerturbationTable => &["m", "closed_form", "summed", "rel_diff", "error"],
        };
        cols.extend(outputs.iter().map(|s| s.to_string()));
        cols
    }

    /// Cartesian product of the sweep axes, first axis slowest.
    pub fn sweep_points(&self) -> Vec<Vec<f64>> {
        let mut points = vec![Vec::new()];
        for axis in &self.sweep.axis {
            let grid = axis.grid().unwrap_or_default();
            points = points
                .into_iter()
                .flat_map(|p| {
                    grid.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}
