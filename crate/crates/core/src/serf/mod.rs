//! Steady state of the pumped electron spin in a SERF magnetometer with
//! linear field gradients, the dispersive `S_x(B_y)` resonance and its
//! linewidth.
//!
//! The steady Bloch equation
//!
//! ```text
//! D q lap S + gamma (B(r) + B_y e_y) x S - Gamma0 S + (R/2) e_z = 0
//! ```
//!
//! is solved with zero wall values on all three components, either on the
//! sine basis or on a finite-difference grid, by preconditioned GMRES.

mod fd;
mod spectral;

use std::str::FromStr;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gmres, maximize_scalar, GmresOptions};
use crate::model::{Axis, CellGeometry, GradientField, SpinParams};

use fd::GridOperator;
use spectral::SpectralOperator;

/// Where the slow-down factor `q` enters the steady Bloch equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlowDownConvention {
    /// `q` multiplies the diffusion term only: effective diffusion `D q`,
    /// with `gamma`, `Gamma0` and `R` unchanged.
    #[default]
    LiteralQ,
    /// `q` divides precession and pumping: diffusion `D`, gyromagnetic
    /// ratio `gamma / q`, pump `R / q`.
    ScaledQ,
}

impl FromStr for SlowDownConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal-q" => Ok(SlowDownConvention::LiteralQ),
            "scaled-q" => Ok(SlowDownConvention::ScaledQ),
            other => Err(Error::invalid(
                "convention",
                format!("expected `literal-q` or `scaled-q`, got `{other}`"),
            )),
        }
    }
}

impl SlowDownConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            SlowDownConvention::LiteralQ => "literal-q",
            SlowDownConvention::ScaledQ => "scaled-q",
        }
    }

    pub(crate) fn effective(self, spin: &SpinParams) -> Effective {
        let q = spin.slow_down;
        match self {
            SlowDownConvention::LiteralQ => Effective {
                diffusion: spin.diffusion * q,
                gyro: spin.gyro,
                base_rate: spin.base_rate,
                pump: spin.pump_rate,
            },
            SlowDownConvention::ScaledQ => Effective {
                diffusion: spin.diffusion,
                gyro: spin.gyro / q,
                base_rate: spin.base_rate,
                pump: spin.pump_rate / q,
            },
        }
    }
}

/// Coefficients actually entering the discretized equation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Effective {
    pub diffusion: f64,
    pub gyro: f64,
    pub base_rate: f64,
    pub pump: f64,
}

/// One steady-state problem. The gradient's constant part is always
/// compensated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerfScenario {
    pub geom: CellGeometry,
    pub spin: SpinParams,
    pub gradient: GradientField,
    /// Uniform applied transverse field.
    pub by: f64,
    #[serde(default)]
    pub convention: SlowDownConvention,
}

impl SerfScenario {
    pub fn new(geom: CellGeometry, spin: SpinParams, gradient: GradientField) -> Result<Self> {
        let s = SerfScenario {
            geom,
            spin,
            gradient,
            by: 0.0,
            convention: SlowDownConvention::LiteralQ,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.geom.validate()?;
        self.spin.validate()?;
        if !self.gradient.subtract_offset {
            return Err(Error::invalid(
                "gradient",
                "the constant part of the gradient field must be compensated",
            ));
        }
        if self.gradient.g.iter().any(|g| !g.is_finite()) {
            return Err(Error::invalid("gradient", "components must be finite"));
        }
        if !self.by.is_finite() {
            return Err(Error::invalid("by", "must be finite"));
        }
        if self.spin.gyro == 0.0 {
            return Err(Error::DegenerateParameters(
                "gyromagnetic ratio is zero, S_x does not respond to B_y".into(),
            ));
        }
        if self.spin.pump_rate == 0.0 {
            return Err(Error::DegenerateParameters("pump rate is zero, S vanishes".into()));
        }
        Ok(())
    }

    pub fn with_by(mut self, by: f64) -> Self {
        self.by = by;
        self
    }

    pub fn with_gradient(mut self, gradient: GradientField) -> Self {
        self.gradient = gradient;
        self
    }

    pub fn with_convention(mut self, convention: SlowDownConvention) -> Self {
        self.convention = convention;
        self
    }

    /// Same scenario with gradient components `a` and `b` exchanged.
    pub fn swapped(mut self, a: Axis, b: Axis) -> Self {
        self.gradient.g.swap(a.index(), b.index());
        self
    }

    /// Gradient-free linewidth estimate `(Gamma0 + 3 D_eff (pi/L)^2) / gamma_eff`,
    /// the scale of the automatic `B_y` grid.
    pub fn linewidth_scale(&self) -> f64 {
        let eff = self.convention.effective(&self.spin);
        (eff.base_rate + 3.0 * eff.diffusion * self.geom.wavenumber_sq()) / eff.gyro.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SerfSolver {
    #[default]
    Spectral,
    FiniteDifference,
}

impl FromStr for SerfSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(SerfSolver::Spectral),
            "finite-difference" => Ok(SerfSolver::FiniteDifference),
            other => Err(Error::invalid(
                "solver",
                format!("expected `spectral` or `finite-difference`, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerfOptions {
    pub solver: SerfSolver,
    /// Relative residual target of the linear solve.
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    /// Extremum refinement stops once the location is known to this
    /// fraction of the linewidth.
    pub refine_tol: f64,
    /// How many times the `B_y` grid may be doubled to bracket the extrema.
    pub max_extensions: usize,
}

impl Default for SerfOptions {
    fn default() -> Self {
        SerfOptions {
            solver: SerfSolver::Spectral,
            tol: 1e-12,
            restart: 80,
            max_iter: 4000,
            refine_tol: 1e-4,
            max_extensions: 4,
        }
    }
}

impl SerfOptions {
    pub fn with_solver(mut self, solver: SerfSolver) -> Self {
        self.solver = solver;
        self
    }

    fn gmres(&self) -> GmresOptions {
        GmresOptions {
            tol: self.tol,
            restart: self.restart,
            max_iter: self.max_iter,
        }
    }
}

/// Solution of one steady-state problem. Components are coefficients on the
/// sine basis (spectral) or interior grid values (finite differences).
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub solver: SerfSolver,
    pub components: [Vec<f64>; 3],
    /// Volume averages `(S_x, S_y, S_z)`.
    pub mean: [f64; 3],
    pub iterations: usize,
    pub residual: f64,
}

pub fn steady_state_bloch(scenario: &SerfScenario, opts: &SerfOptions) -> Result<SteadyState> {
    scenario.validate()?;
    let eff = scenario.convention.effective(&scenario.spin);
    let (outcome, len, weights) = match opts.solver {
        SerfSolver::Spectral => {
            let op = SpectralOperator::new(scenario, &eff);
            let b = SpectralOperator::source(scenario, &eff);
            let out = gmres(|v, o| op.apply(v, o), |v, o| op.precondition(v, o), &b, opts.gmres())?;
            (out, op.block_len(), SpectralOperator::mean_weights(scenario))
        }
        SerfSolver::FiniteDifference => {
            let op = GridOperator::new(scenario, &eff);
            let b = op.source(&eff);
            let out = gmres(|v, o| op.apply(v, o), |v, o| op.precondition(v, o), &b, opts.gmres())?;
            (out, op.block_len(), vec![op.mean_weight(); op.block_len()])
        }
    };
    let x = outcome.x;
    let components = [x[..len].to_vec(), x[len..2 * len].to_vec(), x[2 * len..].to_vec()];
    let mut mean = [0.0; 3];
    for (m, c) in mean.iter_mut().zip(&components) {
        *m = c.iter().zip(&weights).map(|(v, w)| v * w).sum();
    }
    Ok(SteadyState {
        solver: opts.solver,
        components,
        mean,
        iterations: outcome.iterations,
        residual: outcome.residual,
    })
}

/// Volume-averaged `S_x` for one scenario.
pub fn mean_sx(scenario: &SerfScenario, opts: &SerfOptions) -> Result<f64> {
    Ok(steady_state_bloch(scenario, opts)?.mean[0])
}

/// Symmetric `B_y` grid of `points` values on `|B_y| <= 6 w_scale`, denser
/// near zero.
pub fn default_by_grid(template: &SerfScenario, points: usize) -> Result<Vec<f64>> {
    if points < 5 {
        return Err(Error::invalid(
            "by_points",
            format!("need at least 5 points, got {points}"),
        ));
    }
    let half = 6.0 * template.linewidth_scale();
    let stretch = 3.0f64;
    Ok((0..points)
        .map(|i| {
            let u = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
            half * (stretch * u).sinh() / stretch.sinh()
        })
        .collect())
}

fn check_by_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::invalid(
            "by_grid",
            format!("need at least 3 points, got {}", grid.len()),
        ));
    }
    if grid.iter().any(|b| !b.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "by_grid",
            "values must be finite and strictly increasing",
        ));
    }
    Ok(())
}

/// `S_x(B_y)` sampled on a grid, with refined extremum locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinewidthSweep {
    pub by_values: Vec<f64>,
    pub sx_values: Vec<f64>,
    /// Half the distance between the maximum and the minimum of `S_x`.
    pub w: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub sx_min: f64,
    pub sx_max: f64,
    /// Number of grid doublings needed to bracket both extrema.
    pub extensions: usize,
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn sample(template: &SerfScenario, grid: &[f64], opts: &SerfOptions) -> Result<Vec<f64>> {
    grid.par_iter().map(|&b| mean_sx(&template.with_by(b), opts)).collect()
}

/// Sweeps `B_y` over `by_grid` (doubled up to `max_extensions` times until
/// both extrema are interior), then refines each extremum by a bounded
/// scalar search between its grid neighbours.
pub fn sweep_by(template: &SerfScenario, by_grid: &[f64], opts: &SerfOptions) -> Result<LinewidthSweep> {
    template.validate()?;
    check_by_grid(by_grid)?;
    let mut grid = by_grid.to_vec();
    let mut extensions = 0;
    let (values, i_max, i_min) = loop {
        let values = sample(template, &grid, opts)?;
        let i_max = argmax(&values);
        let negated: Vec<f64> = values.iter().map(|v| -v).collect();
        let i_min = argmax(&negated);
        let last = grid.len() - 1;
        let at_edge = |i: usize| i == 0 || i == last;
        if !at_edge(i_max) && !at_edge(i_min) {
            break (values, i_max, i_min);
        }
        if extensions == opts.max_extensions {
            let edge = grid[0].abs().max(grid[last].abs());
            return Err(Error::Range { edge, extensions });
        }
        extensions += 1;
        debug!("extremum at sweep edge, doubling B_y range (extension {extensions})");
        grid.iter_mut().for_each(|b| *b *= 2.0);
    };

    let coarse_w = 0.5 * (grid[i_max] - grid[i_min]).abs();
    let xtol = opts.refine_tol * coarse_w.max(f64::MIN_POSITIVE);
    let refine = |i: usize, sign: f64| {
        maximize_scalar(
            |b| mean_sx(&template.with_by(b), opts).map(|v| sign * v),
            grid[i - 1],
            grid[i + 1],
            xtol,
        )
    };
    let (hi, lo) = rayon::join(|| refine(i_max, 1.0), || refine(i_min, -1.0));
    let (b_max, sx_max) = hi?;
    let (b_min, neg_min) = lo?;
    Ok(LinewidthSweep {
        by_values: grid,
        sx_values: values,
        w: 0.5 * (b_max - b_min).abs(),
        b_min,
        b_max,
        sx_min: -neg_min,
        sx_max,
        extensions,
    })
}

/// `w(g) - w(0)` from two sweeps started on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Broadening {
    pub sweep: LinewidthSweep,
    /// The same sweep with all gradients removed.
    pub baseline: LinewidthSweep,
    pub delta_w: f64,
}

impl Broadening {
    pub fn w(&self) -> f64 {
        self.sweep.w
    }

    pub fn w0(&self) -> f64 {
        self.baseline.w
    }
}

pub fn linewidth_broadening(template: &SerfScenario, by_grid: &[f64], opts: &SerfOptions) -> Result<Broadening> {
    let baseline = template.with_gradient(GradientField::default());
    let (with_g, without) = rayon::join(
        || sweep_by(template, by_grid, opts),
        || sweep_by(&baseline, by_grid, opts),
    );
    let (sweep, baseline) = (with_g?, without?);
    let delta_w = sweep.w - baseline.w;
    Ok(Broadening {
        sweep,
        baseline,
        delta_w,
    })
}

/// The three divergence-free configurations parameterized by `g_z`:
/// 1: `(-g, 0, g)`, 2: `(-g/2, -g/2, g)`, 3: `(0, -g, g)`.
pub fn divergence_free_config(case: u8, g_z: f64) -> Result<GradientField> {
    let g = match case {
        1 => [-g_z, 0.0, g_z],
        2 => [-g_z / 2.0, -g_z / 2.0, g_z],
        3 => [0.0, -g_z, g_z],
        other => return Err(Error::UnknownCase(other)),
    };
    Ok(GradientField::new(g))
}

/// `|S_x - S_x'| / max(|S_x|, tiny)` where `S_x'` is computed with gradient
/// components `a` and `b` exchanged.
pub fn symmetry_residual(scenario: &SerfScenario, a: Axis, b: Axis, opts: &SerfOptions) -> Result<f64> {
    let swapped = scenario.swapped(a, b);
    let (s, t) = rayon::join(|| mean_sx(scenario, opts), || mean_sx(&swapped, opts));
    let (s, t) = (s?, t?);
    Ok((s - t).abs() / s.abs().max(f64::MIN_POSITIVE))
}

/// Residual of the x/z exchange, under which `S_x` is invariant.
pub fn symmetry_check_xz(scenario: &SerfScenario, opts: &SerfOptions) -> Result<f64> {
    symmetry_residual(scenario, Axis::X, Axis::Z, opts)
}

/// Residual of the y/z exchange, which is not a symmetry; a control for
/// [`symmetry_check_xz`].
pub fn symmetry_check_yz(scenario: &SerfScenario, opts: &SerfOptions) -> Result<f64> {
    symmetry_residual(scenario, Axis::Y, Axis::Z, opts)
}
