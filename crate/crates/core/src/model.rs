//! Cell geometry, spin parameters and the Dirichlet sine eigenbasis.
//!
//! The diffusion operator on a cube `[0, L]^3` with zero boundary values has
//! eigenfunctions `psi_mnl = phi_m(x) phi_n(y) phi_l(z)` with
//! `phi_m(x) = sqrt(2/L) sin(m pi x / L)`. Linear fields act on one axis at a
//! time, so every matrix element used by the solvers factors into a 1-D
//! position integral `X_{mm'} = int_0^L phi_m(x) x phi_m'(x) dx` times
//! Kronecker deltas on the other two axes.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default mean-velocity bound for the diffusion-validity guard, in cm/s.
pub const DEFAULT_VELOCITY_BOUND: f64 = 1.0e4;

/// Default sine-mode truncation per axis.
pub const DEFAULT_MODES: usize = 15;

/// Default number of interior finite-difference points per axis.
pub const DEFAULT_GRID_POINTS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellGeometry {
    /// Edge length of the cube, cm.
    pub length: f64,
    /// Highest sine-mode index kept per axis.
    pub modes: usize,
    /// Interior finite-difference points per axis.
    pub grid_points: usize,
}

impl CellGeometry {
    pub fn new(length: f64, modes: usize, grid_points: usize) -> Result<Self> {
        let geom = CellGeometry {
            length,
            modes,
            grid_points,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Cube of edge `length` with default truncation and grid.
    pub fn cube(length: f64) -> Result<Self> {
        Self::new(length, DEFAULT_MODES, DEFAULT_GRID_POINTS)
    }

    pub fn with_modes(mut self, modes: usize) -> Result<Self> {
        self.modes = modes;
        self.validate()?;
        Ok(self)
    }

    pub fn with_grid_points(mut self, grid_points: usize) -> Result<Self> {
        self.grid_points = grid_points;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::invalid("length", format!("must be > 0, got {}", self.length)));
        }
        if self.modes < 1 {
            return Err(Error::invalid("modes", "mode truncation must be >= 1"));
        }
        if self.grid_points < 3 {
            return Err(Error::invalid(
                "grid_points",
                format!("need at least 3 interior points, got {}", self.grid_points),
            ));
        }
        Ok(())
    }

    /// Diffusion-validity guard: `3 D / L` must stay below `velocity_bound` (cm/s).
    pub fn check_diffusion(&self, spin: &SpinParams, velocity_bound: f64) -> Result<()> {
        let v = 3.0 * spin.diffusion / self.length;
        if v >= velocity_bound {
            return Err(Error::invalid(
                "diffusion",
                format!("3D/L = {v:e} cm/s exceeds the diffusion-regime bound {velocity_bound:e} cm/s"),
            ));
        }
        Ok(())
    }

    /// `(pi / L)^2`, the squared fundamental wavenumber.
    pub fn wavenumber_sq(&self) -> f64 {
        (PI / self.length).powi(2)
    }

    /// Number of coefficients in a full mode vector, `M^3`.
    pub fn mode_count(&self) -> usize {
        self.modes.pow(3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinParams {
    /// Diffusion constant, cm^2/s.
    pub diffusion: f64,
    /// Gyromagnetic ratio. Products `gyro * field` are precession rates in 1/s.
    pub gyro: f64,
    /// Relaxation rate without field inhomogeneity, 1/s.
    pub base_rate: f64,
    /// Pumping rate, 1/s.
    pub pump_rate: f64,
    /// Slow-down factor (only used by the steady-state Bloch solver).
    pub slow_down: f64,
}

impl SpinParams {
    pub fn new(diffusion: f64, gyro: f64, base_rate: f64, pump_rate: f64, slow_down: f64) -> Result<Self> {
        let p = SpinParams {
            diffusion,
            gyro,
            base_rate,
            pump_rate,
            slow_down,
        };
        p.validate()?;
        Ok(p)
    }

    /// Unit gyromagnetic ratio and pump rate, no slow-down. Gradients are then
    /// given directly as precession-rate gradients (1/s/cm).
    pub fn unit(diffusion: f64, base_rate: f64) -> Result<Self> {
        Self::new(diffusion, 1.0, base_rate, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diffusion.is_finite() && self.diffusion > 0.0) {
            return Err(Error::invalid(
                "diffusion",
                format!("must be > 0, got {}", self.diffusion),
            ));
        }
        if !self.gyro.is_finite() {
            return Err(Error::invalid("gyro", "must be finite"));
        }
        if !(self.base_rate.is_finite() && self.base_rate >= 0.0) {
            return Err(Error::invalid(
                "base_rate",
                format!("must be >= 0, got {}", self.base_rate),
            ));
        }
        if !(self.pump_rate.is_finite() && self.pump_rate >= 0.0) {
            return Err(Error::invalid(
                "pump_rate",
                format!("must be >= 0, got {}", self.pump_rate),
            ));
        }
        if !(self.slow_down.is_finite() && self.slow_down >= 1.0) {
            return Err(Error::invalid(
                "slow_down",
                format!("must be >= 1, got {}", self.slow_down),
            ));
        }
        Ok(())
    }

    pub fn with_base_rate(mut self, base_rate: f64) -> Result<Self> {
        self.base_rate = base_rate;
        self.validate()?;
        Ok(self)
    }

    pub fn with_diffusion(mut self, diffusion: f64) -> Result<Self> {
        self.diffusion = diffusion;
        self.validate()?;
        Ok(self)
    }

    pub fn with_pump_rate(mut self, pump_rate: f64) -> Result<Self> {
        self.pump_rate = pump_rate;
        self.validate()?;
        Ok(self)
    }

    pub fn with_slow_down(mut self, slow_down: f64) -> Result<Self> {
        self.slow_down = slow_down;
        self.validate()?;
        Ok(self)
    }
}

/// Triple of positive sine-mode indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub m: usize,
    pub n: usize,
    pub l: usize,
}

impl ModeIndex {
    pub fn new(m: usize, n: usize, l: usize) -> Result<Self> {
        if m == 0 || n == 0 || l == 0 {
            return Err(Error::invalid("mode index", format!("({m}, {n}, {l}) must be >= 1")));
        }
        Ok(ModeIndex { m, n, l })
    }

    pub fn check_within(&self, geom: &CellGeometry) -> Result<()> {
        if self.m > geom.modes || self.n > geom.modes || self.l > geom.modes {
            return Err(Error::ModeOutOfRange {
                m: self.m,
                n: self.n,
                l: self.l,
                max: geom.modes,
            });
        }
        Ok(())
    }

    pub fn sum_of_squares(&self) -> usize {
        self.m * self.m + self.n * self.n + self.l * self.l
    }

    pub fn product(&self) -> usize {
        self.m * self.n * self.l
    }

    pub fn is_all_odd(&self) -> bool {
        self.m % 2 == 1 && self.n % 2 == 1 && self.l % 2 == 1
    }

    pub fn along(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.m,
            Axis::Y => self.n,
            Axis::Z => self.l,
        }
    }

    /// Row-major flat position for truncation `modes` (m slowest, l fastest).
    pub fn flat(&self, modes: usize) -> usize {
        ((self.m - 1) * modes + (self.n - 1)) * modes + (self.l - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Linear gradient field `B(r) = sum_a (g_a * a - offset_a) e_a`, with
/// `offset_a = g_a L / 2` when the constant part is compensated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientField {
    /// `(g_x, g_y, g_z)` in field units per cm.
    pub g: [f64; 3],
    pub subtract_offset: bool,
}

impl Default for GradientField {
    fn default() -> Self {
        GradientField {
            g: [0.0; 3],
            subtract_offset: true,
        }
    }
}

impl GradientField {
    pub fn new(g: [f64; 3]) -> Self {
        GradientField {
            g,
            subtract_offset: true,
        }
    }

    pub fn along(axis: Axis, g: f64) -> Self {
        let mut v = [0.0; 3];
        v[axis.index()] = g;
        Self::new(v)
    }

    pub fn without_offset(mut self) -> Self {
        self.subtract_offset = false;
        self
    }

    pub fn component(&self, axis: Axis) -> f64 {
        self.g[axis.index()]
    }

    /// Field component along `axis` at coordinate `coord` on that axis.
    pub fn field(&self, axis: Axis, coord: f64, length: f64) -> f64 {
        let g = self.component(axis);
        if self.subtract_offset {
            g * coord - g * length / 2.0
        } else {
            g * coord
        }
    }

    pub fn is_divergence_free(&self) -> bool {
        let scale = self.g.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let sum: f64 = self.g.iter().sum();
        scale == 0.0 || sum.abs() <= 1e-12 * scale
    }

    /// Errors unless the components sum to zero.
    pub fn require_divergence_free(&self) -> Result<()> {
        if self.is_divergence_free() {
            Ok(())
        } else {
            Err(Error::invalid(
                "gradient",
                format!("components {:?} do not sum to zero", self.g),
            ))
        }
    }
}

/// Complex coefficients on the `M^3` sine basis, flattened with
/// [`ModeIndex::flat`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarModeVector {
    modes: usize,
    coeffs: Vec<Complex64>,
}

impl ScalarModeVector {
    pub fn zeros(modes: usize) -> Self {
        ScalarModeVector {
            modes,
            coeffs: vec![Complex64::new(0.0, 0.0); modes.pow(3)],
        }
    }

    pub fn from_vec(modes: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != modes.pow(3) {
            return Err(Error::invalid(
                "coefficients",
                format!("expected {} entries, got {}", modes.pow(3), coeffs.len()),
            ));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::invalid("coefficients", "non-finite entry"));
        }
        Ok(ScalarModeVector { modes, coeffs })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, idx: ModeIndex) -> Complex64 {
        self.coeffs[idx.flat(self.modes)]
    }

    pub fn set(&mut self, idx: ModeIndex, value: Complex64) {
        let k = idx.flat(self.modes);
        self.coeffs[k] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeIndex, Complex64)> + '_ {
        mode_indices(self.modes).map(move |idx| (idx, self.get(idx)))
    }

    /// Field value `(L/2)^{3/2} sum_mnl C_mnl psi_mnl(r)`.
    pub fn evaluate(&self, length: f64, point: [f64; 3]) -> Complex64 {
        let phis: Vec<[f64; 3]> = (1..=self.modes)
            .map(|k| {
                [
                    sine_mode(k, point[0], length),
                    sine_mode(k, point[1], length),
                    sine_mode(k, point[2], length),
                ]
            })
            .collect();
        let norm = (length / 2.0).powf(1.5);
        self.iter()
            .map(|(idx, c)| c * (phis[idx.m - 1][0] * phis[idx.n - 1][1] * phis[idx.l - 1][2]))
            .sum::<Complex64>()
            * norm
    }
}

/// All mode triples with indices `1..=modes`, in flat order.
pub fn mode_indices(modes: usize) -> impl Iterator<Item = ModeIndex> {
    (1..=modes).flat_map(move |m| (1..=modes).flat_map(move |n| (1..=modes).map(move |l| ModeIndex { m, n, l })))
}

/// Normalized 1-D Dirichlet eigenfunction `sqrt(2/L) sin(m pi x / L)`.
pub fn sine_mode(m: usize, x: f64, length: f64) -> f64 {
    (2.0 / length).sqrt() * (m as f64 * PI * x / length).sin()
}

/// `int_0^L phi_m(x) dx`; zero for even `m`.
pub fn sine_mode_integral(m: usize, length: f64) -> f64 {
    if m.is_multiple_of(2) {
        0.0
    } else {
        (2.0 / length).sqrt() * 2.0 * length / (m as f64 * PI)
    }
}

/// `Gamma0 + D (pi/L)^2 (m^2 + n^2 + l^2)`.
pub fn mode_decay_rate(geom: &CellGeometry, spin: &SpinParams, idx: ModeIndex) -> f64 {
    spin.base_rate + spin.diffusion * geom.wavenumber_sq() * idx.sum_of_squares() as f64
}

/// Amplitude of mode `idx` in the steady longitudinal polarization driven by a
/// uniform pump: `64 R / (mnl pi^3 Gamma_mnl)` for all-odd triples, zero otherwise.
pub fn initial_coefficient(geom: &CellGeometry, spin: &SpinParams, idx: ModeIndex) -> Result<Complex64> {
    let rate = mode_decay_rate(geom, spin, idx);
    if rate == 0.0 {
        return Err(Error::DegenerateParameters(
            "mode decay rate is zero (base rate and diffusion both vanish)".into(),
        ));
    }
    if !idx.is_all_odd() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let value = 64.0 * spin.pump_rate / (idx.product() as f64 * PI.powi(3) * rate);
    Ok(Complex64::new(value, 0.0))
}

/// Position matrix element `X_{mm'} = int_0^L phi_m(x) x phi_m'(x) dx`.
///
/// Diagonal entries are `L/2`; same-parity off-diagonal entries vanish; the
/// rest equal `-8 L m m' / (pi^2 (m^2 - m'^2)^2)`.
pub fn position_element(length: f64, m: usize, mp: usize) -> f64 {
    if m == mp {
        return length / 2.0;
    }
    if (m + mp).is_multiple_of(2) {
        return 0.0;
    }
    let (a, b) = (m as f64, mp as f64);
    let diff = a * a - b * b;
    -8.0 * length * (a * b) / (PI * PI * diff * diff)
}

/// `M x M` matrix of [`position_element`], optionally with `L/2` removed
/// from the diagonal (offset-compensated field).
pub fn position_matrix(length: f64, modes: usize, centered: bool) -> DMatrix<f64> {
    DMatrix::from_fn(modes, modes, |i, j| {
        let v = position_element(length, i + 1, j + 1);
        if centered && i == j {
            v - length / 2.0
        } else {
            v
        }
    })
}

/// Matrix element of the unit linear field `B = axis coordinate` between two
/// eigenmodes: `X_{ab}` on `axis` times deltas on the remaining axes.
pub fn gradient_matrix_element(geom: &CellGeometry, axis: Axis, a: ModeIndex, b: ModeIndex) -> f64 {
    let same_elsewhere = Axis::ALL
        .iter()
        .filter(|&&other| other != axis)
        .all(|&other| a.along(other) == b.along(other));
    if !same_elsewhere {
        return 0.0;
    }
    position_element(geom.length, a.along(axis), b.along(axis))
}

/// Transverse rate for spins with non-depolarizing walls,
/// `gamma^2 g^2 L^4 / (120 D)`; kept only for comparison.
pub fn nuclear_comparison_rate(geom: &CellGeometry, spin: &SpinParams, g: f64) -> Result<f64> {
    if spin.diffusion == 0.0 {
        return Err(Error::DegenerateParameters("diffusion constant is zero".into()));
    }
    let gg = spin.gyro * g;
    Ok(gg * gg * geom.length.powi(4) / (120.0 * spin.diffusion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = if n % 2 == 1 { n + 1 } else { n };
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn geometry_rejects_bad_inputs() {
        assert!(CellGeometry::new(0.0, 15, 48).is_err());
        assert!(CellGeometry::new(0.2, 0, 48).is_err());
        assert!(CellGeometry::new(0.2, 15, 2).is_err());
        assert!(CellGeometry::new(0.2, 1, 3).is_ok());
    }

    #[test]
    fn spin_params_invariants() {
        assert!(SpinParams::new(0.0, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(SpinParams::new(0.2, 1.0, -1.0, 1.0, 1.0).is_err());
        assert!(SpinParams::new(0.2, 1.0, 0.0, -1.0, 1.0).is_err());
        assert!(SpinParams::new(0.2, 1.0, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn diffusion_guard() {
        let geom = CellGeometry::cube(0.2).unwrap();
        let spin = SpinParams::unit(0.2, 0.0).unwrap();
        assert!(geom.check_diffusion(&spin, DEFAULT_VELOCITY_BOUND).is_ok());
        let fast = SpinParams::unit(1000.0, 0.0).unwrap();
        assert!(geom.check_diffusion(&fast, DEFAULT_VELOCITY_BOUND).is_err());
    }

    #[test]
    fn decay_rate_examples() {
        let geom = CellGeometry::cube(0.2).unwrap();
        let spin = SpinParams::unit(0.2, 0.0).unwrap();
        let r111 = mode_decay_rate(&geom, &spin, ModeIndex::new(1, 1, 1).unwrap());
        assert_relative_eq!(r111, 148.04406601634037, max_relative = 1e-12);
        let spin20 = spin.with_base_rate(20.0).unwrap();
        let r211 = mode_decay_rate(&geom, &spin20, ModeIndex::new(2, 1, 1).unwrap());
        assert_relative_eq!(r211, 316.08813203268073, max_relative = 1e-12);
        let r111_20 = mode_decay_rate(&geom, &spin20, ModeIndex::new(1, 1, 1).unwrap());
        assert_relative_eq!(r111_20 - r111, 20.0, max_relative = 1e-12);
    }

    #[test]
    fn decay_rate_matches_discrete_laplacian_eigenvalue() {
        // Smallest eigenvalue of -D d^2/dx^2 (3 axes) on a fine grid.
        let n = 2000;
        let h = 0.2 / (n + 1) as f64;
        let lam1 = 4.0 / (h * h) * (PI * h / (2.0 * 0.2)).sin().powi(2);
        let discrete = 3.0 * 0.2 * lam1;
        assert_relative_eq!(discrete, 148.04406601634037, max_relative = 1e-5);
    }

    #[test]
    fn initial_coefficient_parity_and_scaling() {
        let geom = CellGeometry::cube(0.2).unwrap();
        let spin = SpinParams::unit(0.2, 20.0).unwrap();
        let even = initial_coefficient(&geom, &spin, ModeIndex::new(2, 1, 1).unwrap()).unwrap();
        assert_eq!(even, Complex64::new(0.0, 0.0));
        let c = initial_coefficient(&geom, &spin, ModeIndex::new(1, 1, 1).unwrap()).unwrap();
        // 64 / (pi^3 * 168.04406601634037)
        assert_relative_eq!(c.re, 0.012283077008646396, max_relative = 1e-12);
        let doubled = spin.with_pump_rate(2.0).unwrap();
        let c2 = initial_coefficient(&geom, &doubled, ModeIndex::new(1, 1, 1).unwrap()).unwrap();
        assert_eq!(c2.re, 2.0 * c.re);
    }

    #[test]
    fn initial_coefficient_degenerate() {
        let geom = CellGeometry::cube(0.2).unwrap();
        let spin = SpinParams {
            diffusion: 0.0,
            gyro: 1.0,
            base_rate: 0.0,
            pump_rate: 1.0,
            slow_down: 1.0,
        };
        let err = initial_coefficient(&geom, &spin, ModeIndex::new(1, 1, 1).unwrap()).unwrap_err();
        assert!(matches!(err, Error::DegenerateParameters(_)));
    }

    #[test]
    fn position_elements_match_quadrature() {
        let l = 0.2;
        for m in 1..=6 {
            for mp in 1..=6 {
                let q = simpson(|x| sine_mode(m, x, l) * x * sine_mode(mp, x, l), 0.0, l, 4000);
                assert!(
                    (position_element(l, m, mp) - q).abs() < 1e-12,
                    "m={m} m'={mp}: {} vs {q}",
                    position_element(l, m, mp)
                );
            }
        }
        assert_relative_eq!(position_element(l, 1, 1), 0.1, max_relative = 1e-14);
        assert_eq!(position_element(l, 1, 3), 0.0);
        // Quadrature value: -0.036025... sign fixed by the integral itself.
        let q12 = simpson(|x| sine_mode(1, x, l) * x * sine_mode(2, x, l), 0.0, l, 4000);
        assert!(q12 < 0.0);
        assert_relative_eq!(position_element(l, 1, 2), q12, max_relative = 1e-10);
        assert_relative_eq!(q12.abs(), 16.0 * l / (9.0 * PI * PI), max_relative = 1e-10);
    }

    #[test]
    fn eigenmodes_orthonormal_and_vanish_on_walls() {
        let l = 0.2;
        for a in 1..=5 {
            for b in 1..=5 {
                let q = simpson(|x| sine_mode(a, x, l) * sine_mode(b, x, l), 0.0, l, 200);
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((q - expect).abs() < 1e-10);
            }
            assert!(sine_mode(a, 0.0, l).abs() < 1e-14);
            assert!(sine_mode(a, l, l).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_element_selection_rules() {
        let geom = CellGeometry::cube(0.2).unwrap();
        let a = ModeIndex::new(1, 2, 3).unwrap();
        let b = ModeIndex::new(2, 2, 3).unwrap();
        let c = ModeIndex::new(2, 1, 3).unwrap();
        assert_eq!(
            gradient_matrix_element(&geom, Axis::X, a, b),
            gradient_matrix_element(&geom, Axis::X, b, a)
        );
        assert!(gradient_matrix_element(&geom, Axis::X, a, b) != 0.0);
        assert_eq!(gradient_matrix_element(&geom, Axis::X, a, c), 0.0);
        assert_eq!(gradient_matrix_element(&geom, Axis::Y, a, a), 0.1);
    }

    #[test]
    fn nuclear_rate_examples() {
        let geom = CellGeometry::cube(0.2).unwrap();
        let spin = SpinParams::unit(0.2, 0.0).unwrap();
        let r = nuclear_comparison_rate(&geom, &spin, 1.0e3).unwrap();
        assert_relative_eq!(r, 1.0e6 * 1.6e-3 / 24.0, max_relative = 1e-12);
        assert_eq!(nuclear_comparison_rate(&geom, &spin, 0.0).unwrap(), 0.0);
        let bad = SpinParams { diffusion: 0.0, ..spin };
        assert!(nuclear_comparison_rate(&geom, &bad, 1.0).is_err());
    }

    #[test]
    fn gradient_field_offsets() {
        let f = GradientField::new([1.0, 2.0, -3.0]);
        assert!(f.is_divergence_free());
        assert_eq!(f.field(Axis::Y, 0.1, 0.2), 0.0);
        assert_eq!(f.without_offset().field(Axis::Y, 0.1, 0.2), 0.2);
        assert!(GradientField::new([1.0, 0.0, 0.0]).require_divergence_free().is_err());
    }

    #[test]
    fn mode_vector_reconstruction() {
        let mut v = ScalarModeVector::zeros(3);
        v.set(ModeIndex::new(1, 1, 1).unwrap(), Complex64::new(1.0, 0.0));
        // (L/2)^{3/2} (2/L)^{3/2} sin^3(pi/2) = 1 at the centre
        assert_relative_eq!(v.evaluate(0.2, [0.1, 0.1, 0.1]).re, 1.0, max_relative = 1e-12);
        assert!(v.evaluate(0.2, [0.0, 0.05, 0.1]).norm() < 1e-14);
        assert!(ScalarModeVector::from_vec(2, vec![Complex64::new(0.0, 0.0); 7]).is_err());
    }
}
