//! Galerkin solution of the transverse Bloch–Torrey equation on the sine
//! basis.
//!
//! With `B_z = g x` the generator is a Kronecker sum: only the x factor
//! couples modes, while the y and z factors are diagonal. The propagator is
//! therefore `exp(-Gamma0 t) exp(A_x t) (x) exp(-D k^2 n^2 t) (x) exp(-D k^2 l^2 t)`
//! and only the `M x M` matrix `A_x` needs an exponential.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::trace::{uniform_times, FidTrace};
use super::{steady_state_longitudinal, LongitudinalGradient};
use crate::error::Result;
use crate::linalg::expm;
use crate::model::{position_element, position_matrix, sine_mode_integral, CellGeometry, SpinParams};

/// Above this, [`truncation_tail`] attaches a warning to spectral traces.
pub const TRUNCATION_TAIL_LIMIT: f64 = 1e-6;

/// `A_x = -D (pi/L)^2 diag(m^2) - i gamma g (X - shift)`.
pub(crate) fn x_generator(geom: &CellGeometry, spin: &SpinParams, field: LongitudinalGradient) -> DMatrix<Complex64> {
    let m = geom.modes;
    let kappa = spin.diffusion * geom.wavenumber_sq();
    let x = position_matrix(geom.length, m, field.subtract_offset);
    let gg = spin.gyro * field.g;
    DMatrix::from_fn(m, m, |i, j| {
        let diag = if i == j {
            -kappa * ((i + 1) * (i + 1)) as f64
        } else {
            0.0
        };
        Complex64::new(diag, -gg * x[(i, j)])
    })
}

/// Largest first-order mixing between a retained mode and the first mode
/// beyond the truncation, weighted by the retained mode's share of the
/// initial average signal (relative to mode 1).
pub fn truncation_tail(geom: &CellGeometry, spin: &SpinParams, g: f64) -> f64 {
    let m_max = geom.modes;
    let kappa = spin.diffusion * geom.wavenumber_sq();
    let gg = (spin.gyro * g).abs();
    let amplitude = |m: usize| {
        let rate = spin.base_rate + kappa * (m * m + 2) as f64;
        1.0 / ((m * m) as f64 * rate)
    };
    let a1 = amplitude(1);
    let outside = m_max + 1;
    (1..=m_max)
        .map(|m| {
            let gap = kappa * ((outside * outside) as f64 - (m * m) as f64);
            let mix = gg * position_element(geom.length, m, outside).abs() / gap;
            mix * amplitude(m) / a1
        })
        .fold(0.0, f64::max)
}

pub fn evolve_fid_spectral(
    geom: &CellGeometry,
    spin: &SpinParams,
    field: LongitudinalGradient,
    t_end: f64,
    n_steps: usize,
) -> Result<FidTrace> {
    let times = uniform_times(t_end, n_steps)?;
    let dt = t_end / n_steps as f64;
    let m = geom.modes;
    let kappa = spin.diffusion * geom.wavenumber_sq();

    // Pump strength cancels after normalization; unit pump keeps the
    // normalized trace independent of R.
    let unit_pump = SpinParams {
        pump_rate: 1.0,
        ..*spin
    };
    let initial = steady_state_longitudinal(geom, &unit_pump)?;
    let overlap: Vec<f64> = (1..=m).map(|k| sine_mode_integral(k, geom.length)).collect();

    // (n, l) columns that survive the uniform average.
    let mut columns: Vec<(f64, f64, DVector<Complex64>)> = Vec::new();
    for n in (1..=m).step_by(2) {
        for l in (1..=m).step_by(2) {
            let col = DVector::from_fn(m, |i, _| initial.as_slice()[((i * m) + (n - 1)) * m + (l - 1)]);
            let weight = overlap[n - 1] * overlap[l - 1];
            let rate = spin.base_rate + kappa * (n * n + l * l) as f64;
            columns.push((weight, rate, col));
        }
    }
    let cmat = DMatrix::from_columns(&columns.iter().map(|c| c.2.clone()).collect::<Vec<_>>());

    let step = expm(&(x_generator(geom, spin, field) * Complex64::new(dt, 0.0)));
    let mut row = DVector::from_fn(m, |i, _| Complex64::new(overlap[i], 0.0)).transpose();

    let mut raw = Vec::with_capacity(times.len());
    for &t in &times {
        let projected = &row * &cmat;
        let value: Complex64 = columns
            .iter()
            .zip(projected.iter())
            .map(|((w, rate, _), p)| p * (w * (-rate * t).exp()))
            .sum();
        raw.push(value);
        row = &row * &step;
    }

    let mut trace = FidTrace::from_raw(times, raw)?;
    let tail = truncation_tail(geom, spin, field.g);
    if tail > TRUNCATION_TAIL_LIMIT {
        trace.truncation_warning = Some(format!(
            "mode truncation M = {} may be too small: tail mixing {tail:.2e} > {TRUNCATION_TAIL_LIMIT:e}",
            geom.modes
        ));
    }
    Ok(trace)
}
