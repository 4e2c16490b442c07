//! Free induction decay after a pi/2 pulse: time-domain solvers, `T2`
//! extraction and the gradient-induced rate `Delta Gamma2`.

mod fd;
mod spectral;
mod trace;

pub use fd::{evolve_fid_fd, evolve_fid_fd_from, fd_final_field, FdInitial};
pub use spectral::{evolve_fid_spectral, truncation_tail, TRUNCATION_TAIL_LIMIT};
pub use trace::{extract_t2, uniform_times, FidTrace, RelaxationResult};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    initial_coefficient, mode_decay_rate, mode_indices, CellGeometry, ModeIndex, ScalarModeVector, SpinParams,
};

/// Longitudinal field `B_z(r) = g x`, minus `g L / 2` when the constant
/// part is compensated. Compensation only rotates the phase of the average
/// signal; the modulus is unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongitudinalGradient {
    pub g: f64,
    pub subtract_offset: bool,
}

impl LongitudinalGradient {
    pub fn new(g: f64) -> Self {
        LongitudinalGradient {
            g,
            subtract_offset: false,
        }
    }

    pub fn compensated(g: f64) -> Self {
        LongitudinalGradient {
            g,
            subtract_offset: true,
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0)
    }
}

/// Mode coefficients of the pumped steady longitudinal polarization, which
/// becomes the transverse initial condition after the pulse.
pub fn steady_state_longitudinal(geom: &CellGeometry, spin: &SpinParams) -> Result<ScalarModeVector> {
    let mut v = ScalarModeVector::zeros(geom.modes);
    for idx in mode_indices(geom.modes) {
        v.set(idx, initial_coefficient(geom, spin, idx)?);
    }
    Ok(v)
}

/// Sampling and horizon control for automated `T2` extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T2Options {
    pub n_steps: usize,
    /// Initial horizon in units of `1 / Gamma_111`.
    pub horizon: f64,
    /// Horizon cap in units of `1 / Gamma_111`.
    pub max_horizon: f64,
}

impl Default for T2Options {
    fn default() -> Self {
        T2Options {
            n_steps: 4000,
            horizon: 4.0,
            max_horizon: 64.0,
        }
    }
}

fn slowest_rate(geom: &CellGeometry, spin: &SpinParams) -> f64 {
    mode_decay_rate(geom, spin, ModeIndex { m: 1, n: 1, l: 1 })
}

/// Spectral FID on an automatically extended horizon, and its `T2`.
pub fn relaxation(
    geom: &CellGeometry,
    spin: &SpinParams,
    field: LongitudinalGradient,
    opts: T2Options,
) -> Result<(RelaxationResult, FidTrace)> {
    let unit = 1.0 / slowest_rate(geom, spin);
    let mut horizon = opts.horizon;
    loop {
        let trace = evolve_fid_spectral(geom, spin, field, horizon * unit, opts.n_steps)?;
        match extract_t2(&trace) {
            Ok(r) => return Ok((r, trace)),
            Err(Error::InsufficientHorizon { .. }) if horizon * 2.0 <= opts.max_horizon => horizon *= 2.0,
            Err(e) => return Err(e),
        }
    }
}

/// `Gamma2(g) - Gamma2(0)` from two spectral runs on the same grid and
/// truncation. The returned result describes the `g` run.
pub fn delta_gamma2(geom: &CellGeometry, spin: &SpinParams, g: f64, opts: T2Options) -> Result<RelaxationResult> {
    let unit = 1.0 / slowest_rate(geom, spin);
    let mut horizon = opts.horizon;
    loop {
        let t_end = horizon * unit;
        let with_g = evolve_fid_spectral(geom, spin, LongitudinalGradient::new(g), t_end, opts.n_steps)
            .and_then(|t| extract_t2(&t));
        let without = evolve_fid_spectral(geom, spin, LongitudinalGradient::zero(), t_end, opts.n_steps)
            .and_then(|t| extract_t2(&t));
        match (with_g, without) {
            (Ok(mut a), Ok(b)) => {
                a.delta_gamma2 = a.gamma2 - b.gamma2;
                return Ok(a);
            }
            (Err(Error::InsufficientHorizon { .. }), _) | (_, Err(Error::InsufficientHorizon { .. }))
                if horizon * 2.0 <= opts.max_horizon =>
            {
                horizon *= 2.0
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sine_mode;
    use approx::assert_relative_eq;

    fn fig1(base_rate: f64) -> (CellGeometry, SpinParams) {
        (
            CellGeometry::cube(0.2).unwrap(),
            SpinParams::unit(0.2, base_rate).unwrap(),
        )
    }

    /// Normalized gradient-free signal written out from the odd-mode sum.
    fn free_decay(geom: &CellGeometry, spin: &SpinParams, t: f64) -> f64 {
        let k2 = geom.wavenumber_sq();
        let (mut num, mut den) = (0.0, 0.0);
        for m in (1..=geom.modes).step_by(2) {
            for n in (1..=geom.modes).step_by(2) {
                for l in (1..=geom.modes).step_by(2) {
                    let rate = spin.base_rate + spin.diffusion * k2 * (m * m + n * n + l * l) as f64;
                    let w = 1.0 / ((m * n * l) as f64).powi(2) / rate;
                    num += w * (-rate * t).exp();
                    den += w;
                }
            }
        }
        num / den
    }

    #[test]
    fn spectral_without_gradient_is_the_mode_sum() {
        let (geom, spin) = fig1(20.0);
        let trace = evolve_fid_spectral(&geom, &spin, LongitudinalGradient::zero(), 0.02, 200).unwrap();
        for (t, v) in trace.times().iter().zip(trace.values()) {
            assert!((v.re - free_decay(&geom, &spin, *t)).abs() < 1e-9);
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn t2_without_gradient_matches_root_of_mode_sum() {
        let (geom, spin) = fig1(20.0);
        let (r, _) = relaxation(&geom, &spin, LongitudinalGradient::zero(), T2Options::default()).unwrap();
        let target = (-1.0f64).exp();
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if free_decay(&geom, &spin, mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_relative_eq!(r.t2, 0.5 * (lo + hi), max_relative = 1e-6);
        assert_relative_eq!(r.gamma2, 1.0 / r.t2, max_relative = 1e-12);
    }

    #[test]
    fn phase_rate_is_the_center_field() {
        let (geom, spin) = fig1(20.0);
        let (r, _) = relaxation(&geom, &spin, LongitudinalGradient::new(1000.0), T2Options::default()).unwrap();
        assert_relative_eq!(r.phase_rate, 1000.0 * 0.2 / 2.0, max_relative = 1e-6);
        let (c, _) = relaxation(
            &geom,
            &spin,
            LongitudinalGradient::compensated(1000.0),
            T2Options::default(),
        )
        .unwrap();
        assert!(c.phase_rate.abs() < 1e-6);
        assert_relative_eq!(c.t2, r.t2, max_relative = 1e-9);
    }

    #[test]
    fn no_gradient_no_extra_rate() {
        let (geom, spin) = fig1(100.0);
        let r = delta_gamma2(&geom, &spin, 0.0, T2Options::default()).unwrap();
        assert_eq!(r.delta_gamma2, 0.0);
    }

    #[test]
    fn gradient_rate_grows_faster_at_small_base_rate() {
        let opts = T2Options::default();
        let (geom, slow) = fig1(20.0);
        let (_, fast) = fig1(200.0);
        let a = delta_gamma2(&geom, &slow, 1000.0, opts).unwrap().delta_gamma2;
        let b = delta_gamma2(&geom, &fast, 1000.0, opts).unwrap().delta_gamma2;
        assert!(a > b && b > 0.0);
    }

    #[test]
    fn pump_rate_cancels_in_normalized_trace() {
        let (geom, spin) = fig1(20.0);
        let strong = spin.with_pump_rate(7.3).unwrap();
        let f = LongitudinalGradient::new(500.0);
        let a = evolve_fid_spectral(&geom, &spin, f, 0.02, 100).unwrap();
        let b = evolve_fid_spectral(&geom, &strong, f, 0.02, 100).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn modulus_does_not_grow_initially() {
        for g in [0.0, 500.0, 2000.0] {
            let (geom, spin) = fig1(1.0);
            let tr = evolve_fid_spectral(&geom, &spin, LongitudinalGradient::new(g), 1e-3, 10).unwrap();
            let m = tr.moduli();
            assert!(m[1] <= m[0]);
        }
    }

    #[test]
    fn truncation_warning_flags_coarse_bases() {
        let (geom, spin) = fig1(20.0);
        let coarse = geom.with_modes(3).unwrap();
        let tr = evolve_fid_spectral(&coarse, &spin, LongitudinalGradient::new(2000.0), 0.01, 10).unwrap();
        assert!(tr.truncation_warning.is_some());
        let fine = geom.with_modes(25).unwrap();
        let tr = evolve_fid_spectral(&fine, &spin, LongitudinalGradient::new(100.0), 0.01, 10).unwrap();
        assert!(tr.truncation_warning.is_none());
    }

    #[test]
    fn grid_solver_decays_a_single_mode_at_its_rate() {
        let (geom, spin) = fig1(20.0);
        let idx = ModeIndex::new(1, 1, 1).unwrap();
        let rate = mode_decay_rate(&geom, &spin, idx);
        let tr = evolve_fid_fd_from(
            &geom,
            &spin,
            LongitudinalGradient::zero(),
            FdInitial::Mode(idx),
            2.0 / rate,
            400,
        )
        .unwrap();
        let r = extract_t2(&tr).unwrap();
        assert_relative_eq!(r.gamma2, rate, max_relative = 5e-3);
    }

    #[test]
    fn grid_field_vanishes_on_walls() {
        let (geom, spin) = fig1(20.0);
        let geom = geom.with_grid_points(12).unwrap();
        let field = fd_final_field(
            &geom,
            &spin,
            LongitudinalGradient::new(1000.0),
            FdInitial::SteadyState,
            0.005,
            20,
        )
        .unwrap();
        let np = 14;
        let at = |i: usize, j: usize, k: usize| field[(i * np + j) * np + k];
        for a in 0..np {
            for b in 0..np {
                for face in [
                    at(0, a, b),
                    at(np - 1, a, b),
                    at(a, 0, b),
                    at(a, np - 1, b),
                    at(a, b, 0),
                    at(a, b, np - 1),
                ] {
                    assert_eq!(face.norm(), 0.0);
                }
            }
        }
        assert!(at(7, 7, 7).norm() > 0.0);
    }

    #[test]
    fn grid_and_spectral_traces_agree() {
        let (geom, spin) = fig1(20.0);
        let geom = geom.with_grid_points(32).unwrap();
        let f = LongitudinalGradient::new(1000.0);
        let s = evolve_fid_spectral(&geom, &spin, f, 0.02, 400).unwrap();
        let d = evolve_fid_fd(&geom, &spin, f, 0.02, 400).unwrap();
        for (a, b) in s.values().iter().zip(d.values()) {
            assert!((a.norm() - b.norm()).abs() < 0.01);
        }
    }

    /// Conjugate gradients on the 7-point stencil for `(Gamma0 - D lap) P = R`.
    fn steady_state_by_cg(n: usize, l: f64, d: f64, gamma0: f64, r: f64) -> Vec<f64> {
        let h = l / (n + 1) as f64;
        let apply = |v: &[f64], out: &mut [f64]| {
            let at = |i: isize, j: isize, k: isize| {
                let inside = |c: isize| c >= 0 && c < n as isize;
                if inside(i) && inside(j) && inside(k) {
                    v[((i as usize) * n + j as usize) * n + k as usize]
                } else {
                    0.0
                }
            };
            for i in 0..n as isize {
                for j in 0..n as isize {
                    for k in 0..n as isize {
                        let lap = at(i - 1, j, k)
                            + at(i + 1, j, k)
                            + at(i, j - 1, k)
                            + at(i, j + 1, k)
                            + at(i, j, k - 1)
                            + at(i, j, k + 1)
                            - 6.0 * at(i, j, k);
                        out[((i as usize) * n + j as usize) * n + k as usize] =
                            gamma0 * at(i, j, k) - d * lap / (h * h);
                    }
                }
            }
        };
        let size = n * n * n;
        let mut x = vec![0.0; size];
        let mut res = vec![r; size];
        let mut p = res.clone();
        let mut ap = vec![0.0; size];
        let mut rr: f64 = res.iter().map(|v| v * v).sum();
        for _ in 0..2000 {
            apply(&p, &mut ap);
            let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
            for i in 0..size {
                x[i] += alpha * p[i];
                res[i] -= alpha * ap[i];
            }
            let next: f64 = res.iter().map(|v| v * v).sum();
            if next.sqrt() < 1e-12 * r * (size as f64).sqrt() {
                break;
            }
            for i in 0..size {
                p[i] = res[i] + next / rr * p[i];
            }
            rr = next;
        }
        x
    }

    #[test]
    fn initial_coefficient_matches_projected_grid_solution() {
        let (geom, spin) = fig1(20.0);
        // odd so that the middle grid point is the cell center
        let n = 41;
        let field = steady_state_by_cg(n, geom.length, spin.diffusion, spin.base_rate, spin.pump_rate);
        let h = geom.length / (n + 1) as f64;
        let psi: Vec<f64> = (0..n).map(|i| sine_mode(1, (i + 1) as f64 * h, geom.length)).collect();
        let mut c = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    c += field[(i * n + j) * n + k] * psi[i] * psi[j] * psi[k];
                }
            }
        }
        // coefficients multiply the unnormalized product of sines
        c *= h * h * h / (geom.length / 2.0).powf(1.5);
        let want = initial_coefficient(&geom, &spin, ModeIndex::new(1, 1, 1).unwrap()).unwrap();
        assert_relative_eq!(c, want.re, max_relative = 2e-3);

        // and the mode sum reproduces the center value
        let center = steady_state_longitudinal(&geom.with_modes(41).unwrap(), &spin)
            .unwrap()
            .evaluate(geom.length, [geom.length / 2.0; 3]);
        let mid = field[((n / 2) * n + n / 2) * n + n / 2];
        assert_relative_eq!(center.re, mid, max_relative = 5e-3);
    }
}
