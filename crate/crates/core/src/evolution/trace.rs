use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalized volume-averaged transverse polarization sampled in time.
#[derive(Debug, Clone, PartialEq)]
pub struct FidTrace {
    times: Vec<f64>,
    values: Vec<Complex64>,
    /// Set when the mode truncation looks too coarse for the gradient.
    pub truncation_warning: Option<String>,
}

impl FidTrace {
    /// Builds a trace from raw (unnormalized) averages; divides by `values[0]`.
    pub fn from_raw(times: Vec<f64>, raw: Vec<Complex64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptyTimeGrid);
        }
        if times.len() != raw.len() {
            return Err(Error::invalid(
                "trace",
                format!("{} times but {} values", times.len(), raw.len()),
            ));
        }
        check_time_grid(&times)?;
        let first = raw[0];
        if first.norm() == 0.0 {
            return Err(Error::DegenerateParameters(
                "initial average polarization is zero".into(),
            ));
        }
        let values = raw.into_iter().map(|v| v / first).collect();
        Ok(FidTrace {
            times,
            values,
            truncation_warning: None,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("non-empty trace")
    }
}

pub(crate) fn check_time_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::EmptyTimeGrid);
    }
    if times[0] != 0.0 {
        return Err(Error::invalid("times", "time grid must start at 0"));
    }
    if times
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::invalid("times", "time grid must be strictly increasing"));
    }
    Ok(())
}

/// Uniform grid `0, dt, ..., t_end` with `n_steps + 1` samples.
pub fn uniform_times(t_end: f64, n_steps: usize) -> Result<Vec<f64>> {
    if n_steps == 0 {
        return Err(Error::EmptyTimeGrid);
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::invalid("t_end", format!("must be > 0, got {t_end}")));
    }
    let dt = t_end / n_steps as f64;
    Ok((0..=n_steps).map(|k| k as f64 * dt).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationResult {
    /// Effective transverse relaxation time, s.
    pub t2: f64,
    /// `1 / t2`, 1/s.
    pub gamma2: f64,
    /// Gradient-induced part `Gamma2(g) - Gamma2(0)`; zero until filled in by
    /// [`super::delta_gamma2`].
    pub delta_gamma2: f64,
    /// Precession rate in the `exp(-i w t)` convention, from a least-squares
    /// fit of the unwrapped phase up to `t2`.
    pub phase_rate: f64,
}

/// Locates the first `1/e` crossing of `|P(t)|` and fits the phase rate.
pub fn extract_t2(trace: &FidTrace) -> Result<RelaxationResult> {
    let times = trace.times();
    let moduli = trace.moduli();
    let target = (-1.0f64).exp() * moduli[0];
    let k = match moduli.iter().position(|&v| v <= target) {
        Some(k) if k > 0 => k,
        Some(_) => return Err(Error::invalid("trace", "initial modulus is not positive")),
        None => {
            return Err(Error::InsufficientHorizon {
                t_end: trace.t_end(),
                min_modulus: moduli.iter().cloned().fold(f64::INFINITY, f64::min),
            })
        }
    };
    let slopes = pchip_slopes(times, &moduli);
    let t2 = hermite_crossing(
        times[k - 1],
        times[k],
        moduli[k - 1],
        moduli[k],
        slopes[k - 1],
        slopes[k],
        target,
    );

    let phases = unwrap_phase(trace.values());
    let n_fit = times.iter().take_while(|&&t| t <= t2).count().max(2).min(times.len());
    let slope = least_squares_slope(&times[..n_fit], &phases[..n_fit]);

    Ok(RelaxationResult {
        t2,
        gamma2: 1.0 / t2,
        delta_gamma2: 0.0,
        phase_rate: -slope,
    })
}

/// Fritsch–Carlson monotone derivative estimates (the PCHIP scheme).
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = pchip_end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = pchip_end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn pchip_end(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Solves `H(t) = target` on `[t0, t1]` for the cubic Hermite interpolant.
fn hermite_crossing(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, target: f64) -> f64 {
    let h = t1 - t0;
    let eval = |s: f64| {
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * d1
    };
    // H(0) = y0 > target >= y1 = H(1); bisect in the unit interval.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    t0 + 0.5 * (lo + hi) * h
}

pub(crate) fn unwrap_phase(values: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for v in values {
        let raw = v.arg();
        if let Some(p) = prev {
            let mut jump = raw + offset - p;
            while jump > PI {
                offset -= 2.0 * PI;
                jump -= 2.0 * PI;
            }
            while jump < -PI {
                offset += 2.0 * PI;
                jump += 2.0 * PI;
            }
        }
        let unwrapped = raw + offset;
        out.push(unwrapped);
        prev = Some(unwrapped);
    }
    out
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exp_trace(rate: f64, omega: f64, t_end: f64, n: usize) -> FidTrace {
        let times = uniform_times(t_end, n).unwrap();
        let raw = times
            .iter()
            .map(|&t| Complex64::from_polar((-rate * t).exp(), -omega * t))
            .collect();
        FidTrace::from_raw(times, raw).unwrap()
    }

    #[test]
    fn single_exponential_t2() {
        let trace = exp_trace(100.0, 0.0, 0.05, 4000);
        let r = extract_t2(&trace).unwrap();
        assert_relative_eq!(r.t2, 0.01, max_relative = 1e-6);
        assert_relative_eq!(r.gamma2, 100.0, max_relative = 1e-6);
    }

    #[test]
    fn phase_rate_fit() {
        let trace = exp_trace(100.0, 250.0, 0.05, 2000);
        let r = extract_t2(&trace).unwrap();
        assert_relative_eq!(r.phase_rate, 250.0, max_relative = 1e-10);
    }

    #[test]
    fn no_crossing_is_an_error() {
        let trace = exp_trace(1.0, 0.0, 0.1, 100);
        assert!(matches!(extract_t2(&trace), Err(Error::InsufficientHorizon { .. })));
    }

    #[test]
    fn time_grid_contract() {
        assert!(matches!(uniform_times(1.0, 0), Err(Error::EmptyTimeGrid)));
        assert!(FidTrace::from_raw(vec![], vec![]).is_err());
        assert!(FidTrace::from_raw(vec![0.0, 0.0], vec![Complex64::new(1.0, 0.0); 2]).is_err());
        let t = FidTrace::from_raw(vec![0.0, 1.0], vec![Complex64::new(2.0, 2.0); 2]).unwrap();
        assert_eq!(t.values()[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn unwrap_handles_fast_rotation() {
        let values: Vec<Complex64> = (0..100).map(|k| Complex64::from_polar(1.0, -0.5 * k as f64)).collect();
        let ph = unwrap_phase(&values);
        for (k, p) in ph.iter().enumerate() {
            assert!((p + 0.5 * k as f64).abs() < 1e-12);
        }
    }
}
