//! Second-order perturbation theory for a weak longitudinal gradient
//! `B_z = g x`.
//!
//! The diagonal matrix element gives a mode-independent precession rate
//! `w1 = gamma g L / 2`. The second-order decay correction of mode `m` is
//!
//! ```text
//! Gamma2_m = gamma^2 g^2 sum_{m' != m} X_{mm'}^2 / (Gamma0_{m'} - Gamma0_m)
//! ```
//!
//! where only `m'` of opposite parity contributes. The sum is positive for
//! `m = 1` and negative for `m = 2, 3`.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::FidTrace;
use crate::model::{mode_decay_rate, position_element, CellGeometry, ModeIndex, SpinParams};

/// Above this value of [`perturbation_parameter`] results carry a warning.
pub const PERTURBATION_WARN: f64 = 0.3;

/// `16 gamma g L^3 / (27 pi^4 D)`.
pub fn perturbation_parameter(geom: &CellGeometry, spin: &SpinParams, g: f64) -> Result<f64> {
    if g < 0.0 {
        return Err(Error::invalid("gradient", format!("must be >= 0, got {g}")));
    }
    if spin.diffusion == 0.0 {
        return Err(Error::DegenerateParameters("diffusion constant is zero".into()));
    }
    Ok(16.0 * spin.gyro * g * geom.length.powi(3) / (27.0 * PI.powi(4) * spin.diffusion))
}

/// `gamma g L / 2`, the first-order precession rate shared by every mode.
pub fn effective_frequency(geom: &CellGeometry, spin: &SpinParams, g: f64) -> f64 {
    spin.gyro * g * position_element(geom.length, 1, 1)
}

fn check_regime(geom: &CellGeometry, spin: &SpinParams, g: f64) -> Result<f64> {
    let eps = perturbation_parameter(geom, spin, g.abs())?;
    if eps >= 1.0 {
        return Err(Error::invalid(
            "gradient",
            format!("perturbation parameter {eps:.3} >= 1, outside the perturbative regime"),
        ));
    }
    if eps >= PERTURBATION_WARN {
        warn!("perturbation parameter {eps:.3} is not small; second-order results are approximate");
    }
    Ok(eps)
}

/// Second-order decay correction of mode `idx` for `B_z = g x`, summed over
/// the truncation of `geom`. Depends only on `idx.m`.
pub fn second_order_rate(geom: &CellGeometry, spin: &SpinParams, g: f64, idx: ModeIndex) -> Result<f64> {
    idx.check_within(geom)?;
    check_regime(geom, spin, g)?;
    let own = mode_decay_rate(geom, spin, idx);
    let gg = spin.gyro * g;
    let mut sum = 0.0;
    for mp in (1..=geom.modes).filter(|&mp| mp != idx.m) {
        let other = ModeIndex { m: mp, ..idx };
        let coupling = gg * position_element(geom.length, idx.m, mp);
        let gap = mode_decay_rate(geom, spin, other) - own;
        if gap.abs() < 1e-9 * own.abs() {
            if coupling != 0.0 {
                return Err(Error::Degeneracy {
                    a: idx.m,
                    b: mp,
                    coupling,
                });
            }
            continue;
        }
        sum += coupling * coupling / gap;
    }
    Ok(sum)
}

/// Closed-form second-order rates for `m = 1, 2, 3`; `None` otherwise.
pub fn second_order_closed_form(geom: &CellGeometry, spin: &SpinParams, g: f64, m: usize) -> Option<f64> {
    let pi2 = PI * PI;
    let pi4 = pi2 * pi2;
    let factor = match m {
        1 => (15.0 - pi2) / (48.0 * pi4),
        2 => (15.0 - 4.0 * pi2) / (768.0 * pi4),
        3 => -(3.0 * pi2 - 5.0) / (1296.0 * pi4),
        _ => return None,
    };
    let gg = spin.gyro * g;
    Some(gg * gg * geom.length.powi(4) / spin.diffusion * factor)
}

/// Upper bound on the gradient-induced rate, the `m = 1` closed form.
pub fn gradient_rate_bound(geom: &CellGeometry, spin: &SpinParams, g: f64) -> f64 {
    second_order_closed_form(geom, spin, g, 1).expect("m = 1 has a closed form")
}

/// Odd-index cube `{1, 3, ..., max_odd}^3` used for weights and the
/// perturbative FID.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncludedModes {
    pub max_odd: usize,
}

impl Default for IncludedModes {
    fn default() -> Self {
        IncludedModes { max_odd: 3 }
    }
}

impl IncludedModes {
    pub fn new(max_odd: usize) -> Result<Self> {
        if max_odd == 0 || max_odd.is_multiple_of(2) {
            return Err(Error::invalid(
                "max_odd",
                format!("must be a positive odd number, got {max_odd}"),
            ));
        }
        Ok(IncludedModes { max_odd })
    }

    pub fn contains(&self, idx: ModeIndex) -> bool {
        idx.is_all_odd() && idx.m <= self.max_odd && idx.n <= self.max_odd && idx.l <= self.max_odd
    }

    pub fn iter(&self) -> impl Iterator<Item = ModeIndex> {
        let odd: Vec<usize> = (1..=self.max_odd).step_by(2).collect();
        let mut out = Vec::with_capacity(odd.len().pow(3));
        for &m in &odd {
            for &n in &odd {
                for &l in &odd {
                    out.push(ModeIndex { m, n, l });
                }
            }
        }
        out.into_iter()
    }
}

fn weight_denominator(geom: &CellGeometry, spin: &SpinParams, idx: ModeIndex) -> f64 {
    (idx.product() as f64).powi(2) * mode_decay_rate(geom, spin, idx)
}

/// Fraction of the initial average signal carried by mode `idx`.
pub fn mode_weight(geom: &CellGeometry, spin: &SpinParams, idx: ModeIndex, set: IncludedModes) -> Result<f64> {
    if !set.contains(idx) {
        return Err(Error::ModeNotIncluded {
            m: idx.m,
            n: idx.n,
            l: idx.l,
        });
    }
    let total: f64 = set.iter().map(|k| 1.0 / weight_denominator(geom, spin, k)).sum();
    let own = weight_denominator(geom, spin, idx);
    if own == 0.0 || total == 0.0 {
        return Err(Error::DegenerateParameters("zero mode decay rate".into()));
    }
    Ok(1.0 / (own * total))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub idx: ModeIndex,
    /// First-order precession rate, 1/s.
    pub frequency: f64,
    /// Unperturbed decay rate, 1/s.
    pub base_rate: f64,
    /// Second-order correction, 1/s.
    pub second_order: f64,
    pub weight: f64,
}

impl SpectrumEntry {
    pub fn total_rate(&self) -> f64 {
        self.base_rate + self.second_order
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeSpectrum {
    pub entries: Vec<SpectrumEntry>,
}

impl PerturbativeSpectrum {
    pub fn compute(geom: &CellGeometry, spin: &SpinParams, g: f64, set: IncludedModes) -> Result<Self> {
        let needed = CellGeometry {
            modes: geom.modes.max(set.max_odd),
            ..*geom
        };
        let frequency = effective_frequency(geom, spin, g);
        let entries = set
            .iter()
            .map(|idx| {
                Ok(SpectrumEntry {
                    idx,
                    frequency,
                    base_rate: mode_decay_rate(geom, spin, idx),
                    second_order: second_order_rate(&needed, spin, g, idx)?,
                    weight: mode_weight(geom, spin, idx, set)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PerturbativeSpectrum { entries })
    }

    /// `exp(-i w1 t) sum w_mnl exp(-Gamma_mnl t)`.
    pub fn evaluate(&self, t: f64) -> Complex64 {
        let frequency = self.entries.first().map_or(0.0, |e| e.frequency);
        let modulus: f64 = self
            .entries
            .iter()
            .map(|e| e.weight * (-e.total_rate() * t).exp())
            .sum();
        Complex64::from_polar(modulus, -frequency * t)
    }
}

/// Perturbative normalized FID on the given time grid.
pub fn perturbative_fid(
    geom: &CellGeometry,
    spin: &SpinParams,
    g: f64,
    times: &[f64],
    set: IncludedModes,
) -> Result<FidTrace> {
    if times.is_empty() {
        return Err(Error::EmptyTimeGrid);
    }
    let spectrum = PerturbativeSpectrum::compute(geom, spin, g, set)?;
    let raw = times.iter().map(|&t| spectrum.evaluate(t)).collect();
    FidTrace::from_raw(times.to_vec(), raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::uniform_times;
    use approx::assert_relative_eq;

    fn fig1(base_rate: f64) -> (CellGeometry, SpinParams) {
        (
            CellGeometry::cube(0.2).unwrap().with_modes(50).unwrap(),
            SpinParams::unit(0.2, base_rate).unwrap(),
        )
    }

    #[test]
    fn perturbation_parameter_examples() {
        let (geom, spin) = fig1(20.0);
        let eps = perturbation_parameter(&geom, &spin, 1e3).unwrap();
        // 16 * 1e3 * 0.008 / (27 pi^4 * 0.2); quoted as 0.24 to two digits
        assert_relative_eq!(eps, 0.2433418015925177, max_relative = 1e-12);
        assert_eq!((eps * 100.0).round() / 100.0, 0.24);
        assert_eq!(perturbation_parameter(&geom, &spin, 0.0).unwrap(), 0.0);
        let big = CellGeometry { length: 0.4, ..geom };
        assert_relative_eq!(
            perturbation_parameter(&big, &spin, 1e3).unwrap(),
            8.0 * eps,
            max_relative = 1e-12
        );
    }

    #[test]
    fn effective_frequency_examples() {
        let (geom, spin) = fig1(20.0);
        assert_relative_eq!(effective_frequency(&geom, &spin, 1e3), 100.0, max_relative = 1e-12);
        assert_eq!(effective_frequency(&geom, &spin, 0.0), 0.0);
    }

    #[test]
    fn second_order_matches_closed_forms() {
        let (geom, spin) = fig1(20.0);
        for m in 1..=3 {
            let idx = ModeIndex::new(m, 1, 1).unwrap();
            let sum = second_order_rate(&geom, &spin, 1e3, idx).unwrap();
            let closed = second_order_closed_form(&geom, &spin, 1e3, m).unwrap();
            assert_relative_eq!(sum, closed, max_relative = 1e-6);
        }
        assert!(second_order_rate(&geom, &spin, 1e3, ModeIndex::new(1, 1, 1).unwrap()).unwrap() > 0.0);
        assert!(second_order_rate(&geom, &spin, 1e3, ModeIndex::new(3, 1, 1).unwrap()).unwrap() < 0.0);
    }

    #[test]
    fn second_order_depends_only_on_m_and_scales() {
        let (geom, spin) = fig1(20.0);
        let a = second_order_rate(&geom, &spin, 500.0, ModeIndex::new(1, 1, 1).unwrap()).unwrap();
        let b = second_order_rate(&geom, &spin, 500.0, ModeIndex::new(1, 3, 5).unwrap()).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
        let a2 = second_order_rate(&geom, &spin, 1000.0, ModeIndex::new(1, 1, 1).unwrap()).unwrap();
        assert_relative_eq!(a2, 4.0 * a, max_relative = 1e-12);
        let slow = spin.with_diffusion(0.4).unwrap();
        let a_half = second_order_rate(&geom, &slow, 500.0, ModeIndex::new(1, 1, 1).unwrap()).unwrap();
        assert_relative_eq!(a_half, a / 2.0, max_relative = 1e-12);
        assert_eq!(
            second_order_rate(&geom, &spin, 0.0, ModeIndex::new(2, 1, 1).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn doubling_truncation_converges() {
        let (geom, spin) = fig1(20.0);
        let g100 = geom.with_modes(100).unwrap();
        for m in 1..=4 {
            let idx = ModeIndex::new(m, 1, 1).unwrap();
            let a = second_order_rate(&geom, &spin, 1e3, idx).unwrap();
            let b = second_order_rate(&g100, &spin, 1e3, idx).unwrap();
            assert!(((a - b) / b).abs() < 1e-6);
        }
    }

    #[test]
    fn outside_regime_is_rejected() {
        let (geom, spin) = fig1(20.0);
        assert!(second_order_rate(&geom, &spin, 1e4, ModeIndex::new(1, 1, 1).unwrap()).is_err());
    }

    #[test]
    fn weights_normalize_and_decrease() {
        let (geom, spin) = fig1(20.0);
        let set = IncludedModes::default();
        let sum: f64 = set.iter().map(|i| mode_weight(&geom, &spin, i, set).unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let w111 = mode_weight(&geom, &spin, ModeIndex::new(1, 1, 1).unwrap(), set).unwrap();
        let w311 = mode_weight(&geom, &spin, ModeIndex::new(3, 1, 1).unwrap(), set).unwrap();
        let w331 = mode_weight(&geom, &spin, ModeIndex::new(3, 3, 1).unwrap(), set).unwrap();
        assert!(w111 > w311 && w311 > w331);
        assert!(mode_weight(&geom, &spin, ModeIndex::new(2, 1, 1).unwrap(), set).is_err());
    }

    #[test]
    fn weights_in_fast_relaxation_limit() {
        let (geom, _) = fig1(0.0);
        let spin = SpinParams::unit(0.2, 1e9).unwrap();
        let set = IncludedModes::default();
        let w111 = mode_weight(&geom, &spin, ModeIndex::new(1, 1, 1).unwrap(), set).unwrap();
        let w311 = mode_weight(&geom, &spin, ModeIndex::new(3, 1, 1).unwrap(), set).unwrap();
        assert_relative_eq!(w111 / w311, 9.0, max_relative = 1e-5);
    }

    #[test]
    fn weight_spread_shrinks_with_base_rate() {
        let set = IncludedModes::default();
        let spread = |rate: f64| {
            let (geom, spin) = fig1(rate);
            let w: Vec<f64> = set.iter().map(|i| mode_weight(&geom, &spin, i, set).unwrap()).collect();
            w.iter().cloned().fold(0.0, f64::max) - w.iter().cloned().fold(1.0, f64::min)
        };
        // At fixed base-rate the ratios w111/w_k approach (mnl)^2; larger base
        // rates push more weight into finer modes.
        let (geom, s20) = fig1(20.0);
        let (_, s200) = fig1(200.0);
        let r = |s: &SpinParams| {
            mode_weight(&geom, s, ModeIndex::new(1, 1, 1).unwrap(), set).unwrap()
                / mode_weight(&geom, s, ModeIndex::new(3, 1, 1).unwrap(), set).unwrap()
        };
        assert!(r(&s20) > r(&s200));
        assert!(spread(20.0) > spread(200.0));
    }

    #[test]
    fn perturbative_fid_properties() {
        let (geom, spin) = fig1(20.0);
        let set = IncludedModes::default();
        let times = uniform_times(0.02, 400).unwrap();
        let with_g = perturbative_fid(&geom, &spin, 1e3, &times, set).unwrap();
        let without = perturbative_fid(&geom, &spin, 0.0, &times, set).unwrap();
        assert_eq!(with_g.values()[0], Complex64::new(1.0, 0.0));
        let m = with_g.moduli();
        assert!(m.windows(2).all(|w| w[1] <= w[0]));
        for (a, b) in with_g.values().iter().zip(without.values()).skip(1) {
            assert!(a.norm() < b.norm());
            assert_eq!(b.im, 0.0);
        }
        // phase advances at w1 = 100 1/s
        let t = times[10];
        assert_relative_eq!(-with_g.values()[10].arg(), 100.0 * t, max_relative = 1e-12);
        assert!(perturbative_fid(&geom, &spin, 1e3, &[], set).is_err());
    }

    #[test]
    fn nuclear_ratio() {
        let (geom, spin) = fig1(20.0);
        let nuc = crate::model::nuclear_comparison_rate(&geom, &spin, 1e3).unwrap();
        let atomic = gradient_rate_bound(&geom, &spin, 1e3);
        assert_relative_eq!(nuc / atomic, 7.594, max_relative = 1e-3);
    }
}
