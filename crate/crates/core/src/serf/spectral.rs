//! Galerkin form of the steady vector Bloch equation on the sine basis.
//!
//! Unknowns are stacked as `[S_x | S_y | S_z]`, each block `M^3` long in
//! [`ModeIndex::flat`](crate::model::ModeIndex::flat) order. The diffusion
//! and relaxation part is diagonal; each gradient couples modes along its
//! own axis only, through the centered position matrix.

use super::{Effective, SerfScenario};
use crate::linalg::accumulate_along_axis;
use crate::model::{mode_indices, position_matrix, sine_mode_integral};

pub(crate) struct SpectralOperator {
    m: usize,
    diag: Vec<f64>,
    x: Vec<f64>,
    field: [f64; 3],
    by: f64,
}

impl SpectralOperator {
    pub(crate) fn new(scenario: &SerfScenario, eff: &Effective) -> Self {
        let geom = &scenario.geom;
        let m = geom.modes;
        let k2 = geom.wavenumber_sq();
        let diag = mode_indices(m)
            .map(|idx| -(eff.base_rate + eff.diffusion * k2 * idx.sum_of_squares() as f64))
            .collect();
        let xm = position_matrix(geom.length, m, true);
        let x = (0..m * m).map(|i| xm[(i / m, i % m)]).collect();
        let g = scenario.gradient.g;
        SpectralOperator {
            m,
            diag,
            x,
            field: [eff.gyro * g[0], eff.gyro * g[1], eff.gyro * g[2]],
            by: eff.gyro * scenario.by,
        }
    }

    pub(crate) fn block_len(&self) -> usize {
        self.m * self.m * self.m
    }

    /// `dst += sign * gamma B_alpha src` on one block.
    fn field_term(&self, alpha: usize, src: &[f64], dst: &mut [f64], sign: f64) {
        if self.field[alpha] != 0.0 {
            accumulate_along_axis(&self.x, self.m, src, dst, alpha, sign * self.field[alpha]);
        }
        if alpha == 1 && self.by != 0.0 {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += sign * self.by * s;
            }
        }
    }

    pub(crate) fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.block_len();
        let (vx, rest) = v.split_at(n);
        let (vy, vz) = rest.split_at(n);
        for (c, block) in out.chunks_mut(n).enumerate() {
            let src = [vx, vy, vz][c];
            for ((o, d), s) in block.iter_mut().zip(&self.diag).zip(src) {
                *o = d * s;
            }
        }
        let (ox, rest) = out.split_at_mut(n);
        let (oy, oz) = rest.split_at_mut(n);
        // (gamma B x S): x = By Sz - Bz Sy, y = Bz Sx - Bx Sz, z = Bx Sy - By Sx
        self.field_term(1, vz, ox, 1.0);
        self.field_term(2, vy, ox, -1.0);
        self.field_term(2, vx, oy, 1.0);
        self.field_term(0, vz, oy, -1.0);
        self.field_term(0, vy, oz, 1.0);
        self.field_term(1, vx, oz, -1.0);
    }

    /// Exact inverse of the gradient-free operator.
    pub(crate) fn precondition(&self, r: &[f64], out: &mut [f64]) {
        block_inverse(&self.diag, self.by, r, out);
    }

    /// `[v0 | 0 | 0]` style averaging weights for one block, divided by `L^3`.
    pub(crate) fn mean_weights(scenario: &SerfScenario) -> Vec<f64> {
        let geom = &scenario.geom;
        let l3 = geom.length.powi(3);
        mode_indices(geom.modes)
            .map(|idx| {
                sine_mode_integral(idx.m, geom.length)
                    * sine_mode_integral(idx.n, geom.length)
                    * sine_mode_integral(idx.l, geom.length)
                    / l3
            })
            .collect()
    }

    /// Right-hand side for `A S = -(R/2) e_z`.
    pub(crate) fn source(scenario: &SerfScenario, eff: &Effective) -> Vec<f64> {
        let geom = &scenario.geom;
        let n = geom.mode_count();
        let mut b = vec![0.0; 3 * n];
        for (slot, idx) in b[2 * n..].iter_mut().zip(mode_indices(geom.modes)) {
            *slot = -0.5
                * eff.pump
                * sine_mode_integral(idx.m, geom.length)
                * sine_mode_integral(idx.n, geom.length)
                * sine_mode_integral(idx.l, geom.length);
        }
        b
    }
}

/// Solves the per-mode 3x3 systems `[[d, 0, b], [0, d, 0], [-b, 0, d]] u = r`
/// for blocks stacked as `[x | y | z]`.
pub(crate) fn block_inverse(diag: &[f64], b: f64, r: &[f64], out: &mut [f64]) {
    let n = diag.len();
    for (p, &d) in diag.iter().enumerate() {
        let (rx, ry, rz) = (r[p], r[n + p], r[2 * n + p]);
        let det = d * d + b * b;
        out[p] = (d * rx - b * rz) / det;
        out[n + p] = ry / d;
        out[2 * n + p] = (b * rx + d * rz) / det;
    }
}
