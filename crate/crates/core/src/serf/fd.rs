//! Seven-point finite differences on the interior grid with zero wall
//! values. The gradient-free part is diagonalized by a sine transform along
//! each axis, which gives an exact preconditioner for the uniform-field
//! problem.

use super::spectral::block_inverse;
use super::{Effective, SerfScenario};
use crate::linalg::{apply_along_axis, SineTransform};

pub(crate) struct GridOperator {
    n: usize,
    coupling: f64,
    base_rate: f64,
    /// Centered coordinate of interior point `i` along any axis.
    coord: Vec<f64>,
    field: [f64; 3],
    by: f64,
    tr: SineTransform,
    /// Operator eigenvalues in the transformed basis.
    diag: Vec<f64>,
}

impl GridOperator {
    pub(crate) fn new(scenario: &SerfScenario, eff: &Effective) -> Self {
        let geom = &scenario.geom;
        let n = geom.grid_points;
        let h = geom.length / (n + 1) as f64;
        let tr = SineTransform::new(n);
        let eig: Vec<f64> = (0..n).map(|k| tr.laplacian_eigenvalue(k, h)).collect();
        let mut diag = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    diag.push(eff.diffusion * (eig[a] + eig[b] + eig[c]) - eff.base_rate);
                }
            }
        }
        let g = scenario.gradient.g;
        GridOperator {
            n,
            coupling: eff.diffusion / (h * h),
            base_rate: eff.base_rate,
            coord: (0..n).map(|i| (i + 1) as f64 * h - geom.length / 2.0).collect(),
            field: [eff.gyro * g[0], eff.gyro * g[1], eff.gyro * g[2]],
            by: eff.gyro * scenario.by,
            tr,
            diag,
        }
    }

    pub(crate) fn block_len(&self) -> usize {
        self.n * self.n * self.n
    }

    fn laplacian_block(&self, src: &[f64], dst: &mut [f64]) {
        let n = self.n;
        let at = |i: usize, j: usize, k: usize| src[(i * n + j) * n + k];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = -6.0 * at(i, j, k);
                    if i > 0 {
                        s += at(i - 1, j, k);
                    }
                    if i + 1 < n {
                        s += at(i + 1, j, k);
                    }
                    if j > 0 {
                        s += at(i, j - 1, k);
                    }
                    if j + 1 < n {
                        s += at(i, j + 1, k);
                    }
                    if k > 0 {
                        s += at(i, j, k - 1);
                    }
                    if k + 1 < n {
                        s += at(i, j, k + 1);
                    }
                    dst[(i * n + j) * n + k] = self.coupling * s - self.base_rate * at(i, j, k);
                }
            }
        }
    }

    fn field_term(&self, alpha: usize, src: &[f64], dst: &mut [f64], sign: f64) {
        let n = self.n;
        let g = self.field[alpha];
        let uniform = if alpha == 1 { self.by } else { 0.0 };
        if g == 0.0 && uniform == 0.0 {
            return;
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let p = (i * n + j) * n + k;
                    let c = [i, j, k][alpha];
                    dst[p] += sign * (g * self.coord[c] + uniform) * src[p];
                }
            }
        }
    }

    pub(crate) fn apply(&self, v: &[f64], out: &mut [f64]) {
        let len = self.block_len();
        let (vx, rest) = v.split_at(len);
        let (vy, vz) = rest.split_at(len);
        for (block, src) in out.chunks_mut(len).zip([vx, vy, vz]) {
            self.laplacian_block(src, block);
        }
        let (ox, rest) = out.split_at_mut(len);
        let (oy, oz) = rest.split_at_mut(len);
        self.field_term(1, vz, ox, 1.0);
        self.field_term(2, vy, ox, -1.0);
        self.field_term(2, vx, oy, 1.0);
        self.field_term(0, vz, oy, -1.0);
        self.field_term(0, vy, oz, 1.0);
        self.field_term(1, vx, oz, -1.0);
    }

    fn transform(&self, data: &mut [f64]) {
        for block in data.chunks_mut(self.block_len()) {
            for axis in 0..3 {
                apply_along_axis(block, &self.tr, axis);
            }
        }
    }

    pub(crate) fn precondition(&self, r: &[f64], out: &mut [f64]) {
        let mut hat = r.to_vec();
        self.transform(&mut hat);
        block_inverse(&self.diag, self.by, &hat, out);
        self.transform(out);
    }

    pub(crate) fn source(&self, eff: &Effective) -> Vec<f64> {
        let len = self.block_len();
        let mut b = vec![0.0; 3 * len];
        b[2 * len..].fill(-0.5 * eff.pump);
        b
    }

    /// Volume average over the cell including the zero walls (trapezoid).
    pub(crate) fn mean_weight(&self) -> f64 {
        1.0 / ((self.n + 1) as f64).powi(3)
    }
}
