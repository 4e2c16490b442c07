//! Restarted GMRES with right preconditioning for real systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    /// Stop when `||b - A x|| <= tol * ||b||`.
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            tol: 1e-13,
            restart: 80,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True relative residual `||b - A x|| / ||b||` at exit.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` where `apply_a(v, out)` computes `out = A v` and
/// `apply_prec(v, out)` computes `out ~= A^{-1} v`.
pub fn gmres<A, P>(apply_a: A, apply_prec: P, b: &[f64], opts: GmresOptions) -> Result<GmresOutcome>
where
    A: Fn(&[f64], &mut [f64]),
    P: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(GmresOutcome {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let m = opts.restart.max(1);
    let mut work = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut total = 0usize;
    let mut cond_estimate = 1.0f64;

    loop {
        // r = b - A x
        apply_a(&x, &mut work);
        let r: Vec<f64> = b.iter().zip(&work).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        let rel = beta / b_norm;
        if rel <= opts.tol {
            return Ok(GmresOutcome {
                x,
                iterations: total,
                residual: rel,
            });
        }
        if total >= opts.max_iter {
            return Err(Error::Solver {
                iterations: total,
                residual: rel,
                condition_estimate: cond_estimate,
            });
        }

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..m {
            apply_prec(&basis[k], &mut z);
            apply_a(&z, &mut work);
            let mut w = work.clone();
            // modified Gram-Schmidt, twice for stability
            for _ in 0..2 {
                for (j, v) in basis.iter().enumerate() {
                    let hij = dot(&w, v);
                    h[j][k] += hij;
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= hij * vi;
                    }
                }
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;

            let diag: Vec<f64> = (0..k_used).map(|i| h[i][i].abs()).collect();
            let dmax = diag.iter().cloned().fold(0.0, f64::max);
            let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
            if dmin > 0.0 {
                cond_estimate = cond_estimate.max(dmax / dmin);
            }

            if g[k + 1].abs() / b_norm <= opts.tol * 0.5 || wn == 0.0 || total >= opts.max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }

        // back substitution on the triangularized Hessenberg
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for (u, v) in update.iter_mut().zip(&basis[j]) {
                *u += yj * v;
            }
        }
        apply_prec(&update, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        if k_used == 0 {
            return Err(Error::Solver {
                iterations: total,
                residual: rel,
                condition_estimate: f64::INFINITY,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 50;
        // tridiagonal, nonsymmetric, diagonally dominant
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let mut s = 4.0 * v[i];
                if i > 0 {
                    s -= 1.5 * v[i - 1];
                }
                if i + 1 < n {
                    s -= 0.5 * v[i + 1];
                }
                out[i] = s;
            }
        };
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        apply(&x_true, &mut b);
        let out = gmres(apply, |v, o| o.copy_from_slice(v), &b, GmresOptions::default()).unwrap();
        for (a, e) in out.x.iter().zip(&x_true) {
            assert!((a - e).abs() < 1e-11);
        }
        assert!(out.residual <= 1e-13);
    }

    #[test]
    fn exact_preconditioner_converges_in_one_step() {
        let d: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let b = vec![1.0; 20];
        let out = gmres(
            |v, o| {
                for i in 0..20 {
                    o[i] = d[i] * v[i];
                }
            },
            |v, o| {
                for i in 0..20 {
                    o[i] = v[i] / d[i];
                }
            },
            &b,
            GmresOptions::default(),
        )
        .unwrap();
        assert!(out.iterations <= 1);
    }

    #[test]
    fn reports_failure() {
        // singular operator with b outside its range
        let res = gmres(
            |v, o| {
                o[0] = v[0];
                o[1] = 0.0;
            },
            |v, o| o.copy_from_slice(v),
            &[1.0, 1.0],
            GmresOptions {
                max_iter: 10,
                ..GmresOptions::default()
            },
        );
        assert!(matches!(res, Err(Error::Solver { .. })));
    }
}
