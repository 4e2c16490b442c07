use std::f64::consts::PI;

/// Orthonormal type-I discrete sine transform on `n` interior points. The
/// matrix is symmetric and its own inverse; its columns are eigenvectors of
/// the second-difference operator with zero boundary values.
#[derive(Debug, Clone)]
pub struct SineTransform {
    n: usize,
    matrix: Vec<f64>,
}

impl SineTransform {
    pub fn new(n: usize) -> Self {
        let scale = (2.0 / (n as f64 + 1.0)).sqrt();
        let mut matrix = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                matrix[j * n + k] = scale * (((j + 1) * (k + 1)) as f64 * PI / (n as f64 + 1.0)).sin();
            }
        }
        SineTransform { n, matrix }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn entry(&self, j: usize, k: usize) -> f64 {
        self.matrix[j * self.n + k]
    }

    /// Eigenvalue of the second difference `(u[i-1] - 2u[i] + u[i+1]) / h^2`
    /// for the `k`-th (0-based) sine vector.
    pub fn laplacian_eigenvalue(&self, k: usize, h: f64) -> f64 {
        let s = ((k + 1) as f64 * PI / (2.0 * (self.n as f64 + 1.0))).sin();
        -4.0 / (h * h) * s * s
    }

    /// `sum_j S[j][k]`, the projection of the all-ones vector.
    pub fn ones_projection(&self) -> Vec<f64> {
        (0..self.n)
            .map(|k| (0..self.n).map(|j| self.entry(j, k)).sum())
            .collect()
    }
}

/// Applies the transform along `axis` of a C-ordered `n x n x n` array
/// (axis 0 slowest).
pub fn apply_along_axis(data: &mut [f64], tr: &SineTransform, axis: usize) {
    let n = tr.len();
    assert_eq!(data.len(), n * n * n);
    let stride = match axis {
        0 => n * n,
        1 => n,
        2 => 1,
        _ => panic!("axis must be 0, 1 or 2"),
    };
    let mut line = vec![0.0; n];
    let mut out = vec![0.0; n];
    for a in 0..n {
        for b in 0..n {
            let base = match axis {
                0 => a * n + b,
                1 => a * n * n + b,
                _ => (a * n + b) * n,
            };
            for (i, v) in line.iter_mut().enumerate() {
                *v = data[base + i * stride];
            }
            for (k, o) in out.iter_mut().enumerate() {
                let row = &tr.matrix[k * n..(k + 1) * n];
                *o = row.iter().zip(&line).map(|(s, v)| s * v).sum();
            }
            for (i, v) in out.iter().enumerate() {
                data[base + i * stride] = *v;
            }
        }
    }
}

/// `dst += scale * (A along axis) src` for a dense row-major `n x n`
/// matrix `A` acting on one axis of C-ordered `n x n x n` arrays.
pub fn accumulate_along_axis(mat: &[f64], n: usize, src: &[f64], dst: &mut [f64], axis: usize, scale: f64) {
    assert_eq!(mat.len(), n * n);
    assert_eq!(src.len(), n * n * n);
    assert_eq!(dst.len(), n * n * n);
    let stride = match axis {
        0 => n * n,
        1 => n,
        2 => 1,
        _ => panic!("axis must be 0, 1 or 2"),
    };
    let mut line = vec![0.0; n];
    for a in 0..n {
        for b in 0..n {
            let base = match axis {
                0 => a * n + b,
                1 => a * n * n + b,
                _ => (a * n + b) * n,
            };
            for (i, v) in line.iter_mut().enumerate() {
                *v = src[base + i * stride];
            }
            for k in 0..n {
                let row = &mat[k * n..(k + 1) * n];
                let s: f64 = row.iter().zip(&line).map(|(m, v)| m * v).sum();
                dst[base + k * stride] += scale * s;
            }
        }
    }
}
