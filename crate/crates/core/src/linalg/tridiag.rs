use num_complex::Complex64;

/// Complex tridiagonal matrix with constant off-diagonals.
#[derive(Debug, Clone)]
pub struct ComplexTridiagonal {
    pub lower: Complex64,
    pub diag: Vec<Complex64>,
    pub upper: Complex64,
}

impl ComplexTridiagonal {
    pub fn mul_vec(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.lower * v[i - 1];
            }
            if i + 1 < n {
                s += self.upper * v[i + 1];
            }
            out[i] = s;
        }
    }

    /// LU factorization without pivoting (Thomas algorithm); fine for the
    /// diagonally dominant systems produced by implicit diffusion steps.
    pub fn factor(&self) -> TridiagonalFactor {
        let n = self.diag.len();
        let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
        let mut denom = vec![Complex64::new(0.0, 0.0); n];
        denom[0] = self.diag[0];
        if n > 1 {
            c_prime[0] = self.upper / denom[0];
        }
        for i in 1..n {
            denom[i] = self.diag[i] - self.lower * c_prime[i - 1];
            if i + 1 < n {
                c_prime[i] = self.upper / denom[i];
            }
        }
        TridiagonalFactor {
            lower: self.lower,
            c_prime,
            denom,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TridiagonalFactor {
    lower: Complex64,
    c_prime: Vec<Complex64>,
    denom: Vec<Complex64>,
}

impl TridiagonalFactor {
    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [Complex64]) {
        let n = rhs.len();
        rhs[0] /= self.denom[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower * rhs[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            let next = rhs[i + 1];
            rhs[i] -= self.c_prime[i] * next;
        }
    }

    /// Smallest pivot magnitude; zero means the factorization broke down.
    pub fn min_pivot(&self) -> f64 {
        self.denom.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min)
    }
}
