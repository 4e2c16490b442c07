//! Matrix exponential by scaling and squaring with a degree-13 Padé
//! approximant (Higham 2005).

use nalgebra::DMatrix;
use num_complex::Complex64;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scale = Complex64::new(2f64.powi(-squarings), 0.0);
    let a = a * scale;

    let c = |k: usize| Complex64::new(PADE13[k], 0.0);
    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9)) + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &id * c(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8)) + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &id * c(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for scaled input");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_matrix() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(-3.0, 1.0),
            c(0.5, -2.0),
            c(-40.0, 0.0),
        ]));
        let e = expm(&a);
        for i in 0..3 {
            let want = a[(i, i)].exp();
            assert!((e[(i, i)] - want).norm() < 1e-13 * want.norm().max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn rotation_generator() {
        // exp([[0, -w], [w, 0]] t) is a rotation by w t.
        let w = 7.3;
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-w, 0.0), c(w, 0.0), c(0.0, 0.0)]);
        let e = expm(&a);
        assert!((e[(0, 0)].re - w.cos()).abs() < 1e-13);
        assert!((e[(1, 0)].re - w.sin()).abs() < 1e-13);
    }

    #[test]
    fn nilpotent_and_semigroup() {
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(3.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let e = expm(&a);
        assert!((e[(0, 1)] - c(3.0, 1.0)).norm() < 1e-14);
        let b = DMatrix::from_fn(4, 4, |i, j| c((i as f64 - j as f64) * 0.7, (i * j) as f64 * 0.1 - 1.0));
        let e1 = expm(&b);
        let e2 = expm(&(&b * c(2.0, 0.0)));
        let diff = (&e1 * &e1 - &e2).norm() / e2.norm();
        assert!(diff < 1e-12, "{diff}");
    }
}
