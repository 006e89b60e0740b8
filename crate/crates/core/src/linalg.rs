//! Thin wrappers around faer for the dense problems used throughout.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Eigenpairs of a real symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(a: &Mat<f64>, context: &'static str) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::Eigensolver { context })?;
    let vals: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver { context });
    }
    Ok((vals, evd.U().to_owned()))
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(a: &Mat<C64>, context: &'static str) -> Result<Vec<C64>> {
    a.eigenvalues().map_err(|_| Error::Eigensolver { context })
}

/// Residual norms ‖A v_i − λ_i v_i‖ for every column of `vecs`.
pub fn residual_norms(a: &Mat<f64>, vals: &[f64], vecs: &Mat<f64>) -> Vec<f64> {
    let av = a * vecs;
    (0..vals.len())
        .map(|i| {
            let mut s = 0.0;
            for r in 0..a.nrows() {
                let d = av[(r, i)] - vals[i] * vecs[(r, i)];
                s += d * d;
            }
            s.sqrt()
        })
        .collect()
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1(a: &Mat<C64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn solve(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    a.partial_piv_lu().solve(b)
}

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

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &Mat<C64>) -> Mat<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    const THETA13: f64 = 5.371920351148152;
    let nrm = norm1(a);
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let scale = C64::new(0.5f64.powi(s), 0.0);
    let a = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let id = Mat::<C64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let comb = |c6: C64, c4: C64, c2: C64, c0: C64| {
        Mat::from_fn(n, n, |i, j| c6 * a6[(i, j)] + c4 * a4[(i, j)] + c2 * a2[(i, j)] + c0 * id[(i, j)])
    };
    let inner_u = &a6 * comb(b(13), b(11), b(9), C64::new(0.0, 0.0));
    let u_poly = comb(b(7), b(5), b(3), b(1)) + inner_u;
    let u = &a * &u_poly;
    let inner_v = &a6 * comb(b(12), b(10), b(8), C64::new(0.0, 0.0));
    let v = comb(b(6), b(4), b(2), b(0)) + inner_v;
    let p = &v + &u;
    let q = &v - &u;
    let mut r = solve(&q, &p);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// y = A x for a dense complex matrix and vector.
pub fn matvec(a: &Mat<C64>, x: &[C64]) -> Vec<C64> {
    let n = a.nrows();
    let mut y = vec![C64::new(0.0, 0.0); n];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == C64::new(0.0, 0.0) {
            continue;
        }
        let col = a.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp(θ [[0, -1], [1, 0]]) is a rotation.
        let th = 37.3;
        let a = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(-th, 0.0),
            (1, 0) => c(th, 0.0),
            _ => c(0.0, 0.0),
        });
        let e = expm(&a);
        assert!((e[(0, 0)] - c(th.cos(), 0.0)).norm() < 1e-12);
        assert!((e[(1, 0)] - c(th.sin(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn expm_of_diagonal() {
        let d = [c(-3.0, 0.5), c(0.1, -20.0), c(2.0, 0.0)];
        let a = Mat::from_fn(3, 3, |i, j| if i == j { d[i] } else { c(0.0, 0.0) });
        let e = expm(&a);
        for i in 0..3 {
            assert!((e[(i, i)] - d[i].exp()).norm() < 1e-12 * d[i].exp().norm().max(1.0));
        }
    }

    #[test]
    fn expm_nilpotent() {
        let a = Mat::from_fn(3, 3, |i, j| if j == i + 1 { c(2.0, 0.0) } else { c(0.0, 0.0) });
        let e = expm(&a);
        assert!((e[(0, 2)] - c(2.0, 0.0)).norm() < 1e-14);
        assert!((e[(0, 1)] - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn symmetric_eigen_sorted() {
        let a = Mat::from_fn(4, 4, |i, j| if i == j { (4 - i) as f64 } else { 0.1 });
        let (v, u) = symmetric_eigen(&a, "test").unwrap();
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        let r = residual_norms(&a, &v, &u);
        assert!(r.iter().all(|&x| x < 1e-13));
    }
}
