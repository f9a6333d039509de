//! Reference implementations used as test oracles.
//!
//! Everything here is written with element indexing only so that it does not
//! share code paths with the library's nalgebra-based factorizations.

#![allow(dead_code)]

use mmwchan::rng::{sample_complex_gain, RngHandle};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn random_cmat(rng: &mut RngHandle, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| sample_complex_gain(rng))
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows());
    let mut out = CMat::zeros(a.nrows(), b.ncols());
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut acc = ZERO;
            for k in 0..a.ncols() {
                acc += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

pub fn adjoint(a: &CMat) -> CMat {
    CMat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

pub fn frob(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// LU factorization with partial pivoting, in place. Returns the row
/// permutation sign.
fn lu_in_place(a: &mut CMat, rhs: Option<&mut CMat>) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut sign = 1.0;
    let mut rhs = rhs;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[(x, col)].norm().total_cmp(&a[(y, col)].norm()))
            .unwrap();
        if pivot != col {
            a.swap_rows(pivot, col);
            if let Some(b) = rhs.as_deref_mut() {
                b.swap_rows(pivot, col);
            }
            sign = -sign;
        }
        let p = a[(col, col)];
        assert!(p.norm() > 0.0, "singular matrix in oracle");
        for r in col + 1..n {
            let f = a[(r, col)] / p;
            a[(r, col)] = f;
            for c in col + 1..n {
                let v = a[(col, c)];
                a[(r, c)] -= f * v;
            }
            if let Some(b) = rhs.as_deref_mut() {
                for c in 0..b.ncols() {
                    let v = b[(col, c)];
                    b[(r, c)] -= f * v;
                }
            }
        }
    }
    sign
}

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &CMat, b: &CMat) -> CMat {
    let n = a.nrows();
    let mut lu = a.clone();
    let mut x = b.clone();
    lu_in_place(&mut lu, Some(&mut x));
    for c in 0..x.ncols() {
        for r in (0..n).rev() {
            let mut acc = x[(r, c)];
            for k in r + 1..n {
                acc -= lu[(r, k)] * x[(k, c)];
            }
            x[(r, c)] = acc / lu[(r, r)];
        }
    }
    x
}

/// `log2 |det A|`.
pub fn log2_abs_det(a: &CMat) -> f64 {
    let mut lu = a.clone();
    lu_in_place(&mut lu, None);
    (0..a.nrows()).map(|i| lu[(i, i)].norm().log2()).sum()
}

/// One-sided Jacobi SVD. Returns singular values in descending order with
/// the matching left and right singular vectors as columns.
pub fn jacobi_svd(a: &CMat) -> (Vec<f64>, CMat, CMat) {
    let (rows, cols) = (a.nrows(), a.ncols());
    let mut w = a.clone();
    let mut v = CMat::identity(cols, cols);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..cols {
            for q in p + 1..cols {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = ZERO;
                for r in 0..rows {
                    alpha += w[(r, p)].norm_sqr();
                    beta += w[(r, q)].norm_sqr();
                    gamma += w[(r, p)].conj() * w[(r, q)];
                }
                let g = gamma.norm();
                if g <= 1e-300 || g <= 1e-16 * (alpha * beta).sqrt() {
                    continue;
                }
                off = off.max(g / (alpha * beta).sqrt());
                // Remove the phase of gamma from column q, then apply a real rotation.
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let xp = w[(r, p)];
                    let xq = w[(r, q)] * phase.conj();
                    w[(r, p)] = xp * c - xq * s;
                    w[(r, q)] = xp * s + xq * c;
                }
                for r in 0..cols {
                    let xp = v[(r, p)];
                    let xq = v[(r, q)] * phase.conj();
                    v[(r, p)] = xp * c - xq * s;
                    v[(r, q)] = xp * s + xq * c;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut order: Vec<(f64, usize)> = (0..cols)
        .map(|j| ((0..rows).map(|r| w[(r, j)].norm_sqr()).sum::<f64>().sqrt(), j))
        .collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0));
    let k = rows.min(cols);
    let mut u = CMat::zeros(rows, k);
    let mut vv = CMat::zeros(cols, k);
    let mut sv = Vec::with_capacity(k);
    for (out, &(s, j)) in order.iter().take(k).enumerate() {
        sv.push(s);
        for r in 0..rows {
            u[(r, out)] = if s > 0.0 { w[(r, j)] / s } else { ZERO };
        }
        for r in 0..cols {
            vv[(r, out)] = v[(r, j)];
        }
    }
    (sv, u, vv)
}
