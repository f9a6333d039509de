//! Block Levinson recursion for Hermitian block-Toeplitz systems.
//!
//! The stacked-window covariance of the LMMSE receiver has the form
//! `C[i][j] = T(j - i)` with `T(-k) = T(k)^H`. Solving `C X = Y` this way
//! costs `O(P^2 M^3)` instead of the `O(P^3 M^3)` of a dense factorization.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type CMat = DMatrix<Complex64>;

fn inverse(m: CMat, what: &str) -> Result<CMat> {
    m.try_inverse()
        .ok_or_else(|| Error::Numerical(format!("singular {what} in block Levinson recursion")))
}

/// Solves `C X = Y` where `C` has first block row `blocks[0], ..., blocks[P-1]`
/// and is Hermitian. `rhs` has `P * M` rows.
pub fn solve_hermitian_block_toeplitz(blocks: &[CMat], rhs: &CMat) -> Result<CMat> {
    let p = blocks.len();
    if p == 0 {
        return Err(Error::Internal("empty block-Toeplitz system".into()));
    }
    let m = blocks[0].nrows();
    if rhs.nrows() != p * m {
        return Err(Error::Internal(format!(
            "right-hand side has {} rows, expected {}",
            rhs.nrows(),
            p * m
        )));
    }
    let k = rhs.ncols();
    let adjoints: Vec<CMat> = blocks.iter().map(|b| b.adjoint()).collect();
    let y = |i: usize| rhs.rows(i * m, m).into_owned();
    let eye = CMat::identity(m, m);

    let inv0 = inverse(blocks[0].clone(), "leading block")?;
    let mut fwd = vec![inv0.clone()];
    let mut bwd = vec![inv0.clone()];
    let mut x = vec![&inv0 * y(0)];

    let mut ef = CMat::zeros(m, m);
    let mut eb = CMat::zeros(m, m);
    let mut ex = CMat::zeros(m, k);
    for n in 1..p {
        ef.fill(Complex64::new(0.0, 0.0));
        eb.fill(Complex64::new(0.0, 0.0));
        ex.fill(Complex64::new(0.0, 0.0));
        for i in 0..n {
            ef.gemm(Complex64::new(1.0, 0.0), &adjoints[n - i], &fwd[i], Complex64::new(1.0, 0.0));
            eb.gemm(Complex64::new(1.0, 0.0), &blocks[i + 1], &bwd[i], Complex64::new(1.0, 0.0));
            ex.gemm(Complex64::new(1.0, 0.0), &adjoints[n - i], &x[i], Complex64::new(1.0, 0.0));
        }
        let alpha = inverse(&eye - &eb * &ef, "forward reflection")?;
        let delta = inverse(&eye - &ef * &eb, "backward reflection")?;
        let beta = -(&ef * &alpha);
        let gamma = -(&eb * &delta);

        let mut new_fwd = Vec::with_capacity(n + 1);
        let mut new_bwd = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let mut f = CMat::zeros(m, m);
            let mut b = CMat::zeros(m, m);
            if i < n {
                f.gemm(Complex64::new(1.0, 0.0), &fwd[i], &alpha, Complex64::new(0.0, 0.0));
                b.gemm(Complex64::new(1.0, 0.0), &fwd[i], &gamma, Complex64::new(0.0, 0.0));
            }
            if i >= 1 {
                f.gemm(Complex64::new(1.0, 0.0), &bwd[i - 1], &beta, Complex64::new(1.0, 0.0));
                b.gemm(Complex64::new(1.0, 0.0), &bwd[i - 1], &delta, Complex64::new(1.0, 0.0));
            }
            new_fwd.push(f);
            new_bwd.push(b);
        }
        fwd = new_fwd;
        bwd = new_bwd;

        let resid = y(n) - &ex;
        x.push(CMat::zeros(m, k));
        for (xi, bi) in x.iter_mut().zip(&bwd) {
            xi.gemm(Complex64::new(1.0, 0.0), bi, &resid, Complex64::new(1.0, 0.0));
        }
    }

    let mut out = CMat::zeros(p * m, k);
    for (i, xi) in x.iter().enumerate() {
        out.rows_mut(i * m, m).copy_from(xi);
    }
    Ok(out)
}

/// Dense matrix with blocks `C[i][j] = T(j - i)`.
pub fn assemble_hermitian_block_toeplitz(blocks: &[CMat]) -> CMat {
    let p = blocks.len();
    let m = blocks.first().map_or(0, |b| b.nrows());
    let mut out = CMat::zeros(p * m, p * m);
    for i in 0..p {
        for j in 0..p {
            let block = if j >= i {
                blocks[j - i].clone()
            } else {
                blocks[i - j].adjoint()
            };
            out.view_mut((i * m, j * m), (m, m)).copy_from(&block);
        }
    }
    out
}
