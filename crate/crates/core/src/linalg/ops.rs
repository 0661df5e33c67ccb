use super::matrix::{ComplexMatrix, HermitianMatrix};
use crate::error::{Error, Result};

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows().checked_mul(b.rows()).ok_or(Error::SizeOverflow)?;
    let cols = a.cols().checked_mul(b.cols()).ok_or(Error::SizeOverflow)?;
    rows.checked_mul(cols).ok_or(Error::SizeOverflow)?;
    let (br, bc) = (b.rows(), b.cols());
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    }))
}

/// Partial transpose on the two-dimensional first factor of a `2M x 2M`
/// matrix: `[[A, B], [B†, D]] ↦ [[A, B†], [B, D]]`.
pub fn partial_transpose_first(rho: &HermitianMatrix, m: usize) -> Result<HermitianMatrix> {
    if rho.dim() != 2 * m {
        return Err(Error::DimensionMismatch {
            expected: 2 * m,
            found: rho.dim(),
        });
    }
    let out = ComplexMatrix::from_fn(2 * m, 2 * m, |i, j| {
        let (bi, ri) = (i / m, i % m);
        let (bj, rj) = (j / m, j % m);
        rho[(bj * m + ri, bi * m + rj)]
    });
    Ok(HermitianMatrix::from_trusted(out))
}

/// `Re trace(A B)`.
pub fn pairing(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = a[(i, j)];
            let y = b[(j, i)];
            s += x.re * y.re - x.im * y.im;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::linalg::eigen::min_eigenvalue;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2).unwrap(), ComplexMatrix::identity(4));

        let e11 = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let y = ComplexMatrix::outer(&[c(1.0, 0.0), c(0.0, 0.0)], &[c(1.0, 0.0), c(0.0, 0.0)]);
        let k = kron(&e11, &y).unwrap();
        assert_eq!(k.rows(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if (i, j) == (0, 0) { 1.0 } else { 0.0 };
                assert_eq!(k[(i, j)], c(expect, 0.0));
            }
        }
    }

    #[test]
    fn kron_trace_is_multiplicative() {
        let x = [c(1.0, 2.0), c(-0.5, 0.25)];
        let y = [c(0.3, 0.0), c(0.0, -1.0), c(2.0, 1.0)];
        let k = kron(&ComplexMatrix::outer(&x, &x), &ComplexMatrix::outer(&y, &y)).unwrap();
        let nx: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let ny: f64 = y.iter().map(|z| z.norm_sqr()).sum();
        assert!((k.trace().re - nx * ny).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_swaps_off_diagonal_blocks() {
        let m = 2;
        let rho = ComplexMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                c(1.0 + i as f64, 0.0)
            } else if i < j {
                c(i as f64 + 0.1 * j as f64, 0.5 * (j - i) as f64)
            } else {
                c(j as f64 + 0.1 * i as f64, -0.5 * (i - j) as f64)
            }
        });
        let rho = HermitianMatrix::new(rho).unwrap();
        let pt = partial_transpose_first(&rho, m).unwrap();
        let b = rho.block(0, m, m, m);
        assert_eq!(pt.block(0, m, m, m), b.adjoint());
        assert_eq!(pt.block(m, 0, m, m), b);
        assert_eq!(pt.block(0, 0, m, m), rho.block(0, 0, m, m));
        assert_eq!(pt.block(m, m, m, m), rho.block(m, m, m, m));
        assert!(partial_transpose_first(&rho, 3).is_err());
    }

    #[test]
    fn block_diagonal_is_fixed_by_partial_transpose() {
        let rho = HermitianMatrix::from_real_diagonal(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(partial_transpose_first(&rho, 2).unwrap(), rho);
    }

    #[test]
    fn bell_partial_transpose_min_eigenvalue() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)];
        let rho = HermitianMatrix::new(ComplexMatrix::outer(&psi, &psi)).unwrap();
        let pt = partial_transpose_first(&rho, 2).unwrap();
        assert!((min_eigenvalue(&pt).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn pairing_basics() {
        let i3 = HermitianMatrix::identity(3);
        assert_eq!(pairing(&i3, &i3).unwrap(), 3.0);
        assert_eq!(pairing(&i3, &HermitianMatrix::zeros(3)).unwrap(), 0.0);
        assert!(pairing(&i3, &HermitianMatrix::identity(2)).is_err());

        let x = [c(0.6, 0.0), c(0.0, 0.8)];
        let y = [c(1.0, 0.0), c(0.0, 0.0)];
        let px = HermitianMatrix::new(ComplexMatrix::outer(&x, &x)).unwrap();
        let py = HermitianMatrix::new(ComplexMatrix::outer(&y, &y)).unwrap();
        assert!((pairing(&px, &py).unwrap() - 0.36).abs() < 1e-15);
    }
}
