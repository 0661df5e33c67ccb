//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary and then applies a real Givens rotation, so the combined transform
//! on columns `(p, q)` is
//!
//! ```text
//! U = [ c      s    ]
//!     [ -s·ē   c·ē  ]      e = a_pq / |a_pq|
//! ```
//!
//! and `A ← U† A U`, `V ← V U`.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, HermitianMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_EIG_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

/// Spectral decomposition `H = V diag(λ) V†` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors stored as columns, in the order of `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `V f(Λ) V†`.
    pub fn recompose_with(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * w;
                for j in i..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        for i in 0..n {
            out[(i, i)].im = 0.0;
            for j in i + 1..n {
                out[(j, i)] = out[(i, j)].conj();
            }
        }
        HermitianMatrix::from_trusted(out)
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.recompose_with(|l| l)
    }
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Stops once the off-diagonal Frobenius mass of the rotated matrix is at most
/// `tol` times the Frobenius norm of the input.
pub fn hermitian_eig(h: &HermitianMatrix, tol: f64) -> Result<EigenDecomposition> {
    check_tol(tol)?;
    let sym = HermitianMatrix::symmetrize_unchecked(h);
    let n = sym.dim();
    jacobi(sym.into_matrix(), ComplexMatrix::identity(n), tol)
}

/// Eigendecomposition seeded with an approximate eigenbasis `basis` (unitary).
///
/// Rotates `H` into the basis first, so when `basis` came from a nearby matrix
/// only a sweep or two is needed. Results agree with [`hermitian_eig`] up to
/// roundoff and the ordering of degenerate eigenvectors.
pub fn hermitian_eig_seeded(
    h: &HermitianMatrix,
    basis: &ComplexMatrix,
    tol: f64,
) -> Result<EigenDecomposition> {
    check_tol(tol)?;
    if basis.rows() != h.dim() || basis.cols() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: basis.rows(),
        });
    }
    let rotated = basis.adjoint().matmul(h)?.matmul(basis)?;
    let sym = HermitianMatrix::symmetrize_unchecked(&rotated);
    jacobi(sym.into_matrix(), basis.clone(), tol)
}

/// Smallest eigenvalue, convenience wrapper with the default tolerance.
pub fn min_eigenvalue(h: &HermitianMatrix) -> Result<f64> {
    Ok(hermitian_eig(h, DEFAULT_EIG_TOL)?.min_eigenvalue())
}

/// Frobenius-nearest positive semidefinite matrix: negative eigenvalues are
/// clipped to zero.
pub fn psd_project(h: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = hermitian_eig(h, DEFAULT_EIG_TOL)?;
    Ok(eig.recompose_with(|l| l.max(0.0)))
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eigensolver tolerance must be positive, got {tol}"
        )));
    }
    Ok(())
}

fn off_diagonal_mass(a: &[Complex64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += a[i * n + j].norm_sqr();
        }
    }
    (2.0 * s).sqrt()
}

fn jacobi(a: ComplexMatrix, v: ComplexMatrix, tol: f64) -> Result<EigenDecomposition> {
    let n = a.rows();
    if !a.is_finite() {
        return Err(Error::NonFinite {
            context: "eigensolver input",
        });
    }
    let scale = a.frobenius_norm();
    let target = tol * scale;
    let mut a = a.into_data();
    let mut v = v.into_data();

    let mut converged = false;
    for _sweep in 0..=MAX_SWEEPS {
        let off = off_diagonal_mass(&a, n);
        if off <= target || off == 0.0 {
            converged = true;
            break;
        }
        if _sweep == MAX_SWEEPS {
            break;
        }
        // Pivots far below the current off-diagonal level are skipped; they
        // cannot keep the sweep from converging and rotating them only adds
        // roundoff.
        let skip = (off / (n as f64)) * 1e-3 * f64::EPSILON;
        for p in 0..n {
            for q in p + 1..n {
                let g = a[p * n + q];
                let mag = g.norm();
                if mag <= skip || mag == 0.0 {
                    continue;
                }
                rotate(&mut a, &mut v, n, p, q, g, mag);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, k| v[i * n + order[k]]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

#[inline]
fn rotate(
    a: &mut [Complex64],
    v: &mut [Complex64],
    n: usize,
    p: usize,
    q: usize,
    g: Complex64,
    mag: f64,
) {
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.is_infinite() {
        0.5 / theta
    } else {
        let t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let e = g / mag;
    let ec = e.conj();
    // U = [[c, s], [-s·ē, c·ē]]
    let u_qp = -ec * s;
    let u_qq = ec * c;

    // A ← A U (columns p, q).
    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = akp * c + akq * u_qp;
        a[k * n + q] = akp * s + akq * u_qq;
    }
    // A ← U† A (rows p, q).
    let u_qp_c = u_qp.conj();
    let u_qq_c = u_qq.conj();
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = apk * c + aqk * u_qp_c;
        a[q * n + k] = apk * s + aqk * u_qq_c;
    }
    a[p * n + p] = Complex64::new(app - t * mag, 0.0);
    a[q * n + q] = Complex64::new(aqq + t * mag, 0.0);
    a[p * n + q] = Complex64::new(0.0, 0.0);
    a[q * n + p] = Complex64::new(0.0, 0.0);

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp * c + vkq * u_qp;
        v[k * n + q] = vkp * s + vkq * u_qq;
    }
}
