#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sep2m_core::linalg::{ComplexMatrix, HermitianMatrix};
use sep2m_core::state::{assemble_separable, mix_with_identity, BipartiteState, ProductEnsemble};
use sep2m_core::Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> HermitianMatrix {
    HermitianMatrix::symmetrized(&random_matrix(rng, n, n)).unwrap()
}

pub fn random_psd<R: Rng>(rng: &mut R, n: usize, rank: usize) -> HermitianMatrix {
    let g = random_matrix(rng, n, rank);
    HermitianMatrix::symmetrized(&g.matmul(&g.adjoint()).unwrap()).unwrap()
}

pub fn random_skew<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    random_matrix(rng, n, n).skew_part()
}

/// Random separable state mixed towards the identity.
pub fn interior_separable<R: Rng>(rng: &mut R, m: usize, terms: usize, eps: f64) -> BipartiteState {
    let e = ProductEnsemble::random(rng, m, terms).unwrap();
    mix_with_identity(&assemble_separable(&e).unwrap(), eps).unwrap()
}

/// Sub-block `part` (0 = a, 1 = b, 2 = c, 3 = d) of block `(i, j)`, read entry
/// by entry.
pub fn slot(g: &ComplexMatrix, m: usize, i: usize, j: usize, part: usize) -> ComplexMatrix {
    let (h, k) = (part / 2, part % 2);
    ComplexMatrix::from_fn(m, m, |p, q| g[(2 * m * i + h * m + p, 2 * m * j + k * m + q)])
}

fn sum_over(m: usize, range: impl Iterator<Item = ComplexMatrix>) -> ComplexMatrix {
    range.fold(ComplexMatrix::zeros(m, m), |acc, x| &acc + &x)
}

/// Left-hand minus right-hand side of conditions (i)–(v) for Γ at level n;
/// (v) holds one matrix per k.
pub fn condition_defects(
    rho: &BipartiteState,
    g: &ComplexMatrix,
    n: usize,
) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix, ComplexMatrix, Vec<ComplexMatrix>) {
    let m = rho.m();
    let (a, b, d) = rho.blocks();
    let c1 = &sum_over(m, (0..=n).map(|i| slot(g, m, i, i, 0))) - &a;
    let c2 = &sum_over(m, (0..=n).map(|i| slot(g, m, i, i, 3))) - &d;
    let c3 = &sum_over(
        m,
        (0..n).map(|i| (&slot(g, m, i, i + 1, 2) + &slot(g, m, i, i + 1, 1)).scale(0.5)),
    ) - &b;
    let c4 = sum_over(m, (0..=n).map(|i| &slot(g, m, i, i, 2) - &slot(g, m, i, i, 1)));
    let c5 = (1..=n)
        .map(|k| sum_over(m, (0..=n - k).map(|i| &slot(g, m, i, i + k, 2) - &slot(g, m, i, i + k, 1))))
        .collect();
    (c1, c2, c3, c4, c5)
}

/// Frobenius norms of the five defects; (v) combined over k.
pub fn condition_norms(rho: &BipartiteState, g: &ComplexMatrix, n: usize) -> [f64; 5] {
    let (c1, c2, c3, c4, c5) = condition_defects(rho, g, n);
    let v = c5.iter().map(|c| c.frobenius_norm().powi(2)).sum::<f64>().sqrt();
    [c1.frobenius_norm(), c2.frobenius_norm(), c3.frobenius_norm(), c4.frobenius_norm(), v]
}

/// Linearly independent real functionals of the conditions. Hermitian-valued
/// conditions (i), (ii) contribute their upper triangle; (iv), whose value is
/// skew-Hermitian on Hermitian Γ, likewise.
pub fn scalarized_defects(rho: &BipartiteState, g: &ComplexMatrix, n: usize) -> Vec<f64> {
    let m = rho.m();
    let (c1, c2, c3, c4, c5) = condition_defects(rho, g, n);
    let mut out = Vec::new();
    for c in [&c1, &c2] {
        for p in 0..m {
            out.push(c[(p, p)].re);
            for q in p + 1..m {
                out.push(c[(p, q)].re);
                out.push(c[(p, q)].im);
            }
        }
    }
    for p in 0..m {
        for q in 0..m {
            out.push(c3[(p, q)].re);
            out.push(c3[(p, q)].im);
        }
    }
    for p in 0..m {
        out.push(c4[(p, p)].im);
        for q in p + 1..m {
            out.push(c4[(p, q)].re);
            out.push(c4[(p, q)].im);
        }
    }
    for c in &c5 {
        for p in 0..m {
            for q in 0..m {
                out.push(c[(p, q)].re);
                out.push(c[(p, q)].im);
            }
        }
    }
    out
}

/// Isometric real coordinates of Hermitian `N x N` matrices: the diagonal,
/// then `√2·Re` and `√2·Im` of each strict upper entry.
pub fn to_coords(h: &ComplexMatrix) -> DVector<f64> {
    let n = h.rows();
    let s = std::f64::consts::SQRT_2;
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        v.push(h[(i, i)].re);
    }
    for i in 0..n {
        for j in i + 1..n {
            v.push(s * h[(i, j)].re);
            v.push(s * h[(i, j)].im);
        }
    }
    DVector::from_vec(v)
}

pub fn from_coords(v: &DVector<f64>, n: usize) -> ComplexMatrix {
    let s = std::f64::consts::SQRT_2;
    let mut h = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = Complex64::new(v[i], 0.0);
    }
    let mut idx = n;
    for i in 0..n {
        for j in i + 1..n {
            let z = Complex64::new(v[idx] / s, v[idx + 1] / s);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            idx += 2;
        }
    }
    h
}

/// The affine set of conditions (i)–(v) materialized as `A v = b` in
/// isometric coordinates, projected onto by least squares through the normal
/// equations `A Aᵀ y = A v − b`.
pub struct LeastSquaresOracle {
    pub dim: usize,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl LeastSquaresOracle {
    pub fn new(rho: &BipartiteState, n: usize) -> Self {
        let dim = 2 * rho.m() * (n + 1);
        let zero = ComplexMatrix::zeros(dim, dim);
        let f0 = DVector::from_vec(scalarized_defects(rho, &zero, n));
        let coords = dim * dim;
        let mut a = DMatrix::zeros(f0.len(), coords);
        for j in 0..coords {
            let mut e = DVector::zeros(coords);
            e[j] = 1.0;
            let fj = DVector::from_vec(scalarized_defects(rho, &from_coords(&e, dim), n));
            a.set_column(j, &(fj - &f0));
        }
        Self { dim, a, b: -f0 }
    }

    pub fn project(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let v = to_coords(x);
        let r = &self.a * &v - &self.b;
        let y = self.gram().cholesky().expect("independent functionals").solve(&r);
        from_coords(&(v - self.a.transpose() * y), self.dim)
    }

    /// `A Aᵀ`.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.a * self.a.transpose()
    }
}
