//! Bipartite 2×M states, product ensembles, witness triples and the named test
//! families.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, kron, partial_transpose_first, ComplexMatrix, HermitianMatrix,
    DEFAULT_EIG_TOL, HERMITIAN_TOL,
};

/// Minimum-eigenvalue slack used when flagging a state as PSD.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

/// A `2M x 2M` Hermitian matrix `[[A, B], [B†, D]]` on a qubit–qudit pair.
///
/// Neither positivity nor unit trace is enforced; see [`validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    m: usize,
    rho: HermitianMatrix,
}

impl BipartiteState {
    pub fn new(rho: HermitianMatrix, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("M must be at least 1".into()));
        }
        if rho.dim() != 2 * m {
            return Err(Error::DimensionMismatch {
                expected: 2 * m,
                found: rho.dim(),
            });
        }
        Ok(Self { m, rho })
    }

    /// Assembles `[[A, B], [B†, D]]`; `A` and `D` must be Hermitian.
    pub fn from_blocks(a: &ComplexMatrix, b: &ComplexMatrix, d: &ComplexMatrix) -> Result<Self> {
        let m = a.rows();
        for blk in [a, b, d] {
            if blk.rows() != m || blk.cols() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: blk.rows().max(blk.cols()),
                });
            }
        }
        HermitianMatrix::new(a.clone())?;
        HermitianMatrix::new(d.clone())?;
        let mut rho = ComplexMatrix::zeros(2 * m, 2 * m);
        rho.set_block(0, 0, a);
        rho.set_block(0, m, b);
        rho.set_block(m, 0, &b.adjoint());
        rho.set_block(m, m, d);
        Self::new(HermitianMatrix::new(rho)?, m)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rho(&self) -> &HermitianMatrix {
        &self.rho
    }

    pub fn into_rho(self) -> HermitianMatrix {
        self.rho
    }

    /// The `(A, B, D)` blocks.
    pub fn blocks(&self) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
        let m = self.m;
        (
            self.rho.block(0, 0, m, m),
            self.rho.block(0, m, m, m),
            self.rho.block(m, m, m, m),
        )
    }

    pub fn trace(&self) -> f64 {
        self.rho.real_trace()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            m: self.m,
            rho: self.rho.scale(c),
        }
    }

    pub fn partial_transpose(&self) -> Self {
        Self {
            m: self.m,
            rho: partial_transpose_first(&self.rho, self.m).expect("dimension checked at construction"),
        }
    }

    /// Smallest eigenvalue of the partial transpose (Peres test value).
    pub fn ppt_min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eig(self.partial_transpose().rho(), DEFAULT_EIG_TOL)?.min_eigenvalue())
    }
}

/// Terms `(x_i, y_i)` of a separable decomposition `Σ x_i x_i† ⊗ y_i y_i†`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductEnsemble {
    terms: Vec<(Vec<Complex64>, Vec<Complex64>)>,
}

impl ProductEnsemble {
    pub fn new(terms: Vec<(Vec<Complex64>, Vec<Complex64>)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("ensemble has no terms".into()));
        }
        let m = terms[0].1.len();
        if m == 0 {
            return Err(Error::InvalidParameter("empty qudit vector".into()));
        }
        for (x, y) in &terms {
            if x.len() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: x.len(),
                });
            }
            if y.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: y.len(),
                });
            }
            if !x.iter().chain(y).all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite {
                    context: "ensemble vector",
                });
            }
        }
        Ok(Self { terms })
    }

    /// `terms` product terms with independent standard-normal complex
    /// components (real and imaginary parts each N(0, 1)).
    pub fn random<R: Rng + ?Sized>(rng: &mut R, m: usize, terms: usize) -> Result<Self> {
        let mut draw = |len: usize| -> Vec<Complex64> {
            (0..len)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        };
        let terms = (0..terms).map(|_| (draw(2), draw(m))).collect();
        Self::new(terms)
    }

    pub fn terms(&self) -> &[(Vec<Complex64>, Vec<Complex64>)] {
        &self.terms
    }

    pub fn m(&self) -> usize {
        self.terms[0].1.len()
    }
}

/// `Σ x_i x_i† ⊗ y_i y_i†`.
pub fn assemble_separable(e: &ProductEnsemble) -> Result<BipartiteState> {
    let m = e.m();
    let mut rho = ComplexMatrix::zeros(2 * m, 2 * m);
    for (x, y) in e.terms() {
        let term = kron(&ComplexMatrix::outer(x, x), &ComplexMatrix::outer(y, y))?;
        rho = &rho + &term;
    }
    BipartiteState::new(HermitianMatrix::symmetrized(&rho)?, m)
}

/// Named members of the test corpus.
#[derive(Clone, Debug, PartialEq)]
pub enum NamedState {
    /// `ψψ†`, `ψ = (1, 0, 0, 1)/√2`.
    Bell,
    /// `p·φφ† + (1 − p)·I₄/4` with the singlet `φ = (0, 1, −1, 0)/√2`.
    Werner { p: f64 },
    /// Normalized `xx† ⊗ yy†`.
    Product { x: Vec<Complex64>, y: Vec<Complex64> },
    /// `I_{2M}/(2M)`.
    MaxMixed { m: usize },
}

pub fn named_state(kind: &NamedState) -> Result<BipartiteState> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64| Complex64::new(re, 0.0);
    match kind {
        NamedState::Bell => {
            let psi = [c(s), c(0.0), c(0.0), c(s)];
            BipartiteState::new(HermitianMatrix::new(ComplexMatrix::outer(&psi, &psi))?, 2)
        }
        NamedState::Werner { p } => {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::InvalidParameter(format!(
                    "Werner parameter must lie in [0, 1], got {p}"
                )));
            }
            let phi = [c(0.0), c(s), c(-s), c(0.0)];
            let singlet = ComplexMatrix::outer(&phi, &phi).scale(*p);
            let noise = ComplexMatrix::identity(4).scale((1.0 - p) / 4.0);
            BipartiteState::new(HermitianMatrix::new(&singlet + &noise)?, 2)
        }
        NamedState::Product { x, y } => {
            let nx: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            let ny: f64 = y.iter().map(|z| z.norm_sqr()).sum();
            if nx == 0.0 || ny == 0.0 {
                return Err(Error::InvalidParameter("product vectors must be nonzero".into()));
            }
            let x: Vec<_> = x.iter().map(|z| z / nx.sqrt()).collect();
            let y: Vec<_> = y.iter().map(|z| z / ny.sqrt()).collect();
            assemble_separable(&ProductEnsemble::new(vec![(x, y)])?)
        }
        NamedState::MaxMixed { m } => {
            if *m == 0 {
                return Err(Error::InvalidParameter("M must be at least 1".into()));
            }
            let d = 2 * m;
            BipartiteState::new(HermitianMatrix::identity(d).scale(1.0 / d as f64), *m)
        }
    }
}

/// `(1 − ε)ρ + ε·trace(ρ)·I/(2M)`.
pub fn mix_with_identity(rho: &BipartiteState, eps: f64) -> Result<BipartiteState> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "mixing weight must lie in [0, 1], got {eps}"
        )));
    }
    let d = 2 * rho.m();
    let shift = eps * rho.trace() / d as f64;
    let mut out = rho.rho().as_matrix().scale(1.0 - eps);
    for i in 0..d {
        out[(i, i)] += shift;
    }
    BipartiteState::new(HermitianMatrix::from_trusted(out), rho.m())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    /// Max-norm of `ρ − ρ†`.
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
    pub trace: f64,
    pub is_psd: bool,
}

/// Diagnostic summary; never rejects.
pub fn validate(rho: &BipartiteState, psd_tol: f64) -> Result<ValidationReport> {
    let eig = hermitian_eig(rho.rho(), DEFAULT_EIG_TOL)?;
    let min_eigenvalue = eig.min_eigenvalue();
    Ok(ValidationReport {
        hermiticity: rho.rho().hermitian_residual(),
        min_eigenvalue,
        trace: rho.trace(),
        is_psd: min_eigenvalue >= -psd_tol,
    })
}

/// `(P, Q, R) = (Φ(E₁₁), Φ(E₁₂), Φ(E₂₂))` of a Hermiticity-preserving map
/// `Φ: ℂ^{2×2} → ℂ^{M×M}`; its Choi-type matrix is `σ = [[P, Q], [Q†, R]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessTriple {
    m: usize,
    p: ComplexMatrix,
    q: ComplexMatrix,
    r: ComplexMatrix,
}

impl WitnessTriple {
    pub fn new(p: ComplexMatrix, q: ComplexMatrix, r: ComplexMatrix) -> Result<Self> {
        let m = p.rows();
        if m == 0 {
            return Err(Error::InvalidParameter("M must be at least 1".into()));
        }
        for blk in [&p, &q, &r] {
            if blk.rows() != m || blk.cols() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: blk.rows().max(blk.cols()),
                });
            }
        }
        let p = HermitianMatrix::with_tol(p, HERMITIAN_TOL)?.into_matrix();
        let r = HermitianMatrix::with_tol(r, HERMITIAN_TOL)?.into_matrix();
        if !q.is_finite() {
            return Err(Error::NonFinite { context: "Q block" });
        }
        Ok(Self { m, p, q, r })
    }

    /// Scalar triple for `M = 1`.
    pub fn scalar(p: f64, q: Complex64, r: f64) -> Result<Self> {
        Self::new(
            ComplexMatrix::from_real_diagonal(&[p]),
            ComplexMatrix::column(&[q]),
            ComplexMatrix::from_real_diagonal(&[r]),
        )
    }

    /// Splits `σ = [[P, Q], [Q†, R]]` into its blocks.
    pub fn from_sigma(sigma: &HermitianMatrix, m: usize) -> Result<Self> {
        if sigma.dim() != 2 * m {
            return Err(Error::DimensionMismatch {
                expected: 2 * m,
                found: sigma.dim(),
            });
        }
        Self::new(
            sigma.block(0, 0, m, m),
            sigma.block(0, m, m, m),
            sigma.block(m, m, m, m),
        )
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> &ComplexMatrix {
        &self.p
    }

    pub fn q(&self) -> &ComplexMatrix {
        &self.q
    }

    pub fn r(&self) -> &ComplexMatrix {
        &self.r
    }

    pub fn sigma(&self) -> HermitianMatrix {
        let m = self.m;
        let mut s = ComplexMatrix::zeros(2 * m, 2 * m);
        s.set_block(0, 0, &self.p);
        s.set_block(0, m, &self.q);
        s.set_block(m, 0, &self.q.adjoint());
        s.set_block(m, m, &self.r);
        HermitianMatrix::symmetrize_unchecked(&s)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            m: self.m,
            p: self.p.scale(c),
            q: self.q.scale(c),
            r: self.r.scale(c),
        }
    }
}
