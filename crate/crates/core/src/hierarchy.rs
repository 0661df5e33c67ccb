//! The primal side: the affine constraint set of block certificates Γ for a
//! 2×M matrix ρ at level n, level-n feasibility, certificate verification and
//! the ascending level search.
//!
//! Γ is a Hermitian `(n+1) x (n+1)` block matrix with `2M x 2M` blocks
//! `Γ_ij = [[Γ_ij^a, Γ_ij^b], [Γ_ij^c, Γ_ij^d]]`. With `ρ = [[A, B], [B†, D]]`
//! the linear conditions are
//!
//! ```text
//! (i)   Σ_i Γ_ii^a = A
//! (ii)  Σ_i Γ_ii^d = D
//! (iii) Σ_{i<n} ½(Γ_{i,i+1}^c + Γ_{i,i+1}^b) = B
//! (iv)  Σ_i (Γ_ii^c − Γ_ii^b) = 0
//! (v)   Σ_{i≤n−k} (Γ_{i,i+k}^c − Γ_{i,i+k}^b) = 0,   k = 1..n
//! ```
//!
//! Each condition sums a fixed matrix pattern over its own set of sub-block
//! positions, and (iii) and (v) at `k = 1` use orthogonal weights `(½, ½)`
//! and `(1, −1)` on the same positions, so the projection onto the set is
//! computed group by group in closed form.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::info;

use crate::error::{Error, Result};
use crate::feasibility::{
    default_start, find_feasible, AffineSubspace, FeasibilityConfig, FeasibilityOutcome,
    FeasibilityStatus, StopReason,
};
use crate::linalg::{hermitian_eig, ComplexMatrix, HermitianMatrix, DEFAULT_EIG_TOL};
use crate::state::BipartiteState;

/// Quadrant of a `2M x 2M` block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    A,
    B,
    C,
    D,
}

impl Part {
    fn offsets(self, m: usize) -> (usize, usize) {
        match self {
            Part::A => (0, 0),
            Part::B => (0, m),
            Part::C => (m, 0),
            Part::D => (m, m),
        }
    }

    /// Quadrant holding the conjugate-transposed entries in the mirrored block.
    fn mirror(self) -> Part {
        match self {
            Part::B => Part::C,
            Part::C => Part::B,
            p => p,
        }
    }
}

/// Sub-block `(i, j, part)` of a matrix laid out in `2M x 2M` blocks.
pub(crate) fn sub(x: &ComplexMatrix, m: usize, i: usize, j: usize, part: Part) -> ComplexMatrix {
    let (ro, co) = part.offsets(m);
    x.block(i * 2 * m + ro, j * 2 * m + co, m, m)
}

fn put(x: &mut ComplexMatrix, m: usize, i: usize, j: usize, part: Part, v: &ComplexMatrix) {
    let (ro, co) = part.offsets(m);
    x.set_block(i * 2 * m + ro, j * 2 * m + co, v);
}

/// Writes `v` at `(i, j, part)` and `v†` at the Hermitian mirror position.
pub(crate) fn put_mirrored(
    x: &mut ComplexMatrix,
    m: usize,
    i: usize,
    j: usize,
    part: Part,
    v: &ComplexMatrix,
) {
    put(x, m, i, j, part, v);
    put(x, m, j, i, part.mirror(), &v.adjoint());
}

fn sum_of(mats: impl Iterator<Item = ComplexMatrix>, m: usize) -> ComplexMatrix {
    mats.fold(ComplexMatrix::zeros(m, m), |acc, x| &acc + &x)
}

/// The affine set `G(ρ; n)` without the PSD requirement.
#[derive(Clone, Debug)]
pub struct GammaConstraints {
    m: usize,
    n: usize,
    a: ComplexMatrix,
    b: ComplexMatrix,
    d: ComplexMatrix,
}

/// Violations of conditions (i)–(v) in Frobenius norm; (v) aggregates all `k`.
pub type ConditionResiduals = [f64; 5];

impl GammaConstraints {
    pub fn new(rho: &BipartiteState, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("level n must be at least 1".into()));
        }
        let (a, b, d) = rho.blocks();
        let herm = |x: &ComplexMatrix| HermitianMatrix::symmetrized(x).map(|h| h.into_matrix());
        Ok(Self {
            m: rho.m(),
            n,
            a: herm(&a)?,
            b,
            d: herm(&d)?,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn level(&self) -> usize {
        self.n
    }

    pub fn condition_residuals(&self, x: &ComplexMatrix) -> ConditionResiduals {
        let (m, n) = (self.m, self.n);
        let diag = |part| sum_of((0..=n).map(|i| sub(x, m, i, i, part)), m);
        let r1 = (&diag(Part::A) - &self.a).frobenius_norm();
        let r2 = (&diag(Part::D) - &self.d).frobenius_norm();
        let r4 = (&diag(Part::C) - &diag(Part::B)).frobenius_norm();
        let sym = sum_of(
            (0..n).map(|i| (&sub(x, m, i, i + 1, Part::C) + &sub(x, m, i, i + 1, Part::B)).scale(0.5)),
            m,
        );
        let r3 = (&sym - &self.b).frobenius_norm();
        let r5 = (1..=n)
            .map(|k| {
                sum_of(
                    (0..=n - k).map(|i| &sub(x, m, i, i + k, Part::C) - &sub(x, m, i, i + k, Part::B)),
                    m,
                )
                .frobenius_norm()
                .powi(2)
            })
            .sum::<f64>()
            .sqrt();
        [r1, r2, r3, r4, r5]
    }
}

impl AffineSubspace for GammaConstraints {
    fn dimension(&self) -> usize {
        2 * self.m * (self.n + 1)
    }

    fn project(&self, x: &HermitianMatrix) -> HermitianMatrix {
        let (m, n) = (self.m, self.n);
        let blocks = (n + 1) as f64;
        let mut y = x.as_matrix().clone();

        // (i), (ii): spread the defect evenly over the diagonal blocks.
        for (part, target) in [(Part::A, &self.a), (Part::D, &self.d)] {
            let total = sum_of((0..=n).map(|i| sub(&y, m, i, i, part)), m);
            let delta = (target - &total).scale(1.0 / blocks);
            for i in 0..=n {
                let v = &sub(&y, m, i, i, part) + &delta;
                put(&mut y, m, i, i, part, &v);
            }
        }

        // (iv): Γ_ii^b = (Γ_ii^c)†, so the condition says Σ Γ_ii^c is Hermitian.
        let total_c = sum_of((0..=n).map(|i| sub(&y, m, i, i, Part::C)), m);
        let skew = total_c.skew_part().scale(1.0 / blocks);
        for i in 0..=n {
            let v = &sub(&y, m, i, i, Part::C) - &skew;
            put_mirrored(&mut y, m, i, i, Part::C, &v);
        }

        // (iii) and (v) with k = 1 on the first superdiagonal.
        let terms = n as f64;
        let mut sym = ComplexMatrix::zeros(m, m);
        let mut anti = ComplexMatrix::zeros(m, m);
        for i in 0..n {
            let c = sub(&y, m, i, i + 1, Part::C);
            let b = sub(&y, m, i, i + 1, Part::B);
            sym = &sym + &(&c + &b).scale(0.5);
            anti = &anti + &(&c - &b);
        }
        let e_sym = (&self.b - &sym).scale(1.0 / terms);
        let e_anti = anti.scale(-0.5 / terms);
        let dc = &e_sym + &e_anti;
        let db = &e_sym - &e_anti;
        for i in 0..n {
            let c = &sub(&y, m, i, i + 1, Part::C) + &dc;
            let b = &sub(&y, m, i, i + 1, Part::B) + &db;
            put_mirrored(&mut y, m, i, i + 1, Part::C, &c);
            put_mirrored(&mut y, m, i, i + 1, Part::B, &b);
        }

        // (v) for k ≥ 2.
        for k in 2..=n {
            let terms = (n - k + 1) as f64;
            let anti = sum_of(
                (0..=n - k).map(|i| &sub(&y, m, i, i + k, Part::C) - &sub(&y, m, i, i + k, Part::B)),
                m,
            );
            let e = anti.scale(-0.5 / terms);
            for i in 0..=n - k {
                let c = &sub(&y, m, i, i + k, Part::C) + &e;
                let b = &sub(&y, m, i, i + k, Part::B) - &e;
                put_mirrored(&mut y, m, i, i + k, Part::C, &c);
                put_mirrored(&mut y, m, i, i + k, Part::B, &b);
            }
        }

        HermitianMatrix::symmetrize_unchecked(&y)
    }

    fn residual(&self, x: &HermitianMatrix) -> f64 {
        self.condition_residuals(x)
            .iter()
            .map(|r| r * r)
            .sum::<f64>()
            .sqrt()
    }
}

/// A level-n block matrix Γ witnessing `ρ ∈ A_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaCertificate {
    m: usize,
    n: usize,
    gamma: HermitianMatrix,
}

impl GammaCertificate {
    pub fn new(gamma: HermitianMatrix, m: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("level n must be at least 1".into()));
        }
        let expected = 2 * m * (n + 1);
        if gamma.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: gamma.dim(),
            });
        }
        Ok(Self { m, n, gamma })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn level(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> &HermitianMatrix {
        &self.gamma
    }

    /// The `2M x 2M` block `Γ_ij`.
    pub fn block(&self, i: usize, j: usize) -> ComplexMatrix {
        let s = 2 * self.m;
        self.gamma.block(i * s, j * s, s, s)
    }

    pub fn subblock(&self, i: usize, j: usize, part: Part) -> ComplexMatrix {
        sub(&self.gamma, self.m, i, j, part)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            m: self.m,
            n: self.n,
            gamma: self.gamma.scale(c),
        }
    }

    /// `(A', B', D')` read back through conditions (i)–(iii).
    pub fn reconstructed_blocks(&self) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
        let (m, n) = (self.m, self.n);
        let g = self.gamma.as_matrix();
        let a = sum_of((0..=n).map(|i| sub(g, m, i, i, Part::A)), m);
        let d = sum_of((0..=n).map(|i| sub(g, m, i, i, Part::D)), m);
        let b = sum_of(
            (0..n).map(|i| (&sub(g, m, i, i + 1, Part::C) + &sub(g, m, i, i + 1, Part::B)).scale(0.5)),
            m,
        );
        (a, b, d)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateReport {
    pub min_eigenvalue: f64,
    /// Conditions (i)–(v), Frobenius norm.
    pub residuals: ConditionResiduals,
    /// Max-norm distances between reconstructed and given blocks.
    pub a_error: f64,
    pub b_error: f64,
    pub d_error: f64,
    pub passed: bool,
}

/// Re-evaluates positivity and every linear condition of `cert` against `rho`.
pub fn verify_certificate(
    rho: &BipartiteState,
    cert: &GammaCertificate,
    tol_residual: f64,
    tol_psd: f64,
) -> Result<CertificateReport> {
    if rho.m() != cert.m {
        return Err(Error::DimensionMismatch {
            expected: rho.m(),
            found: cert.m,
        });
    }
    let constraints = GammaConstraints::new(rho, cert.n)?;
    let residuals = constraints.condition_residuals(cert.gamma.as_matrix());
    let min_eigenvalue = hermitian_eig(&cert.gamma, DEFAULT_EIG_TOL)?.min_eigenvalue();
    let (a, b, d) = rho.blocks();
    let (a2, b2, d2) = cert.reconstructed_blocks();
    let a_error = (&a2 - &a).max_norm();
    let b_error = (&b2 - &b).max_norm();
    let d_error = (&d2 - &d).max_norm();
    let passed = min_eigenvalue >= -tol_psd && residuals.iter().all(|&r| r <= tol_residual);
    Ok(CertificateReport {
        min_eigenvalue,
        residuals,
        a_error,
        b_error,
        d_error,
        passed,
    })
}

/// `Γ ⊕ 0_{2M}`: the same certificate one level up.
pub fn pad_certificate(cert: &GammaCertificate) -> GammaCertificate {
    let s = cert.gamma.dim();
    let mut g = ComplexMatrix::zeros(s + 2 * cert.m, s + 2 * cert.m);
    g.set_block(0, 0, cert.gamma.as_matrix());
    GammaCertificate {
        m: cert.m,
        n: cert.n + 1,
        gamma: HermitianMatrix::from_trusted(g),
    }
}

#[derive(Clone, Debug)]
pub struct LevelOutcome {
    pub level: usize,
    pub outcome: FeasibilityOutcome,
    pub certificate: Option<GammaCertificate>,
}

/// Decides `ρ ∈ A_n` numerically.
pub fn check_level(rho: &BipartiteState, n: usize, cfg: &FeasibilityConfig) -> Result<LevelOutcome> {
    let constraints = GammaConstraints::new(rho, n)?;
    let start = default_start(&constraints);
    let outcome = find_feasible(&constraints, &start, cfg)?;
    let certificate = match &outcome.point {
        Some(p) => Some(GammaCertificate::new(p.clone(), rho.m(), n)?),
        None => None,
    };
    Ok(LevelOutcome {
        level: n,
        outcome,
        certificate,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerdictStatus {
    CertifiedSeparable,
    /// Inconclusive: membership in the closure of the union of all levels is
    /// not ruled out.
    NotCertified,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelSummary {
    pub level: usize,
    pub status: FeasibilityStatus,
    pub stop: StopReason,
    pub gap: f64,
    pub iterations: usize,
    pub min_eigenvalue: f64,
    pub residual: f64,
}

impl LevelSummary {
    fn from_outcome(level: usize, o: &FeasibilityOutcome) -> Self {
        Self {
            level,
            status: o.status,
            stop: o.stop,
            gap: o.gap,
            iterations: o.iterations,
            min_eigenvalue: o.min_eigenvalue,
            residual: o.residual,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeparabilityVerdict {
    pub status: VerdictStatus,
    pub level: Option<usize>,
    pub certificate: Option<GammaCertificate>,
    pub levels: Vec<LevelSummary>,
    /// Final iterate of the highest level tried, when not certified.
    pub last_failed: Option<LevelOutcome>,
}

impl SeparabilityVerdict {
    pub fn per_level_gaps(&self) -> Vec<(usize, f64)> {
        self.levels.iter().map(|l| (l.level, l.gap)).collect()
    }

    pub fn is_certified(&self) -> bool {
        self.status == VerdictStatus::CertifiedSeparable
    }
}

/// Tries `n = 1..=n_max` in order and stops at the first feasible level.
pub fn check_separable(
    rho: &BipartiteState,
    n_max: usize,
    cfg: &FeasibilityConfig,
) -> Result<SeparabilityVerdict> {
    check_separable_parallel(rho, n_max, cfg, 1)
}

/// Like [`check_separable`], spreading levels over `threads` workers. The
/// verdict is the same for any thread count: the lowest feasible level wins
/// and only levels up to it are reported.
pub fn check_separable_parallel(
    rho: &BipartiteState,
    n_max: usize,
    cfg: &FeasibilityConfig,
    threads: usize,
) -> Result<SeparabilityVerdict> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let results = if threads <= 1 {
        let mut results = Vec::new();
        for n in 1..=n_max {
            let lo = check_level(rho, n, cfg)?;
            let done = lo.outcome.is_feasible();
            info!(
                "level {n}: {:?} after {} iterations, gap {:.3e}",
                lo.outcome.status, lo.outcome.iterations, lo.outcome.gap
            );
            results.push(lo);
            if done {
                break;
            }
        }
        results
    } else {
        run_levels_parallel(rho, n_max, cfg, threads)?
    };
    Ok(assemble_verdict(results))
}

fn run_levels_parallel(
    rho: &BipartiteState,
    n_max: usize,
    cfg: &FeasibilityConfig,
    threads: usize,
) -> Result<Vec<LevelOutcome>> {
    let next = AtomicUsize::new(1);
    let best = AtomicUsize::new(usize::MAX);
    let slots: Mutex<Vec<Option<Result<LevelOutcome>>>> =
        Mutex::new((0..n_max).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.min(n_max) {
            scope.spawn(|| loop {
                let n = next.fetch_add(1, Ordering::SeqCst);
                if n > n_max || n > best.load(Ordering::SeqCst) {
                    break;
                }
                let r = check_level(rho, n, cfg);
                if matches!(&r, Ok(lo) if lo.outcome.is_feasible()) {
                    best.fetch_min(n, Ordering::SeqCst);
                }
                slots.lock().expect("worker panicked")[n - 1] = Some(r);
            });
        }
    });
    let mut out = Vec::new();
    for slot in slots.into_inner().expect("worker panicked") {
        match slot {
            Some(r) => {
                let lo = r?;
                let done = lo.outcome.is_feasible();
                out.push(lo);
                if done {
                    break;
                }
            }
            None => break,
        }
    }
    Ok(out)
}

fn assemble_verdict(results: Vec<LevelOutcome>) -> SeparabilityVerdict {
    let levels = results
        .iter()
        .map(|lo| LevelSummary::from_outcome(lo.level, &lo.outcome))
        .collect();
    let mut results = results;
    let last = results.pop();
    match last {
        Some(lo) if lo.outcome.is_feasible() => SeparabilityVerdict {
            status: VerdictStatus::CertifiedSeparable,
            level: Some(lo.level),
            certificate: lo.certificate,
            levels,
            last_failed: None,
        },
        last => SeparabilityVerdict {
            status: VerdictStatus::NotCertified,
            level: None,
            certificate: None,
            levels,
            last_failed: last,
        },
    }
}
