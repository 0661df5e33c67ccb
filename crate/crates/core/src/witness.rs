//! The dual side: the structured block-Toeplitz matrices `D(X₀..X_n; P, Q, R)`,
//! level-n membership of a triple `(P, Q, R)` in the witness cone `C_n`,
//! evaluation of the associated map, the sampled positivity refuter, and the
//! finite Toeplitz truncation test.
//!
//! `D` has `(n+1) x (n+1)` blocks of size `2M x 2M`:
//!
//! ```text
//! block(i, i)     = [[P,          X₀         ], [−X₀,        R]]
//! block(i+1, i)   = [[0,          Q/2 + X₁   ], [Q/2 − X₁,   0]]
//! block(i+k, i)   = [[0,          X_k        ], [−X_k,       0]]     k ≥ 2
//! block(i, i+k)   = block(i+k, i)†
//! ```
//!
//! with `X₀` skew-Hermitian and `X_{−k} = −X_k†`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::feasibility::{
    default_start, find_feasible, AffineSubspace, FeasibilityConfig, FeasibilityOutcome,
};
use crate::hierarchy::{sub, LevelOutcome, Part};
use crate::linalg::{
    hermitian_eig, pairing, psd_project, ComplexMatrix, HermitianMatrix, DEFAULT_EIG_TOL,
};
use crate::state::{BipartiteState, WitnessTriple};

/// Largest tolerated `max|X₀ + X₀†|`.
pub const SKEW_TOL: f64 = 1e-11;

/// `(X₀, X₁, …, X_n)` with `X₀` skew-Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewParams {
    x0: ComplexMatrix,
    xs: Vec<ComplexMatrix>,
}

impl SkewParams {
    /// `xs` holds `X₁..X_n`. `X₀` is stored as its exact skew part once it
    /// passes the [`SKEW_TOL`] check.
    pub fn new(x0: ComplexMatrix, xs: Vec<ComplexMatrix>) -> Result<Self> {
        let m = x0.rows();
        if !x0.is_square() {
            return Err(Error::NotSquare {
                rows: x0.rows(),
                cols: x0.cols(),
            });
        }
        for x in &xs {
            if x.rows() != m || x.cols() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: x.rows().max(x.cols()),
                });
            }
        }
        let residual = x0.skew_residual();
        if residual > SKEW_TOL {
            return Err(Error::NotSkewHermitian { residual });
        }
        Ok(Self {
            x0: x0.skew_part(),
            xs,
        })
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            x0: ComplexMatrix::zeros(m, m),
            xs: vec![ComplexMatrix::zeros(m, m); n],
        }
    }

    pub fn level(&self) -> usize {
        self.xs.len()
    }

    pub fn m(&self) -> usize {
        self.x0.rows()
    }

    /// `X_k` for `−n ≤ k ≤ n`.
    pub fn x(&self, k: isize) -> ComplexMatrix {
        match k {
            0 => self.x0.clone(),
            k if k > 0 => self.xs[k as usize - 1].clone(),
            k => -&self.xs[(-k) as usize - 1].adjoint(),
        }
    }

    /// Drops `X_n`, giving parameters for level `n − 1`.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            x0: self.x0.clone(),
            xs: self.xs[..n].to_vec(),
        }
    }
}

/// `D(X₀, …, X_n; P, Q, R)`.
pub fn build_d(params: &SkewParams, w: &WitnessTriple, n: usize) -> Result<HermitianMatrix> {
    if params.level() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: params.level(),
        });
    }
    let m = w.m();
    if params.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: params.m(),
        });
    }
    let s = 2 * m;
    let mut d = ComplexMatrix::zeros(s * (n + 1), s * (n + 1));
    let put = |d: &mut ComplexMatrix, i: usize, j: usize, part: Part, v: &ComplexMatrix| {
        let (ro, co) = match part {
            Part::A => (0, 0),
            Part::B => (0, m),
            Part::C => (m, 0),
            Part::D => (m, m),
        };
        d.set_block(i * s + ro, j * s + co, v);
    };
    let x0 = params.x(0);
    let neg_x0 = -&x0;
    for i in 0..=n {
        put(&mut d, i, i, Part::A, w.p());
        put(&mut d, i, i, Part::B, &x0);
        put(&mut d, i, i, Part::C, &neg_x0);
        put(&mut d, i, i, Part::D, w.r());
    }
    let half_q = w.q().scale(0.5);
    let half_q_adj = w.q().adjoint().scale(0.5);
    let zero = ComplexMatrix::zeros(m, m);
    for k in 1..=n {
        let xk = params.x(k as isize);
        let xmk = params.x(-(k as isize));
        let (lower_b, lower_c, upper_b, upper_c) = if k == 1 {
            (
                &half_q + &xk,
                &half_q - &xk,
                &half_q_adj + &xmk,
                &half_q_adj - &xmk,
            )
        } else {
            (xk.clone(), -&xk, xmk.clone(), -&xmk)
        };
        for i in 0..=n - k {
            put(&mut d, i + k, i, Part::B, &lower_b);
            put(&mut d, i + k, i, Part::C, &lower_c);
            put(&mut d, i, i + k, Part::B, &upper_b);
            put(&mut d, i, i + k, Part::C, &upper_c);
            for (a, b) in [(i + k, i), (i, i + k)] {
                put(&mut d, a, b, Part::A, &zero);
                put(&mut d, a, b, Part::D, &zero);
            }
        }
    }
    Ok(HermitianMatrix::from_trusted(d))
}

/// Least-squares skew parameters of a matrix with the `D` block layout.
fn fit_params(x: &ComplexMatrix, m: usize, n: usize) -> SkewParams {
    let diag_b = (0..=n)
        .map(|i| sub(x, m, i, i, Part::B))
        .fold(ComplexMatrix::zeros(m, m), |acc, b| &acc + &b);
    let x0 = diag_b.scale(1.0 / (n + 1) as f64).skew_part();
    let xs = (1..=n)
        .map(|k| {
            let total = (0..=n - k)
                .map(|i| &sub(x, m, i + k, i, Part::B) - &sub(x, m, i + k, i, Part::C))
                .fold(ComplexMatrix::zeros(m, m), |acc, v| &acc + &v);
            total.scale(0.5 / (n - k + 1) as f64)
        })
        .collect();
    SkewParams { x0, xs }
}

/// Least-squares `(P, Q, R)` of a matrix with the `D` block layout, all three
/// treated as free.
fn fit_triple(x: &ComplexMatrix, m: usize, n: usize) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let mean = |f: &dyn Fn(usize) -> ComplexMatrix, count: usize| {
        (0..count)
            .map(f)
            .fold(ComplexMatrix::zeros(m, m), |acc, v| &acc + &v)
            .scale(1.0 / count as f64)
    };
    let p = mean(&|i| sub(x, m, i, i, Part::A), n + 1);
    let r = mean(&|i| sub(x, m, i, i, Part::D), n + 1);
    let q = mean(
        &|i| &sub(x, m, i + 1, i, Part::B) + &sub(x, m, i + 1, i, Part::C),
        n,
    );
    let herm = |v: &ComplexMatrix| HermitianMatrix::symmetrize_unchecked(v).into_matrix();
    (herm(&p), q, herm(&r))
}

/// The affine set of all matrices with the `D` layout for fixed `(P, Q, R)`.
#[derive(Clone, Debug)]
pub struct WitnessStructure {
    w: WitnessTriple,
    n: usize,
}

impl WitnessStructure {
    pub fn new(w: &WitnessTriple, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("level n must be at least 1".into()));
        }
        Ok(Self { w: w.clone(), n })
    }

    pub fn params_of(&self, x: &HermitianMatrix) -> SkewParams {
        fit_params(x, self.w.m(), self.n)
    }
}

impl AffineSubspace for WitnessStructure {
    fn dimension(&self) -> usize {
        2 * self.w.m() * (self.n + 1)
    }

    fn project(&self, x: &HermitianMatrix) -> HermitianMatrix {
        build_d(&self.params_of(x), &self.w, self.n).expect("dimensions fixed at construction")
    }

    fn residual(&self, x: &HermitianMatrix) -> f64 {
        (&**x - &*self.project(x)).frobenius_norm()
    }
}

/// Skew parameters making `D(X; P, Q, R)` positive semidefinite at level n.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessCertificate {
    pub level: usize,
    pub params: SkewParams,
    pub d: HermitianMatrix,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug)]
pub struct MembershipOutcome {
    pub level: usize,
    pub outcome: FeasibilityOutcome,
    pub certificate: Option<WitnessCertificate>,
}

impl MembershipOutcome {
    pub fn is_feasible(&self) -> bool {
        self.certificate.is_some()
    }
}

/// Decides `σ ∈ C_n` numerically.
pub fn check_membership(
    w: &WitnessTriple,
    n: usize,
    cfg: &FeasibilityConfig,
) -> Result<MembershipOutcome> {
    let structure = WitnessStructure::new(w, n)?;
    let start = default_start(&structure);
    let outcome = find_feasible(&structure, &start, cfg)?;
    let certificate = match &outcome.point {
        Some(point) => {
            let params = structure.params_of(point);
            let d = build_d(&params, w, n)?;
            let min_eigenvalue = hermitian_eig(&d, DEFAULT_EIG_TOL)?.min_eigenvalue();
            (min_eigenvalue >= -cfg.tol_psd).then_some(WitnessCertificate {
                level: n,
                params,
                d,
                min_eigenvalue,
            })
        }
        None => None,
    };
    Ok(MembershipOutcome {
        level: n,
        outcome,
        certificate,
    })
}

/// `‖(r²K + rL + N) − [rI I]·[[K, L/2 + X], [L/2 + X†, N]]·[rI; I]‖_F`.
///
/// Zero up to roundoff exactly when `X` is skew-Hermitian.
pub fn quadratic_form_identity_check(
    k: &HermitianMatrix,
    l: &HermitianMatrix,
    nn: &HermitianMatrix,
    x: &ComplexMatrix,
    r: f64,
) -> Result<f64> {
    let d = k.dim();
    for (dim, found) in [(l.dim(), l.dim()), (nn.dim(), nn.dim()), (x.rows(), x.rows()), (x.cols(), x.cols())] {
        if dim != d {
            return Err(Error::DimensionMismatch { expected: d, found });
        }
    }
    let lhs = &(&k.as_matrix().scale(r * r) + &l.as_matrix().scale(r)) + nn.as_matrix();
    let half_l = l.as_matrix().scale(0.5);
    let mut middle = ComplexMatrix::zeros(2 * d, 2 * d);
    middle.set_block(0, 0, k);
    middle.set_block(0, d, &(&half_l + x));
    middle.set_block(d, 0, &(&half_l + &x.adjoint()));
    middle.set_block(d, d, nn);
    let mut stack = ComplexMatrix::zeros(2 * d, d);
    stack.set_block(0, 0, &ComplexMatrix::identity(d).scale(r));
    stack.set_block(d, 0, &ComplexMatrix::identity(d));
    let rhs = stack.adjoint().matmul(&middle)?.matmul(&stack)?;
    Ok((&lhs - &rhs).frobenius_norm())
}

/// `Φ(G) = g₁₁P + g₁₂Q + g₂₁Q† + g₂₂R`.
pub fn apply_map(w: &WitnessTriple, g: &ComplexMatrix) -> Result<ComplexMatrix> {
    if g.rows() != 2 || g.cols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: g.rows().max(g.cols()),
        });
    }
    let t = &w.p().scale_complex(g[(0, 0)]) + &w.q().scale_complex(g[(0, 1)]);
    let t = &t + &w.q().adjoint().scale_complex(g[(1, 0)]);
    Ok(&t + &w.r().scale_complex(g[(1, 1)]))
}

/// `|z|²P + zQ + z̄Q† + R`.
pub fn quadratic_value(w: &WitnessTriple, z: Complex64) -> HermitianMatrix {
    let t = &w.p().scale(z.norm_sqr()) + &w.q().scale_complex(z);
    let t = &t + &w.q().adjoint().scale_complex(z.conj());
    HermitianMatrix::symmetrize_unchecked(&(&t + w.r()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub n_u: usize,
    pub n_theta: usize,
    /// Pattern-search refinement around the best grid point.
    pub refine: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_u: 64,
            n_theta: 128,
            refine: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridReport {
    /// Smallest eigenvalue of the quadratic over all sampled `z`.
    pub min_value: f64,
    pub argmin: Complex64,
    /// `|z| → ∞` limit check.
    pub min_eig_p: f64,
    /// `z = 0` check.
    pub min_eig_r: f64,
}

impl GridReport {
    /// A negative sample certifies that the map is not positive.
    pub fn refutes(&self, tol: f64) -> bool {
        self.min_value < -tol || self.min_eig_p < -tol
    }
}

fn z_of(u: f64, theta: f64) -> Complex64 {
    Complex64::from_polar(u / (1.0 - u), theta)
}

/// Samples the smallest eigenvalue of `|z|²P + zQ + z̄Q† + R` on
/// `z = u/(1 − u)·e^{iθ}`, `u ∈ [0, 1)`, `θ ∈ [0, 2π)`.
///
/// A negative result proves the map is not positive; a nonnegative one is
/// only evidence.
pub fn grid_oracle(w: &WitnessTriple, grid: &GridConfig) -> Result<GridReport> {
    if grid.n_u == 0 || grid.n_theta == 0 {
        return Err(Error::InvalidParameter("grid sizes must be at least 1".into()));
    }
    let eval = |u: f64, theta: f64| -> Result<f64> {
        Ok(hermitian_eig(&quadratic_value(w, z_of(u, theta)), DEFAULT_EIG_TOL)?.min_eigenvalue())
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for iu in 0..grid.n_u {
        let u = iu as f64 / grid.n_u as f64;
        // u = 0 is the single point z = 0.
        let n_theta = if iu == 0 { 1 } else { grid.n_theta };
        for it in 0..n_theta {
            let theta = 2.0 * PI * it as f64 / grid.n_theta as f64;
            let v = eval(u, theta)?;
            if v < best.0 {
                best = (v, u, theta);
            }
        }
    }

    if grid.refine {
        let (mut v, mut u, mut theta) = best;
        let mut du = 1.0 / grid.n_u as f64;
        let mut dt = 2.0 * PI / grid.n_theta as f64;
        let u_max = 1.0 - 1e-9;
        for _ in 0..400 {
            if du < 1e-15 && dt < 1e-15 {
                break;
            }
            let mut moved = false;
            for (cu, ct) in [(u + du, theta), (u - du, theta), (u, theta + dt), (u, theta - dt)] {
                let cu = cu.clamp(0.0, u_max);
                let cv = eval(cu, ct)?;
                if cv < v {
                    (v, u, theta) = (cv, cu, ct);
                    moved = true;
                    break;
                }
            }
            if !moved {
                du *= 0.5;
                dt *= 0.5;
            }
        }
        best = (v, u, theta);
    }

    let min_eig = |m: &ComplexMatrix| -> Result<f64> {
        Ok(hermitian_eig(&HermitianMatrix::symmetrize_unchecked(m), DEFAULT_EIG_TOL)?.min_eigenvalue())
    };
    Ok(GridReport {
        min_value: best.0,
        argmin: z_of(best.1, best.2),
        min_eig_p: min_eig(w.p())?,
        min_eig_r: min_eig(w.r())?,
    })
}

/// Exact positivity test for `M = 1`: `p ≥ 0`, `r ≥ 0` and `|q|² ≤ p·r`.
pub fn scalar_exact(p: f64, q: Complex64, r: f64) -> bool {
    p >= 0.0 && r >= 0.0 && q.norm_sqr() <= p * r
}

/// Minimum eigenvalue of the `m`-block truncation of the Toeplitz matrix with
/// `T` on the diagonal, `S` below it and `S†` above it.
pub fn toeplitz_truncation_check(s: &ComplexMatrix, t: &HermitianMatrix, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("truncation size must be at least 1".into()));
    }
    let d = t.dim();
    if s.rows() != d || s.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: s.rows().max(s.cols()),
        });
    }
    let s_adj = s.adjoint();
    let mut big = ComplexMatrix::zeros(m * d, m * d);
    for i in 0..m {
        big.set_block(i * d, i * d, t);
        if i + 1 < m {
            big.set_block((i + 1) * d, i * d, s);
            big.set_block(i * d, (i + 1) * d, &s_adj);
        }
    }
    let h = HermitianMatrix::new(big)?;
    Ok(hermitian_eig(&h, DEFAULT_EIG_TOL)?.min_eigenvalue())
}

#[derive(Clone, Debug)]
pub struct CandidateWitness {
    pub level: usize,
    /// Normalized to unit Frobenius norm of `σ`.
    pub witness: WitnessTriple,
    /// `pairing(ρ, σ)`; negative values point to entanglement.
    pub pairing: f64,
}

/// Reads a candidate witness off a failed level-n run.
///
/// The direction `P_psd(X) − X` from the final iterate `X` is fitted to the
/// `D` layout with `(P, Q, R)` left free. Since `tr(Γ·D(P, Q', R))` pairs `B`
/// with `Q'` rather than `Q'†`, the witness reported is `(P, Q'†, R)`, which
/// lies in `C_n` whenever `(P, Q', R)` does. A negative pairing is heuristic
/// evidence only.
pub fn extract_candidate_witness(
    rho: &BipartiteState,
    failed: &LevelOutcome,
) -> Result<CandidateWitness> {
    if failed.outcome.is_feasible() {
        return Err(Error::Precondition(
            "level is feasible; there is no failed run to extract a witness from".into(),
        ));
    }
    let (m, n) = (rho.m(), failed.level);
    let x = &failed.outcome.final_iterate;
    if x.dim() != 2 * m * (n + 1) {
        return Err(Error::DimensionMismatch {
            expected: 2 * m * (n + 1),
            found: x.dim(),
        });
    }
    let direction = &*psd_project(x)? - &**x;
    let (p, q_fit, r) = fit_triple(&direction, m, n);
    let raw = WitnessTriple::new(p, q_fit.adjoint(), r)?;
    let norm = raw.sigma().frobenius_norm();
    if norm <= 1e-14 * x.frobenius_norm().max(1.0) {
        return Err(Error::DegenerateDirection);
    }
    let witness = raw.scaled(1.0 / norm);
    let pairing = pairing(rho.rho(), &witness.sigma())?;
    Ok(CandidateWitness {
        level: n,
        witness,
        pairing,
    })
}
