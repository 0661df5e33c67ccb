//! Numerical test for whether an affine subspace of Hermitian matrices meets
//! the positive semidefinite cone.
//!
//! The engine alternates between the exact Frobenius projection onto the
//! subspace (supplied by the caller) and the eigenvalue-clipping projection
//! onto the PSD cone. A point is reported only after it has been re-checked
//! with a fresh eigendecomposition and a fresh residual evaluation.

use log::{debug, trace};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, hermitian_eig_seeded, ComplexMatrix, EigenDecomposition, HermitianMatrix,
    DEFAULT_EIG_TOL,
};

/// Stall window length and minimum absolute gap improvement across it.
pub const STALL_WINDOW: usize = 500;
pub const STALL_IMPROVEMENT: f64 = 1e-14;

/// An affine subspace of `dimension x dimension` Hermitian matrices.
///
/// Implementations are stateless: `project` and `residual` depend only on
/// their argument.
pub trait AffineSubspace: Send + Sync {
    fn dimension(&self) -> usize;

    /// Frobenius-nearest point of the subspace.
    fn project(&self, x: &HermitianMatrix) -> HermitianMatrix;

    /// Norm of the constraint violation of `x`; zero exactly on the subspace.
    fn residual(&self, x: &HermitianMatrix) -> f64;
}

impl<S: AffineSubspace + ?Sized> AffineSubspace for &S {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn project(&self, x: &HermitianMatrix) -> HermitianMatrix {
        (**self).project(x)
    }
    fn residual(&self, x: &HermitianMatrix) -> f64 {
        (**self).residual(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionMode {
    Alternating,
    Dykstra,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityConfig {
    pub max_iterations: usize,
    pub tol_residual: f64,
    pub tol_psd: f64,
    pub mode: ProjectionMode,
    /// Relative eigenvalue floor for the first pass; zero disables it.
    pub margin: f64,
    /// Keep the per-iteration PSD defect in [`FeasibilityOutcome::history`].
    pub record_history: bool,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            tol_residual: 1e-8,
            tol_psd: 1e-9,
            mode: ProjectionMode::Alternating,
            margin: 1e-2,
            record_history: false,
        }
    }
}

impl FeasibilityConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |t: f64| t > 0.0 && t.is_finite();
        if !ok(self.tol_residual) || !ok(self.tol_psd) {
            return Err(Error::InvalidParameter(
                "feasibility tolerances must be positive".into(),
            ));
        }
        if !(self.margin >= 0.0 && self.margin < 1.0) {
            return Err(Error::InvalidParameter(
                "margin must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeasibilityStatus {
    Feasible,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Both defects fell below tolerance and re-verification passed.
    Converged,
    /// The gap stopped improving; typical of an empty intersection.
    Stalled,
    IterationCap,
}

#[derive(Clone, Debug)]
pub struct FeasibilityOutcome {
    pub status: FeasibilityStatus,
    /// Verified point of the intersection, present when `Feasible`.
    pub point: Option<HermitianMatrix>,
    /// Final PSD defect `‖X − P_psd(X)‖_F` of the affine iterate.
    pub gap: f64,
    pub iterations: usize,
    pub stop: StopReason,
    /// Last affine iterate (equals `point` when feasible).
    pub final_iterate: HermitianMatrix,
    /// Minimum eigenvalue and subspace residual of `final_iterate`, from a
    /// fresh evaluation.
    pub min_eigenvalue: f64,
    pub residual: f64,
    /// PSD defect per iteration when `record_history` is set.
    pub history: Vec<f64>,
}

impl FeasibilityOutcome {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }
}

/// Starting point `project_affine(0)`.
pub fn default_start<S: AffineSubspace>(s: &S) -> HermitianMatrix {
    s.project(&HermitianMatrix::zeros(s.dimension()))
}

/// Searches for a point of `s ∩ PSD` starting from `start`.
///
/// With a positive [`FeasibilityConfig::margin`] the first half of the
/// iteration budget projects onto `{X ⪰ δI}` with
/// `δ = margin·|trace(X₀)|/dimension`, which reaches strictly feasible points
/// in finitely many steps when they exist. If that pass stalls or runs out,
/// plain clipping continues from its last iterate with the remaining budget.
pub fn find_feasible<S: AffineSubspace>(
    s: &S,
    start: &HermitianMatrix,
    cfg: &FeasibilityConfig,
) -> Result<FeasibilityOutcome> {
    cfg.validate()?;
    if start.dim() != s.dimension() {
        return Err(Error::DimensionMismatch {
            expected: s.dimension(),
            found: start.dim(),
        });
    }
    let x0 = s.project(start);
    let delta = cfg.margin * x0.real_trace().abs() / x0.dim().max(1) as f64;
    if delta <= 0.0 {
        return run_pass(s, x0, cfg, 0.0, 0, cfg.max_iterations);
    }
    let first = run_pass(s, x0, cfg, delta, 0, cfg.max_iterations / 2)?;
    if first.is_feasible() {
        return Ok(first);
    }
    debug!("margin pass ended without a point; continuing without margin");
    let used = first.iterations;
    let mut second = run_pass(
        s,
        first.final_iterate,
        cfg,
        0.0,
        used,
        cfg.max_iterations - used,
    )?;
    if cfg.record_history {
        let mut h = first.history;
        h.append(&mut second.history);
        second.history = h;
    }
    Ok(second)
}

fn run_pass<S: AffineSubspace>(
    s: &S,
    mut x: HermitianMatrix,
    cfg: &FeasibilityConfig,
    delta: f64,
    offset: usize,
    budget: usize,
) -> Result<FeasibilityOutcome> {
    let mut correction: Option<ComplexMatrix> = None;
    let mut basis: Option<ComplexMatrix> = None;
    let mut defects: Vec<f64> = Vec::new();
    let mut history = Vec::new();
    let mut gap = f64::INFINITY;

    for k in 0..budget {
        if !x.is_finite() {
            return Err(Error::NonFinite {
                context: "feasibility iterate",
            });
        }
        let eig = decompose(&x, basis.as_ref())?;
        let lmin = eig.min_eigenvalue();
        gap = defect(&eig, 0.0);
        if cfg.record_history {
            history.push(gap);
        }

        if lmin >= -cfg.tol_psd {
            let residual = s.residual(&x);
            if residual <= cfg.tol_residual {
                if let Some(outcome) = verify(s, &x, cfg, offset + k, gap, &history)? {
                    debug!("feasible after {} iterations (gap {gap:.3e})", offset + k);
                    return Ok(outcome);
                }
            }
        }

        let d = if delta > 0.0 { defect(&eig, delta) } else { gap };
        if k >= STALL_WINDOW && defects[k - STALL_WINDOW] - d < STALL_IMPROVEMENT {
            debug!("stalled after {} iterations at gap {gap:.3e}", offset + k);
            return undetermined(s, x, gap, offset + k, StopReason::Stalled, history);
        }
        defects.push(d);
        if k % 1000 == 0 {
            trace!("iteration {k}: gap {gap:.6e}, min eigenvalue {lmin:.3e}");
        }

        let y = match cfg.mode {
            ProjectionMode::Alternating => {
                basis = Some(eig.eigenvectors.clone());
                eig.recompose_with(|l| l.max(delta))
            }
            ProjectionMode::Dykstra => {
                let inc = correction.get_or_insert_with(|| ComplexMatrix::zeros(x.dim(), x.dim()));
                let shifted = HermitianMatrix::symmetrized(&(&*x + &*inc))?;
                let eig_shift = decompose(&shifted, Some(&eig.eigenvectors))?;
                let y = eig_shift.recompose_with(|l| l.max(delta));
                *inc = &*shifted - &*y;
                basis = Some(eig_shift.eigenvectors);
                y
            }
        };
        x = s.project(&y);
    }

    debug!(
        "iteration cap {} reached at gap {gap:.3e}",
        cfg.max_iterations
    );
    undetermined(
        s,
        x,
        gap,
        offset + budget,
        StopReason::IterationCap,
        history,
    )
}

fn decompose(x: &HermitianMatrix, basis: Option<&ComplexMatrix>) -> Result<EigenDecomposition> {
    match basis {
        Some(b) => hermitian_eig_seeded(x, b, DEFAULT_EIG_TOL),
        None => hermitian_eig(x, DEFAULT_EIG_TOL),
    }
}

/// `sqrt(Σ min(λ − δ, 0)²)`.
fn defect(eig: &EigenDecomposition, delta: f64) -> f64 {
    eig.eigenvalues
        .iter()
        .filter(|&&l| l < delta)
        .map(|l| (l - delta) * (l - delta))
        .sum::<f64>()
        .sqrt()
}

fn verify<S: AffineSubspace>(
    s: &S,
    x: &HermitianMatrix,
    cfg: &FeasibilityConfig,
    iterations: usize,
    gap: f64,
    history: &[f64],
) -> Result<Option<FeasibilityOutcome>> {
    let min_eigenvalue = hermitian_eig(x, DEFAULT_EIG_TOL)?.min_eigenvalue();
    let residual = s.residual(x);
    if min_eigenvalue < -cfg.tol_psd || residual > cfg.tol_residual {
        return Ok(None);
    }
    Ok(Some(FeasibilityOutcome {
        status: FeasibilityStatus::Feasible,
        point: Some(x.clone()),
        gap,
        iterations,
        stop: StopReason::Converged,
        final_iterate: x.clone(),
        min_eigenvalue,
        residual,
        history: history.to_vec(),
    }))
}

fn undetermined<S: AffineSubspace>(
    s: &S,
    x: HermitianMatrix,
    gap: f64,
    iterations: usize,
    stop: StopReason,
    history: Vec<f64>,
) -> Result<FeasibilityOutcome> {
    let min_eigenvalue = hermitian_eig(&x, DEFAULT_EIG_TOL)?.min_eigenvalue();
    let residual = s.residual(&x);
    Ok(FeasibilityOutcome {
        status: FeasibilityStatus::Undetermined,
        point: None,
        gap,
        iterations,
        stop,
        final_iterate: x,
        min_eigenvalue,
        residual,
        history,
    })
}
