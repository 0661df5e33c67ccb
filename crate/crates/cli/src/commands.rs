use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sep2m_core::feasibility::{FeasibilityConfig, StopReason};
use sep2m_core::hierarchy::{check_separable_parallel, verify_certificate};
use sep2m_core::linalg::pairing;
use sep2m_core::state::{
    assemble_separable, mix_with_identity, named_state, BipartiteState, NamedState, ProductEnsemble,
};
use sep2m_core::witness::{check_membership, extract_candidate_witness, grid_oracle, GridConfig};
use sep2m_core::Complex64;

use crate::format::{self, MatrixFile};
use crate::report::{CertificateInfo, GridInfo, LevelReport, RunReport};
use crate::{
    CheckArgs, CliError, GenArgs, GenKind, PairArgs, PptArgs, WitnessArgs, EXIT_MIXED, EXIT_NEGATIVE,
    EXIT_OK,
};

fn display(p: &Path) -> String {
    p.display().to_string()
}

pub fn check(a: &CheckArgs) -> Result<i32, CliError> {
    let start = Instant::now();
    let rho = format::read_state(&a.input)?;
    let cfg = FeasibilityConfig {
        max_iterations: a.max_iter,
        tol_residual: a.tol_residual,
        tol_psd: a.tol_psd,
        ..FeasibilityConfig::default()
    };
    cfg.validate()?;
    if a.levels == 0 || a.threads == 0 {
        return Err(CliError::Input("--levels and --threads must be at least 1".into()));
    }
    let verdict = check_separable_parallel(&rho, a.levels, &cfg, a.threads)?;
    let mut report = RunReport::new(
        "check",
        vec![display(&a.input)],
        json!({
            "levels": a.levels,
            "tol_residual": a.tol_residual,
            "tol_psd": a.tol_psd,
            "max_iter": a.max_iter,
            "threads": a.threads,
            "margin": cfg.margin,
            "mode": format!("{:?}", cfg.mode),
        }),
    );
    report.levels = verdict.levels.iter().map(LevelReport::from).collect();

    let mut certified = false;
    if let (Some(cert), Some(n)) = (&verdict.certificate, verdict.level) {
        let check = verify_certificate(&rho, cert, a.tol_residual, a.tol_psd)?;
        if check.passed {
            certified = true;
            let text = format::render(&MatrixFile::Certificate(cert.clone()), &[]);
            if let Some(path) = &a.emit_certificate {
                format::write(path, &text)?;
            }
            report.level = Some(n);
            report.certificate = Some(CertificateInfo::new(
                &text,
                &check,
                a.emit_certificate.as_deref().map(display),
            ));
            report.verdict = format!("certified at n={n}");
        } else {
            warn!("level {n} certificate failed re-verification; treating as not certified");
        }
    }
    if !certified {
        report.verdict = format!("not certified up to n={} (inconclusive)", a.levels);
        if let Some(path) = &a.emit_witness {
            match verdict.last_failed.as_ref().map(|f| extract_candidate_witness(&rho, f)) {
                Some(Ok(c)) => {
                    let extra = [("level", c.level.to_string()), ("pairing", format!("{:.16e}", c.pairing))];
                    format::write(path, &format::render(&MatrixFile::Witness(c.witness), &extra))?;
                    info!("candidate witness at n={} pairs to {:.6e}", c.level, c.pairing);
                }
                Some(Err(e)) => warn!("no candidate witness: {e}"),
                None => warn!("no failed level to extract a witness from"),
            }
        }
    }
    if certified && a.emit_witness.is_some() {
        warn!("state is certified; --emit-witness ignored");
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    report.print(a.json);
    Ok(if certified { EXIT_OK } else { EXIT_NEGATIVE })
}

pub fn ppt(a: &PptArgs) -> Result<i32, CliError> {
    let start = Instant::now();
    let rho = format::read_state(&a.input)?;
    if !(a.tol >= 0.0 && a.tol.is_finite()) {
        return Err(CliError::Input("--tol must be nonnegative".into()));
    }
    let value = rho.ppt_min_eigenvalue()?;
    let positive = value >= -a.tol;
    let mut report = RunReport::new("ppt", vec![display(&a.input)], json!({ "tol": a.tol }));
    report.value = Some(value);
    report.verdict = if positive { "PPT" } else { "NPT (entangled)" }.into();
    report.wall_time_s = start.elapsed().as_secs_f64();
    report.print(a.json);
    Ok(if positive { EXIT_OK } else { EXIT_NEGATIVE })
}

fn parse_grid(s: &str) -> Result<GridConfig, CliError> {
    let bad = || CliError::Input(format!("--grid expects two positive integers `u,theta`, got {s:?}"));
    let (u, t) = s.split_once(',').ok_or_else(bad)?;
    let n_u: usize = u.trim().parse().map_err(|_| bad())?;
    let n_theta: usize = t.trim().parse().map_err(|_| bad())?;
    if n_u == 0 || n_theta == 0 {
        return Err(bad());
    }
    Ok(GridConfig { n_u, n_theta, refine: true })
}

pub fn witness(a: &WitnessArgs) -> Result<i32, CliError> {
    let start = Instant::now();
    let w = format::read_witness(&a.input)?;
    let grid = parse_grid(&a.grid)?;
    if a.levels == 0 {
        return Err(CliError::Input("--levels must be at least 1".into()));
    }
    let cfg = FeasibilityConfig { max_iterations: a.max_iter, ..FeasibilityConfig::default() };
    let g = grid_oracle(&w, &grid)?;
    let tol = 1e-9 * w.sigma().frobenius_norm().max(1.0);
    let grid_refutes = g.refutes(tol);

    let mut levels = Vec::new();
    let mut all_member = true;
    let mut stalled = false;
    // The sets are nested, so the first rejected level settles the rest.
    for n in 1..=a.levels {
        let m = check_membership(&w, n, &cfg)?;
        let o = &m.outcome;
        levels.push(LevelReport::new(n, o.status, o.stop, o.gap, o.residual, o.min_eigenvalue, o.iterations));
        if !m.is_feasible() {
            all_member = false;
            stalled = o.stop == StopReason::Stalled;
            break;
        }
    }

    let mut report = RunReport::new(
        "witness",
        vec![display(&a.input)],
        json!({
            "levels": a.levels,
            "grid": [grid.n_u, grid.n_theta],
            "grid_tol": tol,
            "max_iter": a.max_iter,
            "tol_residual": cfg.tol_residual,
            "tol_psd": cfg.tol_psd,
        }),
    );
    report.grid = Some(GridInfo {
        n_u: grid.n_u,
        n_theta: grid.n_theta,
        min_value: g.min_value,
        argmin: [g.argmin.re, g.argmin.im],
        min_eig_p: g.min_eig_p,
        min_eig_r: g.min_eig_r,
    });
    report.level = levels.iter().filter(|l| l.status == "feasible").map(|l| l.level).max();
    report.levels = levels;
    let code = if grid_refutes || stalled {
        report.verdict = if grid_refutes { "refuted (negative grid value)" } else { "refuted (level rejected)" }.into();
        EXIT_NEGATIVE
    } else if all_member {
        report.verdict = format!("member at all levels up to n={}", a.levels);
        EXIT_OK
    } else {
        report.verdict = "inconclusive".into();
        EXIT_MIXED
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    report.print(a.json);
    Ok(code)
}

fn parse_vector(name: &str, s: &str) -> Result<Vec<Complex64>, CliError> {
    let bad = || CliError::Input(format!("--{name} expects `re,im;re,im;...`, got {s:?}"));
    s.split(';')
        .map(|pair| {
            let (re, im) = pair.split_once(',').ok_or_else(bad)?;
            let re: f64 = re.trim().parse().map_err(|_| bad())?;
            let im: f64 = im.trim().parse().map_err(|_| bad())?;
            if !re.is_finite() || !im.is_finite() {
                return Err(bad());
            }
            Ok(Complex64::new(re, im))
        })
        .collect()
}

/// Builds the state for `gen`; returns the seed when randomness was used.
pub fn generate(a: &GenArgs) -> Result<(BipartiteState, Option<u64>), CliError> {
    let need_m2 = |what: &str| {
        if a.m != 2 {
            Err(CliError::Input(format!("{what} is defined for M = 2 only")))
        } else {
            Ok(())
        }
    };
    let (rho, seed) = match a.kind {
        GenKind::Bell => {
            need_m2("bell")?;
            (named_state(&NamedState::Bell)?, None)
        }
        GenKind::Werner => {
            need_m2("werner")?;
            let p = a.p.ok_or_else(|| CliError::Input("werner needs --p".into()))?;
            (named_state(&NamedState::Werner { p })?, None)
        }
        GenKind::MaxMixed => (named_state(&NamedState::MaxMixed { m: a.m })?, None),
        GenKind::Product => {
            let x = parse_vector("x", a.x.as_deref().ok_or_else(|| CliError::Input("product needs --x".into()))?)?;
            let y = parse_vector("y", a.y.as_deref().ok_or_else(|| CliError::Input("product needs --y".into()))?)?;
            if x.len() != 2 {
                return Err(CliError::Input(format!("--x must have 2 entries, got {}", x.len())));
            }
            (named_state(&NamedState::Product { x, y })?, None)
        }
        GenKind::RandomSeparable => {
            if a.m == 0 {
                return Err(CliError::Input("M must be at least 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let terms = match a.terms {
                Some(0) => return Err(CliError::Input("--terms must be at least 1".into())),
                Some(t) => t,
                None => rng.random_range(1..=8),
            };
            let rho = assemble_separable(&ProductEnsemble::random(&mut rng, a.m, terms)?)?;
            let tr = rho.trace();
            (rho.scaled(1.0 / tr), Some(a.seed))
        }
    };
    let rho = match a.mix {
        Some(eps) => mix_with_identity(&rho, eps)?,
        None => rho,
    };
    Ok((rho, seed))
}

pub fn gen(a: &GenArgs) -> Result<i32, CliError> {
    let (rho, seed) = generate(a)?;
    let extra: Vec<(&str, String)> = seed.map(|s| ("seed", s.to_string())).into_iter().collect();
    let text = format::render(&MatrixFile::State(rho), &extra);
    match &a.out {
        Some(path) => format::write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

pub fn pair(a: &PairArgs) -> Result<i32, CliError> {
    let start = Instant::now();
    let rho = format::read_state(&a.state)?;
    let w = format::read_witness(&a.witness)?;
    if rho.m() != w.m() {
        return Err(CliError::Input(format!(
            "state has M = {} but witness has M = {}",
            rho.m(),
            w.m()
        )));
    }
    let value = pairing(rho.rho(), &w.sigma())?;
    let mut report = RunReport::new("pair", vec![display(&a.state), display(&a.witness)], json!({}));
    report.value = Some(value);
    report.verdict = if value < 0.0 { "negative pairing" } else { "nonnegative pairing" }.into();
    report.wall_time_s = start.elapsed().as_secs_f64();
    report.print(a.json);
    Ok(EXIT_OK)
}
