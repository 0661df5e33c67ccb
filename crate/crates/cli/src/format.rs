//! Matrix files: JSON documents holding `M`, a `kind` tag and complex
//! matrices as rows of `[re, im]` pairs.
//!
//! ```text
//! { "M": 1, "kind": "witness",
//!   "P": [[[1.0, 0.0]]], "Q": [[[2.0, 0.0]]], "R": [[[1.0, 0.0]]] }
//! ```
//!
//! Numbers are written with 17 significant digits so that a write/read cycle
//! reproduces every entry bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use sep2m_core::hierarchy::GammaCertificate;
use sep2m_core::linalg::{ComplexMatrix, HermitianMatrix};
use sep2m_core::state::{BipartiteState, WitnessTriple};
use sep2m_core::Complex64;

use crate::CliError;

type Rows = Vec<Vec<[f64; 2]>>;

#[derive(Deserialize)]
struct RawFile {
    #[serde(rename = "M")]
    m: usize,
    kind: String,
    rho: Option<Rows>,
    #[serde(rename = "P")]
    p: Option<Rows>,
    #[serde(rename = "Q")]
    q: Option<Rows>,
    #[serde(rename = "R")]
    r: Option<Rows>,
    gamma: Option<Rows>,
    n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MatrixFile {
    State(BipartiteState),
    Witness(WitnessTriple),
    Certificate(GammaCertificate),
}

impl MatrixFile {
    pub fn kind(&self) -> &'static str {
        match self {
            MatrixFile::State(_) => "state",
            MatrixFile::Witness(_) => "witness",
            MatrixFile::Certificate(_) => "certificate",
        }
    }
}

fn matrix(name: &str, rows: Option<Rows>, dim: usize) -> Result<ComplexMatrix, CliError> {
    let rows = rows.ok_or_else(|| CliError::Input(format!("missing matrix \"{name}\"")))?;
    if rows.len() != dim {
        return Err(CliError::Input(format!(
            "matrix \"{name}\" has {} rows, expected {dim}",
            rows.len()
        )));
    }
    let mut data = Vec::with_capacity(dim * dim);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(CliError::Input(format!(
                "row {i} of \"{name}\" has {} entries, expected {dim}",
                row.len()
            )));
        }
        for [re, im] in row {
            if !re.is_finite() || !im.is_finite() {
                return Err(CliError::Input(format!("non-finite entry in \"{name}\"")));
            }
            data.push(Complex64::new(*re, *im));
        }
    }
    ComplexMatrix::new(dim, dim, data).map_err(|e| CliError::Input(format!("\"{name}\": {e}")))
}

pub fn parse(text: &str) -> Result<MatrixFile, CliError> {
    let raw: RawFile =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed matrix file: {e}")))?;
    if raw.m == 0 {
        return Err(CliError::Input("M must be at least 1".into()));
    }
    let m = raw.m;
    let bad = |e: sep2m_core::Error| CliError::Input(e.to_string());
    match raw.kind.as_str() {
        "state" => {
            let rho = HermitianMatrix::new(matrix("rho", raw.rho, 2 * m)?).map_err(bad)?;
            Ok(MatrixFile::State(BipartiteState::new(rho, m).map_err(bad)?))
        }
        "witness" => {
            let p = matrix("P", raw.p, m)?;
            let q = matrix("Q", raw.q, m)?;
            let r = matrix("R", raw.r, m)?;
            Ok(MatrixFile::Witness(WitnessTriple::new(p, q, r).map_err(bad)?))
        }
        "certificate" => {
            let n = raw
                .n
                .ok_or_else(|| CliError::Input("certificate needs a level \"n\"".into()))?;
            let gamma = HermitianMatrix::new(matrix("gamma", raw.gamma, 2 * m * (n + 1))?).map_err(bad)?;
            Ok(MatrixFile::Certificate(GammaCertificate::new(gamma, m, n).map_err(bad)?))
        }
        other => Err(CliError::Input(format!("unknown kind \"{other}\""))),
    }
}

pub fn read(path: &Path) -> Result<MatrixFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn read_state(path: &Path) -> Result<BipartiteState, CliError> {
    match read(path)? {
        MatrixFile::State(s) => Ok(s),
        other => Err(CliError::Input(format!(
            "{} holds a {}, expected a state",
            path.display(),
            other.kind()
        ))),
    }
}

pub fn read_witness(path: &Path) -> Result<WitnessTriple, CliError> {
    match read(path)? {
        MatrixFile::Witness(w) => Ok(w),
        other => Err(CliError::Input(format!(
            "{} holds a {}, expected a witness",
            path.display(),
            other.kind()
        ))),
    }
}

fn write_matrix(out: &mut String, name: &str, a: &ComplexMatrix) {
    let _ = writeln!(out, "  \"{name}\": [");
    for i in 0..a.rows() {
        let row: Vec<String> = (0..a.cols())
            .map(|j| format!("[{:.16e}, {:.16e}]", a[(i, j)].re, a[(i, j)].im))
            .collect();
        let sep = if i + 1 < a.rows() { "," } else { "" };
        let _ = writeln!(out, "    [{}]{sep}", row.join(", "));
    }
    out.push_str("  ]");
}

/// Serializes `file`; `extra` holds additional top-level fields, already
/// JSON-encoded, written before the matrices.
pub fn render(file: &MatrixFile, extra: &[(&str, String)]) -> String {
    let mut out = String::from("{\n");
    let m = match file {
        MatrixFile::State(s) => s.m(),
        MatrixFile::Witness(w) => w.m(),
        MatrixFile::Certificate(c) => c.m(),
    };
    let _ = writeln!(out, "  \"M\": {m},");
    let _ = writeln!(out, "  \"kind\": \"{}\",", file.kind());
    for (k, v) in extra {
        let _ = writeln!(out, "  \"{k}\": {v},");
    }
    match file {
        MatrixFile::State(s) => write_matrix(&mut out, "rho", s.rho()),
        MatrixFile::Witness(w) => {
            write_matrix(&mut out, "P", w.p());
            out.push_str(",\n");
            write_matrix(&mut out, "Q", w.q());
            out.push_str(",\n");
            write_matrix(&mut out, "R", w.r());
        }
        MatrixFile::Certificate(c) => {
            let _ = writeln!(out, "  \"n\": {},", c.level());
            write_matrix(&mut out, "gamma", c.gamma());
        }
    }
    out.push_str("\n}\n");
    out
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}
