//! JSON dataset format for atomic currents (`plurirank-current/1`).
//!
//! Complex numbers are `[re, im]` pairs and floats are written as shortest
//! round-trip decimals, so saving and loading reproduces every float exactly.

use std::path::Path;

use num_complex::Complex64 as C64;
use plurirank_core::currents::{Atom, DiscreteCurrent};
use plurirank_core::positivity::{SPTerm, SPVector};
use plurirank_core::projective::ProjPoint;
use plurirank_core::Error;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::report::write_atomic;

pub const SCHEMA: &str = "plurirank-current/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    schema: String,
    k: usize,
    p: usize,
    atoms: Vec<AtomFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomFile {
    z: Vec<[f64; 2]>,
    weight: f64,
    terms: Vec<TermFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermFile {
    lambda: f64,
    frame: Vec<Vec<[f64; 2]>>,
}

fn to_pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn from_pairs(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|[re, im]| C64::new(*re, *im)).collect()
}

fn invalid(atom: usize, message: impl Into<String>) -> AppError {
    AppError::Core(Error::Validation {
        atom: Some(atom),
        message: message.into(),
    })
}

fn with_atom(atom: usize) -> impl Fn(Error) -> AppError {
    move |e| match e {
        Error::Validation { message, .. } => invalid(atom, message),
        Error::Domain(message) => invalid(atom, message),
        other => AppError::Core(other),
    }
}

fn build(file: DatasetFile) -> AppResult<DiscreteCurrent> {
    if file.schema != SCHEMA {
        return Err(AppError::Input(format!(
            "schema is {:?}, expected {SCHEMA:?}",
            file.schema
        )));
    }
    let (k, p) = (file.k, file.p);
    let dim = k + 1;
    let mut atoms = Vec::with_capacity(file.atoms.len());
    for (i, a) in file.atoms.into_iter().enumerate() {
        if a.z.len() != dim {
            return Err(invalid(
                i,
                format!("point has {} coordinates, expected {dim}", a.z.len()),
            ));
        }
        let x = ProjPoint::from_unit(from_pairs(&a.z)).map_err(with_atom(i))?;
        let mut terms = Vec::with_capacity(a.terms.len());
        for (j, term) in a.terms.iter().enumerate() {
            if term.frame.len() != p || term.frame.iter().any(|v| v.len() != dim) {
                return Err(invalid(
                    i,
                    format!("term {j} must have {p} frame vectors of length {dim}"),
                ));
            }
            terms.push(SPTerm::new(
                term.lambda,
                term.frame.iter().map(|v| from_pairs(v)).collect(),
            ));
        }
        let t = SPVector::new(dim, p, terms).map_err(with_atom(i))?;
        atoms.push(Atom::new(x, a.weight, t).map_err(with_atom(i))?);
    }
    let current = DiscreteCurrent::new(k, p, atoms)?;
    current.check_positive_mass()?;
    Ok(current)
}

/// Parses and validates a dataset; validation errors name the atom index.
pub fn current_from_json(text: &str) -> AppResult<DiscreteCurrent> {
    let file: DatasetFile =
        serde_json::from_str(text).map_err(|e| AppError::Input(format!("malformed dataset: {e}")))?;
    build(file)
}

pub fn current_to_json(t: &DiscreteCurrent) -> String {
    let file = DatasetFile {
        schema: SCHEMA.into(),
        k: t.k(),
        p: t.p(),
        atoms: t
            .atoms()
            .iter()
            .map(|a| AtomFile {
                z: to_pairs(a.x.coords()),
                weight: a.weight,
                terms: a
                    .t
                    .terms()
                    .iter()
                    .map(|term| TermFile {
                        lambda: term.lambda,
                        frame: term.frame.iter().map(|v| to_pairs(v)).collect(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string(&file).expect("dataset serialization cannot fail");
    s.push('\n');
    s
}

pub fn load_current(path: &Path) -> AppResult<DiscreteCurrent> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    current_from_json(&text)
}

pub fn save_current(t: &DiscreteCurrent, path: &Path) -> AppResult<()> {
    write_atomic(path, current_to_json(t).as_bytes())
}
