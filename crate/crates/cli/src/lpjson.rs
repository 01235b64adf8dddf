//! JSON linear program files.
//!
//! ```json
//! { "m": 2, "n": 1, "A": [[0, 0, 1.0], [1, 0, 1.0]], "b": [1.0],
//!   "c": [1.0, 2.0], "l": [0.0, null], "u": [1.0, 1.0], "x0": [0.5, 0.5] }
//! ```
//!
//! `A` lists `[row, column, value]` triplets of the `m × n` matrix whose
//! transpose forms the equality constraints. A `null` bound is infinite.

use crate::CliError;
use ipm_core::barrier::Bound;
use ipm_core::linalg::SparseMat;
use ipm_core::pathfollow::BoxedLP;
use ipm_core::Error;
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LpFile {
    m: usize,
    n: usize,
    #[serde(rename = "A")]
    a: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    c: Vec<f64>,
    l: Vec<Option<f64>>,
    u: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x0: Option<Vec<f64>>,
}

fn to_bound(v: Option<f64>) -> Bound {
    v.map_or(Bound::Infinite, Bound::Finite)
}

fn from_bound(b: Bound) -> Option<f64> {
    match b {
        Bound::Finite(v) => Some(v),
        Bound::Infinite => None,
    }
}

pub fn parse_lp_json(text: &str) -> Result<(BoxedLP, Option<Vec<f64>>), CliError> {
    let file: LpFile = serde_json::from_str(text).map_err(|e| CliError::Parse { line: e.line(), msg: e.to_string() })?;
    let (m, n) = (file.m, file.n);
    let lengths = [("b", file.b.len(), n), ("c", file.c.len(), m), ("l", file.l.len(), m), ("u", file.u.len(), m)];
    for (name, got, want) in lengths {
        if got != want {
            return Err(CliError::ShapeMismatch(format!("{name} has length {got}, expected {want}")));
        }
    }
    if let Some(x0) = &file.x0 {
        if x0.len() != m {
            return Err(CliError::ShapeMismatch(format!("x0 has length {}, expected {m}", x0.len())));
        }
    }
    if let Some(&(i, j, _)) = file.a.iter().find(|&&(i, j, _)| i >= m || j >= n) {
        return Err(CliError::ShapeMismatch(format!("entry ({i}, {j}) outside the {m}x{n} matrix")));
    }
    let a = SparseMat::from_triplets(m, n, &file.a).map_err(CliError::Invalid)?;
    let lower = file.l.into_iter().map(to_bound).collect();
    let upper = file.u.into_iter().map(to_bound).collect();
    let lp = BoxedLP::new(a, file.b, file.c, lower, upper).map_err(|e| match e {
        Error::InvalidShape(msg) => CliError::ShapeMismatch(msg),
        e => CliError::Invalid(e),
    })?;
    Ok((lp, file.x0))
}

pub fn emit_lp_json(lp: &BoxedLP, x0: Option<&[f64]>) -> String {
    let file = LpFile {
        m: lp.a.rows(),
        n: lp.a.cols(),
        a: lp.a.triplets(),
        b: lp.b.clone(),
        c: lp.c.clone(),
        l: lp.lower.iter().copied().map(from_bound).collect(),
        u: lp.upper.iter().copied().map(from_bound).collect(),
        x0: x0.map(<[f64]>::to_vec),
    };
    serde_json::to_string_pretty(&file).expect("finite LP data serializes")
}
