//! Two-form equation mini-DSL: `solve_linear(a, b)` and `centroid(x1, y1, x2, y2)`.
//! Each argument is itself a calculator expression.

use serde_json::{json, Value};
use thiserror::Error;

use super::calculator::{calculator_eval, CalcError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("singular equation: coefficient of x is zero")]
    SingularEquation,
    #[error(transparent)]
    Calc(#[from] CalcError),
}

pub fn solver_eval(program: &str) -> Result<Value, SolverError> {
    let program = program.trim();
    let open = program
        .find('(')
        .ok_or_else(|| SolverError::ParseError("expected `name(args)`".into()))?;
    let name = program[..open].trim();
    if !matches!(name, "solve_linear" | "centroid") {
        return Err(SolverError::ParseError(format!("unknown solver command `{name}`")));
    }
    let body = program[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| SolverError::ParseError("missing closing `)`".into()))?;
    let args = split_args(body)?
        .into_iter()
        .map(calculator_eval)
        .collect::<Result<Vec<f64>, _>>()?;

    match (name, args.as_slice()) {
        ("solve_linear", [a, b]) => {
            if *a == 0.0 {
                return Err(SolverError::SingularEquation);
            }
            // `-b / a` yields -0.0 for b == 0; normalise so the observation reads 0.
            let x = -b / a;
            Ok(json!({ "x": if x == 0.0 { 0.0 } else { x } }))
        }
        ("centroid", [x1, y1, x2, y2]) => Ok(json!({
            "cx": (x1 + x2) / 2.0,
            "cy": (y1 + y2) / 2.0,
        })),
        ("solve_linear", _) => Err(SolverError::ParseError(format!(
            "solve_linear takes 2 arguments, got {}",
            args.len()
        ))),
        ("centroid", _) => Err(SolverError::ParseError(format!(
            "centroid takes 4 arguments, got {}",
            args.len()
        ))),
        (other, _) => Err(SolverError::ParseError(format!("unknown form `{other}`"))),
    }
}

/// Splits on top-level commas so nested calls like `max(1, 2)` stay intact.
fn split_args(body: &str) -> Result<Vec<&str>, SolverError> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in body.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(SolverError::ParseError("unbalanced `)`".into()));
                }
            }
            ',' if depth == 0 => {
                out.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(SolverError::ParseError("unbalanced `(`".into()));
    }
    out.push(&body[start..]);
    if out.iter().any(|a| a.trim().is_empty()) {
        return Err(SolverError::ParseError("empty argument".into()));
    }
    Ok(out)
}
