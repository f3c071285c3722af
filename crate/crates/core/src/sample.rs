//! Batch evaluation of expression lists over point sets.

use crate::expr::{CompiledExpr, EvalError, Expr, Point};
use crate::grid::scan;

/// Per-point outcome: the values, or the domain violation that excluded the point.
pub type PointValues = Result<Vec<f64>, EvalError>;

/// Evaluates every expression at every point.
///
/// Domain violations are reported per point; an unbound variable is a hard
/// error since it would fail at every point.
pub fn evaluate_all(exprs: &[Expr], points: &[Point]) -> Result<Vec<PointValues>, EvalError> {
    let Some(first) = points.first() else {
        return Ok(Vec::new());
    };
    let slots: Vec<String> = first.names().map(str::to_string).collect();
    let compiled: Vec<CompiledExpr> = exprs
        .iter()
        .map(|e| e.compile(&slots))
        .collect::<Result<_, _>>()?;
    let uniform = points
        .iter()
        .all(|p| p.len() == slots.len() && p.names().zip(&slots).all(|(a, b)| a == b));

    let out = if uniform {
        scan(points, |p| {
            let v = p.values();
            compiled.iter().map(|c| c.eval(&v)).collect::<Result<Vec<_>, _>>()
        })
    } else {
        scan(points, |p| exprs.iter().map(|e| e.evaluate(p)).collect::<Result<Vec<_>, _>>())
    };
    if let Some(Err(EvalError::Unbound(n))) = out.iter().find(|r| matches!(r, Err(EvalError::Unbound(_)))) {
        return Err(EvalError::Unbound(n.clone()));
    }
    Ok(out)
}

/// Running maximum of |value| that keeps the first point reaching it.
#[derive(Debug, Clone, Default)]
pub struct MaxTracker {
    pub max: f64,
    pub at: Option<usize>,
}

impl MaxTracker {
    pub fn observe(&mut self, index: usize, value: f64) {
        let v = value.abs();
        if self.at.is_none() || v > self.max {
            self.max = v;
            self.at = Some(index);
        }
    }
}
