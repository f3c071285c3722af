//! Worked physical scenarios: ideal-gas thermodynamics, the gas-dynamic
//! evolutionary relation with instability attribution, and the Poynting-vector
//! analysis of a travelling electromagnetic wave.

pub mod em;
pub mod gas;
pub mod thermo;

use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::forms::FormError;
use crate::grid::GridError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Form(#[from] FormError),
}

pub(crate) type Vec3 = [Expr; 3];

pub(crate) fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    let m = |i: usize, j: usize| Expr::mul(a[i].clone(), b[j].clone());
    [
        Expr::sub(m(1, 2), m(2, 1)),
        Expr::sub(m(2, 0), m(0, 2)),
        Expr::sub(m(0, 1), m(1, 0)),
    ]
}

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> Expr {
    Expr::sum((0..3).map(|i| Expr::mul(a[i].clone(), b[i].clone())))
}

pub(crate) fn curl(u: &Vec3, x: &[&str; 3]) -> Vec3 {
    let d = |i: usize, j: usize| u[i].differentiate(x[j]);
    [
        Expr::sub(d(2, 1), d(1, 2)),
        Expr::sub(d(0, 2), d(2, 0)),
        Expr::sub(d(1, 0), d(0, 1)),
    ]
}

pub(crate) fn grad(f: &Expr, x: &[&str; 3]) -> Vec3 {
    [f.differentiate(x[0]), f.differentiate(x[1]), f.differentiate(x[2])]
}

pub(crate) fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
