//! Seeded generators shared by the property suites and the acceptance run.
#![allow(dead_code)]

use formflow_core::expr::{BinaryOp, Expr, UnaryOp};
use formflow_core::forms::{Connection, DifferentialForm, MultiIndex};
use formflow_core::Point;
use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const COORDS: [&str; 4] = ["x", "y", "z", "w"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn leaf(rng: &mut ChaCha8Rng, vars: &[&str]) -> Expr {
    if rng.gen_bool(0.4) {
        // two decimals keep printed constants short
        Expr::Const((rng.gen_range(-3.0_f64..3.0) * 100.0).round() / 100.0)
    } else {
        Expr::Var(vars.choose(rng).unwrap().to_string())
    }
}

fn raw_unary(op: UnaryOp, a: Expr) -> Expr {
    Expr::Unary(op, Box::new(a))
}

fn raw_binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
    Expr::Binary(op, Box::new(a), Box::new(b))
}

/// Any expression of depth ≤ `depth`, including partial functions
/// (ln, sqrt, division, real powers). Trees are built raw so the
/// differentiator sees unsimplified input.
pub fn any_expr(rng: &mut ChaCha8Rng, vars: &[&str], depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return leaf(rng, vars);
    }
    let d = depth - 1;
    match rng.gen_range(0..11) {
        0 => raw_unary(UnaryOp::Neg, any_expr(rng, vars, d)),
        1 => raw_unary(UnaryOp::Ln, any_expr(rng, vars, d)),
        2 => raw_unary(UnaryOp::Exp, any_expr(rng, vars, d)),
        3 => raw_unary(UnaryOp::Sin, any_expr(rng, vars, d)),
        4 => raw_unary(UnaryOp::Cos, any_expr(rng, vars, d)),
        5 => raw_unary(UnaryOp::Sqrt, any_expr(rng, vars, d)),
        6 => raw_binary(BinaryOp::Add, any_expr(rng, vars, d), any_expr(rng, vars, d)),
        7 => raw_binary(BinaryOp::Sub, any_expr(rng, vars, d), any_expr(rng, vars, d)),
        8 => raw_binary(BinaryOp::Mul, any_expr(rng, vars, d), any_expr(rng, vars, d)),
        9 => raw_binary(BinaryOp::Div, any_expr(rng, vars, d), any_expr(rng, vars, d)),
        _ => {
            let exponent = if rng.gen_bool(0.7) {
                Expr::Const(f64::from(rng.gen_range(0..5)))
            } else {
                any_expr(rng, vars, d)
            };
            raw_binary(BinaryOp::Pow, any_expr(rng, vars, d), exponent)
        }
    }
}

/// Entire functions only, so every coefficient evaluates everywhere.
pub fn smooth_expr(rng: &mut ChaCha8Rng, vars: &[&str], depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return leaf(rng, vars);
    }
    let d = depth - 1;
    match rng.gen_range(0..7) {
        0 => raw_unary(UnaryOp::Sin, smooth_expr(rng, vars, d)),
        1 => raw_unary(UnaryOp::Cos, smooth_expr(rng, vars, d)),
        // exp of a sine stays bounded however deep the tree
        2 => raw_unary(UnaryOp::Exp, raw_unary(UnaryOp::Sin, smooth_expr(rng, vars, d))),
        3 => raw_binary(BinaryOp::Add, smooth_expr(rng, vars, d), smooth_expr(rng, vars, d)),
        4 => raw_binary(BinaryOp::Sub, smooth_expr(rng, vars, d), smooth_expr(rng, vars, d)),
        5 => raw_binary(BinaryOp::Mul, smooth_expr(rng, vars, d), smooth_expr(rng, vars, d)),
        _ => raw_binary(BinaryOp::Pow, smooth_expr(rng, vars, d), Expr::Const(f64::from(rng.gen_range(0..3)))),
    }
}

fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    if p == 0 {
        return vec![vec![]];
    }
    (0..n)
        .flat_map(|first| {
            subsets(n, p - 1)
                .into_iter()
                .filter(move |rest| rest.first().map_or(true, |&r| r > first))
                .map(move |mut rest| {
                    rest.insert(0, first);
                    rest
                })
        })
        .collect()
}

/// A p-form on `COORDS` with random smooth coefficients; each slot is
/// empty with probability 1/4.
pub fn random_form(rng: &mut ChaCha8Rng, p: usize) -> DifferentialForm {
    let mut form = DifferentialForm::zero(&COORDS, p).unwrap();
    for idx in subsets(COORDS.len(), p) {
        if p > 0 && rng.gen_bool(0.25) {
            continue;
        }
        form.add_term(&idx, smooth_expr(rng, &COORDS, 3)).unwrap();
    }
    form
}

/// A connection with a few random torsion components.
pub fn random_connection(rng: &mut ChaCha8Rng) -> Connection {
    let n = COORDS.len();
    let mut conn = Connection::flat(n);
    for _ in 0..rng.gen_range(1..=4) {
        let (s, a, b) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
        conn.set(s, a, b, smooth_expr(rng, &COORDS, 2)).unwrap();
    }
    conn
}

pub fn random_points(rng: &mut ChaCha8Rng, vars: &[&str], count: usize, lo: f64, hi: f64) -> Vec<Point> {
    (0..count)
        .map(|_| {
            let mut p = Point::new();
            for v in vars {
                p.set(*v, rng.gen_range(lo..hi));
            }
            p
        })
        .collect()
}

/// |a − b| scaled down for large magnitudes.
pub fn scaled_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Largest coefficient mismatch between two forms over `points`, each
/// difference scaled as in [`scaled_diff`].
pub fn form_residual(a: &DifferentialForm, b: &DifferentialForm, points: &[Point]) -> f64 {
    let mut worst = 0.0_f64;
    for pt in points {
        let va = a.evaluate(pt).expect("smooth coefficients evaluate");
        let vb = b.evaluate(pt).expect("smooth coefficients evaluate");
        let keys: BTreeSet<&MultiIndex> = va.keys().chain(vb.keys()).collect();
        for k in keys {
            let x = va.get(k).copied().unwrap_or(0.0);
            let y = vb.get(k).copied().unwrap_or(0.0);
            worst = worst.max(scaled_diff(x, y));
        }
    }
    worst
}
