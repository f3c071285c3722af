//! Scalar expression language used for every form coefficient, PDE and field.
//!
//! Expressions are immutable trees over named real variables. They can be
//! parsed from text, printed back (the printer emits the minimal parentheses
//! needed for `parse` to rebuild the identical tree), evaluated at a
//! [`Point`], differentiated symbolically, and compiled to a slot-indexed form
//! for tight evaluation loops.

mod compile;
mod diff;
mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compile::CompiledExpr;
pub use parse::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Ln,
    Exp,
    Sin,
    Cos,
    Sqrt,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Ln => "ln",
            UnaryOp::Exp => "exp",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Sqrt => "sqrt",
        }
    }

    /// Looks up a callable function by its surface name.
    pub fn function(name: &str) -> Option<UnaryOp> {
        match name {
            "ln" => Some(UnaryOp::Ln),
            "exp" => Some(UnaryOp::Exp),
            "sin" => Some(UnaryOp::Sin),
            "cos" => Some(UnaryOp::Cos),
            "sqrt" => Some(UnaryOp::Sqrt),
            _ => None,
        }
    }

    pub(crate) fn apply(self, x: f64) -> Result<f64, EvalError> {
        let v = match self {
            UnaryOp::Neg => -x,
            UnaryOp::Ln => {
                if x <= 0.0 {
                    return Err(EvalError::domain("ln", x));
                }
                x.ln()
            }
            UnaryOp::Exp => x.exp(),
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Sqrt => {
                if x < 0.0 {
                    return Err(EvalError::domain("sqrt", x));
                }
                x.sqrt()
            }
        };
        finite(self.name(), x, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }

    pub(crate) fn apply(self, a: f64, b: f64) -> Result<f64, EvalError> {
        let v = match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => {
                if b == 0.0 {
                    return Err(EvalError::domain("div", b));
                }
                a / b
            }
            BinaryOp::Pow => {
                if b.fract() == 0.0 {
                    if a == 0.0 && b < 0.0 {
                        return Err(EvalError::domain("pow", a));
                    }
                } else if a <= 0.0 {
                    // non-integer exponents are only defined for a positive base
                    return Err(EvalError::domain("pow", a));
                }
                a.powf(b)
            }
        };
        let operand = if self == BinaryOp::Div { b } else { a };
        finite(self.name(), operand, v)
    }

    fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
            BinaryOp::Pow => "pow",
        }
    }
}

fn finite(op: &'static str, operand: f64, v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain { op, operand })
    }
}

/// Expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain violation in {op} with operand {operand}")]
    Domain { op: &'static str, operand: f64 },
}

impl EvalError {
    fn domain(op: &'static str, operand: f64) -> Self {
        EvalError::Domain { op, operand }
    }
}

/// Variable assignment used for evaluation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(BTreeMap<String, f64>);

impl Point {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.0.insert(name.into(), value);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Values in name order, aligned with [`Point::names`].
    pub fn values(&self) -> Vec<f64> {
        self.0.values().copied().collect()
    }

    /// Bindings of `other` override those of `self`.
    pub fn merged(&self, other: &Point) -> Point {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.set(k, v);
        }
        out
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Point {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Point(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn evaluate(&self, at: &Point) -> Result<f64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(name) => at.get(name).ok_or_else(|| EvalError::Unbound(name.clone())),
            Expr::Unary(op, a) => op.apply(a.evaluate(at)?),
            Expr::Binary(op, a, b) => op.apply(a.evaluate(at)?, b.evaluate(at)?),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(n) => {
                out.insert(n.clone());
            }
            Expr::Unary(_, a) => a.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, name: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(n) => n == name,
            Expr::Unary(_, a) => a.depends_on(name),
            Expr::Binary(_, a, b) => a.depends_on(name) || b.depends_on(name),
        }
    }

    /// Replaces variables by expressions, re-folding constants on the way up.
    pub fn substitute(&self, bindings: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(n) => bindings.get(n).cloned().unwrap_or_else(|| self.clone()),
            Expr::Unary(op, a) => Expr::unary(*op, a.substitute(bindings)),
            Expr::Binary(op, a, b) => {
                Expr::binary(*op, a.substitute(bindings), b.substitute(bindings))
            }
        }
    }

    /// Binds named constants to numeric values.
    pub fn bind_constants(&self, constants: &BTreeMap<String, f64>) -> Expr {
        let bindings: BTreeMap<String, Expr> = constants
            .iter()
            .map(|(k, v)| (k.clone(), Expr::Const(*v)))
            .collect();
        self.substitute(&bindings)
    }

    pub fn rename(&self, from: &str, to: &str) -> Expr {
        let mut b = BTreeMap::new();
        b.insert(from.to_string(), Expr::var(to));
        self.substitute(&b)
    }

    pub fn differentiate(&self, var: &str) -> Expr {
        diff::derivative(self, var)
    }

    pub fn compile(&self, slots: &[String]) -> Result<CompiledExpr, EvalError> {
        CompiledExpr::new(self, slots)
    }

    // Smart constructors: fold constants and absorb 0 / 1, nothing deeper.

    pub fn unary(op: UnaryOp, a: Expr) -> Expr {
        if let Expr::Const(c) = a {
            if let Ok(v) = op.apply(c) {
                return Expr::Const(v);
            }
        }
        if op == UnaryOp::Neg {
            if let Expr::Unary(UnaryOp::Neg, inner) = a {
                return *inner;
            }
        }
        Expr::Unary(op, Box::new(a))
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
        match op {
            BinaryOp::Add => Expr::add(a, b),
            BinaryOp::Sub => Expr::sub(a, b),
            BinaryOp::Mul => Expr::mul(a, b),
            BinaryOp::Div => Expr::div(a, b),
            BinaryOp::Pow => Expr::pow(a, b),
        }
    }

    fn fold(op: BinaryOp, a: &Expr, b: &Expr) -> Option<Expr> {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) => op.apply(*x, *y).ok().map(Expr::Const),
            _ => None,
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        if let Some(c) = Expr::fold(BinaryOp::Add, &a, &b) {
            return c;
        }
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        Expr::Binary(BinaryOp::Add, Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        if let Some(c) = Expr::fold(BinaryOp::Sub, &a, &b) {
            return c;
        }
        if b.is_zero() {
            return a;
        }
        if a.is_zero() {
            return Expr::neg(b);
        }
        Expr::Binary(BinaryOp::Sub, Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        if let Some(c) = Expr::fold(BinaryOp::Mul, &a, &b) {
            return c;
        }
        if a.is_zero() || b.is_zero() {
            return Expr::zero();
        }
        if a.is_one() {
            return b;
        }
        if b.is_one() {
            return a;
        }
        Expr::Binary(BinaryOp::Mul, Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if let Some(c) = Expr::fold(BinaryOp::Div, &a, &b) {
            return c;
        }
        if a.is_zero() && !b.is_zero() {
            return Expr::zero();
        }
        if b.is_one() {
            return a;
        }
        Expr::Binary(BinaryOp::Div, Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        if let Some(c) = Expr::fold(BinaryOp::Pow, &a, &b) {
            return c;
        }
        if b.is_zero() {
            return Expr::one();
        }
        if b.is_one() {
            return a;
        }
        Expr::Binary(BinaryOp::Pow, Box::new(a), Box::new(b))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Neg, a)
    }

    pub fn ln(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Ln, a)
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Exp, a)
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Sin, a)
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Cos, a)
    }

    pub fn sqrt(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Sqrt, a)
    }

    /// Sum of a sequence, folding as it goes.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }
}

impl std::str::FromStr for Expr {
    type Err = parse::ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(self, f)
    }
}

impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

pub use parse::ParseError;

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(text: &str, at: &Point) -> Result<f64, EvalError> {
        parse(text).unwrap().evaluate(at)
    }

    #[test]
    fn evaluates_basic_examples() {
        let at = Point::new().with("x", 3.0).with("y", 4.0);
        assert_eq!(eval("x*y + 2", &at).unwrap(), 14.0);
        let at = Point::new().with("z", 1.5);
        assert!((eval("ln(exp(z))", &at).unwrap() - 1.5).abs() < 1e-15);
        let at = Point::new().with("p", 1.0).with("x", 1.0);
        assert_eq!(eval("p^2/2 + x^2/2", &at).unwrap(), 1.0);
        let at = Point::new().with("x", 4.0);
        assert_eq!(eval("sqrt(x)", &at).unwrap(), 2.0);
        let at = Point::new().with("x", 0.7);
        assert!((eval("sin(x)^2 + cos(x)^2", &at).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn domain_violations_name_the_node() {
        let zero = Point::new().with("x", 0.0);
        assert_eq!(
            eval("1/x", &zero),
            Err(EvalError::Domain { op: "div", operand: 0.0 })
        );
        let neg = Point::new().with("x", -1.0);
        assert!(matches!(eval("ln(x)", &neg), Err(EvalError::Domain { op: "ln", .. })));
        assert!(matches!(eval("sqrt(x)", &neg), Err(EvalError::Domain { op: "sqrt", .. })));
        assert!(matches!(eval("x^0.5", &neg), Err(EvalError::Domain { op: "pow", .. })));
        assert!(matches!(eval("x^-1", &zero), Err(EvalError::Domain { op: "pow", .. })));
        // integer powers of a negative base are fine
        assert_eq!(eval("x^3", &neg).unwrap(), -1.0);
    }

    #[test]
    fn unbound_variable_is_named() {
        let err = eval("x + q", &Point::new().with("x", 1.0)).unwrap_err();
        assert_eq!(err, EvalError::Unbound("q".into()));
        assert_eq!(err.to_string(), "unbound variable `q`");
    }

    #[test]
    fn smart_constructors_fold() {
        let x = Expr::var("x");
        assert_eq!(Expr::mul(Expr::zero(), x.clone()), Expr::zero());
        assert_eq!(Expr::mul(Expr::one(), x.clone()), x);
        assert_eq!(Expr::add(Expr::Const(2.0), Expr::Const(3.0)), Expr::Const(5.0));
        assert_eq!(Expr::pow(x.clone(), Expr::one()), x);
        assert_eq!(Expr::neg(Expr::neg(x.clone())), x);
        // 1/0 is left unfolded rather than turned into a non-finite constant
        assert!(matches!(
            Expr::div(Expr::one(), Expr::zero()),
            Expr::Binary(BinaryOp::Div, _, _)
        ));
    }

    #[test]
    fn bind_constants_folds_through() {
        let e = parse("R*T/V").unwrap();
        let mut c = BTreeMap::new();
        c.insert("R".to_string(), 2.0);
        let bound = e.bind_constants(&c);
        assert_eq!(bound.to_string(), "2*T/V");
        assert_eq!(bound.free_vars().len(), 2);
    }
}
