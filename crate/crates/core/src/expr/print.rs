use std::fmt;

use super::{BinaryOp, Expr, UnaryOp};

// Binding strength of what a node prints as. Atoms include calls, variables,
// literals (negative ones too, since `-2` lexes as one atom) and negation.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const POWER: u8 = 3;
const ATOM: u8 = 4;

fn strength(e: &Expr) -> u8 {
    match e {
        Expr::Const(_) | Expr::Var(_) | Expr::Unary(..) => ATOM,
        Expr::Binary(op, ..) => match op {
            BinaryOp::Add | BinaryOp::Sub => SUM,
            BinaryOp::Mul | BinaryOp::Div => PRODUCT,
            BinaryOp::Pow => POWER,
        },
    }
}

fn child(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if strength(e) >= min {
        write_expr(e, f)
    } else {
        f.write_str("(")?;
        write_expr(e, f)?;
        f.write_str(")")
    }
}

pub(super) fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(c) => write!(f, "{c}"),
        Expr::Var(n) => f.write_str(n),
        Expr::Unary(UnaryOp::Neg, a) => {
            f.write_str("-")?;
            match **a {
                // `-2` would re-parse as a literal, keep the negation visible
                Expr::Const(_) => {
                    f.write_str("(")?;
                    write_expr(a, f)?;
                    f.write_str(")")
                }
                _ => child(a, ATOM, f),
            }
        }
        Expr::Unary(op, a) => {
            write!(f, "{}(", op.name())?;
            write_expr(a, f)?;
            f.write_str(")")
        }
        Expr::Binary(op, a, b) => {
            let s = strength(e);
            let (left_min, right_min) = match op {
                BinaryOp::Pow => (ATOM, POWER),
                _ => (s, s + 1),
            };
            child(a, left_min, f)?;
            match op {
                BinaryOp::Add | BinaryOp::Sub => write!(f, " {} ", op.symbol())?,
                _ => write!(f, "{}", op.symbol())?,
            }
            child(b, right_min, f)
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    #[test]
    fn minimal_parentheses() {
        for (src, printed) in [
            ("1/T", "1/T"),
            ("(a + b) * c", "(a + b)*c"),
            ("a - (b - c)", "a - (b - c)"),
            ("(a - b) - c", "a - b - c"),
            ("(2^3)^2", "(2^3)^2"),
            ("2^3^2", "2^3^2"),
            ("-(x + 1)", "-(x + 1)"),
            ("-x^2", "-x^2"),
            ("-(x^2)", "-(x^2)"),
            ("-(2)", "-(2)"),
            ("x^-2", "x^-2"),
            ("ln(x*y)", "ln(x*y)"),
        ] {
            let e = parse(src).unwrap();
            assert_eq!(e.to_string(), printed, "{src}");
            assert_eq!(parse(printed).unwrap(), e, "{src}");
        }
    }
}
