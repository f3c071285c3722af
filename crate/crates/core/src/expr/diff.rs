use super::{BinaryOp, Expr, UnaryOp};

pub(super) fn derivative(e: &Expr, var: &str) -> Expr {
    if !e.depends_on(var) {
        return Expr::zero();
    }
    match e {
        Expr::Const(_) => Expr::zero(),
        Expr::Var(n) => {
            if n == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Unary(op, a) => {
            let da = derivative(a, var);
            let a = (**a).clone();
            let outer = match op {
                UnaryOp::Neg => return Expr::neg(da),
                UnaryOp::Ln => Expr::div(Expr::one(), a),
                UnaryOp::Exp => Expr::exp(a),
                UnaryOp::Sin => Expr::cos(a),
                UnaryOp::Cos => Expr::neg(Expr::sin(a)),
                UnaryOp::Sqrt => Expr::div(Expr::one(), Expr::mul(Expr::Const(2.0), Expr::sqrt(a))),
            };
            Expr::mul(outer, da)
        }
        Expr::Binary(op, a, b) => {
            let da = derivative(a, var);
            let db = derivative(b, var);
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                BinaryOp::Add => Expr::add(da, db),
                BinaryOp::Sub => Expr::sub(da, db),
                BinaryOp::Mul => Expr::add(Expr::mul(da, b), Expr::mul(a, db)),
                BinaryOp::Div => Expr::div(
                    Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a, db)),
                    Expr::pow(b, Expr::Const(2.0)),
                ),
                BinaryOp::Pow => power_rule(a, b, da, db),
            }
        }
    }
}

fn power_rule(base: Expr, exp: Expr, dbase: Expr, dexp: Expr) -> Expr {
    if dexp.is_zero() {
        // c * a^(c-1) * a'
        let lowered = Expr::sub(exp.clone(), Expr::one());
        return Expr::mul(Expr::mul(exp, Expr::pow(base, lowered)), dbase);
    }
    // a^b * (b' ln a + b a'/a)
    let whole = Expr::pow(base.clone(), exp.clone());
    let log_part = Expr::mul(dexp, Expr::ln(base.clone()));
    let base_part = Expr::div(Expr::mul(exp, dbase), base);
    Expr::mul(whole, Expr::add(log_part, base_part))
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Point};

    fn central(text: &str, var: &str, at: &Point, h: f64) -> f64 {
        let e = parse(text).unwrap();
        let x = at.get(var).unwrap();
        let hi = at.clone().with(var, x + h);
        let lo = at.clone().with(var, x - h);
        (e.evaluate(&hi).unwrap() - e.evaluate(&lo).unwrap()) / (2.0 * h)
    }

    #[test]
    fn power_rule_on_grid() {
        let d = parse("x^2").unwrap().differentiate("x");
        for i in 0..100 {
            let x = -5.0 + 10.0 * i as f64 / 99.0;
            let at = Point::new().with("x", x);
            let got = d.evaluate(&at).unwrap();
            assert!((got - 2.0 * x).abs() <= 1e-14);
            let fd = central("x^2", "x", &at, 1e-5);
            assert!((got - fd).abs() <= 1e-7 * got.abs().max(1.0));
        }
    }

    #[test]
    fn log_derivative() {
        let d = parse("ln(T)").unwrap().differentiate("T");
        for i in 0..50 {
            let t = 0.5 + 9.5 * i as f64 / 49.0;
            let got = d.evaluate(&Point::new().with("T", t)).unwrap();
            assert!((got - 1.0 / t).abs() < 1e-15);
        }
    }

    #[test]
    fn chain_rule_against_central_difference() {
        let at = Point::new().with("x", 0.3).with("y", 2.0);
        let got = parse("y*sin(x*y)").unwrap().differentiate("x").evaluate(&at).unwrap();
        let fd = central("y*sin(x*y)", "x", &at, 1e-5);
        assert!((got - fd).abs() <= 1e-7 * got.abs());
        // closed form y^2 cos(xy)
        assert!((got - 4.0 * (0.6f64).cos()).abs() < 1e-14);
    }

    #[test]
    fn variable_exponent() {
        let at = Point::new().with("x", 1.3).with("y", 0.7);
        let got = parse("x^y").unwrap().differentiate("y").evaluate(&at).unwrap();
        assert!((got - 1.3f64.powf(0.7) * 1.3f64.ln()).abs() < 1e-14);
        let got = parse("2^x").unwrap().differentiate("x").evaluate(&at).unwrap();
        assert!((got - 2f64.powf(1.3) * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn independent_subtrees_vanish() {
        let d = parse("sin(y) * 3 + z").unwrap().differentiate("x");
        assert!(d.is_zero());
    }
}
