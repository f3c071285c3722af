use super::{BinaryOp, EvalError, Expr, UnaryOp};

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Slot(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

/// An expression with its variables resolved to positions in a value slice.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    root: Node,
}

impl CompiledExpr {
    pub(super) fn new(e: &Expr, slots: &[String]) -> Result<Self, EvalError> {
        Ok(Self { root: lower(e, slots)? })
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        run(&self.root, values)
    }
}

fn lower(e: &Expr, slots: &[String]) -> Result<Node, EvalError> {
    Ok(match e {
        Expr::Const(c) => Node::Const(*c),
        Expr::Var(n) => Node::Slot(
            slots
                .iter()
                .position(|s| s == n)
                .ok_or_else(|| EvalError::Unbound(n.clone()))?,
        ),
        Expr::Unary(op, a) => Node::Unary(*op, Box::new(lower(a, slots)?)),
        Expr::Binary(op, a, b) => {
            Node::Binary(*op, Box::new(lower(a, slots)?), Box::new(lower(b, slots)?))
        }
    })
}

fn run(n: &Node, v: &[f64]) -> Result<f64, EvalError> {
    match n {
        Node::Const(c) => Ok(*c),
        Node::Slot(i) => Ok(v[*i]),
        Node::Unary(op, a) => op.apply(run(a, v)?),
        Node::Binary(op, a, b) => op.apply(run(a, v)?, run(b, v)?),
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, EvalError, Point};

    #[test]
    fn agrees_with_tree_evaluation() {
        let e = parse("x*exp(y) - sqrt(x + 2)/y").unwrap();
        let slots = vec!["x".to_string(), "y".to_string()];
        let c = e.compile(&slots).unwrap();
        let at = Point::new().with("x", 0.4).with("y", -1.2);
        assert_eq!(c.eval(&[0.4, -1.2]).unwrap(), e.evaluate(&at).unwrap());
    }

    #[test]
    fn unbound_at_compile_time() {
        let e = parse("x + q").unwrap();
        let err = e.compile(&["x".to_string()]).unwrap_err();
        assert_eq!(err, EvalError::Unbound("q".into()));
    }
}
