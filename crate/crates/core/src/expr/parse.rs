use thiserror::Error;

use super::{BinaryOp, Expr, UnaryOp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" | "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownFunction { offset, .. } => *offset,
        }
    }

    /// Shifts the reported offset, for expressions embedded in larger documents.
    pub fn shifted(self, by: usize) -> Self {
        match self {
            ParseError::Syntax { offset, expected, found } => ParseError::Syntax {
                offset: offset + by,
                expected,
                found,
            },
            ParseError::UnknownFunction { name, offset } => ParseError::UnknownFunction {
                name,
                offset: offset + by,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (at, tok) = lx.next()?;
            let end = tok == Tok::End;
            out.push((at, tok));
            if end {
                return Ok(out);
            }
        }
    }

    fn peek_byte(&self, ahead: usize) -> Option<u8> {
        self.src.as_bytes().get(self.pos + ahead).copied()
    }

    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        while let Some(b) = self.peek_byte(0) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
        let start = self.pos;
        let Some(b) = self.peek_byte(0) else {
            return Ok((start, Tok::End));
        };
        let tok = match b {
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Tok::Op(b as char)
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b'0'..=b'9' | b'.' => self.number(start)?,
            b if b.is_ascii_alphabetic() || b == b'_' => {
                while matches!(self.peek_byte(0), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                Tok::Ident(self.src[start..self.pos].to_string())
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: vec!["number", "identifier", "`(`", "`-`"],
                    found: format!("`{ch}`"),
                });
            }
        };
        Ok((start, tok))
    }

    fn digits(&mut self) -> usize {
        let from = self.pos;
        while matches!(self.peek_byte(0), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.pos - from
    }

    fn number(&mut self, start: usize) -> Result<Tok, ParseError> {
        let mut n = self.digits();
        if self.peek_byte(0) == Some(b'.') {
            self.pos += 1;
            n += self.digits();
        }
        if n == 0 {
            return Err(ParseError::Syntax {
                offset: start,
                expected: vec!["digit"],
                found: "`.`".into(),
            });
        }
        if matches!(self.peek_byte(0), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek_byte(0), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                // not an exponent after all, e.g. `2e` is a number times ident
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>().map(Tok::Num).map_err(|_| ParseError::Syntax {
            offset: start,
            expected: vec!["number"],
            found: format!("`{text}`"),
        })
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn offset(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: Vec<&'static str>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset(),
            expected,
            found: self.peek().describe(),
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinaryOp::Add,
                Tok::Op('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinaryOp::Mul,
                Tok::Op('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == &Tok::Op('^') {
            self.bump();
            let exp = self.factor()?;
            return Ok(Expr::Binary(BinaryOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        if !matches!(self.peek(), Tok::Num(_) | Tok::Op('-') | Tok::LParen | Tok::Ident(_)) {
            return self.fail(vec!["number", "identifier", "`(`", "`-`"]);
        }
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Op('-') => {
                // a minus directly on a literal is part of the literal
                if let Tok::Num(v) = *self.peek() {
                    self.bump();
                    return Ok(Expr::Const(-v));
                }
                let inner = self.atom()?;
                Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)))
            }
            Tok::LParen => {
                let e = self.expr()?;
                if self.peek() != &Tok::RParen {
                    return self.fail(vec!["`)`", "operator"]);
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek() != &Tok::LParen {
                    return Ok(Expr::Var(name));
                }
                let Some(op) = UnaryOp::function(&name) else {
                    return Err(ParseError::UnknownFunction { name, offset });
                };
                self.bump();
                let arg = self.expr()?;
                if self.peek() != &Tok::RParen {
                    return self.fail(vec!["`)`", "operator"]);
                }
                self.bump();
                Ok(Expr::Unary(op, Box::new(arg)))
            }
            _ => unreachable!("atom start checked above"),
        }
    }
}

/// Parses an expression.
///
/// ```text
/// expr   := term (('+'|'-') term)*
/// term   := factor (('*'|'/') factor)*
/// factor := atom ('^' factor)?
/// atom   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' atom
/// ```
///
/// The tree is built verbatim, without constant folding, so that printing and
/// re-parsing reproduces it exactly.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser { toks, at: 0 };
    let e = p.expr()?;
    if p.peek() != &Tok::End {
        return p.fail(vec!["operator", "end of input"]);
    }
    Ok(e)
}
