//! Text input for forms, relations and first-order equations.
//!
//! ```text
//! form 1 on (x, y): y*dx + 0*dy
//!
//! relation "first law" on (T, V) {
//!     psi: unknown
//!     omega: c_v*dT + (R*T/V)*dV
//!     connection: zero
//!     constants { R: 1; c_v: 2.5 }
//!     grid: T=1:10:20, V=0.5:5:20
//! }
//!
//! hj on (x) {
//!     E: p^2/2
//!     init { x: a; p: a; u: a^2/2 }
//!     bundle { from: -1; to: 1; count: 9 }
//!     step: 0.001
//!     steps: 1000
//! }
//! ```
//!
//! Entries end at `;`, a newline or the closing brace. `#` starts a comment.
//! Inside a form body `d<coord>` is a basis 1-form and `^` between forms is
//! the wedge product. A `pde` block whose `F` mentions `t` or `p_t` gets `t`
//! prepended to its coordinates when it was not declared.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::characteristics::{momentum_name, CharacteristicError, FirstOrderPde, HamiltonJacobi, InitialStrip};
use crate::expr::{parse, BinaryOp, Expr, ParseError, UnaryOp};
use crate::forms::{Connection, DifferentialForm, FormError};
use crate::grid::{GridError, GridSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("{message} at offset {offset}")]
    Syntax { offset: usize, message: String },
    #[error("in expression at offset {offset}: {source}")]
    Expr { offset: usize, source: ParseError },
    #[error("{message} at offset {offset}")]
    Semantic { offset: usize, message: String },
}

impl DslError {
    pub fn offset(&self) -> usize {
        match self {
            DslError::Syntax { offset, .. } | DslError::Semantic { offset, .. } => *offset,
            DslError::Expr { offset, source } => offset + source.offset(),
        }
    }

    /// 1-based line and column of the error in `text`.
    pub fn location(&self, text: &str) -> (usize, usize) {
        let at = self.offset().min(text.len());
        let before = &text[..at];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, col)
    }

    fn syntax(offset: usize, message: impl Into<String>) -> Self {
        DslError::Syntax { offset, message: message.into() }
    }

    fn semantic(offset: usize, message: impl Into<String>) -> Self {
        DslError::Semantic { offset, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Text(String, usize),
    Block(Vec<Entry>, usize),
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    key: String,
    offset: usize,
    value: Value,
}

struct Scanner<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_comment(&mut self) {
        if self.peek() == Some('#') {
            while let Some(c) = self.peek() {
                if c == '\n' {
                    break;
                }
                self.bump();
            }
        }
    }

    /// Skips blanks and comments; newlines too when `newlines`.
    fn skip(&mut self, newlines: bool) {
        loop {
            self.skip_comment();
            match self.peek() {
                Some(c) if c == '\n' && !newlines => return,
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                _ => return,
            }
        }
    }

    fn skip_separators(&mut self) {
        loop {
            self.skip(true);
            if self.peek() == Some(';') {
                self.bump();
            } else {
                return;
            }
        }
    }

    fn expect(&mut self, c: char) -> Result<(), DslError> {
        self.skip(true);
        if self.peek() == Some(c) {
            self.bump();
            Ok(())
        } else {
            Err(DslError::syntax(self.pos, format!("expected `{c}`, found {}", self.found())))
        }
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(c) => format!("`{c}`"),
            None => "end of input".into(),
        }
    }

    fn ident(&mut self) -> Result<(String, usize), DslError> {
        self.skip(true);
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                self.bump();
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(DslError::syntax(start, format!("expected a name, found {}", self.found())));
        }
        Ok((self.text[start..self.pos].to_string(), start))
    }

    fn string(&mut self) -> Result<String, DslError> {
        self.expect('"')?;
        let start = self.pos;
        while let Some(c) = self.bump() {
            if c == '"' {
                return Ok(self.text[start..self.pos - 1].to_string());
            }
        }
        Err(DslError::syntax(start, "unterminated string"))
    }

    fn coords(&mut self) -> Result<Vec<String>, DslError> {
        let (kw, at) = self.ident()?;
        if kw != "on" {
            return Err(DslError::syntax(at, format!("expected `on`, found `{kw}`")));
        }
        self.expect('(')?;
        let mut out = Vec::new();
        loop {
            let (name, at) = self.ident()?;
            if out.contains(&name) {
                return Err(DslError::semantic(at, format!("coordinate `{name}` declared twice")));
            }
            out.push(name);
            self.skip(true);
            match self.bump() {
                Some(',') => continue,
                Some(')') => return Ok(out),
                _ => return Err(DslError::syntax(self.pos.saturating_sub(1), "expected `,` or `)`")),
            }
        }
    }

    /// Raw text up to `;`, a newline or an unbalanced `}`.
    fn text_value(&mut self) -> Result<(String, usize), DslError> {
        self.skip(false);
        let start = self.pos;
        let mut depth = 0usize;
        while let Some(c) = self.peek() {
            match c {
                '(' => depth += 1,
                ')' => depth = depth.saturating_sub(1),
                ';' | '\n' | '#' if depth == 0 => break,
                '}' if depth == 0 => break,
                _ => {}
            }
            self.bump();
        }
        let raw = &self.text[start..self.pos];
        let trimmed = raw.trim_end();
        if trimmed.is_empty() {
            return Err(DslError::syntax(start, "expected a value"));
        }
        Ok((trimmed.to_string(), start))
    }

    fn block(&mut self) -> Result<(Vec<Entry>, usize), DslError> {
        self.skip(true);
        let open = self.pos;
        self.expect('{')?;
        let mut entries = Vec::new();
        loop {
            self.skip_separators();
            match self.peek() {
                Some('}') => {
                    self.bump();
                    return Ok((entries, open));
                }
                None => return Err(DslError::syntax(self.pos, "unclosed `{`")),
                _ => {}
            }
            let key_start = self.pos;
            while let Some(c) = self.peek() {
                if c == ':' || c == '{' || c == '\n' || c == ';' || c == '}' {
                    break;
                }
                self.bump();
            }
            let key = self.text[key_start..self.pos].trim().to_string();
            if key.is_empty() {
                return Err(DslError::syntax(key_start, format!("expected an entry name, found {}", self.found())));
            }
            match self.peek() {
                Some(':') => {
                    self.bump();
                    self.skip(false);
                    let value = if self.peek() == Some('{') {
                        let (b, at) = self.block()?;
                        Value::Block(b, at)
                    } else {
                        let (t, at) = self.text_value()?;
                        Value::Text(t, at)
                    };
                    entries.push(Entry { key, offset: key_start, value });
                }
                Some('{') => {
                    let (b, at) = self.block()?;
                    entries.push(Entry { key, offset: key_start, value: Value::Block(b, at) });
                }
                _ => return Err(DslError::syntax(self.pos, format!("expected `:` or `{{` after `{key}`"))),
            }
        }
    }
}

fn expr_at(text: &str, offset: usize) -> Result<Expr, DslError> {
    parse(text).map_err(|source| DslError::Expr { offset, source })
}

fn number_at(text: &str, offset: usize) -> Result<f64, DslError> {
    let e = expr_at(text, offset)?;
    e.evaluate(&Default::default())
        .map_err(|err| DslError::semantic(offset, format!("expected a number: {err}")))
}

fn count_at(text: &str, offset: usize) -> Result<usize, DslError> {
    text.trim()
        .parse()
        .map_err(|_| DslError::semantic(offset, format!("expected a non-negative integer, found `{text}`")))
}

/// One parsed item of a document.
#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Form(DifferentialForm),
    Relation(RelationSpec),
    Characteristics(CharacteristicsSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationSpec {
    pub label: String,
    pub coords: Vec<String>,
    pub psi: Option<Expr>,
    pub omega: DifferentialForm,
    pub connection: Connection,
    pub constants: BTreeMap<String, f64>,
    pub grid: Option<GridSpec>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Equation {
    Pde(FirstOrderPde),
    HamiltonJacobi(HamiltonJacobi),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleSpec {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicsSpec {
    pub equation: Equation,
    pub constants: BTreeMap<String, f64>,
    pub init: Option<InitialStrip>,
    pub bundle: Option<BundleSpec>,
    pub step: f64,
    pub steps: usize,
    pub ambient: usize,
    pub caustic_tol: f64,
}

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_STEPS: usize = 1000;

/// Parses a whole document.
pub fn parse_document(text: &str) -> Result<Vec<Item>, DslError> {
    let mut sc = Scanner { text, pos: 0 };
    let mut items = Vec::new();
    loop {
        sc.skip_separators();
        if sc.peek().is_none() {
            return Ok(items);
        }
        let (kw, at) = sc.ident()?;
        let item = match kw.as_str() {
            "form" => {
                sc.skip(true);
                let deg_at = sc.pos;
                let (deg, _) = sc.ident()?;
                let degree = count_at(&deg, deg_at)?;
                let coords = sc.coords()?;
                sc.expect(':')?;
                let (body, body_at) = sc.text_value()?;
                let form = parse_form(&body, body_at, &coords)?;
                if form.degree() != degree {
                    return Err(DslError::semantic(body_at, format!("declared degree {degree}, body has degree {}", form.degree())));
                }
                if let Some(v) = form.terms().find_map(|(_, c)| unbound(c, &coords)) {
                    return Err(DslError::semantic(body_at, format!("form uses unbound name `{v}`")));
                }
                Item::Form(form)
            }
            "relation" => {
                let label = sc.string()?;
                let coords = sc.coords()?;
                let (entries, _) = sc.block()?;
                Item::Relation(relation(label, coords, &entries)?)
            }
            "pde" | "hj" => {
                let coords = sc.coords()?;
                let (entries, open) = sc.block()?;
                Item::Characteristics(characteristics(kw == "hj", coords, &entries, open)?)
            }
            other => return Err(DslError::syntax(at, format!("expected `form`, `relation`, `pde` or `hj`, found `{other}`"))),
        };
        items.push(item);
    }
}

/// Parses a document that must hold exactly one item.
pub fn parse_single(text: &str) -> Result<Item, DslError> {
    let mut items = parse_document(text)?;
    match items.len() {
        1 => Ok(items.remove(0)),
        0 => Err(DslError::syntax(0, "empty input")),
        _ => Err(DslError::semantic(0, "expected a single block")),
    }
}

fn constants_of(entries: &[Entry]) -> Result<BTreeMap<String, f64>, DslError> {
    let mut out = BTreeMap::new();
    for e in entries.iter().filter(|e| e.key == "constants") {
        let Value::Block(items, _) = &e.value else {
            return Err(DslError::semantic(e.offset, "`constants` takes a `{ name: value }` block"));
        };
        for c in items {
            let Value::Text(t, at) = &c.value else {
                return Err(DslError::semantic(c.offset, "constant values are numbers"));
            };
            out.insert(c.key.clone(), number_at(t, *at)?);
        }
    }
    Ok(out)
}

fn check_keys(entries: &[Entry], allowed: &[&str]) -> Result<(), DslError> {
    let mut seen = Vec::new();
    for e in entries {
        if !allowed.contains(&e.key.as_str()) {
            return Err(DslError::semantic(e.offset, format!("unexpected entry `{}`", e.key)));
        }
        if seen.contains(&e.key) {
            return Err(DslError::semantic(e.offset, format!("duplicate entry `{}`", e.key)));
        }
        seen.push(e.key.clone());
    }
    Ok(())
}

fn find<'e>(entries: &'e [Entry], key: &str) -> Option<&'e Entry> {
    entries.iter().find(|e| e.key == key)
}

fn text<'e>(entries: &'e [Entry], key: &str) -> Result<Option<(&'e str, usize)>, DslError> {
    match find(entries, key) {
        None => Ok(None),
        Some(Entry { value: Value::Text(t, at), .. }) => Ok(Some((t, *at))),
        Some(e) => Err(DslError::semantic(e.offset, format!("`{key}` takes a value, not a block"))),
    }
}

fn block<'e>(entries: &'e [Entry], key: &str) -> Result<Option<&'e [Entry]>, DslError> {
    match find(entries, key) {
        None => Ok(None),
        Some(Entry { value: Value::Block(b, _), .. }) => Ok(Some(b)),
        Some(e) => Err(DslError::semantic(e.offset, format!("`{key}` takes a block"))),
    }
}

fn unbound(e: &Expr, coords: &[String]) -> Option<String> {
    e.free_vars().into_iter().find(|v| !coords.contains(v))
}

fn relation(label: String, coords: Vec<String>, entries: &[Entry]) -> Result<RelationSpec, DslError> {
    check_keys(entries, &["psi", "omega", "connection", "constants", "grid", "tol"])?;
    let constants = constants_of(entries)?;
    let (omega_text, omega_at) = text(entries, "omega")?
        .ok_or_else(|| DslError::semantic(0, format!("relation \"{label}\" needs `omega`")))?;
    let omega = parse_form(omega_text, omega_at, &coords)?.map_coefficients(|c| c.bind_constants(&constants));
    if let Some(v) = omega.terms().find_map(|(_, c)| unbound(c, &coords)) {
        return Err(DslError::semantic(omega_at, format!("`omega` uses unbound name `{v}`")));
    }
    let psi = match text(entries, "psi")? {
        None | Some(("unknown", _)) => None,
        Some((t, at)) => {
            let psi = expr_at(t, at)?.bind_constants(&constants);
            if let Some(v) = unbound(&psi, &coords) {
                return Err(DslError::semantic(at, format!("`psi` uses unbound name `{v}`")));
            }
            Some(psi)
        }
    };
    let mut connection = Connection::flat(coords.len());
    match find(entries, "connection") {
        None => {}
        Some(Entry { value: Value::Text(t, at), .. }) => {
            if t != "zero" {
                return Err(DslError::semantic(*at, "connection is `zero` or a block of `σ,α,β: expr` entries"));
            }
        }
        Some(Entry { value: Value::Block(items, _), .. }) => {
            for c in items {
                let idx: Vec<usize> = c
                    .key
                    .split(',')
                    .map(|n| {
                        coords
                            .iter()
                            .position(|x| x == n.trim())
                            .ok_or_else(|| DslError::semantic(c.offset, format!("`{}` is not a coordinate", n.trim())))
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() != 3 {
                    return Err(DslError::semantic(c.offset, "torsion keys name three coordinates `σ,α,β`"));
                }
                let Value::Text(t, at) = &c.value else {
                    return Err(DslError::semantic(c.offset, "torsion components are expressions"));
                };
                let value = expr_at(t, *at)?.bind_constants(&constants);
                if let Some(v) = unbound(&value, &coords) {
                    return Err(DslError::semantic(*at, format!("torsion component uses unbound name `{v}`")));
                }
                connection
                    .set(idx[0], idx[1], idx[2], value)
                    .map_err(|e| DslError::semantic(c.offset, e.to_string()))?;
            }
        }
    }
    let grid = match text(entries, "grid")? {
        None => None,
        Some((t, at)) => Some(GridSpec::parse(t).map_err(|e: GridError| DslError::semantic(at, e.to_string()))?),
    };
    let tol = text(entries, "tol")?.map(|(t, at)| number_at(t, at)).transpose()?;
    Ok(RelationSpec { label, coords, psi, omega, connection, constants, grid, tol })
}

fn characteristics(hj: bool, mut coords: Vec<String>, entries: &[Entry], open: usize) -> Result<CharacteristicsSpec, DslError> {
    let key = if hj { "E" } else { "F" };
    check_keys(entries, &[key, "constants", "init", "bundle", "step", "steps", "ambient", "caustic_tol"])?;
    let constants = constants_of(entries)?;
    let (body, body_at) = text(entries, key)?
        .ok_or_else(|| DslError::semantic(open, format!("block needs `{key}`")))?;
    let f = expr_at(body, body_at)?.bind_constants(&constants);
    let semantic = |e: CharacteristicError| DslError::semantic(body_at, e.to_string());
    let equation = if hj {
        Equation::HamiltonJacobi(HamiltonJacobi::new(coords, f).map_err(semantic)?)
    } else {
        if !coords.iter().any(|c| c == "t") && (f.depends_on("t") || f.depends_on("p_t")) {
            coords.insert(0, "t".into());
        }
        Equation::Pde(FirstOrderPde::new(coords, f).map_err(semantic)?)
    };
    let init = match block(entries, "init")? {
        None => None,
        Some(items) => {
            let mut strip = InitialStrip::new("a");
            for c in items {
                let Value::Text(t, at) = &c.value else {
                    return Err(DslError::semantic(c.offset, "initial values are expressions in `a`"));
                };
                let e = expr_at(t, *at)?.bind_constants(&constants);
                if let Some(v) = e.free_vars().into_iter().find(|v| v != "a") {
                    return Err(DslError::semantic(*at, format!("initial value uses unbound name `{v}`")));
                }
                strip = strip.with(c.key.clone(), e);
            }
            Some(strip)
        }
    };
    let bundle = match block(entries, "bundle")? {
        None => None,
        Some(items) => {
            check_keys(items, &["from", "to", "count"])?;
            let need = |k: &str| {
                text(items, k)?.ok_or_else(|| DslError::semantic(open, format!("bundle needs `{k}`")))
            };
            let (from, from_at) = need("from")?;
            let (to, to_at) = need("to")?;
            let (count, count_at_) = need("count")?;
            Some(BundleSpec {
                from: number_at(from, from_at)?,
                to: number_at(to, to_at)?,
                count: count_at(count, count_at_)?,
            })
        }
    };
    let step = text(entries, "step")?.map(|(t, at)| number_at(t, at)).transpose()?.unwrap_or(DEFAULT_STEP);
    let steps = text(entries, "steps")?.map(|(t, at)| count_at(t, at)).transpose()?.unwrap_or(DEFAULT_STEPS);
    let ambient = text(entries, "ambient")?.map(|(t, at)| count_at(t, at)).transpose()?.unwrap_or(5);
    let caustic_tol = text(entries, "caustic_tol")?.map(|(t, at)| number_at(t, at)).transpose()?.unwrap_or(1e-9);
    Ok(CharacteristicsSpec { equation, constants, init, bundle, step, steps, ambient, caustic_tol })
}

impl CharacteristicsSpec {
    pub fn momenta(&self) -> Vec<String> {
        let coords = match &self.equation {
            Equation::Pde(p) => &p.coords,
            Equation::HamiltonJacobi(h) => &h.coords,
        };
        coords.iter().map(|c| momentum_name(c, coords.len())).collect()
    }
}

enum Piece {
    Scalar(Expr),
    Form(DifferentialForm),
}

/// Parses a form body over `coords`.
pub fn parse_form(text: &str, offset: usize, coords: &[String]) -> Result<DifferentialForm, DslError> {
    let e = expr_at(text, offset)?;
    let sem = |m: String| DslError::semantic(offset, m);
    match piece(&e, coords).map_err(sem)? {
        Piece::Form(f) => Ok(f),
        Piece::Scalar(s) => DifferentialForm::scalar(coords, s).map_err(|e| sem(e.to_string())),
    }
}

fn piece(e: &Expr, coords: &[String]) -> Result<Piece, String> {
    let ferr = |e: FormError| e.to_string();
    Ok(match e {
        Expr::Var(v) => match v.strip_prefix('d').and_then(|c| coords.iter().position(|x| x == c)) {
            Some(i) => Piece::Form(DifferentialForm::basis(coords, i).map_err(ferr)?),
            None => Piece::Scalar(e.clone()),
        },
        Expr::Const(_) => Piece::Scalar(e.clone()),
        Expr::Unary(op, a) => match (op, piece(a, coords)?) {
            (_, Piece::Scalar(s)) => Piece::Scalar(Expr::unary(*op, s)),
            (UnaryOp::Neg, Piece::Form(f)) => Piece::Form(f.scale(&Expr::constant(-1.0))),
            (op, Piece::Form(_)) => return Err(format!("`{}` cannot be applied to a form", op.name())),
        },
        Expr::Binary(op, a, b) => {
            let (a, b) = (piece(a, coords)?, piece(b, coords)?);
            match (op, a, b) {
                (_, Piece::Scalar(x), Piece::Scalar(y)) => Piece::Scalar(Expr::binary(*op, x, y)),
                (BinaryOp::Add | BinaryOp::Sub, Piece::Form(f), Piece::Form(g)) => {
                    if f.degree() != g.degree() {
                        return Err(format!("cannot add forms of degree {} and {}", f.degree(), g.degree()));
                    }
                    Piece::Form(if *op == BinaryOp::Add { f.add(&g) } else { f.sub(&g) }.map_err(ferr)?)
                }
                (BinaryOp::Mul, Piece::Scalar(s), Piece::Form(f)) | (BinaryOp::Mul, Piece::Form(f), Piece::Scalar(s)) => {
                    Piece::Form(f.scale(&s))
                }
                (BinaryOp::Div, Piece::Form(f), Piece::Scalar(s)) => {
                    Piece::Form(f.map_coefficients(|c| Expr::div(c.clone(), s.clone())))
                }
                (BinaryOp::Pow, Piece::Form(f), Piece::Form(g)) => Piece::Form(f.wedge(&g).map_err(ferr)?),
                (BinaryOp::Mul, Piece::Form(_), Piece::Form(_)) => {
                    return Err("forms are multiplied with `^` (wedge), not `*`".into())
                }
                (BinaryOp::Add | BinaryOp::Sub, _, _) => return Err("cannot add a scalar to a form of positive degree".into()),
                _ => return Err(format!("`{}` is not defined between these operands", op.symbol())),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Point;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn form_literal() {
        let Item::Form(f) = parse_single("form 1 on (x,y): y*dx + 0*dy").unwrap() else { panic!() };
        assert_eq!(f.degree(), 1);
        assert_eq!(f.coefficient(&[0]), Expr::var("y"));
        assert!(f.coefficient(&[1]).is_zero());
    }

    #[test]
    fn wedge_in_form_body() {
        let f = parse_form("x*dx^dy - dy^dz", 0, &names(&["x", "y", "z"])).unwrap();
        assert_eq!(f.degree(), 2);
        let v = f.evaluate(&Point::new().with("x", 3.0)).unwrap();
        assert_eq!(v.values().copied().collect::<Vec<_>>(), vec![3.0, -1.0]);
    }

    #[test]
    fn form_errors() {
        let xy = names(&["x", "y"]);
        assert!(parse_form("dx*dy", 0, &xy).is_err());
        assert!(parse_form("dx + 1", 0, &xy).is_err());
        assert!(parse_form("dx + dx^dy", 0, &xy).is_err());
        assert!(parse_form("sin(dx)", 0, &xy).is_err());
        assert!(parse_single("form 2 on (x,y): y*dx").is_err());
        assert!(parse_single("form 1 on (x,y): q*dx").is_err());
    }

    #[test]
    fn relation_block() {
        let text = r#"
            # first law of an ideal gas
            relation "first law" on (T, V) {
                psi: unknown
                omega: c_v*dT + (R*T/V)*dV
                connection: zero
                constants { R: 1; c_v: 2.5 }
                grid: T=1:10:20, V=0.5:5:20
                tol: 1e-10
            }
        "#;
        let Item::Relation(r) = parse_single(text).unwrap() else { panic!() };
        assert_eq!(r.label, "first law");
        assert_eq!(r.coords, names(&["T", "V"]));
        assert_eq!(r.omega.coefficient(&[0]), Expr::Const(2.5));
        assert!(r.connection.is_flat());
        assert_eq!(r.grid.unwrap().len(), 400);
        assert_eq!(r.tol, Some(1e-10));
    }

    #[test]
    fn torsion_block() {
        let text = "relation \"t\" on (x, y) { omega: y*dx; connection { x,x,y: 2*k }; constants { k: 0.5 } }";
        let Item::Relation(r) = parse_single(text).unwrap() else { panic!() };
        assert_eq!(r.connection.get(0, 0, 1), Expr::Const(1.0));
        assert_eq!(r.connection.get(0, 1, 0), Expr::Const(-1.0));
    }

    #[test]
    fn pde_prepends_time() {
        let text = "pde on (x) { F: p_t + c*p_x; constants { c: 1.0 } }";
        let Item::Characteristics(c) = parse_single(text).unwrap() else { panic!() };
        let Equation::Pde(p) = &c.equation else { panic!() };
        assert_eq!(p.coords, names(&["t", "x"]));
        assert_eq!(c.step, DEFAULT_STEP);
    }

    #[test]
    fn hj_block_with_bundle() {
        let text = "hj on (x) {\n E: p^2/2\n init { x: a; p: a; u: a^2/2 }\n bundle { from: -1; to: 1; count: 9 }\n step: 0.01; steps: 100\n}";
        let Item::Characteristics(c) = parse_single(text).unwrap() else { panic!() };
        assert_eq!(c.steps, 100);
        assert_eq!(c.bundle, Some(BundleSpec { from: -1.0, to: 1.0, count: 9 }));
        assert_eq!(c.init.as_ref().unwrap().at(2.0).unwrap().get("u"), Some(2.0));
        assert_eq!(c.momenta(), names(&["p"]));
    }

    #[test]
    fn syntax_errors_carry_locations() {
        let text = "relation \"x\" on (x, y) {\n  omega: y*dx +\n}";
        let err = parse_single(text).unwrap_err();
        assert!(matches!(err, DslError::Expr { .. }));
        assert_eq!(err.location(text).0, 2);
        assert!(matches!(parse_single("relation on (x)"), Err(DslError::Syntax { .. })));
        assert!(matches!(parse_single("frobnicate"), Err(DslError::Syntax { .. })));
        assert!(matches!(parse_single("hj on (x) { E: p; colour: red }"), Err(DslError::Semantic { .. })));
        assert!(matches!(parse_single("hj on (x) { E: p + q }"), Err(DslError::Semantic { .. })));
        assert!(matches!(parse_single("relation \"q\" on (x, y) { omega: q*dx }"), Err(DslError::Semantic { .. })));
        assert!(matches!(parse_single("relation \"q\" on (x, y) { omega: dx; psi: x + q }"), Err(DslError::Semantic { .. })));
    }
}
