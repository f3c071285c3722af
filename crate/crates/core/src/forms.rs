//! Skew-symmetric differential forms with expression coefficients.
//!
//! A p-form on n named coordinates stores one coefficient per strictly
//! increasing multi-index; the skew-symmetric extension to other orderings is
//! implied. The exterior derivative optionally carries the torsion part of a
//! connection, which is only defined for 1-forms:
//!
//! ```text
//! (dθ)_{αβ} = (∂a_β/∂x^α − ∂a_α/∂x^β) + (Γ^σ_{βα} − Γ^σ_{αβ}) a_σ ,   α < β
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::expr::{EvalError, Expr, Point};
use crate::sample::{evaluate_all, MaxTracker};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("coordinate names differ between operands")]
    CoordinateMismatch,
    #[error("degree {0} exceeds dimension {1}")]
    DegreeOverflow(usize, usize),
    #[error("expected a {expected}-form, got degree {found}")]
    WrongDegree { expected: usize, found: usize },
    #[error("connection term is only defined for 1-forms, got degree {0}")]
    UnsupportedDegree(usize),
    #[error("index {0} out of range for dimension {1}")]
    IndexOutOfRange(usize, usize),
    #[error("a form needs at least one coordinate")]
    NoCoordinates,
    #[error("no sample point could be evaluated ({0} excluded)")]
    EmptySample(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Strictly increasing coordinate indices labelling a basis element.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    /// Sorts `indices`, returning the permutation sign, or `None` when an index
    /// repeats (the basis element vanishes).
    pub fn canonical(indices: &[usize]) -> Option<(MultiIndex, f64)> {
        let mut v = indices.to_vec();
        let mut sign = 1.0;
        // insertion sort, counting transpositions
        for i in 1..v.len() {
            let mut j = i;
            while j > 0 && v[j - 1] > v[j] {
                v.swap(j - 1, j);
                sign = -sign;
                j -= 1;
            }
        }
        if v.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some((MultiIndex(v), sign))
    }

    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Basis label like `dx^dy`, or `1` for the empty index.
    pub fn label(&self, coords: &[String]) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        self.0
            .iter()
            .map(|&i| format!("d{}", coords[i]))
            .collect::<Vec<_>>()
            .join("^")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialForm {
    coords: Vec<String>,
    degree: usize,
    coeffs: BTreeMap<MultiIndex, Expr>,
}

impl DifferentialForm {
    pub fn zero(coords: &[impl AsRef<str>], degree: usize) -> Result<Self, FormError> {
        let coords: Vec<String> = coords.iter().map(|c| c.as_ref().to_string()).collect();
        if coords.is_empty() {
            return Err(FormError::NoCoordinates);
        }
        if degree > coords.len() {
            return Err(FormError::DegreeOverflow(degree, coords.len()));
        }
        Ok(Self { coords, degree, coeffs: BTreeMap::new() })
    }

    pub fn scalar(coords: &[impl AsRef<str>], f: Expr) -> Result<Self, FormError> {
        let mut out = Self::zero(coords, 0)?;
        out.add_term(&[], f)?;
        Ok(out)
    }

    /// The 1-form `dx^i`.
    pub fn basis(coords: &[impl AsRef<str>], i: usize) -> Result<Self, FormError> {
        let mut out = Self::zero(coords, 1)?;
        out.add_term(&[i], Expr::one())?;
        Ok(out)
    }

    /// `Σ a_i dx^i` from one coefficient per coordinate.
    pub fn one_form(coords: &[impl AsRef<str>], coeffs: Vec<Expr>) -> Result<Self, FormError> {
        let mut out = Self::zero(coords, 1)?;
        if coeffs.len() != out.dim() {
            return Err(FormError::DimensionMismatch(coeffs.len(), out.dim()));
        }
        for (i, c) in coeffs.into_iter().enumerate() {
            out.add_term(&[i], c)?;
        }
        Ok(out)
    }

    /// Adds `coeff · dx^{i1}∧…` for indices in any order.
    pub fn add_term(&mut self, indices: &[usize], coeff: Expr) -> Result<(), FormError> {
        if indices.len() != self.degree {
            return Err(FormError::WrongDegree { expected: self.degree, found: indices.len() });
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.dim()) {
            return Err(FormError::IndexOutOfRange(bad, self.dim()));
        }
        let Some((idx, sign)) = MultiIndex::canonical(indices) else {
            return Ok(());
        };
        let coeff = if sign < 0.0 { Expr::neg(coeff) } else { coeff };
        self.accumulate(idx, coeff);
        Ok(())
    }

    fn accumulate(&mut self, idx: MultiIndex, coeff: Expr) {
        let merged = match self.coeffs.remove(&idx) {
            Some(prev) => Expr::add(prev, coeff),
            None => coeff,
        };
        self.coeffs.insert(idx, merged);
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn coefficient(&self, indices: &[usize]) -> Expr {
        match MultiIndex::canonical(indices) {
            Some((idx, sign)) => match self.coeffs.get(&idx) {
                Some(c) if sign < 0.0 => Expr::neg(c.clone()),
                Some(c) => c.clone(),
                None => Expr::zero(),
            },
            None => Expr::zero(),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Expr)> {
        self.coeffs.iter()
    }

    fn check_compatible(&self, other: &Self) -> Result<(), FormError> {
        if self.dim() != other.dim() {
            return Err(FormError::DimensionMismatch(self.dim(), other.dim()));
        }
        if self.coords != other.coords {
            return Err(FormError::CoordinateMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, FormError> {
        self.check_compatible(other)?;
        if self.degree != other.degree {
            return Err(FormError::WrongDegree { expected: self.degree, found: other.degree });
        }
        let mut out = self.clone();
        for (idx, c) in &other.coeffs {
            out.accumulate(idx.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FormError> {
        self.add(&other.scale(&Expr::Const(-1.0)))
    }

    /// Multiplies every coefficient by a scalar function.
    pub fn scale(&self, f: &Expr) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = Expr::mul(f.clone(), c.clone());
        }
        out
    }

    /// Applies `f` to every coefficient (substitution, constant binding, ...).
    pub fn map_coefficients(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = f(c);
        }
        out
    }

    pub fn wedge(&self, other: &Self) -> Result<Self, FormError> {
        self.check_compatible(other)?;
        let degree = self.degree + other.degree;
        if degree > self.dim() {
            return Err(FormError::DegreeOverflow(degree, self.dim()));
        }
        let mut out = Self::zero(&self.coords, degree)?;
        for (i, a) in &self.coeffs {
            for (j, b) in &other.coeffs {
                if j.indices().iter().any(|&k| i.contains(k)) {
                    continue;
                }
                let mut joined = i.indices().to_vec();
                joined.extend_from_slice(j.indices());
                out.add_term(&joined, Expr::mul(a.clone(), b.clone()))?;
            }
        }
        Ok(out)
    }

    /// Exterior derivative including the connection term for 1-forms.
    pub fn exterior_derivative(&self, conn: &Connection) -> Result<Self, FormError> {
        if conn.dim() != self.dim() {
            return Err(FormError::DimensionMismatch(self.dim(), conn.dim()));
        }
        if !conn.is_flat() && self.degree != 1 {
            return Err(FormError::UnsupportedDegree(self.degree));
        }
        if self.degree + 1 > self.dim() {
            return Err(FormError::DegreeOverflow(self.degree + 1, self.dim()));
        }
        let mut out = Self::zero(&self.coords, self.degree + 1)?;
        for (idx, a) in &self.coeffs {
            for k in (0..self.dim()).filter(|&k| !idx.contains(k)) {
                let da = a.differentiate(&self.coords[k]);
                if da.is_zero() {
                    continue;
                }
                let mut joined = vec![k];
                joined.extend_from_slice(idx.indices());
                out.add_term(&joined, da)?;
            }
        }
        if self.degree == 1 {
            for ((sigma, alpha, beta), t) in &conn.torsion {
                let a_sigma = self.coefficient(&[*sigma]);
                out.add_term(&[*alpha, *beta], Expr::mul(t.clone(), a_sigma))?;
            }
        }
        Ok(out)
    }

    /// Exterior derivative on a flat manifold. Panics on a top-degree form.
    pub fn d(&self) -> Self {
        self.exterior_derivative(&Connection::flat(self.dim()))
            .expect("degree below dimension")
    }

    /// Coefficient values at one point, keyed by multi-index.
    pub fn evaluate(&self, at: &Point) -> Result<BTreeMap<MultiIndex, f64>, EvalError> {
        self.coeffs
            .iter()
            .map(|(k, e)| Ok((k.clone(), e.evaluate(at)?)))
            .collect()
    }

    fn coefficient_list(&self) -> Vec<Expr> {
        self.coeffs.values().cloned().collect()
    }
}

impl fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let live: Vec<_> = self.coeffs.iter().filter(|(_, c)| !c.is_zero()).collect();
        if live.is_empty() {
            return f.write_str("0");
        }
        for (n, (idx, c)) in live.iter().enumerate() {
            if n > 0 {
                f.write_str(" + ")?;
            }
            if idx.is_empty() {
                write!(f, "{c}")?;
            } else {
                write!(f, "({c})*{}", idx.label(&self.coords))?;
            }
        }
        Ok(())
    }
}

impl Serialize for DifferentialForm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Torsion of a connection, `Γ^σ_{βα} − Γ^σ_{αβ}`, stored for α < β.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    dim: usize,
    torsion: BTreeMap<(usize, usize, usize), Expr>,
}

impl Connection {
    /// The symmetric (torsion-free) case.
    pub fn flat(dim: usize) -> Self {
        Self { dim, torsion: BTreeMap::new() }
    }

    /// Sets the component for `(σ, α, β)`; swapping α and β flips the sign.
    pub fn set(&mut self, sigma: usize, alpha: usize, beta: usize, value: Expr) -> Result<(), FormError> {
        for i in [sigma, alpha, beta] {
            if i >= self.dim {
                return Err(FormError::IndexOutOfRange(i, self.dim));
            }
        }
        if alpha == beta {
            return Ok(());
        }
        let (key, value) = if alpha < beta {
            ((sigma, alpha, beta), value)
        } else {
            ((sigma, beta, alpha), Expr::neg(value))
        };
        if value.is_zero() {
            self.torsion.remove(&key);
        } else {
            self.torsion.insert(key, value);
        }
        Ok(())
    }

    pub fn with(mut self, sigma: usize, alpha: usize, beta: usize, value: Expr) -> Result<Self, FormError> {
        self.set(sigma, alpha, beta, value)?;
        Ok(self)
    }

    pub fn get(&self, sigma: usize, alpha: usize, beta: usize) -> Expr {
        if alpha == beta {
            return Expr::zero();
        }
        if alpha < beta {
            self.torsion.get(&(sigma, alpha, beta)).cloned().unwrap_or_else(Expr::zero)
        } else {
            self.torsion
                .get(&(sigma, beta, alpha))
                .map(|e| Expr::neg(e.clone()))
                .unwrap_or_else(Expr::zero)
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_flat(&self) -> bool {
        self.torsion.values().all(Expr::is_zero)
    }

    pub fn map_components(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        let mut out = self.clone();
        for c in out.torsion.values_mut() {
            *c = f(c);
        }
        out
    }
}

/// One component K_{αβ} of a 1-form commutator, split by origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorTerm {
    /// From differentiating the coefficients.
    pub coefficient: Expr,
    /// From the torsion of the connection.
    pub connection: Expr,
}

impl CommutatorTerm {
    pub fn total(&self) -> Expr {
        Expr::add(self.coefficient.clone(), self.connection.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorField {
    pub coords: Vec<String>,
    /// Keyed by (α, β) with α < β; the (β, α) component is the negation.
    pub components: BTreeMap<(usize, usize), CommutatorTerm>,
}

impl CommutatorField {
    pub fn get(&self, alpha: usize, beta: usize) -> Option<CommutatorTerm> {
        if alpha < beta {
            self.components.get(&(alpha, beta)).cloned()
        } else if alpha > beta {
            self.components.get(&(beta, alpha)).map(|t| CommutatorTerm {
                coefficient: Expr::neg(t.coefficient.clone()),
                connection: Expr::neg(t.connection.clone()),
            })
        } else {
            Some(CommutatorTerm { coefficient: Expr::zero(), connection: Expr::zero() })
        }
    }
}

/// Commutator of a 1-form, built directly from its coefficients and the
/// connection torsion rather than through the exterior derivative.
pub fn commutator_1form(theta: &DifferentialForm, conn: &Connection) -> Result<CommutatorField, FormError> {
    if theta.degree() != 1 {
        return Err(FormError::WrongDegree { expected: 1, found: theta.degree() });
    }
    if conn.dim() != theta.dim() {
        return Err(FormError::DimensionMismatch(theta.dim(), conn.dim()));
    }
    let n = theta.dim();
    let coords = theta.coords();
    let a: Vec<Expr> = (0..n).map(|i| theta.coefficient(&[i])).collect();
    let mut components = BTreeMap::new();
    for alpha in 0..n {
        for beta in alpha + 1..n {
            let coefficient = Expr::sub(
                a[beta].differentiate(&coords[alpha]),
                a[alpha].differentiate(&coords[beta]),
            );
            let connection = Expr::sum(
                (0..n).map(|sigma| Expr::mul(conn.get(sigma, alpha, beta), a[sigma].clone())),
            );
            components.insert((alpha, beta), CommutatorTerm { coefficient, connection });
        }
    }
    Ok(CommutatorField { coords: coords.to_vec(), components })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ClosureReport {
    pub degree: usize,
    pub dim: usize,
    pub closed: bool,
    pub max_residual: f64,
    pub worst_point: Option<Point>,
    /// Points excluded because a coefficient left its domain there.
    pub excluded_points: usize,
}

/// Samples every coefficient of `d f` and compares against `tol`.
pub fn is_closed(
    f: &DifferentialForm,
    conn: &Connection,
    points: &[Point],
    tol: f64,
) -> Result<ClosureReport, FormError> {
    if f.degree() == f.dim() && conn.is_flat() {
        // top-degree forms are trivially closed
        return Ok(ClosureReport {
            degree: f.degree(),
            dim: f.dim(),
            closed: true,
            max_residual: 0.0,
            worst_point: points.first().cloned(),
            excluded_points: 0,
        });
    }
    let df = f.exterior_derivative(conn)?;
    let (tracker, excluded) = max_abs_over(&df.coefficient_list(), points)?;
    let Some(at) = tracker.at else {
        return Err(FormError::EmptySample(excluded));
    };
    Ok(ClosureReport {
        degree: f.degree(),
        dim: f.dim(),
        closed: tracker.max <= tol,
        max_residual: tracker.max,
        worst_point: Some(points[at].clone()),
        excluded_points: excluded,
    })
}

/// Max |value| over all expressions and points; returns the tracker and the
/// number of points excluded by domain violations.
pub(crate) fn max_abs_over(exprs: &[Expr], points: &[Point]) -> Result<(MaxTracker, usize), EvalError> {
    let values = evaluate_all(exprs, points)?;
    let mut tracker = MaxTracker::default();
    let mut excluded = 0;
    for (i, v) in values.iter().enumerate() {
        match v {
            Ok(vals) => {
                let m = vals.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                tracker.observe(i, m);
            }
            Err(_) => excluded += 1,
        }
    }
    Ok((tracker, excluded))
}

/// Largest coefficient-wise difference between two forms over `points`.
pub fn max_abs_difference(a: &DifferentialForm, b: &DifferentialForm, points: &[Point]) -> Result<f64, FormError> {
    let diff = a.sub(b)?;
    let (tracker, excluded) = max_abs_over(&diff.coefficient_list(), points)?;
    if tracker.at.is_none() && !points.is_empty() {
        return Err(FormError::EmptySample(excluded));
    }
    Ok(tracker.max)
}
