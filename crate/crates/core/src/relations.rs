//! Functional relations `dψ = ω`: identity tests, commutator attribution,
//! integrating factors and vanishing-determinant scans.

use serde::Serialize;

use crate::expr::{EvalError, Expr, Point};
use crate::forms::{commutator_1form, max_abs_over, Connection, DifferentialForm, FormError};
use crate::grid::GridSpec;
use crate::sample::{evaluate_all, MaxTracker};

/// Default tolerance when every coefficient is differentiated symbolically.
pub const SYMBOLIC_TOL: f64 = 1e-9;
/// Default tolerance when a finite-difference estimate is involved.
pub const FINITE_DIFFERENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalRelation {
    pub label: String,
    /// State functional, when known.
    pub psi: Option<Expr>,
    pub omega: DifferentialForm,
    pub connection: Connection,
}

impl FunctionalRelation {
    pub fn new(label: impl Into<String>, omega: DifferentialForm) -> Self {
        let connection = Connection::flat(omega.dim());
        Self { label: label.into(), psi: None, omega, connection }
    }

    pub fn with_psi(mut self, psi: Expr) -> Self {
        self.psi = Some(psi);
        self
    }

    pub fn with_connection(mut self, connection: Connection) -> Result<Self, FormError> {
        if connection.dim() != self.omega.dim() {
            return Err(FormError::DimensionMismatch(self.omega.dim(), connection.dim()));
        }
        self.connection = connection;
        Ok(self)
    }
}

/// One commutator component with its symbolic pieces and sampled maxima.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CommutatorComponent {
    pub alpha: String,
    pub beta: String,
    pub coefficient_term: Expr,
    pub connection_term: Expr,
    pub max_coefficient_term: f64,
    pub max_connection_term: f64,
    pub max_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TermContribution {
    pub source: String,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NonidentityReport {
    pub label: String,
    pub identical: bool,
    pub tolerance: f64,
    pub max_coefficient_term: f64,
    pub max_connection_term: f64,
    pub max_total: f64,
    pub worst_point: Option<Point>,
    pub commutator: Vec<CommutatorComponent>,
    pub per_term_breakdown: Vec<TermContribution>,
    /// max |dψ − ω| over the sample when ψ is given.
    pub psi_mismatch: Option<f64>,
    pub excluded_points: usize,
}

/// Decides whether `dψ = ω` holds identically on the sample by evaluating the
/// commutator of ω, split into its coefficient and connection parts.
pub fn analyze_relation(
    rel: &FunctionalRelation,
    points: &[Point],
    tol: f64,
) -> Result<NonidentityReport, FormError> {
    if rel.omega.degree() != 1 {
        return Err(FormError::UnsupportedDegree(rel.omega.degree()));
    }
    let field = commutator_1form(&rel.omega, &rel.connection)?;
    let coords = rel.omega.coords();

    // one flat expression list: [coef, conn, total] per component
    let mut exprs = Vec::new();
    for term in field.components.values() {
        exprs.push(term.coefficient.clone());
        exprs.push(term.connection.clone());
        exprs.push(term.total());
    }
    let values = evaluate_all(&exprs, points)?;
    let m = field.components.len();
    let mut coef = vec![MaxTracker::default(); m];
    let mut conn = vec![MaxTracker::default(); m];
    let mut total = vec![MaxTracker::default(); m];
    let mut worst = MaxTracker::default();
    let mut excluded = 0;
    for (i, v) in values.iter().enumerate() {
        let Ok(v) = v else {
            excluded += 1;
            continue;
        };
        let mut here: f64 = 0.0;
        for c in 0..m {
            coef[c].observe(i, v[3 * c]);
            conn[c].observe(i, v[3 * c + 1]);
            total[c].observe(i, v[3 * c + 2]);
            here = here.max(v[3 * c + 2].abs());
        }
        worst.observe(i, here);
    }
    if worst.at.is_none() && !points.is_empty() {
        return Err(FormError::EmptySample(excluded));
    }

    let mut commutator = Vec::with_capacity(m);
    let mut breakdown = Vec::with_capacity(2 * m);
    for (c, (&(a, b), term)) in field.components.iter().enumerate() {
        let pair = format!("{},{}", coords[a], coords[b]);
        breakdown.push(TermContribution { source: format!("coefficient[{pair}]"), max: coef[c].max });
        breakdown.push(TermContribution { source: format!("connection[{pair}]"), max: conn[c].max });
        commutator.push(CommutatorComponent {
            alpha: coords[a].clone(),
            beta: coords[b].clone(),
            coefficient_term: term.coefficient.clone(),
            connection_term: term.connection.clone(),
            max_coefficient_term: coef[c].max,
            max_connection_term: conn[c].max,
            max_total: total[c].max,
        });
    }

    let psi_mismatch = match &rel.psi {
        Some(psi) => {
            let dpsi = DifferentialForm::scalar(coords, psi.clone())?.d();
            let diff = dpsi.sub(&rel.omega)?;
            let list: Vec<Expr> = diff.terms().map(|(_, e)| e.clone()).collect();
            Some(max_abs_over(&list, points)?.0.max)
        }
        None => None,
    };

    let max_of = |t: &[MaxTracker]| t.iter().fold(0.0_f64, |m, x| m.max(x.max));
    let max_total = max_of(&total);
    Ok(NonidentityReport {
        label: rel.label.clone(),
        identical: max_total <= tol,
        tolerance: tol,
        max_coefficient_term: max_of(&coef),
        max_connection_term: max_of(&conn),
        max_total,
        worst_point: worst.at.map(|i| points[i].clone()),
        commutator,
        per_term_breakdown: breakdown,
        psi_mismatch,
        excluded_points: excluded,
    })
}

/// Plot-ready per-point commutator components: the point's coordinates, then
/// one `K[α,β]` column per component, blank where a coefficient left its domain.
pub fn commutator_csv(rel: &FunctionalRelation, points: &[Point]) -> Result<String, FormError> {
    use std::fmt::Write as _;
    let field = commutator_1form(&rel.omega, &rel.connection)?;
    let coords = rel.omega.coords();
    let totals: Vec<Expr> = field.components.values().map(|t| t.total()).collect();
    let values = evaluate_all(&totals, points)?;
    let mut out = coords.join(",");
    for (a, b) in field.components.keys() {
        let _ = write!(out, ",K[{},{}]", coords[*a], coords[*b]);
    }
    out.push('\n');
    for (p, v) in points.iter().zip(&values) {
        let cells: Vec<String> = coords.iter().map(|c| format!("{:.16e}", p.get(c).unwrap_or(f64::NAN))).collect();
        out.push_str(&cells.join(","));
        match v {
            Ok(v) => v.iter().for_each(|x| {
                let _ = write!(out, ",{x:.16e}");
            }),
            Err(_) => totals.iter().for_each(|_| out.push(',')),
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IntegratingFactorReport {
    pub factor: Expr,
    pub exact: bool,
    pub max_residual: f64,
    /// Points where μ vanished or left its domain.
    pub excluded_points: usize,
}

/// Checks that `μ·θ` has a vanishing commutator on the sample.
pub fn verify_integrating_factor(
    theta: &DifferentialForm,
    mu: &Expr,
    points: &[Point],
    tol: f64,
) -> Result<IntegratingFactorReport, FormError> {
    if theta.degree() != 1 {
        return Err(FormError::WrongDegree { expected: 1, found: theta.degree() });
    }
    let field = commutator_1form(&theta.scale(mu), &Connection::flat(theta.dim()))?;
    let mut exprs = vec![mu.clone()];
    exprs.extend(field.components.values().map(|t| t.total()));
    let values = evaluate_all(&exprs, points)?;
    let mut tracker = MaxTracker::default();
    let mut excluded = 0;
    for (i, v) in values.iter().enumerate() {
        match v {
            Ok(v) if v[0] != 0.0 => {
                let m = v[1..].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                tracker.observe(i, m);
            }
            _ => excluded += 1,
        }
    }
    if tracker.at.is_none() && !points.is_empty() {
        return Err(FormError::EmptySample(excluded));
    }
    Ok(IntegratingFactorReport {
        factor: mu.clone(),
        exact: tracker.max <= tol,
        max_residual: tracker.max,
        excluded_points: excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FactorSearch {
    /// Index into the candidate list of the first exact factor.
    pub found: Option<usize>,
    pub factor: Option<Expr>,
    pub trials: Vec<FactorTrial>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FactorTrial {
    pub candidate: Expr,
    pub report: Option<IntegratingFactorReport>,
    pub error: Option<String>,
}

/// Tries candidates in order and stops at the first exact one.
pub fn find_integrating_factor(
    theta: &DifferentialForm,
    candidates: &[Expr],
    points: &[Point],
    tol: f64,
) -> FactorSearch {
    let mut trials = Vec::new();
    for (i, mu) in candidates.iter().enumerate() {
        match verify_integrating_factor(theta, mu, points, tol) {
            Ok(report) => {
                let exact = report.exact;
                trials.push(FactorTrial { candidate: mu.clone(), report: Some(report), error: None });
                if exact {
                    return FactorSearch { found: Some(i), factor: Some(mu.clone()), trials };
                }
            }
            Err(e) => trials.push(FactorTrial {
                candidate: mu.clone(),
                report: None,
                error: Some(e.to_string()),
            }),
        }
    }
    FactorSearch { found: None, factor: None, trials }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DegeneracyCondition {
    pub determinant: Expr,
    pub tolerance: f64,
    /// Grid points with |det| ≤ tol, in scan order.
    pub zero_set: Vec<Point>,
    /// Adjacent grid points between which det changes sign.
    pub sign_changes: Vec<(Point, Point)>,
    pub excluded_points: usize,
}

/// Locates where a determinant (or any degeneracy expression) vanishes.
pub fn degeneracy_scan(det: &Expr, grid: &GridSpec, tol: f64) -> Result<DegeneracyCondition, EvalError> {
    let points = grid.points();
    let values = evaluate_all(std::slice::from_ref(det), &points)?;
    let val = |i: usize| values[i].as_ref().ok().map(|v| v[0]);
    let zero_set = (0..points.len())
        .filter(|&i| matches!(val(i), Some(v) if v.abs() <= tol))
        .map(|i| points[i].clone())
        .collect();
    let sign_changes = grid
        .neighbor_pairs()
        .into_iter()
        .filter(|&(a, b)| match (val(a), val(b)) {
            (Some(x), Some(y)) => (x < 0.0 && y > 0.0) || (x > 0.0 && y < 0.0),
            _ => false,
        })
        .map(|(a, b)| (points[a].clone(), points[b].clone()))
        .collect();
    Ok(DegeneracyCondition {
        determinant: det.clone(),
        tolerance: tol,
        zero_set,
        sign_changes,
        excluded_points: values.iter().filter(|v| v.is_err()).count(),
    })
}
