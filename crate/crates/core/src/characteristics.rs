//! Characteristic systems of first-order PDEs, canonical systems of
//! Hamilton–Jacobi equations, RK4 integration, and the check that the
//! derivative form `θ = p_i dx^i` closes on the integral surface swept by a
//! bundle of characteristics while staying unclosed in the ambient space.
//!
//! For `F(x, u, p) = 0` the system, parameterized by `s`, is
//!
//! ```text
//! dx^i/ds = ∂F/∂p_i
//! dp_i/ds = −(∂F/∂x^i + p_i ∂F/∂u)
//! du/ds   = Σ p_i ∂F/∂p_i
//! ```
//!
//! The `du/ds` line is the usual Cauchy completion that reconstructs `u`;
//! the ratio form only fixes the `x : p` directions. For `∂u/∂t + E(t, x, p) = 0`
//! the canonical equations in `t` are emitted instead, with
//! `du/dt = Σ p_j ∂E/∂p_j − E`.
//!
//! Momentum names: with a single coordinate the momentum is `p`, otherwise
//! `p_<coord>`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{CompiledExpr, EvalError, Expr, Point};
use crate::forms::{commutator_1form, max_abs_over, Connection, DifferentialForm, FormError};
use crate::grid::{Axis, GridSpec};

pub const SOLUTION: &str = "u";
pub const TIME: &str = "t";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CharacteristicError {
    #[error("`{0}` is not a coordinate, momentum or solution variable of this equation")]
    UnknownVariable(String),
    #[error("the Hamiltonian must not depend on the solution `u`")]
    DependsOnSolution,
    #[error("step must be positive, got {0}")]
    BadStep(f64),
    #[error("initial data does not bind `{0}`")]
    MissingInitial(String),
    #[error("degenerate bundle: {0}")]
    DegenerateBundle(String),
    #[error("need at least one coordinate")]
    NoCoordinates,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Form(#[from] FormError),
}

pub fn momentum_name(coord: &str, n: usize) -> String {
    if n == 1 {
        "p".to_string()
    } else {
        format!("p_{coord}")
    }
}

/// `F(x^i, u, p_i) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderPde {
    pub coords: Vec<String>,
    pub f: Expr,
}

impl FirstOrderPde {
    pub fn new(coords: Vec<String>, f: Expr) -> Result<Self, CharacteristicError> {
        if coords.is_empty() {
            return Err(CharacteristicError::NoCoordinates);
        }
        let pde = Self { coords, f };
        let mut allowed: BTreeSet<String> = pde.coords.iter().cloned().collect();
        allowed.extend(pde.momenta());
        allowed.insert(SOLUTION.into());
        if let Some(bad) = pde.f.free_vars().into_iter().find(|v| !allowed.contains(v)) {
            return Err(CharacteristicError::UnknownVariable(bad));
        }
        Ok(pde)
    }

    pub fn momenta(&self) -> Vec<String> {
        self.coords.iter().map(|c| momentum_name(c, self.coords.len())).collect()
    }
}

/// `∂u/∂t + E(t, x^j, p_j) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonJacobi {
    /// Spatial coordinates; time is `t`.
    pub coords: Vec<String>,
    pub energy: Expr,
}

impl HamiltonJacobi {
    pub fn new(coords: Vec<String>, energy: Expr) -> Result<Self, CharacteristicError> {
        if coords.is_empty() {
            return Err(CharacteristicError::NoCoordinates);
        }
        let hj = Self { coords, energy };
        if hj.energy.depends_on(SOLUTION) {
            return Err(CharacteristicError::DependsOnSolution);
        }
        let mut allowed: BTreeSet<String> = hj.coords.iter().cloned().collect();
        allowed.extend(hj.momenta());
        allowed.insert(TIME.into());
        if let Some(bad) = hj.energy.free_vars().into_iter().find(|v| !allowed.contains(v)) {
            return Err(CharacteristicError::UnknownVariable(bad));
        }
        Ok(hj)
    }

    pub fn momenta(&self) -> Vec<String> {
        self.coords.iter().map(|c| momentum_name(c, self.coords.len())).collect()
    }

    /// Max |E(state) − E(initial)| along a trajectory.
    pub fn energy_drift(&self, traj: &Trajectory) -> Result<f64, EvalError> {
        let mut slots = vec![traj.parameter.clone()];
        slots.extend(traj.names.iter().cloned());
        let e = self.energy.compile(&slots)?;
        let value = |s: &Sample| {
            let mut v = vec![s.parameter];
            v.extend_from_slice(&s.state);
            e.eval(&v)
        };
        let Some(first) = traj.samples.first() else {
            return Ok(0.0);
        };
        let e0 = value(first)?;
        traj.samples
            .iter()
            .try_fold(0.0_f64, |m, s| Ok(m.max((value(s)? - e0).abs())))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Origin {
    Pde(FirstOrderPde),
    Canonical(HamiltonJacobi),
}

/// Autonomous (or explicitly parameter-dependent) ODE system.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicSystem {
    pub parameter: String,
    /// Coordinates, then momenta, then `u`.
    pub state: Vec<String>,
    pub rhs: Vec<Expr>,
    origin: Origin,
}

impl CharacteristicSystem {
    pub fn rhs_of(&self, name: &str) -> Option<&Expr> {
        self.state.iter().position(|s| s == name).map(|i| &self.rhs[i])
    }

    fn coords(&self) -> &[String] {
        match &self.origin {
            Origin::Pde(p) => &p.coords,
            Origin::Canonical(h) => &h.coords,
        }
    }

    fn momenta(&self) -> Vec<String> {
        match &self.origin {
            Origin::Pde(p) => p.momenta(),
            Origin::Canonical(h) => h.momenta(),
        }
    }

    /// The derivative form `θ` on the ambient space, with one momentum
    /// eliminated through the equation when it enters linearly.
    pub fn ambient_form(&self) -> Result<DifferentialForm, FormError> {
        match &self.origin {
            Origin::Canonical(h) => {
                // θ = −E dt + p_j dx^j on (t, x, p)
                let mut coords = vec![TIME.to_string()];
                coords.extend(h.coords.iter().cloned());
                coords.extend(h.momenta());
                let mut coeffs = vec![Expr::neg(h.energy.clone())];
                coeffs.extend(h.momenta().into_iter().map(Expr::var));
                coeffs.extend(h.coords.iter().map(|_| Expr::zero()));
                DifferentialForm::one_form(&coords, coeffs)
            }
            Origin::Pde(p) => {
                let momenta = p.momenta();
                let mut coeffs: Vec<Expr> = momenta.iter().map(Expr::var).collect();
                let mut eliminated = None;
                for (k, pk) in momenta.iter().enumerate() {
                    let slope = p.f.differentiate(pk);
                    let constant = slope.free_vars().is_empty();
                    if constant && slope.evaluate(&Point::new()).is_ok_and(|c| c != 0.0) {
                        let mut zero = BTreeMap::new();
                        zero.insert(pk.clone(), Expr::zero());
                        let rest = p.f.substitute(&zero);
                        let solved = Expr::neg(Expr::div(rest, slope));
                        let mut b = BTreeMap::new();
                        b.insert(pk.clone(), solved);
                        coeffs = coeffs.iter().map(|c| c.substitute(&b)).collect();
                        eliminated = Some(k);
                        break;
                    }
                }
                let mut coords = p.coords.clone();
                coords.extend(
                    momenta
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| Some(*k) != eliminated)
                        .map(|(_, m)| m.clone()),
                );
                if coeffs.iter().any(|c| c.depends_on(SOLUTION)) {
                    coords.push(SOLUTION.into());
                }
                coeffs.resize(coords.len(), Expr::zero());
                DifferentialForm::one_form(&coords, coeffs)
            }
        }
    }
}

pub fn build_characteristic_system(pde: &FirstOrderPde) -> CharacteristicSystem {
    let momenta = pde.momenta();
    let f_u = pde.f.differentiate(SOLUTION);
    let mut state = Vec::new();
    let mut rhs = Vec::new();
    for (x, p) in pde.coords.iter().zip(&momenta) {
        state.push(x.clone());
        rhs.push(pde.f.differentiate(p));
    }
    for (x, p) in pde.coords.iter().zip(&momenta) {
        state.push(p.clone());
        let transport = Expr::mul(Expr::var(p), f_u.clone());
        rhs.push(Expr::neg(Expr::add(pde.f.differentiate(x), transport)));
    }
    state.push(SOLUTION.into());
    rhs.push(Expr::sum(
        momenta.iter().map(|p| Expr::mul(Expr::var(p), pde.f.differentiate(p))),
    ));
    CharacteristicSystem { parameter: "s".into(), state, rhs, origin: Origin::Pde(pde.clone()) }
}

pub fn build_canonical_system(hj: &HamiltonJacobi) -> CharacteristicSystem {
    let momenta = hj.momenta();
    let mut state = Vec::new();
    let mut rhs = Vec::new();
    for (x, p) in hj.coords.iter().zip(&momenta) {
        state.push(x.clone());
        rhs.push(hj.energy.differentiate(p));
    }
    for (x, p) in hj.coords.iter().zip(&momenta) {
        state.push(p.clone());
        rhs.push(Expr::neg(hj.energy.differentiate(x)));
    }
    state.push(SOLUTION.into());
    let action = Expr::sum(
        momenta.iter().map(|p| Expr::mul(Expr::var(p), hj.energy.differentiate(p))),
    );
    rhs.push(Expr::sub(action, hj.energy.clone()));
    CharacteristicSystem {
        parameter: TIME.into(),
        state,
        rhs,
        origin: Origin::Canonical(hj.clone()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub parameter: f64,
    pub state: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryFailure {
    /// Index of the step that could not be completed.
    pub step: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub parameter: String,
    pub names: Vec<String>,
    pub samples: Vec<Sample>,
    pub step: f64,
    pub method: &'static str,
    pub failure: Option<TrajectoryFailure>,
}

impl Trajectory {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(self.samples.iter().map(|s| s.state[i]).collect())
    }

    pub fn last(&self) -> Option<Point> {
        self.samples.last().map(|s| self.point(s))
    }

    pub fn point(&self, s: &Sample) -> Point {
        let mut p: Point = self.names.iter().cloned().zip(s.state.iter().copied()).collect();
        p.set(self.parameter.clone(), s.parameter);
        p
    }

    /// CSV with the parameter column first and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.parameter);
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{:.16e}", s.parameter);
            for v in &s.state {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }
}

struct Rhs {
    funcs: Vec<CompiledExpr>,
}

impl Rhs {
    fn new(sys: &CharacteristicSystem) -> Result<Self, EvalError> {
        let mut slots = vec![sys.parameter.clone()];
        slots.extend(sys.state.iter().cloned());
        let funcs = sys.rhs.iter().map(|e| e.compile(&slots)).collect::<Result<_, _>>()?;
        Ok(Self { funcs })
    }

    fn eval(&self, s: f64, y: &[f64], buf: &mut Vec<f64>, out: &mut [f64]) -> Result<(), EvalError> {
        buf.clear();
        buf.push(s);
        buf.extend_from_slice(y);
        for (o, f) in out.iter_mut().zip(&self.funcs) {
            *o = f.eval(buf)?;
        }
        Ok(())
    }
}

/// Classical fourth-order Runge–Kutta with a fixed step. The initial state is
/// the first sample; an evaluation failure truncates the trajectory and
/// records the failing step.
pub fn integrate(
    sys: &CharacteristicSystem,
    init: &Point,
    step: f64,
    steps: usize,
) -> Result<Trajectory, CharacteristicError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(CharacteristicError::BadStep(step));
    }
    let mut y: Vec<f64> = sys
        .state
        .iter()
        .map(|n| init.get(n).ok_or_else(|| CharacteristicError::MissingInitial(n.clone())))
        .collect::<Result<_, _>>()?;
    let s0 = init.get(&sys.parameter).unwrap_or(0.0);
    let rhs = Rhs::new(sys)?;
    let dim = y.len();
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(Sample { parameter: s0, state: y.clone() });
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    let mut buf = Vec::with_capacity(dim + 1);
    let mut failure = None;
    for n in 0..steps {
        let s = s0 + n as f64 * step;
        let h = step;
        let result = (|| -> Result<(), EvalError> {
            rhs.eval(s, &y, &mut buf, &mut k1)?;
            for i in 0..dim {
                tmp[i] = y[i] + 0.5 * h * k1[i];
            }
            rhs.eval(s + 0.5 * h, &tmp, &mut buf, &mut k2)?;
            for i in 0..dim {
                tmp[i] = y[i] + 0.5 * h * k2[i];
            }
            rhs.eval(s + 0.5 * h, &tmp, &mut buf, &mut k3)?;
            for i in 0..dim {
                tmp[i] = y[i] + h * k3[i];
            }
            rhs.eval(s + h, &tmp, &mut buf, &mut k4)?;
            Ok(())
        })();
        if let Err(e) = result {
            failure = Some(TrajectoryFailure { step: n, message: e.to_string() });
            break;
        }
        for i in 0..dim {
            y[i] += h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
        }
        // parameter from the step count, not by accumulation, keeps the grid uniform
        samples.push(Sample { parameter: s0 + (n + 1) as f64 * step, state: y.clone() });
    }
    Ok(Trajectory {
        parameter: sys.parameter.clone(),
        names: sys.state.clone(),
        samples,
        step,
        method: "rk4",
        failure,
    })
}

/// Initial data along a curve parameterized by `a`: one expression per state
/// variable (and optionally the flow parameter).
#[derive(Debug, Clone, PartialEq)]
pub struct InitialStrip {
    pub variable: String,
    pub values: BTreeMap<String, Expr>,
}

impl InitialStrip {
    pub fn new(variable: impl Into<String>) -> Self {
        Self { variable: variable.into(), values: BTreeMap::new() }
    }

    pub fn with(mut self, name: impl Into<String>, e: Expr) -> Self {
        self.values.insert(name.into(), e);
        self
    }

    pub fn at(&self, a: f64) -> Result<Point, EvalError> {
        let at = Point::new().with(self.variable.clone(), a);
        self.values
            .iter()
            .map(|(k, e)| Ok((k.clone(), e.evaluate(&at)?)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bundle {
    /// Strip parameter values, uniformly spaced.
    pub members: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
}

/// Integrates one trajectory per strip parameter value.
pub fn integrate_bundle(
    sys: &CharacteristicSystem,
    strip: &InitialStrip,
    members: &[f64],
    step: f64,
    steps: usize,
) -> Result<Bundle, CharacteristicError> {
    let trajectories = crate::grid::scan(members, |&a| -> Result<Trajectory, CharacteristicError> {
        integrate(sys, &strip.at(a)?, step, steps)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(Bundle { members: members.to_vec(), trajectories })
}

/// Uniformly spaced members `lo..=hi`.
pub fn members(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| Axis::new("a", lo, hi, count).value(i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CausticPoint {
    pub parameter: f64,
    pub member: f64,
    pub jacobian: f64,
    pub point: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PseudostructureClosure {
    /// max |du − θ| on the surface swept by the bundle, both along and across
    /// the characteristics.
    pub on_residual: f64,
    pub on_residual_along: f64,
    pub on_residual_across: f64,
    /// max commutator component of θ on the ambient grid.
    pub off_residual: f64,
    pub ambient_form: DifferentialForm,
    pub caustic_points: Vec<CausticPoint>,
}

// Fourth-order central difference weights on offsets -2..=2.
const STENCIL: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];

fn stencil(f: impl Fn(usize) -> f64, centre: usize, h: f64) -> f64 {
    STENCIL
        .iter()
        .enumerate()
        .map(|(k, w)| w * f(centre + k - 2))
        .sum::<f64>()
        / (12.0 * h)
}

/// Checks that `du = θ` holds on the surface traced out by the bundle and
/// reports how far θ is from closed in the ambient space.
pub fn verify_closure_on_pseudostructure(
    sys: &CharacteristicSystem,
    bundle: &Bundle,
    ambient_count: usize,
    caustic_tol: f64,
) -> Result<PseudostructureClosure, CharacteristicError> {
    let m = bundle.trajectories.len();
    if m < 5 || bundle.members.len() != m {
        return Err(CharacteristicError::DegenerateBundle(format!(
            "need at least 5 trajectories, got {m}"
        )));
    }
    let da = bundle.members[1] - bundle.members[0];
    if !(da.abs() > 0.0) {
        return Err(CharacteristicError::DegenerateBundle("zero spread in initial data".into()));
    }
    if bundle
        .members
        .windows(2)
        .any(|w| ((w[1] - w[0]) - da).abs() > 1e-9 * da.abs().max(1.0))
    {
        return Err(CharacteristicError::DegenerateBundle("members are not uniformly spaced".into()));
    }
    let len = bundle.trajectories.iter().map(|t| t.samples.len()).min().unwrap_or(0);
    if len < 5 {
        return Err(CharacteristicError::DegenerateBundle(format!(
            "need at least 5 samples per trajectory, got {len}"
        )));
    }
    let s0 = bundle.trajectories[0].samples[0].parameter;
    if bundle.trajectories.iter().any(|t| t.samples[0].parameter != s0) {
        return Err(CharacteristicError::DegenerateBundle("trajectories start at different parameters".into()));
    }

    let names = &sys.state;
    let idx = |n: &str| names.iter().position(|s| s == n).expect("state variable");
    let coords: Vec<usize> = sys.coords().iter().map(|c| idx(c)).collect();
    let momenta: Vec<usize> = sys.momenta().iter().map(|p| idx(p)).collect();
    let u = idx(SOLUTION);
    let canonical = matches!(sys.origin, Origin::Canonical(_));
    let energy = match &sys.origin {
        Origin::Canonical(h) => {
            let mut slots = vec![sys.parameter.clone()];
            slots.extend(names.iter().cloned());
            Some(h.energy.compile(&slots)?)
        }
        Origin::Pde(_) => None,
    };
    let h = bundle.trajectories[0].step;
    let value = |j: usize, k: usize, i: usize| bundle.trajectories[j].samples[k].state[i];

    let mut along: f64 = 0.0;
    for (j, traj) in bundle.trajectories.iter().enumerate() {
        for k in 2..len - 2 {
            let du = stencil(|kk| value(j, kk, u), k, h);
            let mut theta = coords
                .iter()
                .zip(&momenta)
                .map(|(&x, &p)| value(j, k, p) * stencil(|kk| value(j, kk, x), k, h))
                .sum::<f64>();
            if let Some(e) = &energy {
                let s = &traj.samples[k];
                let mut v = vec![s.parameter];
                v.extend_from_slice(&s.state);
                theta -= e.eval(&v)?;
            }
            along = along.max((du - theta).abs());
        }
    }

    let mut across: f64 = 0.0;
    for j in 2..m - 2 {
        for k in 0..len {
            let du = stencil(|jj| value(jj, k, u), j, da);
            let theta = coords
                .iter()
                .zip(&momenta)
                .map(|(&x, &p)| value(j, k, p) * stencil(|jj| value(jj, k, x), j, da))
                .sum::<f64>();
            across = across.max((du - theta).abs());
        }
    }

    // ambient grid spanning the bundle
    let ambient_form = sys.ambient_form()?;
    let mut axes = Vec::new();
    for c in ambient_form.coords() {
        let series: Vec<f64> = if c == &sys.parameter {
            bundle.trajectories.iter().flat_map(|t| t.samples[..len].iter().map(|s| s.parameter)).collect()
        } else {
            let i = idx(c);
            bundle.trajectories.iter().flat_map(|t| t.samples[..len].iter().map(move |s| s.state[i])).collect()
        };
        let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi - lo > 0.0 { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        axes.push(Axis::new(c.clone(), lo, hi, ambient_count.max(2)));
    }
    let ambient = GridSpec::new(axes).expect("ranges are ordered").points();
    let field = commutator_1form(&ambient_form, &Connection::flat(ambient_form.dim()))?;
    let totals: Vec<Expr> = field.components.values().map(|t| t.total()).collect();
    let off = max_abs_over(&totals, &ambient)?.0.max;

    let caustic_points = caustics(sys, bundle, len, &coords, canonical, da, caustic_tol)?;

    Ok(PseudostructureClosure {
        on_residual: along.max(across),
        on_residual_along: along,
        on_residual_across: across,
        off_residual: off,
        ambient_form,
        caustic_points,
    })
}

/// Zeros of the Jacobian of (parameter, member) ↦ position, found where
/// |J| ≤ tol or where J changes sign between consecutive samples. Only
/// defined when the position space is two-dimensional.
fn caustics(
    sys: &CharacteristicSystem,
    bundle: &Bundle,
    len: usize,
    coords: &[usize],
    canonical: bool,
    da: f64,
    tol: f64,
) -> Result<Vec<CausticPoint>, CharacteristicError> {
    let positions = coords.len() + usize::from(canonical);
    if positions != 2 {
        return Ok(Vec::new());
    }
    let rhs = Rhs::new(sys)?;
    let m = bundle.trajectories.len();
    let mut out = Vec::new();
    let mut buf = Vec::new();
    let mut dy = vec![0.0; sys.state.len()];
    let value = |j: usize, k: usize, i: usize| bundle.trajectories[j].samples[k].state[i];
    for j in 2..m - 2 {
        let mut prev: Option<f64> = None;
        for k in 0..len {
            let s = &bundle.trajectories[j].samples[k];
            rhs.eval(s.parameter, &s.state, &mut buf, &mut dy)?;
            let jac = if canonical {
                // d(t, x)/d(t, a) = ∂x/∂a
                stencil(|jj| value(jj, k, coords[0]), j, da)
            } else {
                let (c0, c1) = (coords[0], coords[1]);
                let a0 = stencil(|jj| value(jj, k, c0), j, da);
                let a1 = stencil(|jj| value(jj, k, c1), j, da);
                dy[c0] * a1 - dy[c1] * a0
            };
            let flips = prev.is_some_and(|p| (p < 0.0 && jac > 0.0) || (p > 0.0 && jac < 0.0));
            if jac.abs() <= tol || flips {
                out.push(CausticPoint {
                    parameter: s.parameter,
                    member: bundle.members[j],
                    jacobian: jac,
                    point: bundle.trajectories[j].point(s),
                });
            }
            prev = Some(jac);
        }
    }
    Ok(out)
}
