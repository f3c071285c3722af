//! Gas-dynamic evolutionary relation `ds = A₁ dξ¹ + A₂ dξ²` in the frame that
//! accompanies the flow, and the attribution of its commutator to sources of
//! instability.
//!
//! `ξ¹` runs along the particle path, so `∂/∂ξ¹ = Û·∇ + |U|⁻¹ ∂/∂t`. `ξ²` is the
//! unit normal carrying the part of
//!
//! ```text
//! B = grad h₀ + U × rot U − F + ∂U/∂t
//! ```
//!
//! orthogonal to `U`, and `A₂ = (B·n)/T`. The frame is frozen at each sample
//! point, so terms from the deformation of the trajectory manifold are
//! dropped and
//!
//! ```text
//! K₁₂ = n·∂(B/T)/∂ξ¹ − n·∇A₁
//! ```
//!
//! splits exactly over the four parts of `B` plus the transport term.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{cross, curl, dot, dot3, grad, norm, ScenarioError, Vec3};
use crate::expr::{parse, Expr, Point};
use crate::grid::GridSpec;
use crate::sample::evaluate_all;

const X: [&str; 3] = ["x", "y", "z"];
const T: &str = "t";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Source {
    Nonstationarity,
    Vorticity,
    Force,
    Transport,
}

impl Source {
    /// Tie-breaking order for dominance.
    pub const ORDER: [Source; 4] = [Source::Nonstationarity, Source::Vorticity, Source::Force, Source::Transport];

    pub fn name(self) -> &'static str {
        match self {
            Source::Nonstationarity => "nonstationarity",
            Source::Vorticity => "vorticity",
            Source::Force => "force",
            Source::Transport => "transport",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Regime {
    Hyperbolic,
    Elliptic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Structure {
    #[serde(rename = "equilibrium, no structure")]
    Equilibrium,
    #[serde(rename = "weak shock / shock wave")]
    ShockWave,
    #[serde(rename = "vortex / convective")]
    Vortex,
    #[serde(rename = "turbulent pulsation")]
    TurbulentPulsation,
}

impl Structure {
    pub fn label(self) -> &'static str {
        match self {
            Structure::Equilibrium => "equilibrium, no structure",
            Structure::ShockWave => "weak shock / shock wave",
            Structure::Vortex => "vortex / convective",
            Structure::TurbulentPulsation => "turbulent pulsation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct GasFlags {
    pub nonstationary: bool,
    pub multiply_connected: bool,
    pub nonpotential_force: bool,
    pub viscous_heat_conducting: bool,
}

/// Field expressions are in `x, y, z, t`; named constants are bound before
/// analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GasScenario {
    #[serde(default)]
    pub label: String,
    pub velocity: [String; 3],
    /// Static enthalpy h; `h₀ = U·U/2 + h`.
    #[serde(default = "zero_text")]
    pub enthalpy: String,
    #[serde(default = "zero3")]
    pub force: [String; 3],
    #[serde(default = "one_text")]
    pub temperature: String,
    #[serde(default = "one_text")]
    pub density: String,
    #[serde(default = "one_text")]
    pub sound_speed: String,
    #[serde(default = "zero3")]
    pub heat_flux: [String; 3],
    /// `stress[k][i] = τ_ki`.
    #[serde(default = "zero33")]
    pub stress: [[String; 3]; 3],
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    #[serde(default)]
    pub flags: GasFlags,
    pub grid: String,
}

fn zero_text() -> String {
    "0".into()
}
fn one_text() -> String {
    "1".into()
}
fn zero3() -> [String; 3] {
    ["0".into(), "0".into(), "0".into()]
}
fn zero33() -> [[String; 3]; 3] {
    [zero3(), zero3(), zero3()]
}

fn s3(a: &str, b: &str, c: &str) -> [String; 3] {
    [a.into(), b.into(), c.into()]
}

pub const PRESETS: [&str; 4] = ["uniform", "shock-tube", "subsonic-body", "boundary-layer"];

impl GasScenario {
    fn base(label: &str, velocity: [String; 3], grid: &str) -> Self {
        Self {
            label: label.into(),
            velocity,
            enthalpy: zero_text(),
            force: zero3(),
            temperature: one_text(),
            density: one_text(),
            sound_speed: one_text(),
            heat_flux: zero3(),
            stress: zero33(),
            constants: BTreeMap::new(),
            flags: GasFlags::default(),
            grid: grid.into(),
        }
    }

    pub fn preset(name: &str) -> Result<Self, ScenarioError> {
        let mut sc = match name {
            "uniform" => Self::base(name, s3("1", "0", "0"), "x=0:1:5,y=0:1:5,z=0:0:1,t=0:1:5"),
            "shock-tube" => {
                // a diaphragm-break pulse riding on a supersonic stream
                let mut sc = Self::base(name, s3("2", "eps*sin(omega*t)", "0"), "x=0:1:5,y=0:1:5,z=0:0:1,t=0:1:9");
                sc.constants = [("eps", 0.1), ("omega", 3.0)].map(|(k, v)| (k.to_string(), v)).into();
                sc.flags.nonstationary = true;
                sc
            }
            "subsonic-body" => {
                let mut sc = Self::base(name, s3("0.5", "0.2*sin(2*x)", "0"), "x=0:1.5:7,y=-1:1:5,z=0:0:1,t=0:0:1");
                sc.force = s3("0", "0.3*x", "0");
                sc.flags.multiply_connected = true;
                sc.flags.nonpotential_force = true;
                sc
            }
            "boundary-layer" => {
                // shear layer over a wall with heat conduction and viscous stress
                let mut sc = Self::base(name, s3("y", "0", "0"), "x=0:1:5,y=0.1:1:7,z=0:0:1,t=0:0:1");
                sc.temperature = "1 + 0.1*y".into();
                sc.heat_flux = s3("0", "-kappa*0.1*(1 + y)", "0");
                sc.stress = [s3("0", "mu", "0"), s3("mu", "0", "0"), zero3()];
                sc.constants = [("kappa", 0.5), ("mu", 0.2)].map(|(k, v)| (k.to_string(), v)).into();
                sc.flags.multiply_connected = true;
                sc.flags.viscous_heat_conducting = true;
                sc
            }
            _ => return Err(ScenarioError::UnknownPreset(name.into())),
        };
        sc.sound_speed = "1".into();
        Ok(sc)
    }

    fn field(&self, text: &str) -> Result<Expr, ScenarioError> {
        let e = parse(text)
            .map_err(|err| ScenarioError::Invalid(format!("`{text}`: {err}")))?
            .bind_constants(&self.constants);
        if let Some(v) = e.free_vars().into_iter().find(|v| !X.contains(&v.as_str()) && v != T) {
            return Err(ScenarioError::Invalid(format!("`{text}` uses unbound name `{v}`")));
        }
        Ok(e)
    }

    fn field3(&self, parts: &[String; 3]) -> Result<Vec3, ScenarioError> {
        Ok([self.field(&parts[0])?, self.field(&parts[1])?, self.field(&parts[2])?])
    }
}

/// Symbolic pieces of the gas-dynamic relation before the frame is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct GasRelation {
    pub velocity: Vec3,
    pub temperature: Expr,
    pub sound_speed: Expr,
    /// grad h₀, excluded from attribution but part of A₂.
    pub enthalpy_gradient: Vec3,
    /// Parts of B keyed by source; transport is absent here.
    pub sources: BTreeMap<Source, Vec3>,
    /// A₁, zero unless the gas is viscous and heat-conducting.
    pub a1: Expr,
}

impl GasRelation {
    pub fn total_b(&self) -> Vec3 {
        let mut b = self.enthalpy_gradient.clone();
        for v in self.sources.values() {
            for i in 0..3 {
                b[i] = Expr::add(b[i].clone(), v[i].clone());
            }
        }
        b
    }
}

pub fn build_gas_relation(sc: &GasScenario) -> Result<GasRelation, ScenarioError> {
    let u = sc.field3(&sc.velocity)?;
    let h = sc.field(&sc.enthalpy)?;
    let f = sc.field3(&sc.force)?;
    let temperature = sc.field(&sc.temperature)?;
    let rho = sc.field(&sc.density)?;
    let sound_speed = sc.field(&sc.sound_speed)?;

    let h0 = Expr::add(Expr::div(dot(&u, &u), Expr::constant(2.0)), h);
    let lamb = cross(&u, &curl(&u, &X));
    let mut sources = BTreeMap::new();
    sources.insert(Source::Nonstationarity, u.clone().map(|c| c.differentiate(T)));
    sources.insert(Source::Vorticity, lamb);
    sources.insert(Source::Force, f.map(Expr::neg));

    let a1 = if sc.flags.viscous_heat_conducting {
        let q = sc.field3(&sc.heat_flux)?;
        let tau = [sc.field3(&sc.stress[0])?, sc.field3(&sc.stress[1])?, sc.field3(&sc.stress[2])?];
        let grad_t = grad(&temperature, &X);
        let mut terms = Vec::new();
        for i in 0..3 {
            let flux = Expr::neg(Expr::div(q[i].clone(), temperature.clone()));
            terms.push(Expr::div(flux.differentiate(X[i]), rho.clone()));
            let q_over = Expr::div(q[i].clone(), Expr::mul(rho.clone(), temperature.clone()));
            terms.push(Expr::neg(Expr::mul(q_over, grad_t[i].clone())));
            for k in 0..3 {
                let dissipation = Expr::mul(tau[k][i].clone(), u[i].differentiate(X[k]));
                terms.push(Expr::div(dissipation, rho.clone()));
            }
        }
        Expr::sum(terms)
    } else {
        Expr::zero()
    };

    Ok(GasRelation {
        enthalpy_gradient: grad(&h0, &X),
        velocity: u,
        temperature,
        sound_speed,
        sources,
        a1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SourceTerm {
    pub source: Source,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InstabilityReport {
    pub label: String,
    /// Max |K₁₂| contribution per source, in tie-breaking order.
    pub terms: Vec<SourceTerm>,
    pub enthalpy_term: f64,
    pub max_commutator: f64,
    pub max_a1: f64,
    pub dominant: Option<Source>,
    pub regime: Regime,
    pub mach_at_worst: Option<f64>,
    pub worst_point: Option<Point>,
    pub predicted_structure: Structure,
    /// max |Σ per-source K − K from the assembled A₂|.
    pub additivity_residual: f64,
    /// Points where U = 0 or a field left its domain.
    pub flagged_points: usize,
    pub tolerance: f64,
}

fn spacetime_gradient(e: &Expr) -> [Expr; 4] {
    [e.differentiate("x"), e.differentiate("y"), e.differentiate("z"), e.differentiate(T)]
}

/// Frozen-frame commutator terms at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GasPointTerms {
    pub speed: f64,
    pub sound_speed: f64,
    pub a1: f64,
    pub enthalpy: f64,
    /// Per-source K₁₂ in `Source::ORDER`.
    pub terms: [f64; 4],
    /// K₁₂ from the assembled A₂ and A₁.
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum GasPoint {
    /// U = 0, T ≤ 0 or a field left its domain.
    Flagged,
    /// No normal direction carries any part of B.
    NoFrame { a1: f64 },
    Terms(GasPointTerms),
}

/// Evaluates the frozen-frame commutator at every grid point.
pub fn gas_point_terms(sc: &GasScenario, tol: f64) -> Result<(Vec<Point>, Vec<GasPoint>), ScenarioError> {
    let rel = build_gas_relation(sc)?;
    let grid = GridSpec::parse(&sc.grid)?;
    for name in X.iter().chain([&T]) {
        if grid.axis(name).is_none() {
            return Err(ScenarioError::Invalid(format!("grid lacks axis `{name}`")));
        }
    }
    let points = grid.points();

    // Layout of the flat evaluation list.
    let b = rel.total_b();
    let mut exprs: Vec<Expr> = rel.velocity.to_vec();
    exprs.extend(b.iter().cloned());
    exprs.push(rel.temperature.clone());
    exprs.push(rel.sound_speed.clone());
    exprs.push(rel.a1.clone());
    exprs.extend(spacetime_gradient(&rel.a1));
    // ∂(part/T) along (x, y, z, t): enthalpy, then sources in order, then total
    let mut parts: Vec<Vec3> = vec![rel.enthalpy_gradient.clone()];
    parts.extend(Source::ORDER[..3].iter().map(|s| rel.sources[s].clone()));
    parts.push(b.clone());
    for part in &parts {
        for c in part {
            exprs.extend(spacetime_gradient(&Expr::div(c.clone(), rel.temperature.clone())));
        }
    }
    const U0: usize = 0;
    const B0: usize = 3;
    const TEMP: usize = 6;
    const SOUND: usize = 7;
    const A1: usize = 8;
    const DA1: usize = 9;
    const PARTS: usize = 13;
    const TOTAL: usize = 4;

    let values = evaluate_all(&exprs, &points)?;
    let rows = values
        .iter()
        .map(|v| {
            let Ok(v) = v else {
                return GasPoint::Flagged;
            };
            let u = [v[U0], v[U0 + 1], v[U0 + 2]];
            let speed = norm(u);
            if !(speed > 0.0) || !(v[TEMP] > 0.0) {
                return GasPoint::Flagged;
            }
            let e1 = u.map(|c| c / speed);
            // derivative along ξ¹ of the i-th component of part p
            let along = |p: usize, i: usize| {
                let g = &v[PARTS + 12 * p + 4 * i..PARTS + 12 * p + 4 * i + 4];
                e1[0] * g[0] + e1[1] * g[1] + e1[2] * g[2] + g[3] / speed
            };
            let normal_of = |w: [f64; 3]| {
                let w_perp = [0, 1, 2].map(|i| w[i] - dot3(w, e1) * e1[i]);
                let m = norm(w_perp);
                (m > tol).then(|| w_perp.map(|c| c / m))
            };
            let b_here = [v[B0], v[B0 + 1], v[B0 + 2]];
            let Some(n) = normal_of(b_here).or_else(|| normal_of([0, 1, 2].map(|i| along(TOTAL, i)))) else {
                return GasPoint::NoFrame { a1: v[A1] };
            };
            let k_of = |p: usize| dot3(n, [0, 1, 2].map(|i| along(p, i)));
            let transport = -dot3(n, [v[DA1], v[DA1 + 1], v[DA1 + 2]]);
            GasPoint::Terms(GasPointTerms {
                speed,
                sound_speed: v[SOUND],
                a1: v[A1],
                enthalpy: k_of(0),
                terms: [k_of(1), k_of(2), k_of(3), transport],
                total: k_of(TOTAL) + transport,
            })
        })
        .collect();
    Ok((points, rows))
}

/// Aggregates the per-point terms and applies the decision table.
pub fn classify_instability(sc: &GasScenario, tol: f64) -> Result<InstabilityReport, ScenarioError> {
    let (points, rows) = gas_point_terms(sc, tol)?;
    let mut flagged = 0;
    let mut max = [0.0_f64; 4];
    let mut enthalpy_term: f64 = 0.0;
    let mut max_k: f64 = 0.0;
    let mut max_a1: f64 = 0.0;
    let mut additivity: f64 = 0.0;
    let mut worst: Option<(usize, f64, f64)> = None;
    for (idx, row) in rows.iter().enumerate() {
        let t = match row {
            GasPoint::Flagged => {
                flagged += 1;
                continue;
            }
            GasPoint::NoFrame { a1 } => {
                max_a1 = max_a1.max(a1.abs());
                continue;
            }
            GasPoint::Terms(t) => t,
        };
        max_a1 = max_a1.max(t.a1.abs());
        let summed = t.enthalpy + t.terms.iter().sum::<f64>();
        additivity = additivity.max((summed - t.total).abs());
        enthalpy_term = enthalpy_term.max(t.enthalpy.abs());
        for (m, k) in max.iter_mut().zip(t.terms) {
            *m = m.max(k.abs());
        }
        if worst.map_or(true, |(_, w, _)| t.total.abs() > w) {
            worst = Some((idx, t.total.abs(), t.speed / t.sound_speed));
        }
        max_k = max_k.max(t.total.abs());
    }

    let terms: Vec<SourceTerm> = Source::ORDER
        .iter()
        .zip(max)
        .map(|(&source, max)| SourceTerm { source, max })
        .collect();
    let dominant = terms
        .iter()
        .fold(None::<&SourceTerm>, |best, t| match best {
            Some(b) if b.max >= t.max => Some(b),
            _ => Some(t),
        })
        .filter(|t| t.max > tol)
        .map(|t| t.source);

    let mach = worst.map(|(_, _, m)| m);
    let worst_point = worst.map(|(i, _, _)| points[i].clone());
    let regime = if mach.is_some_and(|m| m > 1.0) { Regime::Hyperbolic } else { Regime::Elliptic };
    let everything_small = max_k <= tol && max.iter().all(|m| *m <= tol) && enthalpy_term <= tol;
    let predicted_structure = if everything_small && max_a1 <= tol {
        Structure::Equilibrium
    } else if max_a1 > tol {
        Structure::TurbulentPulsation
    } else {
        match regime {
            Regime::Hyperbolic => Structure::ShockWave,
            Regime::Elliptic => Structure::Vortex,
        }
    };

    Ok(InstabilityReport {
        label: sc.label.clone(),
        terms,
        enthalpy_term,
        max_commutator: max_k,
        max_a1,
        dominant,
        regime,
        mach_at_worst: mach,
        worst_point,
        predicted_structure,
        additivity_residual: additivity,
        flagged_points: flagged,
        tolerance: tol,
    })
}

/// Plot-ready rows: coordinates, then each term, blank where undefined.
pub fn gas_csv(points: &[Point], rows: &[GasPoint]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("x,y,z,t,status,speed,a1,enthalpy,nonstationarity,vorticity,force,transport,total\n");
    for (p, row) in points.iter().zip(rows) {
        for name in ["x", "y", "z", "t"] {
            let _ = write!(out, "{:.16e},", p.get(name).unwrap_or(f64::NAN));
        }
        match row {
            GasPoint::Flagged => out.push_str("flagged,,,,,,,,"),
            GasPoint::NoFrame { a1 } => {
                let _ = write!(out, "no-frame,,{a1:.16e},,,,,,");
            }
            GasPoint::Terms(t) => {
                let _ = write!(out, "ok,{:.16e},{:.16e},{:.16e}", t.speed, t.a1, t.enthalpy);
                for k in t.terms {
                    let _ = write!(out, ",{k:.16e}");
                }
                let _ = write!(out, ",{:.16e}", t.total);
            }
        }
        out.push('\n');
    }
    out
}
