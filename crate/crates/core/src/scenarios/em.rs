//! Poynting-vector analysis of given field strengths `E`, `H`.
//!
//! The local direction `l₁` follows `S = E × H`. The condition
//! `Q^e dt + Q'^i dl₁ = 0` is tested pointwise as `Q^e + c Q'^i = 0` (with
//! `dl₁ = c dt`), where `Q^e = ρ U·E`, `Q^i = ρ(E + U × H / c)` and the prime
//! is the projection on `l₁`. Where it holds, the integrating direction
//! `−(∂|S|/∂t)/(∂|S|/∂l₁)` is recovered and compared with `c`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{cross, dot3, norm, ScenarioError, Vec3};
use crate::expr::{parse, Expr, Point};
use crate::grid::GridSpec;
use crate::sample::evaluate_all;

const COORDS: [&str; 4] = ["x", "y", "z", "t"];

/// Relative tolerance for the recovered direction against `c`.
pub const DIRECTION_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct EmScenario {
    #[serde(default)]
    pub label: String,
    pub electric: [String; 3],
    pub magnetic: [String; 3],
    #[serde(default = "zero_text")]
    pub charge_density: String,
    #[serde(default = "zero3")]
    pub velocity: [String; 3],
    pub c: f64,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    pub grid: String,
}

fn zero_text() -> String {
    "0".into()
}
fn zero3() -> [String; 3] {
    ["0".into(), "0".into(), "0".into()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Waveform {
    Cos,
    GaussianCos,
}

impl Waveform {
    pub const ALL: [Waveform; 2] = [Waveform::Cos, Waveform::GaussianCos];

    fn profile(self, phase: &str) -> String {
        match self {
            Waveform::Cos => format!("cos(k*({phase}))"),
            Waveform::GaussianCos => format!("exp(-(({phase})/w)^2)*cos(k*({phase}))"),
        }
    }
}

pub const PRESETS: [&str; 4] = ["plane-wave", "reversed", "static", "charged"];
const DEFAULT_C: f64 = 3.0;
const DEFAULT_GRID: &str = "x=0:6:25,y=0:0:1,z=0:0:1,t=0:1:5";

impl EmScenario {
    /// `E = (0, A f, 0)`, `H = (0, 0, A f)` with `f` of `x − ct`, or of `x + ct`
    /// when `reversed`; the field orientation is kept, so `S` stays along +x.
    pub fn plane_wave(waveform: Waveform, amplitude: f64, reversed: bool) -> Self {
        let phase = if reversed { "x + c*t" } else { "x - c*t" };
        let f = format!("A*{}", waveform.profile(phase));
        Self {
            label: if reversed { "reversed" } else { "plane-wave" }.into(),
            electric: ["0".into(), f.clone(), "0".into()],
            magnetic: ["0".into(), "0".into(), f],
            charge_density: zero_text(),
            velocity: zero3(),
            c: DEFAULT_C,
            constants: [("A", amplitude), ("k", 1.0), ("w", 4.0)].map(|(k, v)| (k.to_string(), v)).into(),
            grid: DEFAULT_GRID.into(),
        }
    }

    pub fn preset(name: &str) -> Result<Self, ScenarioError> {
        match name {
            "plane-wave" => Ok(Self::plane_wave(Waveform::Cos, 1.0, false)),
            "reversed" => Ok(Self::plane_wave(Waveform::Cos, 1.0, true)),
            "static" => Ok(Self {
                label: name.into(),
                electric: ["0".into(), "1".into(), "0".into()],
                magnetic: ["0".into(), "0".into(), "1".into()],
                charge_density: zero_text(),
                velocity: zero3(),
                c: DEFAULT_C,
                constants: BTreeMap::new(),
                grid: DEFAULT_GRID.into(),
            }),
            "charged" => {
                // matter moving across the wave makes the energetic and force
                // actions nonzero
                let mut sc = Self::plane_wave(Waveform::Cos, 1.0, false);
                sc.label = name.into();
                sc.charge_density = "0.5".into();
                sc.velocity = ["0".into(), "0.5".into(), "0".into()];
                Ok(sc)
            }
            _ => Err(ScenarioError::UnknownPreset(name.into())),
        }
    }

    fn constants(&self) -> BTreeMap<String, f64> {
        let mut m = self.constants.clone();
        m.insert("c".into(), self.c);
        m
    }

    fn field(&self, text: &str) -> Result<Expr, ScenarioError> {
        let e = parse(text)
            .map_err(|err| ScenarioError::Invalid(format!("`{text}`: {err}")))?
            .bind_constants(&self.constants());
        if let Some(v) = e.free_vars().into_iter().find(|v| !COORDS.contains(&v.as_str())) {
            return Err(ScenarioError::Invalid(format!("`{text}` uses unbound name `{v}`")));
        }
        Ok(e)
    }

    fn field3(&self, parts: &[String; 3]) -> Result<Vec3, ScenarioError> {
        Ok([self.field(&parts[0])?, self.field(&parts[1])?, self.field(&parts[2])?])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DirectionStatus {
    #[serde(rename = "derived")]
    Derived,
    #[serde(rename = "no direction derivable")]
    NoDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EmReport {
    pub label: String,
    pub c: f64,
    pub poynting: Vec3,
    /// The condition fails somewhere on the grid.
    pub relation_nonidentical: bool,
    /// max |Q^e + c Q'^i| where l₁ is defined.
    pub condition_residual_max: f64,
    /// Adjacent grid points between which the condition residual changes sign.
    pub condition_zero_crossings: usize,
    pub status: DirectionStatus,
    /// Mean over valid points.
    pub integrating_direction: Option<f64>,
    pub direction_min: Option<f64>,
    pub direction_max: Option<f64>,
    pub matches_c: bool,
    pub valid_points: usize,
    /// |S| ≤ tol, so l₁ is undefined.
    pub excluded_no_flux: usize,
    /// ∂|S|/∂l₁ ≈ 0.
    pub excluded_flat: usize,
    /// Condition residual above tol.
    pub excluded_condition: usize,
    pub excluded_domain: usize,
    pub tolerance: f64,
}

/// Per-point outcome of the direction analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum EmPoint {
    Domain,
    /// |S| ≤ tol, so l₁ is undefined.
    NoFlux,
    /// Condition residual above tol.
    Condition { flux: f64, residual: f64 },
    /// ∂|S|/∂l₁ ≈ 0.
    Flat { flux: f64, residual: f64 },
    Direction { flux: f64, residual: f64, direction: f64 },
}

impl EmPoint {
    fn residual(&self) -> Option<f64> {
        match *self {
            EmPoint::Condition { residual, .. } | EmPoint::Flat { residual, .. } | EmPoint::Direction { residual, .. } => {
                Some(residual)
            }
            EmPoint::Domain | EmPoint::NoFlux => None,
        }
    }
}

fn em_fields(sc: &EmScenario) -> Result<(Vec3, Vec<Expr>, GridSpec), ScenarioError> {
    if !(sc.c > 0.0) {
        return Err(ScenarioError::Invalid("c must be positive".into()));
    }
    let e = sc.field3(&sc.electric)?;
    let h = sc.field3(&sc.magnetic)?;
    let rho = sc.field(&sc.charge_density)?;
    let u = sc.field3(&sc.velocity)?;
    let grid = GridSpec::parse(&sc.grid)?;
    for name in COORDS {
        if grid.axis(name).is_none() {
            return Err(ScenarioError::Invalid(format!("grid lacks axis `{name}`")));
        }
    }
    let s = cross(&e, &h);
    let q_e = Expr::mul(rho.clone(), super::dot(&u, &e));
    let u_x_h = cross(&u, &h);
    let q_i: Vec3 = [0, 1, 2].map(|i| {
        Expr::mul(rho.clone(), Expr::add(e[i].clone(), Expr::div(u_x_h[i].clone(), Expr::constant(sc.c))))
    });
    // S, ∂S/∂x, ∂S/∂y, ∂S/∂z, ∂S/∂t, Q^e, Q^i
    let mut exprs: Vec<Expr> = s.to_vec();
    for var in COORDS {
        exprs.extend(s.iter().map(|c| c.differentiate(var)));
    }
    exprs.push(q_e);
    exprs.extend(q_i.iter().cloned());
    Ok((s, exprs, grid))
}

/// Classifies every grid point and recovers the direction where possible.
pub fn em_points(sc: &EmScenario, tol: f64) -> Result<(Vec<Point>, Vec<EmPoint>), ScenarioError> {
    let (_, exprs, grid) = em_fields(sc)?;
    let points = grid.points();
    let values = evaluate_all(&exprs, &points)?;
    let rows = values
        .iter()
        .map(|v| {
            let Ok(v) = v else {
                return EmPoint::Domain;
            };
            let sv = [v[0], v[1], v[2]];
            let flux = norm(sv);
            if flux <= tol {
                return EmPoint::NoFlux;
            }
            let l1 = sv.map(|c| c / flux);
            let partial = |k: usize| dot3(sv, [v[3 + 3 * k], v[4 + 3 * k], v[5 + 3 * k]]) / flux;
            let d_t = partial(3);
            let d_l1 = l1[0] * partial(0) + l1[1] * partial(1) + l1[2] * partial(2);
            let residual = v[15] + sc.c * dot3([v[16], v[17], v[18]], l1);
            if residual.abs() > tol {
                EmPoint::Condition { flux, residual }
            } else if d_l1.abs() <= tol {
                EmPoint::Flat { flux, residual }
            } else {
                EmPoint::Direction { flux, residual, direction: -d_t / d_l1 }
            }
        })
        .collect();
    Ok((points, rows))
}

pub fn run_em(sc: &EmScenario, tol: f64) -> Result<EmReport, ScenarioError> {
    let (s, _, grid) = em_fields(sc)?;
    let (_, rows) = em_points(sc, tol)?;
    let mut report = EmReport {
        label: sc.label.clone(),
        c: sc.c,
        poynting: s,
        relation_nonidentical: false,
        condition_residual_max: 0.0,
        condition_zero_crossings: 0,
        status: DirectionStatus::NoDirection,
        integrating_direction: None,
        direction_min: None,
        direction_max: None,
        matches_c: false,
        valid_points: 0,
        excluded_no_flux: 0,
        excluded_flat: 0,
        excluded_condition: 0,
        excluded_domain: 0,
        tolerance: tol,
    };
    let mut directions = Vec::new();
    for row in &rows {
        match *row {
            EmPoint::Domain => report.excluded_domain += 1,
            EmPoint::NoFlux => report.excluded_no_flux += 1,
            EmPoint::Condition { .. } => report.excluded_condition += 1,
            EmPoint::Flat { .. } => report.excluded_flat += 1,
            EmPoint::Direction { direction, .. } => directions.push(direction),
        }
        if let Some(r) = row.residual() {
            report.condition_residual_max = report.condition_residual_max.max(r.abs());
        }
    }
    report.relation_nonidentical = report.condition_residual_max > tol;
    report.condition_zero_crossings = grid
        .neighbor_pairs()
        .into_iter()
        .filter(|&(a, b)| match (rows[a].residual(), rows[b].residual()) {
            (Some(x), Some(y)) => (x < 0.0 && y > 0.0) || (x > 0.0 && y < 0.0),
            _ => false,
        })
        .count();
    report.valid_points = directions.len();
    if !directions.is_empty() {
        let mean = directions.iter().sum::<f64>() / directions.len() as f64;
        report.status = DirectionStatus::Derived;
        report.integrating_direction = Some(mean);
        report.direction_min = directions.iter().copied().reduce(f64::min);
        report.direction_max = directions.iter().copied().reduce(f64::max);
        report.matches_c = directions.iter().all(|d| ((d - sc.c) / sc.c).abs() <= DIRECTION_REL_TOL);
    }
    Ok(report)
}

/// Plot-ready rows: coordinates, status, |S|, condition residual, direction.
pub fn em_csv(points: &[Point], rows: &[EmPoint]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("x,y,z,t,status,flux,residual,direction\n");
    for (p, row) in points.iter().zip(rows) {
        for name in COORDS {
            let _ = write!(out, "{:.16e},", p.get(name).unwrap_or(f64::NAN));
        }
        let _ = match *row {
            EmPoint::Domain => write!(out, "domain,,,"),
            EmPoint::NoFlux => write!(out, "no-flux,,,"),
            EmPoint::Condition { flux, residual } => write!(out, "condition,{flux:.16e},{residual:.16e},"),
            EmPoint::Flat { flux, residual } => write!(out, "flat,{flux:.16e},{residual:.16e},"),
            EmPoint::Direction { flux, residual, direction } => {
                write!(out, "direction,{flux:.16e},{residual:.16e},{direction:.16e}")
            }
        };
        out.push('\n');
    }
    out
}

/// Bound on the difference between a recovered direction and a target speed,
/// relative to the speed.
pub fn relative_spread(report: &EmReport, target: f64) -> Option<f64> {
    let lo = report.direction_min?;
    let hi = report.direction_max?;
    Some(((lo - target).abs().max((hi - target).abs())) / target.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    #[test]
    fn plane_wave_recovers_c() {
        let r = run_em(&EmScenario::preset("plane-wave").unwrap(), TOL).unwrap();
        assert_eq!(r.status, DirectionStatus::Derived);
        assert!(r.matches_c);
        assert!(!r.relation_nonidentical);
        assert!(relative_spread(&r, 3.0).unwrap() <= DIRECTION_REL_TOL);
    }

    #[test]
    fn amplitude_and_waveform_do_not_matter() {
        for w in Waveform::ALL {
            for a in [1.0, 2.0, 5.0] {
                let r = run_em(&EmScenario::plane_wave(w, a, false), TOL).unwrap();
                assert!(r.matches_c, "{w:?} {a}");
            }
        }
    }

    #[test]
    fn reversed_wave_gives_minus_c() {
        let r = run_em(&EmScenario::preset("reversed").unwrap(), TOL).unwrap();
        assert!(!r.matches_c);
        assert!(relative_spread(&r, -3.0).unwrap() <= DIRECTION_REL_TOL);
    }

    #[test]
    fn physical_reversed_wave_moves_along_its_own_flux() {
        // flipping H turns S around, and the speed along S is again +c
        let mut sc = EmScenario::plane_wave(Waveform::Cos, 1.0, true);
        sc.magnetic[2] = format!("-({})", sc.magnetic[2]);
        let r = run_em(&sc, TOL).unwrap();
        assert!(r.matches_c);
    }

    #[test]
    fn static_fields_have_no_direction() {
        let r = run_em(&EmScenario::preset("static").unwrap(), TOL).unwrap();
        assert_eq!(r.status, DirectionStatus::NoDirection);
        assert_eq!(r.integrating_direction, None);
        assert_eq!(r.excluded_flat, 125);
        let (points, rows) = em_points(&EmScenario::preset("static").unwrap(), TOL).unwrap();
        let csv = em_csv(&points, &rows);
        assert_eq!(csv.lines().count(), 126);
        assert!(csv.lines().nth(1).unwrap().contains(",flat,"));
    }

    #[test]
    fn charged_matter_breaks_the_condition_discretely() {
        let r = run_em(&EmScenario::preset("charged").unwrap(), TOL).unwrap();
        assert!(r.relation_nonidentical);
        assert!(r.condition_zero_crossings > 0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(EmScenario::preset("laser"), Err(ScenarioError::UnknownPreset(_))));
        let mut sc = EmScenario::preset("static").unwrap();
        sc.c = 0.0;
        assert!(matches!(run_em(&sc, TOL), Err(ScenarioError::Invalid(_))));
    }
}
