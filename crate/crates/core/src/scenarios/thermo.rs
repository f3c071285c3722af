//! Ideal-gas thermodynamics on the (T, V) plane: the first-law form
//! `dE + p dV` is not a differential, `1/T` turns it into `ds`, and the
//! resulting entropy fixes the isentropes `p/ρ^γ = const` and the sound speed
//! `a² = γp/ρ`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::expr::{parse, CompiledExpr, Expr, Point};
use crate::forms::{max_abs_difference, DifferentialForm};
use crate::grid::{Axis, GridSpec};
use crate::relations::{analyze_relation, find_integrating_factor, FactorSearch, FunctionalRelation, NonidentityReport};

const COORDS: [&str; 2] = ["T", "V"];
pub const FACTOR_CANDIDATES: [&str; 4] = ["1", "1/T", "1/V", "1/p"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct ThermoScenario {
    pub r: f64,
    pub c_v: f64,
    pub temperature: [f64; 2],
    pub volume: [f64; 2],
    pub count: usize,
    /// Isentropes are drawn through these (ρ, p) states.
    pub isentropes: Vec<[f64; 2]>,
    pub isentrope_samples: usize,
}

impl Default for ThermoScenario {
    fn default() -> Self {
        Self {
            r: 1.0,
            c_v: 2.5,
            temperature: [1.0, 10.0],
            volume: [0.5, 5.0],
            count: 20,
            isentropes: vec![[1.0, 1.0], [0.5, 2.0], [2.0, 0.5]],
            isentrope_samples: 20,
        }
    }
}

impl ThermoScenario {
    pub fn preset(name: &str) -> Result<Self, ScenarioError> {
        match name {
            "ideal-gas" => Ok(Self::default()),
            _ => Err(ScenarioError::UnknownPreset(name.into())),
        }
    }

    pub fn gamma(&self) -> f64 {
        1.0 + self.r / self.c_v
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.into()));
        if !(self.r > 0.0) || !(self.c_v > 0.0) {
            return bad("R and c_v must be positive");
        }
        if !(self.temperature[0] > 0.0) || !(self.volume[0] > 0.0) {
            return bad("the (T, V) domain must lie in T > 0, V > 0");
        }
        if self.isentropes.iter().any(|s| !(s[0] > 0.0 && s[1] > 0.0)) {
            return bad("isentrope states need ρ > 0 and p > 0");
        }
        if self.isentrope_samples < 2 {
            return bad("need at least 2 samples per isentrope");
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec, ScenarioError> {
        Ok(GridSpec::new(vec![
            Axis::new("T", self.temperature[0], self.temperature[1], self.count),
            Axis::new("V", self.volume[0], self.volume[1], self.count),
        ])?)
    }

    fn constants(&self) -> BTreeMap<String, f64> {
        [("R", self.r), ("c_v", self.c_v), ("gamma", self.gamma())]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    fn expr(&self, text: &str) -> Expr {
        parse(text).expect("built-in expression").bind_constants(&self.constants())
    }

    pub fn energy(&self) -> Expr {
        self.expr("c_v*T")
    }

    pub fn pressure(&self) -> Expr {
        self.expr("R*T/V")
    }

    pub fn entropy(&self) -> Expr {
        self.expr("c_v*ln(T) + R*ln(V)")
    }

    /// `dE + p dV` on (T, V).
    pub fn first_law_form(&self) -> DifferentialForm {
        let e = self.energy();
        let coeffs = vec![e.differentiate("T"), Expr::add(e.differentiate("V"), self.pressure())];
        DifferentialForm::one_form(&COORDS, coeffs).expect("two coordinates")
    }

    pub fn factor_candidates(&self) -> Vec<Expr> {
        let mut subst = BTreeMap::new();
        subst.insert("p".to_string(), self.pressure());
        FACTOR_CANDIDATES.iter().map(|c| parse(c).expect("candidate").substitute(&subst)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IsentropeCheck {
    pub density: f64,
    pub pressure: f64,
    pub constant: f64,
    /// max |p/ρ^γ − K| along the sampled isentrope.
    pub max_deviation: f64,
    /// max |s − s₀| with s evaluated through T = pV/R.
    pub max_entropy_deviation: f64,
    /// max |a² − Δp/Δρ| / a² with a central difference along the isentrope.
    pub max_sound_speed_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ThermoReport {
    pub gamma: f64,
    pub first_law: NonidentityReport,
    pub first_law_nonidentical: bool,
    pub factor_search: FactorSearch,
    pub factor_found: Option<String>,
    pub entropy: Expr,
    /// max |ds − μ(dE + p dV)| over the grid.
    pub entropy_differential_residual: f64,
    /// max |s(T,V) − s(T₀,V₀) − ∫ μ(dE + p dV)| with the integral taken along
    /// grid-aligned paths from the first grid corner.
    pub entropy_reconstruction_residual: f64,
    pub second_law_holds: bool,
    pub sound_speed_squared: Expr,
    pub isentropes: Vec<IsentropeCheck>,
    pub sound_speed_matches: bool,
    pub isentrope_constant: bool,
    pub tolerance: f64,
}

/// Tolerances for the finite-difference sound-speed check.
pub const SOUND_SPEED_REL_TOL: f64 = 1e-6;
pub const ISENTROPE_TOL: f64 = 1e-9;

pub fn run_thermo(sc: &ThermoScenario, grid: &GridSpec, tol: f64) -> Result<ThermoReport, ScenarioError> {
    sc.validate()?;
    let points = grid.points();
    let theta = sc.first_law_form();

    let rel = FunctionalRelation::new("dE + p dV", theta.clone());
    let first_law = analyze_relation(&rel, &points, tol)?;

    let candidates = sc.factor_candidates();
    let search = find_integrating_factor(&theta, &candidates, &points, tol);
    let factor_found = search.found.map(|i| FACTOR_CANDIDATES[i].to_string());

    let entropy = sc.entropy();
    let (differential, reconstruction) = match &search.factor {
        Some(mu) => {
            let exact = theta.scale(mu);
            let ds = DifferentialForm::scalar(&COORDS, entropy.clone())?.d();
            let diff = max_abs_difference(&ds, &exact, &points)?;
            (diff, reconstruction_residual(&entropy, &exact, grid)?)
        }
        None => (f64::INFINITY, f64::INFINITY),
    };
    let second_law_holds = search.found.is_some() && differential <= tol && reconstruction <= tol;

    let a2 = sc.expr("gamma*p/rho");
    let isentropes = sc
        .isentropes
        .iter()
        .map(|&[rho, p]| isentrope(sc, &a2, &entropy, rho, p))
        .collect::<Result<Vec<_>, _>>()?;
    let sound_speed_matches = isentropes.iter().all(|c| c.max_sound_speed_relative_error <= SOUND_SPEED_REL_TOL);
    let isentrope_constant = isentropes
        .iter()
        .all(|c| c.max_deviation <= ISENTROPE_TOL && c.max_entropy_deviation <= ISENTROPE_TOL);

    Ok(ThermoReport {
        gamma: sc.gamma(),
        first_law_nonidentical: !first_law.identical,
        first_law,
        factor_search: search,
        factor_found,
        entropy,
        entropy_differential_residual: differential,
        entropy_reconstruction_residual: reconstruction,
        second_law_holds,
        sound_speed_squared: a2,
        isentropes,
        sound_speed_matches,
        isentrope_constant,
        tolerance: tol,
    })
}

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];
const PANELS: usize = 64;

fn integrate(f: impl Fn(f64) -> Result<f64, crate::expr::EvalError>, a: f64, b: f64) -> Result<f64, crate::expr::EvalError> {
    let h = (b - a) / PANELS as f64;
    let mut total = 0.0;
    for k in 0..PANELS {
        let mid = a + (k as f64 + 0.5) * h;
        for (x, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
            total += w * f(mid + 0.5 * h * x)?;
        }
    }
    Ok(0.5 * h * total)
}

/// Rebuilds s by quadrature of the exact form and compares up to the
/// additive constant fixed at the first grid corner.
fn reconstruction_residual(entropy: &Expr, exact: &DifferentialForm, grid: &GridSpec) -> Result<f64, ScenarioError> {
    let slots: Vec<String> = COORDS.iter().map(|s| s.to_string()).collect();
    let a_t: CompiledExpr = exact.coefficient(&[0]).compile(&slots)?;
    let a_v: CompiledExpr = exact.coefficient(&[1]).compile(&slots)?;
    let s = entropy.compile(&slots)?;
    let (t_axis, v_axis) = (
        grid.axis("T").ok_or_else(|| ScenarioError::Invalid("grid needs a T axis".into()))?,
        grid.axis("V").ok_or_else(|| ScenarioError::Invalid("grid needs a V axis".into()))?,
    );
    let (t0, v0) = (t_axis.lo, v_axis.lo);
    let s0 = s.eval(&[t0, v0])?;
    let mut worst: f64 = 0.0;
    for i in 0..t_axis.count {
        let t = t_axis.value(i);
        let along_t = integrate(|tau| a_t.eval(&[tau, v0]), t0, t)?;
        for j in 0..v_axis.count {
            let v = v_axis.value(j);
            let along_v = integrate(|nu| a_v.eval(&[t, nu]), v0, v)?;
            let rebuilt = s0 + along_t + along_v;
            worst = worst.max((rebuilt - s.eval(&[t, v])?).abs());
        }
    }
    Ok(worst)
}

fn isentrope(sc: &ThermoScenario, a2: &Expr, entropy: &Expr, rho0: f64, p0: f64) -> Result<IsentropeCheck, ScenarioError> {
    let gamma = sc.gamma();
    let k = p0 / rho0.powf(gamma);
    let along = |rho: f64| k * rho.powf(gamma);
    let state = |rho: f64| {
        let v = 1.0 / rho;
        Point::new().with("T", along(rho) * v / sc.r).with("V", v)
    };
    let s0 = entropy.evaluate(&state(rho0))?;
    let axis = Axis::new("rho", 0.5 * rho0, 2.0 * rho0, sc.isentrope_samples);
    let mut check = IsentropeCheck {
        density: rho0,
        pressure: p0,
        constant: k,
        max_deviation: 0.0,
        max_entropy_deviation: 0.0,
        max_sound_speed_relative_error: 0.0,
    };
    for i in 0..axis.count {
        let rho = axis.value(i);
        let p = along(rho);
        check.max_deviation = check.max_deviation.max((p / rho.powf(gamma) - k).abs());
        let s = entropy.evaluate(&state(rho))?;
        check.max_entropy_deviation = check.max_entropy_deviation.max((s - s0).abs());
        let h = 1e-4 * rho;
        let slope = (along(rho + h) - along(rho - h)) / (2.0 * h);
        let exact = a2.evaluate(&Point::new().with("p", p).with("rho", rho))?;
        let rel = ((exact - slope) / exact).abs();
        check.max_sound_speed_relative_error = check.max_sound_speed_relative_error.max(rel);
    }
    Ok(check)
}
