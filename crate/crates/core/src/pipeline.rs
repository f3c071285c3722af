//! End-to-end runs of parsed input blocks.

use std::fmt::Write as _;

use serde::Serialize;

use crate::characteristics::{
    build_canonical_system, build_characteristic_system, integrate_bundle, members, verify_closure_on_pseudostructure,
    CharacteristicError, InitialStrip, PseudostructureClosure, Trajectory, TrajectoryFailure,
};
use crate::dsl::{CharacteristicsSpec, Equation};
use crate::expr::{Expr, Point};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MemberFailure {
    pub member: f64,
    pub failure: TrajectoryFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CharacteristicsRun {
    pub equation: &'static str,
    pub function: Expr,
    pub parameter: String,
    pub state: Vec<String>,
    pub step: f64,
    pub steps: usize,
    pub members: Vec<f64>,
    /// Final state of each member.
    pub endpoints: Vec<Point>,
    pub failures: Vec<MemberFailure>,
    /// Max |E − E₀| over all members, for Hamilton–Jacobi input.
    pub energy_drift: Option<f64>,
    pub closure: Option<PseudostructureClosure>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub trajectories: Vec<Trajectory>,
    #[serde(skip)]
    pub bundled: bool,
}

impl CharacteristicsRun {
    /// One trajectory: `parameter,state...`. A bundle gets a leading `a`
    /// column with the member value.
    pub fn to_csv(&self) -> String {
        if let (false, [single]) = (self.bundled, self.trajectories.as_slice()) {
            return single.to_csv();
        }
        let mut out = String::from("a,");
        out.push_str(&self.parameter);
        for n in &self.state {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (a, t) in self.members.iter().zip(&self.trajectories) {
            for s in &t.samples {
                let _ = write!(out, "{a:.16e},{:.16e}", s.parameter);
                for v in &s.state {
                    let _ = write!(out, ",{v:.16e}");
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Integrates the block's trajectory or bundle and, for a bundle, checks
/// closure on the swept surface.
pub fn run_characteristics(spec: &CharacteristicsSpec) -> Result<CharacteristicsRun, CharacteristicError> {
    let (sys, function, equation) = match &spec.equation {
        Equation::Pde(p) => (build_characteristic_system(p), p.f.clone(), "pde"),
        Equation::HamiltonJacobi(h) => (build_canonical_system(h), h.energy.clone(), "hj"),
    };
    let strip = spec.init.clone().unwrap_or_else(|| InitialStrip::new("a"));
    let member_values = match &spec.bundle {
        Some(b) => members(b.from, b.to, b.count),
        None => vec![0.0],
    };
    let bundle = integrate_bundle(&sys, &strip, &member_values, spec.step, spec.steps)?;

    let mut warnings = Vec::new();
    if spec.steps == 0 {
        warnings.push("steps = 0: trajectories hold only their initial state".to_string());
    }
    let failures: Vec<MemberFailure> = bundle
        .members
        .iter()
        .zip(&bundle.trajectories)
        .filter_map(|(&member, t)| t.failure.clone().map(|failure| MemberFailure { member, failure }))
        .collect();
    for f in &failures {
        warnings.push(format!("member a = {} stopped at step {}: {}", f.member, f.failure.step, f.failure.message));
    }

    let energy_drift = match &spec.equation {
        Equation::HamiltonJacobi(h) => Some(
            bundle
                .trajectories
                .iter()
                .map(|t| h.energy_drift(t))
                .try_fold(0.0_f64, |m, d| d.map(|d| m.max(d)))?,
        ),
        Equation::Pde(_) => None,
    };

    let shortest = bundle.trajectories.iter().map(|t| t.samples.len()).min().unwrap_or(0);
    let closure = if spec.bundle.is_none() {
        None
    } else if bundle.trajectories.len() < 5 || shortest < 5 {
        warnings.push("closure check skipped: it needs at least 5 members with 5 samples each".to_string());
        None
    } else {
        Some(verify_closure_on_pseudostructure(&sys, &bundle, spec.ambient, spec.caustic_tol)?)
    };

    Ok(CharacteristicsRun {
        equation,
        function,
        parameter: sys.parameter.clone(),
        state: sys.state.clone(),
        step: spec.step,
        steps: spec.steps,
        endpoints: bundle.trajectories.iter().filter_map(|t| t.last()).collect(),
        members: bundle.members,
        failures,
        energy_drift,
        closure,
        warnings,
        trajectories: bundle.trajectories,
        bundled: spec.bundle.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_single, Item};

    fn spec(text: &str) -> CharacteristicsSpec {
        match parse_single(text).unwrap() {
            Item::Characteristics(c) => c,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn free_particle_endpoint() {
        let run = run_characteristics(&spec("hj on (x) { E: p^2/2; init { x: 0; p: 1; u: 0 }; step: 0.001; steps: 1000 }")).unwrap();
        let end = &run.endpoints[0];
        assert!((end.get("x").unwrap() - 1.0).abs() < 1e-10);
        assert!(run.closure.is_none());
        assert!(run.to_csv().starts_with("t,x,p,u\n"));
    }

    #[test]
    fn zero_steps_warns() {
        let run = run_characteristics(&spec("hj on (x) { E: p^2/2; init { x: 0; p: 1; u: 0 }; steps: 0 }")).unwrap();
        assert_eq!(run.trajectories[0].samples.len(), 1);
        assert_eq!(run.warnings.len(), 1);
    }

    #[test]
    fn bundle_closes_on_surface() {
        let text = "hj on (x) { E: p^2/2; init { x: a; p: a; u: a^2/2 }; bundle { from: -1; to: 1; count: 9 }; step: 0.01; steps: 100 }";
        let run = run_characteristics(&spec(text)).unwrap();
        let c = run.closure.as_ref().unwrap();
        assert!(c.on_residual < 1e-7);
        assert!(c.off_residual > 0.1);
        assert!(run.to_csv().starts_with("a,t,x,p,u\n"));
    }

    #[test]
    fn missing_initial_data() {
        let err = run_characteristics(&spec("hj on (x) { E: p^2/2 }")).unwrap_err();
        assert!(matches!(err, CharacteristicError::MissingInitial(_)));
    }
}
