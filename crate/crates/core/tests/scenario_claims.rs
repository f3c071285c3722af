use formflow_core::forms::{commutator_1form, Connection};
use formflow_core::relations::verify_integrating_factor;
use formflow_core::scenarios::em::{relative_spread, run_em, DirectionStatus, EmScenario, Waveform};
use formflow_core::scenarios::gas::{classify_instability, GasScenario, Structure};
use formflow_core::scenarios::thermo::{run_thermo, ThermoScenario};
use formflow_core::parse;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn first_law_commutator_is_r_over_v_everywhere() {
    let sc = ThermoScenario::preset("ideal-gas").unwrap();
    let field = commutator_1form(&sc.first_law_form(), &Connection::flat(2)).unwrap();
    let k = field.get(0, 1).unwrap().total();
    for pt in sc.grid().unwrap().points() {
        let want = sc.r / pt.get("V").unwrap();
        let got = k.evaluate(&pt).unwrap();
        assert!(got > 0.0);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn entropy_differential_is_exact() {
    let sc = ThermoScenario::preset("ideal-gas").unwrap();
    let grid = sc.grid().unwrap();
    let report = verify_integrating_factor(&sc.first_law_form(), &parse("1/T").unwrap(), &grid.points(), 1e-10).unwrap();
    assert!(report.exact);
    assert!(report.max_residual < 1e-12);
    let thermo = run_thermo(&sc, &grid, 1e-10).unwrap();
    assert!(thermo.first_law_nonidentical);
    assert_eq!(thermo.factor_found.as_deref(), Some("1/T"));
    assert!(thermo.entropy_reconstruction_residual < 1e-10);
    assert!(thermo.second_law_holds);
}

#[test]
fn other_gases_keep_the_same_factor() {
    for (r, c_v) in [(1.0, 1.5), (8.314, 20.8), (0.5, 3.5)] {
        let sc = ThermoScenario { r, c_v, ..ThermoScenario::preset("ideal-gas").unwrap() };
        let report = run_thermo(&sc, &sc.grid().unwrap(), 1e-10).unwrap();
        assert_eq!(report.factor_found.as_deref(), Some("1/T"));
        assert!((report.gamma - (1.0 + r / c_v)).abs() < 1e-15);
        assert!(report.sound_speed_matches && report.isentrope_constant);
    }
}

#[test]
fn gas_presets_give_their_verdicts() {
    for (preset, want) in [
        ("uniform", Structure::Equilibrium),
        ("shock-tube", Structure::ShockWave),
        ("subsonic-body", Structure::Vortex),
        ("boundary-layer", Structure::TurbulentPulsation),
    ] {
        let report = classify_instability(&GasScenario::preset(preset).unwrap(), 1e-9).unwrap();
        assert_eq!(report.predicted_structure, want, "{preset}");
        assert!(report.additivity_residual <= 1e-10);
    }
}

fn with_velocity(u: [&str; 3]) -> GasScenario {
    let mut sc = GasScenario::preset("uniform").unwrap();
    sc.velocity = u.map(String::from);
    sc
}

#[test]
fn uniform_flows_are_in_equilibrium() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let v: Vec<String> = (0..3).map(|_| format!("{:.3}", r.gen_range(-2.0..2.0))).collect();
        let report = classify_instability(&with_velocity([&v[0], &v[1], &v[2]]), 1e-9).unwrap();
        assert!(report.terms.iter().all(|t| t.max <= 1e-12), "{v:?}");
        assert_eq!(report.predicted_structure, Structure::Equilibrium);
    }
}

#[test]
fn source_terms_add_up() {
    let fields = [
        ["1 + 0.3*sin(x*y)", "0.5*cos(t + x)", "0"],
        ["x^2 - y", "exp(-t)*y", "0.1*x*t"],
        ["2 + sin(3*t)", "x*y*t", "cos(y)"],
    ];
    for u in fields {
        let mut sc = with_velocity(u);
        sc.force = ["0".into(), "0.2*x".into(), "0".into()];
        sc.flags.nonstationary = true;
        sc.flags.nonpotential_force = true;
        let report = classify_instability(&sc, 1e-9).unwrap();
        assert!(report.additivity_residual <= 1e-10, "{u:?}: {}", report.additivity_residual);
        assert!(report.max_commutator > 0.0);
    }
}

#[test]
fn plane_waves_travel_at_c() {
    for waveform in [Waveform::Cos, Waveform::GaussianCos] {
        for amplitude in [1.0, 2.0, 5.0] {
            let sc = EmScenario::plane_wave(waveform, amplitude, false);
            let report = run_em(&sc, 1e-9).unwrap();
            assert_eq!(report.status, DirectionStatus::Derived);
            assert!(relative_spread(&report, sc.c).unwrap() <= 1e-6);
            let back = run_em(&EmScenario::plane_wave(waveform, amplitude, true), 1e-9).unwrap();
            assert!(relative_spread(&back, -sc.c).unwrap() <= 1e-6);
        }
    }
}

#[test]
fn static_fields_have_no_direction() {
    let report = run_em(&EmScenario::preset("static").unwrap(), 1e-9).unwrap();
    assert_eq!(report.status, DirectionStatus::NoDirection);
    assert_eq!(report.integrating_direction, None);
    assert!(!report.matches_c);
}

#[test]
fn unbound_names_are_rejected() {
    let mut sc = EmScenario::preset("plane-wave").unwrap();
    sc.electric[1] = "q*cos(x)".into();
    assert!(run_em(&sc, 1e-9).is_err());
}
