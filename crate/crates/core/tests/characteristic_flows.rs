mod common;

use common::{rng, smooth_expr};
use formflow_core::characteristics::{
    build_canonical_system, build_characteristic_system, integrate, integrate_bundle, members,
    verify_closure_on_pseudostructure, FirstOrderPde, HamiltonJacobi, InitialStrip,
};
use formflow_core::{parse, Expr, Point};
use rand::Rng;

fn hj(energy: &str) -> HamiltonJacobi {
    HamiltonJacobi::new(vec!["x".into()], parse(energy).unwrap()).unwrap()
}

fn start(x: f64, p: f64) -> Point {
    Point::new().with("x", x).with("p", p).with("u", 0.0)
}

#[test]
fn free_particle_reaches_one() {
    let sys = build_canonical_system(&hj("p^2/2"));
    let traj = integrate(&sys, &start(0.0, 1.0), 1e-3, 1000).unwrap();
    assert_eq!(traj.samples.len(), 1001);
    let end = traj.last().unwrap();
    assert!((end.get("x").unwrap() - 1.0).abs() < 1e-10);
    assert!((end.get("t").unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn energy_is_conserved_over_ten_thousand_steps() {
    for (energy, x0, p0) in [("p^2/2", 0.3, 1.0), ("(p^2 + x^2)/2", 1.0, 0.0), ("p^2/2 + cos(x)", 0.5, 1.2)] {
        let h = hj(energy);
        let traj = integrate(&build_canonical_system(&h), &start(x0, p0), 1e-3, 10_000).unwrap();
        assert!(traj.failure.is_none());
        let drift = h.energy_drift(&traj).unwrap();
        assert!(drift < 1e-8, "{energy}: drift {drift}");
    }
}

fn oscillator_error(step: f64, t_end: f64) -> f64 {
    let sys = build_canonical_system(&hj("(p^2 + x^2)/2"));
    let steps = (t_end / step).round() as usize;
    let traj = integrate(&sys, &start(1.0, 0.0), step, steps).unwrap();
    let end = traj.last().unwrap();
    let (x, p) = (end.get("x").unwrap(), end.get("p").unwrap());
    (x - t_end.cos()).hypot(p + t_end.sin())
}

#[test]
fn rk4_converges_at_fourth_order() {
    let errors: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&h| oscillator_error(h, 2.0)).collect();
    for pair in errors.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!(ratio >= 12.0, "ratio {ratio}");
        assert!(ratio.log2() >= 3.9, "order {}", ratio.log2());
    }
}

#[test]
fn one_period_of_the_oscillator() {
    let h = hj("(p^2 + x^2)/2");
    let steps = (2.0 * std::f64::consts::PI / 1e-3).round() as usize;
    let traj = integrate(&build_canonical_system(&h), &start(1.0, 0.0), 1e-3, steps).unwrap();
    assert!(h.energy_drift(&traj).unwrap() < 1e-8);
}

#[test]
fn pde_and_canonical_systems_agree() {
    let energies = ["p^2/2 + cos(x)", "t*x*p + sin(p)", "(p^2 + x^2)/2 - t"];
    let mut r = rng(11);
    let mut all: Vec<Expr> = energies.iter().map(|e| parse(e).unwrap()).collect();
    all.extend((0..5).map(|_| smooth_expr(&mut r, &["t", "x", "p"], 3)));
    for energy in all {
        let h = HamiltonJacobi::new(vec!["x".into()], energy.clone()).unwrap();
        let canonical = build_canonical_system(&h);
        let f = Expr::add(Expr::var("p_t"), energy.rename("p", "p_x"));
        let pde = FirstOrderPde::new(vec!["t".into(), "x".into()], f).unwrap();
        let chars = build_characteristic_system(&pde);
        for _ in 0..50 {
            let (t, x, p) = (r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
            let at = Point::new().with("t", t).with("x", x).with("p", p).with("u", 0.0);
            let e = energy.evaluate(&at).unwrap();
            // on the solution surface p_t = −E
            let at_pde = Point::new().with("t", t).with("x", x).with("p_t", -e).with("p_x", p).with("u", 0.0);
            let rate = |sys: &formflow_core::characteristics::CharacteristicSystem, name: &str, pt: &Point| {
                sys.rhs_of(name).unwrap().evaluate(pt).unwrap()
            };
            assert!((rate(&chars, "t", &at_pde) - 1.0).abs() < 1e-12);
            for (pde_name, hj_name) in [("x", "x"), ("p_x", "p"), ("u", "u")] {
                let (a, b) = (rate(&chars, pde_name, &at_pde), rate(&canonical, hj_name, &at));
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{energy}: {pde_name} {a} vs {b}");
            }
        }
    }
}

#[test]
fn closure_on_the_swept_surface() {
    let h = hj("p^2/2");
    let sys = build_canonical_system(&h);
    let strip = InitialStrip::new("a")
        .with("x", parse("a").unwrap())
        .with("p", parse("a").unwrap())
        .with("u", parse("a^2/2").unwrap());
    let bundle = integrate_bundle(&sys, &strip, &members(-1.0, 1.0, 9), 0.01, 100).unwrap();
    let closure = verify_closure_on_pseudostructure(&sys, &bundle, 5, 1e-9).unwrap();
    assert!(closure.on_residual < 1e-7, "{}", closure.on_residual);
    assert!(closure.off_residual > 0.1, "{}", closure.off_residual);
}
