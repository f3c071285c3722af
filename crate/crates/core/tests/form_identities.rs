mod common;

use common::{form_residual, random_connection, random_form, random_points, rng, COORDS};
use formflow_core::forms::{commutator_1form, is_closed, Connection, DifferentialForm};
use proptest::prelude::*;

const POINTS: usize = 50;

fn sign(p: usize, q: usize) -> f64 {
    if (p * q) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn scaled(form: &DifferentialForm, c: f64) -> DifferentialForm {
    form.scale(&formflow_core::Expr::Const(c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn wedge_is_graded_anticommutative(seed in any::<u64>(), p in 0usize..=2, q in 0usize..=2) {
        let mut r = rng(seed);
        let a = random_form(&mut r, p);
        let b = random_form(&mut r, q);
        let pts = random_points(&mut r, &COORDS, POINTS, -1.0, 1.0);
        let ab = a.wedge(&b).unwrap();
        let ba = scaled(&b.wedge(&a).unwrap(), sign(p, q));
        prop_assert!(form_residual(&ab, &ba, &pts) < 1e-10);
    }

    #[test]
    fn leibniz_rule(seed in any::<u64>(), p in 0usize..=2, q in 0usize..=1) {
        // p + q ≤ 3 keeps d(a∧b) below the top degree
        let mut r = rng(seed);
        let a = random_form(&mut r, p);
        let b = random_form(&mut r, q);
        let pts = random_points(&mut r, &COORDS, POINTS, -1.0, 1.0);
        let lhs = a.wedge(&b).unwrap().d();
        let rhs = a.d().wedge(&b).unwrap().add(&scaled(&a.wedge(&b.d()).unwrap(), sign(p, 1))).unwrap();
        prop_assert!(form_residual(&lhs, &rhs, &pts) < 1e-9);
    }

    #[test]
    fn d_squared_vanishes(seed in any::<u64>(), p in 0usize..=2) {
        let mut r = rng(seed);
        let f = random_form(&mut r, p);
        let pts = random_points(&mut r, &COORDS, POINTS, -1.0, 1.0);
        let zero = DifferentialForm::zero(&COORDS, p + 2).unwrap();
        prop_assert!(form_residual(&f.d().d(), &zero, &pts) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn commutator_matches_exterior_derivative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let theta = random_form(&mut r, 1);
        let conn = random_connection(&mut r);
        let pts = random_points(&mut r, &COORDS, POINTS, -1.0, 1.0);
        let field = commutator_1form(&theta, &conn).unwrap();
        let mut from_k = DifferentialForm::zero(&COORDS, 2).unwrap();
        for (&(a, b), term) in &field.components {
            from_k.add_term(&[a, b], term.total()).unwrap();
        }
        let d = theta.exterior_derivative(&conn).unwrap();
        prop_assert!(form_residual(&from_k, &d, &pts) < 1e-12);
    }

    #[test]
    fn exact_forms_are_closed(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_form(&mut r, 0);
        let pts = random_points(&mut r, &COORDS, 20, -1.0, 1.0);
        let report = is_closed(&f.d(), &Connection::flat(4), &pts, 1e-9).unwrap();
        prop_assert!(report.closed, "residual {}", report.max_residual);
    }
}

#[test]
fn wedge_with_itself_vanishes_for_odd_degree() {
    let mut r = rng(7);
    let a = random_form(&mut r, 1);
    let pts = random_points(&mut r, &COORDS, 10, -1.0, 1.0);
    let zero = DifferentialForm::zero(&COORDS, 2).unwrap();
    assert!(form_residual(&a.wedge(&a).unwrap(), &zero, &pts) < 1e-12);
}
