use std::f64::consts::PI;

use circsym::corpus::{build, collar_profile, ExampleName, ExampleSpec};
use circsym::grid::validate_admissible;
use circsym::rigidity::Verdict;
use circsym::symmetrize::rearranged;
use circsym::Error;

#[test]
fn every_example_builds_with_metadata() {
    for name in ExampleName::ALL {
        let ex = build(&ExampleSpec::new(name).with_resolution(64, 256)).unwrap();
        assert_eq!(ex.u.grid().nr, 64);
        assert!(ex.v_closed_form.is_some(), "{name}");
    }
    let t = build(&ExampleSpec::new(ExampleName::TripleCone).with_resolution(64, 64)).unwrap();
    assert_eq!(t.expected.dirichlet2_u, Some(12.0 * PI));
    assert_eq!(t.expected.dirichlet2_v, Some(12.0 * PI));
    assert_eq!(t.expected.verdict, Some(Verdict::Counterexample));
    let w = build(
        &ExampleSpec::new(ExampleName::AnnulusWedge)
            .with_param("a", 0.5)
            .unwrap(),
    )
    .unwrap();
    let want = PI / 2.0 * 2f64.ln() + 0.75 * PI * 0.25;
    assert!((w.expected.dirichlet2_w.unwrap() - want).abs() < 1e-15);
    assert!(w.expected.fails_condition_b);
}

#[test]
fn closed_forms_match_rearrangements() {
    for name in [
        ExampleName::QuadrantIndicator,
        ExampleName::DoubleCone,
        ExampleName::TripleCone,
        ExampleName::ConeCollar,
        ExampleName::PolygonalAnnulus,
    ] {
        let ex = build(&ExampleSpec::new(name)).unwrap();
        let v = rearranged(&ex.u).unwrap();
        let f = ex.v_closed_form.as_ref().unwrap();
        let g = v.grid();
        let scale = ex.u.max_abs();
        let mut sum = 0.0;
        let mut den = 0.0;
        for idx in 0..g.ncells() {
            let (k, i, j) = g.coords(idx);
            let want = f(g.r(i), g.theta(j), g.y(k)).unwrap();
            sum += (v.values()[idx].unwrap() - want).abs() * g.cell_measure(i);
            den += scale * g.cell_measure(i);
        }
        assert!(sum / den < 5e-3, "{name}: {}", sum / den);
    }
}

#[test]
fn symmetric_examples_are_admissible() {
    for name in [
        ExampleName::TripleCone,
        ExampleName::DoubleCone,
        ExampleName::ConeCollar,
        ExampleName::PolygonalAnnulus,
        ExampleName::QuadrantIndicator,
    ] {
        let ex = build(&ExampleSpec::new(name).with_resolution(64, 256)).unwrap();
        assert!(validate_admissible(&ex.u).is_empty(), "{name}");
    }
}

#[test]
fn parameters_are_validated() {
    let s = ExampleSpec::new(ExampleName::ConeCollar);
    assert_eq!(s.clone().with_param("delta", 0.1).unwrap().delta, 0.1);
    assert!(matches!(
        s.clone().with_param("delta", 0.7),
        Err(Error::Parameter(_))
    ));
    assert!(matches!(
        s.clone().with_param("gamma", PI / 2.0),
        Err(Error::Parameter(_))
    ));
    assert!(matches!(
        s.clone().with_param("a", 0.1),
        Err(Error::Parameter(_))
    ));
    assert!(matches!(
        s.clone().with_param("nr", 12.5),
        Err(Error::Parameter(_))
    ));
    assert!(matches!(
        s.with_param("ntheta", 130.0),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn collar_profile_shape() {
    assert_eq!(collar_profile(-1.0), 0.0);
    assert_eq!(collar_profile(-0.5), 0.0);
    assert_eq!(collar_profile(0.0), 1.0);
    assert_eq!(collar_profile(1.0), 1.0);
    let mut prev = 0.0;
    for k in 0..=100 {
        let v = collar_profile(-0.5 + 0.005 * k as f64);
        assert!(v >= prev);
        prev = v;
    }
}
