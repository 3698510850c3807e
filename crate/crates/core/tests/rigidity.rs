use std::f64::consts::{FRAC_PI_2, PI};

use circsym::corpus::{build, ExampleName, ExampleSpec};
use circsym::functional::IntegrandSpec;
use circsym::grid::{extend_by_zero, PolarGrid, ScalarField};
use circsym::rigidity::{
    check_rigidity, classify_landscape, direction_field, fit_orthogonal, AlphaClass,
    LandscapeOptions, RigidityOptions, Verdict,
};
use circsym::symmetrize::{distribution, rearranged, AlphaField};

fn alpha_of(u: &ScalarField, nt: usize) -> AlphaField {
    AlphaField::from_table(&distribution(&extend_by_zero(u).unwrap()), nt)
}

#[test]
fn direction_of_centred_arcs_is_e1() {
    let g = PolarGrid::new(32, 256, 0.0, 1.0).unwrap();
    let u = ScalarField::from_fn(g, |r, t, _| Some((1.0 - r) * (t + 0.7).cos())).unwrap();
    let v = rearranged(&u).unwrap();
    let alpha = alpha_of(&v, 64);
    let d = direction_field(&extend_by_zero(&v).unwrap(), &alpha, 0.05).unwrap();
    let mut seen = 0;
    for s in 0..v.grid().nslices() {
        for l in 0..alpha.nlevels() {
            if let Some([a, b]) = d.get(s, l) {
                assert!((a - 1.0).abs() < 1e-9 && b.abs() < 1e-9, "{a} {b}");
                seen += 1;
            }
        }
    }
    assert!(seen > 100);
}

#[test]
fn direction_of_off_axis_arc() {
    let g = PolarGrid::new(16, 1024, 0.5, 1.5).unwrap();
    let theta0: f64 = 2.2;
    let u = ScalarField::from_fn(g, |_, t, _| {
        let d = (t - theta0 + PI).rem_euclid(2.0 * PI) - PI;
        Some((1.0 - d.abs() / 1.5).max(0.0))
    })
    .unwrap();
    let alpha = alpha_of(&u, 32);
    let d = direction_field(&u, &alpha, 0.05).unwrap();
    let dth = u.grid().dtheta();
    let mut seen = 0;
    for s in 0..u.grid().nslices() {
        for l in 0..alpha.nlevels() {
            if let Some([a, b]) = d.get(s, l) {
                let ang = b.atan2(a);
                assert!((ang - theta0).abs() < dth, "{ang}");
                seen += 1;
            }
        }
    }
    assert!(seen > 0);
}

#[test]
fn triple_cone_direction_near_upper_cone() {
    let ex = build(&ExampleSpec::new(ExampleName::TripleCone)).unwrap();
    let u0 = extend_by_zero(&ex.u).unwrap();
    let alpha = alpha_of(&ex.u, 64);
    let d = direction_field(&u0, &alpha, 0.05).unwrap();
    let g = ex.u.grid();
    let s = (0..g.nslices())
        .min_by(|&a, &b| (g.r(a) - 2.0).abs().total_cmp(&(g.r(b) - 2.0).abs()))
        .unwrap();
    let mut seen = 0;
    for l in 0..alpha.nlevels() {
        let t = alpha.levels[l];
        if t > 0.05 && t < 1.5 {
            if let Some([a, b]) = d.get(s, l) {
                assert!(
                    a.abs() < 0.02 && (b - 1.0).abs() < 0.02,
                    "t={t}: ({a}, {b})"
                );
                seen += 1;
            }
        }
    }
    assert!(seen > 10);
}

#[test]
fn landscapes_of_corpus_and_constant_alpha() {
    let dbl = build(&ExampleSpec::new(ExampleName::DoubleCone)).unwrap();
    let land = classify_landscape(&alpha_of(&dbl.u, 256), &LandscapeOptions::default());
    assert_eq!(land.components.len(), 1);
    // α ≡ π/2 everywhere: one component covering the lattice
    let g = PolarGrid::new(16, 64, 0.0, 1.0).unwrap();
    let mut a = alpha_of(
        &ScalarField::from_fn(g, |_, t, _| Some(t.cos())).unwrap(),
        16,
    );
    a.alpha.iter_mut().for_each(|x| *x = FRAC_PI_2);
    let land = classify_landscape(&a, &LandscapeOptions::default());
    assert_eq!(land.components.len(), 1);
    assert_eq!(land.components[0].cells, a.alpha.len());
    assert!(land.classes.iter().all(|c| *c == AlphaClass::Mid));
    assert!(!land.singular_separation);
}

#[test]
fn fits() {
    let g = PolarGrid::new(32, 256, 0.0, 1.0).unwrap();
    let u = ScalarField::from_fn(g, |r, t, _| {
        Some(r * (1.0 + (t - 0.4).cos() + 0.3 * (2.0 * t).sin()))
    })
    .unwrap();
    let f = fit_orthogonal(&u, &u).unwrap();
    assert_eq!((f.angle, f.reflection, f.residual), (0.0, false, 0.0));
    // rotation by 37 cells
    let rot = u.rotate_cells(37);
    let f = fit_orthogonal(&u, &rot).unwrap();
    let want = -37.0 * u.grid().dtheta();
    assert!(
        !f.reflection && (f.angle - want).abs() < 1e-6 && f.residual < 1e-9,
        "{f:?}"
    );
    let refl = u.reflect();
    let f = fit_orthogonal(&u, &refl).unwrap();
    assert!(f.reflection && f.residual < 1e-9, "{f:?}");
    let dbl = build(&ExampleSpec::new(ExampleName::DoubleCone).with_resolution(128, 512)).unwrap();
    let v = rearranged(&dbl.u).unwrap();
    let f = fit_orthogonal(&extend_by_zero(&dbl.u).unwrap(), &v).unwrap();
    assert!(
        (f.angle - FRAC_PI_2).abs() <= dbl.u.grid().dtheta() && f.residual < 0.01,
        "{f:?}"
    );
    let tri = build(&ExampleSpec::new(ExampleName::TripleCone).with_resolution(128, 512)).unwrap();
    let v = rearranged(&tri.u).unwrap();
    let f = fit_orthogonal(&tri.u, &v).unwrap();
    assert!(f.residual > 0.1, "{f:?}");
}

#[test]
fn symmetric_fields_are_rigid() {
    let spec = IntegrandSpec::dirichlet(2.0).unwrap();
    for name in [
        ExampleName::TripleCone,
        ExampleName::DoubleCone,
        ExampleName::ConeCollar,
    ] {
        let ex = build(&ExampleSpec::new(name).with_resolution(128, 512)).unwrap();
        let v = rearranged(&ex.u).unwrap();
        let rep = check_rigidity(&v, &spec, &RigidityOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::RigidConsistent, "{name}");
        assert_eq!(rep.fit.residual, 0.0);
    }
}

#[test]
fn strict_inequality_is_inconclusive() {
    let spec = IntegrandSpec::dirichlet(2.0).unwrap();
    let g = PolarGrid::new(64, 256, 0.0, 1.0).unwrap();
    let u = ScalarField::from_fn(g, |r, t, _| {
        let (x, y) = (r * t.cos(), r * t.sin());
        let a = (-((x - 0.4).powi(2) + y * y) / 0.02).exp();
        let b = 0.7 * (-((x + 0.4).powi(2) + y * y) / 0.02).exp();
        Some((1.0 - r * r) * (a + b))
    })
    .unwrap();
    let rep = check_rigidity(&u, &spec, &RigidityOptions::default()).unwrap();
    assert!(!rep.ps.equality);
    assert_eq!(rep.verdict, Verdict::Inconclusive);
    let weightless = IntegrandSpec::parse("dirichlet:p=2", "const:0").unwrap();
    assert!(check_rigidity(&u, &weightless, &RigidityOptions::default()).is_err());
}
