use std::path::Path;
use std::process::{Command, Output};

use circsym::grid::{PolarGrid, ScalarField};
use circsym::io::{read_field_file, write_field_file};
use serde_json::Value;
use tempfile::TempDir;

fn circsym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circsym"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn json(path: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn triple_cone_equality_from_the_command_line() {
    let dir = TempDir::new().unwrap();
    let (f, rep) = (p(&dir, "t.fld"), p(&dir, "ps.json"));
    let out = circsym(&["example", "--name", "triple-cone", "--out", &f]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = circsym(&[
        "check-ps",
        "--in",
        &f,
        "--integrand",
        "dirichlet:p=2",
        "--json",
        &rep,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&rep);
    assert_eq!(v["equality"], Value::Bool(true));
    assert_eq!(v["holds"], Value::Bool(true));
}

#[test]
fn quadrant_symmetrizes_to_half_disc() {
    let dir = TempDir::new().unwrap();
    let (q, v) = (p(&dir, "quadrant.fld"), p(&dir, "v.fld"));
    let out = circsym(&[
        "example",
        "--name",
        "quadrant-indicator",
        "--param",
        "nr=64",
        "--param",
        "ntheta=128",
        "--out",
        &q,
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        circsym(&["symmetrize", "--in", &q, "--out", &v])
            .status
            .code(),
        Some(0)
    );
    let field = read_field_file(Path::new(&v)).unwrap();
    let g = field.grid().clone();
    for idx in 0..g.ncells() {
        let (_, _, j) = g.coords(idx);
        let want = if g.theta(j).abs() < std::f64::consts::FRAC_PI_2 {
            1.0
        } else {
            0.0
        };
        assert_eq!(field.values()[idx], Some(want));
    }
}

#[test]
fn empty_window_is_an_error() {
    let dir = TempDir::new().unwrap();
    let f = p(&dir, "w.fld");
    circsym(&[
        "example",
        "--name",
        "annulus-wedge",
        "--param",
        "nr=64",
        "--param",
        "ntheta=256",
        "--out",
        &f,
    ]);
    let out = circsym(&["functional", "--in", &f, "--rwindow", "3,4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window"));
}

#[test]
fn functional_reports_the_wedge_value() {
    let dir = TempDir::new().unwrap();
    let (f, j) = (p(&dir, "w.fld"), p(&dir, "f.json"));
    circsym(&["example", "--name", "annulus-wedge", "--out", &f]);
    let out = circsym(&[
        "functional",
        "--in",
        &f,
        "--integrand",
        "dirichlet:p=2",
        "--weight",
        "const:1",
        "--json",
        &j,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let e = json(&j)["value"].as_f64().unwrap();
    let want = std::f64::consts::FRAC_PI_2 * std::f64::consts::LN_2;
    assert!((e - want).abs() < 0.01 * want, "{e}");
}

#[test]
fn restricted_path_and_distribution_csv() {
    let dir = TempDir::new().unwrap();
    let (f, w, mu) = (p(&dir, "w.fld"), p(&dir, "wr.fld"), p(&dir, "mu.csv"));
    circsym(&[
        "example",
        "--name",
        "annulus-wedge",
        "--param",
        "nr=64",
        "--param",
        "ntheta=256",
        "--out",
        &f,
    ]);
    assert_eq!(
        circsym(&["symmetrize", "--in", &f, "--out", &w, "--restricted"])
            .status
            .code(),
        Some(0)
    );
    let u = read_field_file(Path::new(&f)).unwrap();
    let wf = read_field_file(Path::new(&w)).unwrap();
    assert_eq!(u.inside_count(), wf.inside_count());
    assert_eq!(
        circsym(&["mu", "--in", &f, "--out", &mu]).status.code(),
        Some(0)
    );
    let csv = std::fs::read_to_string(&mu).unwrap();
    assert!(csv.starts_with("r,y,t,mu,alpha\n"));
    assert!(csv.lines().count() > 64);
}

#[test]
fn perimeter_csv_and_failing_check() {
    let dir = TempDir::new().unwrap();
    let (e, c) = (p(&dir, "e.fld"), p(&dir, "p.csv"));
    let g = PolarGrid::new(64, 256, 0.0, 1.0).unwrap();
    // two opposite sectors: symmetrization merges them into one arc
    let set = ScalarField::from_fn(g, |_, t, _| {
        Some(if (t.abs() - 1.5).abs() < 0.6 {
            1.0
        } else {
            0.0
        })
    })
    .unwrap();
    write_field_file(&set, Path::new(&e)).unwrap();
    let out = circsym(&[
        "perimeter",
        "--set",
        &e,
        "--rwindow",
        "0,0.5",
        "--rwindow",
        "0.5,2",
        "--csv",
        &c,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&c).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("rmin,rmax,p_e,p_es,margin,tol,holds")
    );
    assert_eq!(csv.lines().count(), 3);
    // a negative tolerance forces a failed check
    let out = circsym(&["perimeter", "--set", &e, "--tol=-10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rigidity_and_densities_reports() {
    let dir = TempDir::new().unwrap();
    let (f, r, d) = (p(&dir, "d.fld"), p(&dir, "r.json"), p(&dir, "d.json"));
    circsym(&[
        "example",
        "--name",
        "double-cone",
        "--param",
        "nr=128",
        "--param",
        "ntheta=512",
        "--out",
        &f,
    ]);
    assert_eq!(
        circsym(&["check-rigidity", "--in", &f, "--json", &r])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        json(&r)["verdict"],
        Value::String("RIGID_CONSISTENT".into())
    );
    let out = circsym(&[
        "check-rigidity",
        "--in",
        &f,
        "--integrand",
        "abs-tangential",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let w = p(&dir, "w.fld");
    circsym(&["example", "--name", "annulus-wedge", "--out", &w]);
    let v = p(&dir, "v.fld");
    circsym(&["symmetrize", "--in", &w, "--out", &v]);
    assert_eq!(
        circsym(&["verify-densities", "--in", &v, "--json", &d])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(json(&d)["holds"], Value::Bool(true));
}

#[test]
fn usage_and_parse_errors() {
    assert_eq!(circsym(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(
        circsym(&["example", "--name", "triple-cone", "--bogus"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        circsym(&["example", "--name", "no-such", "--out", "x"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(circsym(&["--help"]).status.code(), Some(0));
    let dir = TempDir::new().unwrap();
    let bad = p(&dir, "bad.fld");
    std::fs::write(
        &bad,
        "circsym-field v1\nnr=2 ntheta=4 ny=0\nrmin=0 rmax=1\ndata\n1\nx\n",
    )
    .unwrap();
    let out = circsym(&["symmetrize", "--in", &bad, "--out", &p(&dir, "o.fld")]);
    assert_eq!(out.status.code(), Some(65));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("line 6"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let same = p(&dir, "same.fld");
    circsym(&[
        "example",
        "--name",
        "quadrant-indicator",
        "--param",
        "nr=64",
        "--param",
        "ntheta=64",
        "--out",
        &same,
    ]);
    assert_eq!(
        circsym(&["symmetrize", "--in", &same, "--out", &same])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        circsym(&[
            "example",
            "--name",
            "triple-cone",
            "--param",
            "a=0.1",
            "--out",
            &p(&dir, "t.fld")
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn thread_count_does_not_change_reports() {
    let dir = TempDir::new().unwrap();
    let f = p(&dir, "c.fld");
    circsym(&[
        "example",
        "--name",
        "cone-collar",
        "--param",
        "nr=128",
        "--param",
        "ntheta=512",
        "--out",
        &f,
    ]);
    let run = |threads: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_circsym"))
            .env("CIRCSYM_THREADS", threads)
            .args(["check-rigidity", "--in", &f, "--json", out])
            .output()
            .unwrap();
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        std::fs::read(out).unwrap()
    };
    let a = run("1", &p(&dir, "a.json"));
    let b = run("3", &p(&dir, "b.json"));
    let c = run("1", &p(&dir, "c.json"));
    assert_eq!(a, b);
    assert_eq!(a, c);
    let bad = Command::new(env!("CARGO_BIN_EXE_circsym"))
        .env("CIRCSYM_THREADS", "zero")
        .args([
            "example",
            "--name",
            "triple-cone",
            "--out",
            &p(&dir, "t.fld"),
        ])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(64));
}

#[test]
fn example_metadata() {
    let dir = TempDir::new().unwrap();
    let (f, m) = (p(&dir, "t.fld"), p(&dir, "m.json"));
    let out = circsym(&[
        "example",
        "--name",
        "triple-cone",
        "--param",
        "nr=64",
        "--param",
        "ntheta=256",
        "--out",
        &f,
        "--meta",
        &m,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&m);
    let want = 12.0 * std::f64::consts::PI;
    assert_eq!(v["dirichlet2_u"].as_f64(), Some(want));
    assert_eq!(v["verdict"], Value::String("COUNTEREXAMPLE".into()));
}
