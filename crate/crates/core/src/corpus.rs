//! Worked examples: sampled fields with their analytic values.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{PolarGrid, ScalarField};
use crate::rigidity::Verdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExampleName {
    QuarterLinear,
    AnnulusWedge,
    PolygonalAnnulus,
    TripleCone,
    DoubleCone,
    ConeCollar,
    QuadrantIndicator,
}

impl ExampleName {
    pub const ALL: [ExampleName; 7] = [
        ExampleName::QuarterLinear,
        ExampleName::AnnulusWedge,
        ExampleName::PolygonalAnnulus,
        ExampleName::TripleCone,
        ExampleName::DoubleCone,
        ExampleName::ConeCollar,
        ExampleName::QuadrantIndicator,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExampleName::QuarterLinear => "quarter-linear",
            ExampleName::AnnulusWedge => "annulus-wedge",
            ExampleName::PolygonalAnnulus => "polygonal-annulus",
            ExampleName::TripleCone => "triple-cone",
            ExampleName::DoubleCone => "double-cone",
            ExampleName::ConeCollar => "cone-collar",
            ExampleName::QuadrantIndicator => "quadrant-indicator",
        }
    }
}

impl fmt::Display for ExampleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExampleName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExampleName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown example `{s}`")))
    }
}

/// Example name, parameters and resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleSpec {
    pub name: ExampleName,
    pub nr: usize,
    pub ntheta: usize,
    /// Wedge opening rate, `0 < a < π/4`.
    pub a: f64,
    /// Offset of the collar cone, `0 < δ < ½`.
    pub delta: f64,
    /// Rotation angle of the collar cone, `0 < γ < π/4`.
    pub gamma: f64,
}

impl ExampleSpec {
    pub fn new(name: ExampleName) -> ExampleSpec {
        ExampleSpec {
            name,
            nr: 256,
            ntheta: 1024,
            a: 0.5,
            delta: 0.05,
            gamma: PI / 8.0,
        }
    }

    pub fn with_resolution(mut self, nr: usize, ntheta: usize) -> ExampleSpec {
        self.nr = nr;
        self.ntheta = ntheta;
        self
    }

    /// Sets a named parameter (`a`, `delta`, `gamma`, `nr`, `ntheta`).
    pub fn with_param(mut self, key: &str, value: f64) -> Result<ExampleSpec> {
        let as_count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v <= 1e9 {
                Ok(v as usize)
            } else {
                Err(Error::Parameter(format!(
                    "{key} must be a positive integer"
                )))
            }
        };
        match (key, self.name) {
            ("nr", _) => self.nr = as_count(value)?,
            ("ntheta", _) => self.ntheta = as_count(value)?,
            ("a", ExampleName::AnnulusWedge) => self.a = value,
            ("delta", ExampleName::ConeCollar) => self.delta = value,
            ("gamma", ExampleName::ConeCollar) => self.gamma = value,
            _ => {
                return Err(Error::Parameter(format!(
                    "`{key}` is not a parameter of {}",
                    self.name
                )))
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nr < 64 || self.ntheta < 64 {
            return Err(Error::Parameter(
                "resolution must be at least 64 per direction".into(),
            ));
        }
        if !self.ntheta.is_multiple_of(4) {
            return Err(Error::Parameter("ntheta must be divisible by 4".into()));
        }
        let open = |v: f64, lo: f64, hi: f64, what: &str| {
            if v > lo && v < hi {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{what}={v} outside ({lo}, {hi})")))
            }
        };
        open(self.a, 0.0, FRAC_PI_4, "a")?;
        open(self.delta, 0.0, 0.5, "delta")?;
        open(self.gamma, 0.0, FRAC_PI_4, "gamma")
    }
}

/// Closed-form field `(r, θ, y) ↦ value`, `None` outside its domain.
pub type ClosedForm = Arc<dyn Fn(f64, f64, f64) -> Option<f64> + Send + Sync>;

/// Analytic values of an example.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpectedValues {
    /// `∫|∇u|²` over the domain.
    pub dirichlet2_u: Option<f64>,
    /// `∫|∇v_μ|²` over the projection cylinder.
    pub dirichlet2_v: Option<f64>,
    /// `∫|∇w_{μ′}|²` over the symmetrized domain.
    pub dirichlet2_w: Option<f64>,
    pub abs_tangential_u: Option<f64>,
    pub abs_tangential_v: Option<f64>,
    /// The Dirichlet energies of u and v_μ are equal without a closed value.
    pub dirichlet2_equal: bool,
    pub verdict: Option<Verdict>,
    /// The field violates the sign condition on partial slices.
    pub fails_condition_b: bool,
    /// The field violates the lateral-trace surrogate.
    pub fails_lateral_trace: bool,
}

#[derive(Clone)]
pub struct Example {
    pub spec: ExampleSpec,
    pub u: ScalarField,
    pub expected: ExpectedValues,
    /// Closed form of `v_μ` on the projection cylinder.
    pub v_closed_form: Option<ClosedForm>,
    /// Closed form of `w_{μ′}` where the paper gives one.
    pub w_closed_form: Option<ClosedForm>,
}

impl fmt::Debug for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Example")
            .field("spec", &self.spec)
            .field("expected", &self.expected)
            .finish_non_exhaustive()
    }
}

fn cone(x: f64, y: f64, cx: f64, cy: f64) -> f64 {
    (1.0 - ((x - cx).powi(2) + (y - cy).powi(2)).sqrt()).max(0.0)
}

/// C¹ smoothstep: 0 for `s ≤ −½`, 1 for `s ≥ 0`.
pub fn collar_profile(s: f64) -> f64 {
    let rho = 0.5;
    if s <= -1.0 + rho {
        0.0
    } else if s >= 0.0 {
        1.0
    } else {
        let x = (s + 1.0 - rho) / (1.0 - rho);
        x * x * (3.0 - 2.0 * x)
    }
}

/// Builds the sampled field and its metadata.
pub fn build(spec: &ExampleSpec) -> Result<Example> {
    spec.validate()?;
    let (nr, nt) = (spec.nr, spec.ntheta);
    let mut expected = ExpectedValues::default();
    let mut w_closed_form: Option<ClosedForm> = None;
    let (grid, u, v): (PolarGrid, ClosedForm, ClosedForm) = match spec.name {
        ExampleName::QuarterLinear => {
            expected.dirichlet2_u = Some(FRAC_PI_4);
            expected.dirichlet2_v = Some(5.0 * PI / 8.0);
            expected.fails_lateral_trace = true;
            (
                PolarGrid::new(nr, nt, 0.0, 1.0)?,
                Arc::new(|r, t, _| (t > 0.0 && t < FRAC_PI_2).then(|| r * t.cos())),
                Arc::new(|r, t, _| {
                    Some(if t.abs() < FRAC_PI_4 {
                        r * (2.0 * t).cos()
                    } else {
                        0.0
                    })
                }),
            )
        }
        ExampleName::AnnulusWedge => {
            let a = spec.a;
            expected.dirichlet2_u = Some(FRAC_PI_2 * LN_2);
            expected.dirichlet2_v = Some(FRAC_PI_2 * LN_2);
            expected.dirichlet2_w = Some(FRAC_PI_2 * LN_2 + 0.75 * PI * a * a);
            expected.fails_condition_b = true;
            w_closed_form = Some(Arc::new(move |r, t, _| {
                let t = t.abs();
                let core = a * (r - 1.0);
                (t < FRAC_PI_4 + core).then_some(if t < core { 0.0 } else { core - t })
            }));
            (
                PolarGrid::new(nr, nt, 1.0, 2.0)?,
                Arc::new(move |r, t, _| {
                    let t = t.abs();
                    (t < FRAC_PI_4 + a * (r - 1.0)).then_some({
                        if t <= FRAC_PI_4 {
                            t - FRAC_PI_4
                        } else {
                            0.0
                        }
                    })
                }),
                Arc::new(|_, t, _| {
                    Some(if t.abs() > 0.75 * PI {
                        0.75 * PI - t.abs()
                    } else {
                        0.0
                    })
                }),
            )
        }
        ExampleName::PolygonalAnnulus => {
            expected.dirichlet2_u = Some(4.0 * PI / 3.0 * LN_2);
            expected.dirichlet2_v = Some(PI * LN_2);
            expected.abs_tangential_u = Some(PI);
            expected.abs_tangential_v = Some(PI);
            (
                PolarGrid::new(nr, nt, 1.0, 2.0)?,
                Arc::new(|_, t, _| {
                    Some(if (-FRAC_PI_4..=0.0).contains(&t) {
                        2.0 * t + FRAC_PI_2
                    } else if (0.0..=0.75 * PI).contains(&t) {
                        -2.0 / 3.0 * t + FRAC_PI_2
                    } else {
                        0.0
                    })
                }),
                Arc::new(|_, t, _| Some((FRAC_PI_2 - t.abs()).max(0.0))),
            )
        }
        ExampleName::TripleCone => {
            expected.dirichlet2_u = Some(12.0 * PI);
            expected.dirichlet2_v = Some(12.0 * PI);
            expected.verdict = Some(Verdict::Counterexample);
            (
                PolarGrid::new(nr, nt, 0.0, 5.0)?,
                Arc::new(|r, t, _| {
                    let (x, y) = (r * t.cos(), r * t.sin());
                    Some(
                        2.0 * cone(x, y, 0.0, 0.0)
                            .max(cone(x, y, 4.0, 0.0))
                            .max(cone(x, y, 0.0, 2.0)),
                    )
                }),
                Arc::new(|r, t, _| {
                    let (x, y) = (r * t.cos(), r * t.sin());
                    Some(
                        2.0 * cone(x, y, 0.0, 0.0)
                            .max(cone(x, y, 2.0, 0.0))
                            .max(cone(x, y, 4.0, 0.0)),
                    )
                }),
            )
        }
        ExampleName::DoubleCone => {
            expected.dirichlet2_u = Some(8.0 * PI);
            expected.dirichlet2_v = Some(8.0 * PI);
            expected.verdict = Some(Verdict::RigidConsistent);
            (
                PolarGrid::new(nr, nt, 0.0, 5.0)?,
                Arc::new(|r, t, _| {
                    let (x, y) = (r * t.cos(), r * t.sin());
                    Some(2.0 * cone(x, y, 0.0, 0.0).max(cone(x, y, 0.0, 2.0)))
                }),
                Arc::new(|r, t, _| {
                    let (x, y) = (r * t.cos(), r * t.sin());
                    Some(2.0 * cone(x, y, 0.0, 0.0).max(cone(x, y, 2.0, 0.0)))
                }),
            )
        }
        ExampleName::ConeCollar => {
            let (delta, gamma) = (spec.delta, spec.gamma);
            expected.dirichlet2_equal = true;
            expected.verdict = Some(Verdict::Counterexample);
            let v1 = |r: f64| 2.0 * (1.0 - r).max(0.0);
            let v2 = |r: f64, t: f64| 0.75 * (2.0 - r).max(0.0) * collar_profile(t.cos());
            (
                PolarGrid::new(nr, nt, 0.0, 5.0)?,
                Arc::new(move |r, t, _| {
                    let (x, y) = (r * t.cos(), r * t.sin());
                    // v₃(Rx) with R the counterclockwise rotation by γ
                    let (rx, ry) = (
                        x * gamma.cos() - y * gamma.sin(),
                        x * gamma.sin() + y * gamma.cos(),
                    );
                    Some(
                        v1(r)
                            .max(v2(r, t))
                            .max(2.0 * cone(rx, ry, 2.0 + delta, 0.0)),
                    )
                }),
                Arc::new(move |r, t, _| {
                    let (x, y) = (r * t.cos(), r * t.sin());
                    Some(v1(r).max(v2(r, t)).max(2.0 * cone(x, y, 2.0 + delta, 0.0)))
                }),
            )
        }
        ExampleName::QuadrantIndicator => (
            PolarGrid::new(nr, nt, 0.0, 1.0)?,
            Arc::new(|_, t, _| Some(if t.sin() * t.cos() > 0.0 { 1.0 } else { 0.0 })),
            Arc::new(|_, t, _| Some(if t.abs() < FRAC_PI_2 { 1.0 } else { 0.0 })),
        ),
    };
    let field = ScalarField::from_fn(grid, |r, t, y| u(r, t, y))?;
    Ok(Example {
        spec: spec.clone(),
        u: field,
        expected,
        v_closed_form: Some(v),
        w_closed_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for n in ExampleName::ALL {
            assert_eq!(n.as_str().parse::<ExampleName>().unwrap(), n);
        }
        assert!("nope".parse::<ExampleName>().is_err());
    }

    #[test]
    fn parameter_ranges() {
        let s = ExampleSpec::new(ExampleName::AnnulusWedge);
        assert!(s.clone().with_param("a", 0.9).is_err());
        assert!(s.clone().with_param("gamma", 0.1).is_err());
        assert_eq!(s.clone().with_param("a", 0.25).unwrap().a, 0.25);
        assert!(s.clone().with_resolution(32, 64).validate().is_err());
        assert!(s.with_resolution(64, 66).validate().is_err());
    }

    #[test]
    fn profile_is_monotone_c1() {
        assert_eq!(collar_profile(-0.6), 0.0);
        assert_eq!(collar_profile(0.0), 1.0);
        let mut prev = 0.0;
        for k in 0..=100 {
            let v = collar_profile(-0.5 + k as f64 * 0.005);
            assert!(v >= prev);
            prev = v;
        }
    }
}
