use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// User callback `(a, b, c) ↦ value`.
pub type Callback = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Convex integrand `f(η, τ, ζ)`.
#[derive(Clone)]
pub enum Integrand {
    /// `(η² + τ² + ζ²)^{p/2}`.
    Dirichlet {
        p: f64,
    },
    /// `(w₁η² + w₂τ² + w₃ζ²)^{p/2}`.
    Aniso {
        w: [f64; 3],
        p: f64,
    },
    /// `|τ|`.
    AbsTangential,
    Custom(Callback),
}

/// Weight `a(r, y, t)`.
#[derive(Clone)]
pub enum Weight {
    Const(f64),
    /// `r^q`.
    RadialPower {
        q: f64,
    },
    Custom(Callback),
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Integrand::Dirichlet { p } => write!(f, "dirichlet:p={p}"),
            Integrand::Aniso { w, p } => {
                write!(f, "aniso:w1={},w2={},w3={},p={p}", w[0], w[1], w[2])
            }
            Integrand::AbsTangential => write!(f, "abs-tangential"),
            Integrand::Custom(_) => write!(f, "custom"),
        }
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Const(c) => write!(f, "const:{c}"),
            Weight::RadialPower { q } => write!(f, "radial-power:q={q}"),
            Weight::Custom(_) => write!(f, "custom"),
        }
    }
}

impl fmt::Display for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

fn bad(s: &str) -> Error {
    Error::InvalidSpec(format!("cannot parse `{s}`"))
}

fn parse_num(s: &str, v: &str) -> Result<f64> {
    let x: f64 = v.trim().parse().map_err(|_| bad(s))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(s))
    }
}

/// Reads `k1=v1,k2=v2,...` with exactly the given keys in order.
fn parse_keyed(s: &str, body: &str, keys: &[&str]) -> Result<Vec<f64>> {
    let parts: Vec<&str> = body.split(',').collect();
    if parts.len() != keys.len() {
        return Err(bad(s));
    }
    parts
        .iter()
        .zip(keys)
        .map(|(p, k)| {
            let v = p
                .trim()
                .strip_prefix(k)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| bad(s))?;
            parse_num(s, v)
        })
        .collect()
}

impl Integrand {
    /// Parses `dirichlet:p=<f>` (or `dirichlet:<f>`),
    /// `aniso:w1=<f>,w2=<f>,w3=<f>,p=<f>` or `abs-tangential`.
    pub fn parse(s: &str) -> Result<Integrand> {
        let s = s.trim();
        if s == "abs-tangential" {
            return Ok(Integrand::AbsTangential);
        }
        let (head, body) = s.split_once(':').ok_or_else(|| bad(s))?;
        let f = match head {
            "dirichlet" => {
                let v = body.strip_prefix("p=").unwrap_or(body);
                Integrand::Dirichlet {
                    p: parse_num(s, v)?,
                }
            }
            "aniso" => {
                let v = parse_keyed(s, body, &["w1", "w2", "w3", "p"])?;
                Integrand::Aniso {
                    w: [v[0], v[1], v[2]],
                    p: v[3],
                }
            }
            _ => return Err(bad(s)),
        };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        match self {
            Integrand::Dirichlet { p } if *p < 1.0 => Err(Error::InvalidSpec(format!(
                "exponent p={p} < 1 is not convex"
            ))),
            Integrand::Aniso { p, .. } if *p < 1.0 => Err(Error::InvalidSpec(format!(
                "exponent p={p} < 1 is not convex"
            ))),
            Integrand::Aniso { w, .. } if w.iter().any(|&x| x < 0.0) => Err(Error::InvalidSpec(
                "anisotropy weights must be nonnegative".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, eta: f64, tau: f64, zeta: f64) -> f64 {
        match self {
            Integrand::Dirichlet { p } => {
                let s = eta * eta + tau * tau + zeta * zeta;
                if *p == 2.0 {
                    s
                } else {
                    s.powf(0.5 * p)
                }
            }
            Integrand::Aniso { w, p } => {
                let s = w[0] * eta * eta + w[1] * tau * tau + w[2] * zeta * zeta;
                if *p == 2.0 {
                    s
                } else {
                    s.powf(0.5 * p)
                }
            }
            Integrand::AbsTangential => tau.abs(),
            Integrand::Custom(f) => f(eta, tau, zeta),
        }
    }
}

impl Weight {
    /// Parses `const:<f>` or `radial-power:q=<f>`.
    pub fn parse(s: &str) -> Result<Weight> {
        let s = s.trim();
        let (head, body) = s.split_once(':').ok_or_else(|| bad(s))?;
        let w = match head {
            "const" => Weight::Const(parse_num(s, body.strip_prefix("c=").unwrap_or(body))?),
            "radial-power" => Weight::RadialPower {
                q: parse_num(s, body.strip_prefix("q=").unwrap_or(body))?,
            },
            _ => return Err(bad(s)),
        };
        if let Weight::Const(c) = w {
            if c < 0.0 {
                return Err(Error::InvalidSpec("weight must be nonnegative".into()));
            }
        }
        Ok(w)
    }

    pub fn eval(&self, r: f64, y: f64, t: f64) -> f64 {
        match self {
            Weight::Const(c) => *c,
            Weight::RadialPower { q } => r.powf(*q),
            Weight::Custom(f) => f(r, y, t),
        }
    }

    /// Whether the weight is known to be strictly positive everywhere
    /// (custom weights are checked by the caller on the grid).
    pub fn is_positive(&self) -> Option<bool> {
        match self {
            Weight::Const(c) => Some(*c > 0.0),
            Weight::RadialPower { .. } => Some(true),
            Weight::Custom(_) => None,
        }
    }
}

/// Integrand class: convex and even in τ, optionally strictly convex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecClass {
    #[serde(rename = "F")]
    F,
    #[serde(rename = "F_STRICT")]
    FStrict,
}

/// Weight, integrand and its class.
#[derive(Clone, Debug)]
pub struct IntegrandSpec {
    pub integrand: Integrand,
    pub weight: Weight,
    pub class: SpecClass,
}

/// Number of random probes used on user callbacks.
pub const PROBES: usize = 10_000;

impl IntegrandSpec {
    /// Built-in integrand with a weight; the class follows from the family.
    pub fn new(integrand: Integrand, weight: Weight) -> Result<IntegrandSpec> {
        integrand.validate()?;
        let class = match &integrand {
            Integrand::Dirichlet { p } if *p > 1.0 => SpecClass::FStrict,
            Integrand::Aniso { w, p } if *p > 1.0 && w.iter().all(|&x| x > 0.0) => {
                SpecClass::FStrict
            }
            Integrand::Custom(_) => {
                return Err(Error::InvalidSpec(
                    "use IntegrandSpec::custom for callbacks".into(),
                ))
            }
            _ => SpecClass::F,
        };
        Ok(IntegrandSpec {
            integrand,
            weight,
            class,
        })
    }

    /// Parses the integrand and weight grammars.
    pub fn parse(integrand: &str, weight: &str) -> Result<IntegrandSpec> {
        IntegrandSpec::new(Integrand::parse(integrand)?, Weight::parse(weight)?)
    }

    /// Unit-weight Dirichlet energy `∫|∇u|^p`.
    pub fn dirichlet(p: f64) -> Result<IntegrandSpec> {
        IntegrandSpec::new(Integrand::Dirichlet { p }, Weight::Const(1.0))
    }

    /// Wraps a user integrand after probing evenness in τ and midpoint
    /// convexity at [`PROBES`] random pairs in `[−range, range]³`. The class
    /// is F_STRICT when every probe is also strictly convex.
    pub fn custom(f: Callback, weight: Weight, range: f64, seed: u64) -> Result<IntegrandSpec> {
        if !(range > 0.0 && range.is_finite()) {
            return Err(Error::Parameter("probe range must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut strict = true;
        let draw = |rng: &mut ChaCha8Rng| -> [f64; 3] {
            [
                rng.gen_range(-range..=range),
                rng.gen_range(-range..=range),
                rng.gen_range(-range..=range),
            ]
        };
        for _ in 0..PROBES {
            let x = draw(&mut rng);
            let y = draw(&mut rng);
            let fx = f(x[0], x[1], x[2]);
            let fy = f(y[0], y[1], y[2]);
            let fm = f(
                0.5 * (x[0] + y[0]),
                0.5 * (x[1] + y[1]),
                0.5 * (x[2] + y[2]),
            );
            let fr = f(x[0], -x[1], x[2]);
            if ![fx, fy, fm, fr].iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidSpec(
                    "integrand returned a non-finite value".into(),
                ));
            }
            let scale = 1.0 + fx.abs() + fy.abs();
            if (fr - fx).abs() > 1e-9 * scale {
                return Err(Error::InvalidSpec(format!(
                    "integrand is not even in tau at {x:?}"
                )));
            }
            let avg = 0.5 * (fx + fy);
            if fm > avg + 1e-9 * scale {
                return Err(Error::InvalidSpec(format!(
                    "integrand is not convex between {x:?} and {y:?}"
                )));
            }
            if fm >= avg - 1e-12 * scale {
                strict = false;
            }
        }
        let class = if strict {
            SpecClass::FStrict
        } else {
            SpecClass::F
        };
        Ok(IntegrandSpec {
            integrand: Integrand::Custom(f),
            weight,
            class,
        })
    }

    /// `a(r, y, t) f(η, τ, ζ)`.
    pub fn density(&self, r: f64, y: f64, t: f64, eta: f64, tau: f64, zeta: f64) -> f64 {
        self.weight.eval(r, y, t) * self.integrand.eval(eta, tau, zeta)
    }
}
