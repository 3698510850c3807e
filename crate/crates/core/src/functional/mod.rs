//! Gradient decomposition, integrands, windowed functional evaluation and
//! the Pólya–Szegő check.

mod density;
mod gradient;
mod integrand;

pub use density::{verify_density_identities, DensityOptions, DensityReport, IdentityStat};
pub use gradient::{gradient, GradientField};
pub use integrand::{Callback, Integrand, IntegrandSpec, SpecClass, Weight, PROBES};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{PolarGrid, ScalarField};
use crate::sum::FixedSum;
use crate::symmetrize::rearranged;

/// Test region: radial interval `[a, b)`, optional axial interval `[c, d)`
/// and optional closed value interval `[t₀, t₁]`. Cells are selected by
/// their centres.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub r: Option<(f64, f64)>,
    pub y: Option<(f64, f64)>,
    pub t: Option<(f64, f64)>,
}

impl Window {
    /// The whole grid.
    pub fn full() -> Window {
        Window::default()
    }

    pub fn radial(a: f64, b: f64) -> Window {
        Window {
            r: Some((a, b)),
            ..Window::default()
        }
    }

    pub fn with_y(mut self, c: f64, d: f64) -> Window {
        self.y = Some((c, d));
        self
    }

    pub fn with_t(mut self, t0: f64, t1: f64) -> Window {
        self.t = Some((t0, t1));
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, iv) in [("r", self.r), ("y", self.y)] {
            if let Some((a, b)) = iv {
                if !(a < b) {
                    return Err(Error::InvalidWindow(format!(
                        "{name} interval [{a}, {b}) is empty"
                    )));
                }
            }
        }
        if let Some((a, b)) = self.t {
            if !(a <= b) {
                return Err(Error::InvalidWindow(format!(
                    "t interval [{a}, {b}] is empty"
                )));
            }
        }
        Ok(())
    }

    pub fn contains_slice(&self, g: &PolarGrid, s: usize) -> bool {
        let (k, i) = g.slice_coords(s);
        let r = g.r(i);
        let y = g.y(k);
        self.r.is_none_or(|(a, b)| a <= r && r < b)
            && (g.ny == 0 || self.y.is_none_or(|(c, d)| c <= y && y < d))
    }

    pub fn contains_value(&self, t: f64) -> bool {
        self.t.is_none_or(|(a, b)| a <= t && t <= b)
    }

    /// Slices selected by the window; errors when there are none.
    pub fn slices(&self, g: &PolarGrid) -> Result<Vec<usize>> {
        self.validate()?;
        let v: Vec<usize> = (0..g.nslices())
            .filter(|&s| self.contains_slice(g, s))
            .collect();
        if v.is_empty() {
            return Err(Error::EmptyWindow);
        }
        Ok(v)
    }
}

fn quantize(x: f64) -> Result<FixedSum> {
    FixedSum::from_f64(x)
        .ok_or_else(|| Error::Domain(format!("integrand produced non-finite value {x}")))
}

/// Exact fixed-point sum of `a f` over inside cells in the window, plus
/// `a(·,0) f(0)` over the zero-extension cells when `extension` is set.
fn energy_sum(
    u: &ScalarField,
    grad: &GradientField,
    spec: &IntegrandSpec,
    w: &Window,
    extension: bool,
) -> Result<FixedSum> {
    let g = u.grid();
    let n = g.ntheta;
    let f0 = spec.integrand.eval(0.0, 0.0, 0.0);
    let per_slice: Vec<Result<FixedSum>> = w
        .slices(g)?
        .into_par_iter()
        .map(|s| {
            let (k, i) = g.slice_coords(s);
            let (r, y, m) = (g.r(i), g.y(k), g.cell_measure(i));
            let sl = u.slice(s);
            let nonempty = sl.iter().any(|v| v.is_some());
            let mut acc = FixedSum::ZERO;
            for (j, v) in sl.iter().enumerate() {
                match v {
                    Some(t) if w.contains_value(*t) => {
                        let idx = s * n + j;
                        let val =
                            spec.density(r, y, *t, grad.eta[idx], grad.tau[idx], grad.zeta[idx])
                                * m;
                        acc += quantize(val)?;
                    }
                    None if extension && nonempty && w.contains_value(0.0) => {
                        acc += quantize(spec.weight.eval(r, y, 0.0) * f0 * m)?;
                    }
                    _ => {}
                }
            }
            Ok(acc)
        })
        .collect();
    per_slice
        .into_iter()
        .try_fold(FixedSum::ZERO, |acc, x| Ok(acc + x?))
}

/// `Σ a(r, y, u) f(η, τ, ζ) |cell|` over inside cells of the window whose
/// value lies in the window's t-interval.
///
/// The sum is accumulated in fixed point, so the result is independent of
/// thread count and splitting a window into disjoint parts reproduces the
/// total exactly.
pub fn evaluate(u: &ScalarField, spec: &IntegrandSpec, w: &Window) -> Result<f64> {
    let grad = gradient(u)?;
    Ok(energy_sum(u, &grad, spec, w, false)?.to_f64())
}

/// Like [`evaluate`], reusing a precomputed gradient.
pub fn evaluate_with(
    u: &ScalarField,
    grad: &GradientField,
    spec: &IntegrandSpec,
    w: &Window,
) -> Result<f64> {
    u.grid().check_same(&grad.grid)?;
    Ok(energy_sum(u, grad, spec, w, false)?.to_f64())
}

/// Energy of the zero-extension: [`evaluate`] on the domain plus the
/// constant contribution `a(r, y, 0) f(0)` of the cells filled by zero.
pub fn evaluate_extended(u: &ScalarField, spec: &IntegrandSpec, w: &Window) -> Result<f64> {
    let grad = gradient(u)?;
    Ok(energy_sum(u, &grad, spec, w, true)?.to_f64())
}

/// Halves the radial and angular resolution by 2×2 block averages; a coarse
/// cell is inside when at least half of its block is.
pub fn coarsen(u: &ScalarField) -> Result<ScalarField> {
    let g = u.grid();
    if !g.nr.is_multiple_of(2) || !g.ntheta.is_multiple_of(2) || g.nr < 4 || g.ntheta < 4 {
        return Err(Error::Resolution(
            "coarsening needs even nr, ntheta >= 4".into(),
        ));
    }
    let cg = PolarGrid {
        nr: g.nr / 2,
        ntheta: g.ntheta / 2,
        ..g.clone()
    };
    let mut values = Vec::with_capacity(cg.ncells());
    for k in 0..cg.nlayers() {
        for i in 0..cg.nr {
            for j in 0..cg.ntheta {
                let block = [
                    u.get(k, 2 * i, 2 * j),
                    u.get(k, 2 * i, 2 * j + 1),
                    u.get(k, 2 * i + 1, 2 * j),
                    u.get(k, 2 * i + 1, 2 * j + 1),
                ];
                let inside: Vec<f64> = block.iter().flatten().copied().collect();
                values.push(
                    (inside.len() >= 2).then(|| inside.iter().sum::<f64>() / inside.len() as f64),
                );
            }
        }
    }
    ScalarField::new(cg, values)
}

/// Self-calibrated tolerance `5 |E_h − E_2h|` for comparisons of the
/// extended energy, with a relative floor of `1e-12`.
pub fn calibrated_tolerance(u: &ScalarField, spec: &IntegrandSpec, w: &Window) -> Result<f64> {
    let fine = evaluate_extended(u, spec, w)?;
    let floor = 1e-12 * fine.abs().max(1.0);
    let consistency = match coarsen(u) {
        Ok(c) => match evaluate_extended(&c, spec, w) {
            Ok(coarse) => (fine - coarse).abs(),
            Err(Error::EmptyWindow) => 0.0,
            Err(e) => return Err(e),
        },
        Err(Error::Resolution(_)) => 0.0,
        Err(e) => return Err(e),
    };
    Ok((5.0 * consistency).max(floor))
}

/// Outcome of comparing the energies of `v_μ` and `u₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsReport {
    /// Energy of the rearrangement over the projection cylinder.
    pub lhs: f64,
    /// Energy of the zero-extension.
    pub rhs: f64,
    pub tol: f64,
    /// `lhs ≤ rhs + tol`.
    pub holds: bool,
    /// `|lhs − rhs| ≤ tol`.
    pub equality: bool,
}

/// Compares the energy of `v_μ` with that of `u₀` on a window.
///
/// The right-hand side differentiates `u` inside its domain only and adds
/// `a(r, y, 0) f(0)` for the zero-filled cells, so a jump of `u₀` across the
/// lateral boundary is not charged. When `tol` is `None` the self-calibrated
/// tolerance of [`calibrated_tolerance`] is used.
pub fn check_ps(
    u: &ScalarField,
    spec: &IntegrandSpec,
    w: &Window,
    tol: Option<f64>,
) -> Result<PsReport> {
    let v = rearranged(u)?;
    let lhs = evaluate(&v, spec, w)?;
    let rhs = evaluate_extended(u, spec, w)?;
    let tol = match tol {
        Some(t) => t,
        None => calibrated_tolerance(u, spec, w)?,
    };
    Ok(PsReport {
        lhs,
        rhs,
        tol,
        holds: lhs <= rhs + tol,
        equality: (lhs - rhs).abs() <= tol,
    })
}
