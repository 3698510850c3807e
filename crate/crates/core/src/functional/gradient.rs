use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{PolarGrid, ScalarField};

/// Radial, tangential and axial derivatives per cell.
///
/// Values at OUTSIDE cells are 0 and never read by the integrator.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub grid: PolarGrid,
    /// `η = x̂·∇ₓu`.
    pub eta: Vec<f64>,
    /// `τ = r⁻¹ ∂θ u`.
    pub tau: Vec<f64>,
    /// `ζ = ∂_y u`; all zeros when there is no axial direction.
    pub zeta: Vec<f64>,
    /// Cells where at least one stencil fell back to a one-sided difference.
    pub one_sided: Vec<bool>,
}

impl GradientField {
    pub fn norm_sq(&self, idx: usize) -> f64 {
        self.eta[idx].powi(2) + self.tau[idx].powi(2) + self.zeta[idx].powi(2)
    }
}

/// Central difference when both neighbours exist, one-sided otherwise.
fn diff(c: f64, minus: Option<f64>, plus: Option<f64>, h: f64) -> (f64, bool) {
    match (minus, plus) {
        (Some(m), Some(p)) => ((p - m) / (2.0 * h), false),
        (None, Some(p)) => ((p - c) / h, true),
        (Some(m), None) => ((c - m) / h, true),
        (None, None) => (0.0, true),
    }
}

/// Finite-difference gradient: central inside the domain, one-sided next to
/// OUTSIDE cells and at radial/axial grid edges, periodic in θ.
pub fn gradient(u: &ScalarField) -> Result<GradientField> {
    let g = u.grid();
    if g.nr < 2 || g.ntheta < 2 || g.ny == 1 {
        return Err(Error::Resolution(
            "gradient needs at least two cells per direction".into(),
        ));
    }
    let (n, dr, dth, dy) = (g.ntheta, g.dr(), g.dtheta(), g.dy());
    let cells: Vec<(f64, f64, f64, bool)> = (0..g.ncells())
        .into_par_iter()
        .map(|idx| {
            let Some(c) = u.values()[idx] else {
                return (0.0, 0.0, 0.0, false);
            };
            let (k, i, j) = g.coords(idx);
            let rm = (i > 0).then(|| u.get(k, i - 1, j)).flatten();
            let rp = (i + 1 < g.nr).then(|| u.get(k, i + 1, j)).flatten();
            let (eta, f1) = diff(c, rm, rp, dr);
            let tm = u.get(k, i, (j + n - 1) % n);
            let tp = u.get(k, i, (j + 1) % n);
            let (dt, f2) = diff(c, tm, tp, dth);
            let (zeta, f3) = if g.ny > 0 {
                let ym = (k > 0).then(|| u.get(k - 1, i, j)).flatten();
                let yp = (k + 1 < g.ny).then(|| u.get(k + 1, i, j)).flatten();
                diff(c, ym, yp, dy)
            } else {
                (0.0, false)
            };
            (eta, dt / g.r(i), zeta, f1 || f2 || f3)
        })
        .collect();
    let mut out = GradientField {
        grid: g.clone(),
        eta: Vec::with_capacity(cells.len()),
        tau: Vec::with_capacity(cells.len()),
        zeta: Vec::with_capacity(cells.len()),
        one_sided: Vec::with_capacity(cells.len()),
    };
    for (e, t, z, f) in cells {
        out.eta.push(e);
        out.tau.push(t);
        out.zeta.push(z);
        out.one_sided.push(f);
    }
    Ok(out)
}
