//! Finite-difference check of the density identities
//! `∂_t μ = −Σ 1/|τ|`, `r ∂_r ξ = Σ η/|τ|` and `∂_y μ = Σ ζ/|τ|`, where the
//! sums run over the level-set crossings of a slice.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gradient::gradient;
use crate::error::Result;
use crate::grid::{extend_by_zero, ScalarField};
use crate::symmetrize::arc_fraction;

#[derive(Clone, Copy, Debug)]
pub struct DensityOptions {
    /// Number of threshold intervals across the value range.
    pub nt: usize,
    /// Margin on α; `None` means one angular cell.
    pub eps: Option<f64>,
    /// Crossings with `|τ|` below this fraction of the field scale are degenerate.
    pub degenerate: f64,
    /// A crossing segment whose increment exceeds this multiple of both
    /// neighbouring increments is treated as a jump.
    pub jump_ratio: f64,
    pub tol_t: f64,
    pub tol_r: f64,
    pub tol_y: f64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions {
            nt: 128,
            eps: None,
            degenerate: 1e-6,
            jump_ratio: 4.0,
            tol_t: 0.03,
            tol_r: 0.05,
            tol_y: 0.05,
        }
    }
}

/// Relative L¹ mismatch of one identity over the included lattice points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityStat {
    pub mismatch: f64,
    pub points: usize,
    #[serde(skip)]
    num: f64,
    #[serde(skip)]
    den: f64,
}

impl IdentityStat {
    fn add(&mut self, fd: f64, cs: f64, norm: f64) {
        self.num += (fd - cs).abs();
        self.den += norm;
        self.points += 1;
    }

    fn merge(mut self, o: IdentityStat) -> IdentityStat {
        self.num += o.num;
        self.den += o.den;
        self.points += o.points;
        self
    }

    fn finish(mut self) -> IdentityStat {
        self.mismatch = if self.den > 0.0 {
            self.num / self.den
        } else {
            0.0
        };
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    /// `∂_t μ` against `−Σ 1/|τ|`.
    pub dt_mu: IdentityStat,
    /// `r ∂_r ξ` against `Σ η/|τ|`.
    pub r_dr_xi: IdentityStat,
    /// `∂_y μ` against `Σ ζ/|τ|` (absent without an axial direction).
    pub dy_mu: Option<IdentityStat>,
    pub total_slices: usize,
    /// Slices without any admissible lattice point.
    pub excluded_slices: usize,
    /// Lattice points dropped because a crossing was degenerate.
    pub degenerate_points: usize,
    pub holds: bool,
}

struct Crossings {
    inv_tau: f64,
    eta_over_tau: f64,
    zeta_over_tau: f64,
    norm_r: f64,
    norm_y: f64,
}

/// Compares finite differences of the interpolated distribution with the
/// crossing sums on the set `{ε < α < π − ε}`.
pub fn verify_density_identities(u: &ScalarField, opts: &DensityOptions) -> Result<DensityReport> {
    let u0 = extend_by_zero(u)?;
    let g = u0.grid().clone();
    let grad = gradient(&u0)?;
    let n = g.ntheta;
    let dth = g.dtheta();
    let eps = opts.eps.unwrap_or(dth);
    let (lo, hi) = u0.range().unwrap_or((0.0, 0.0));
    let nt = opts.nt.max(1);
    let h = if hi > lo { (hi - lo) / nt as f64 } else { 1.0 };
    let delta = 0.5 * h;
    let levels: Vec<f64> = (0..nt).map(|l| lo + (l as f64 + 0.5) * h).collect();
    let scale = u0.max_abs().max(f64::MIN_POSITIVE) / g.rmax;
    let in_range = |a: f64| a > eps && a < std::f64::consts::PI - eps;
    let empty = |s: usize| u0.slice(s).iter().all(|v| v.is_none());
    let vals = |s: usize| -> Vec<f64> { u0.slice(s).iter().map(|v| v.unwrap_or(0.0)).collect() };
    // α from the interpolated arc measure
    let alpha = |s: usize, t: f64| 0.5 * arc_fraction(u0.slice(s), t) * dth;

    let crossings = |s: usize, v: &[f64], t: f64| -> Option<Crossings> {
        let (_, i) = g.slice_coords(s);
        let r = g.r(i);
        let mut c = Crossings {
            inv_tau: 0.0,
            eta_over_tau: 0.0,
            zeta_over_tau: 0.0,
            norm_r: 0.0,
            norm_y: 0.0,
        };
        for j in 0..n {
            let (a, b) = (v[j], v[(j + 1) % n]);
            if (a > t) == (b > t) {
                continue;
            }
            let jump = (b - a).abs();
            let prev = (v[j] - v[(j + n - 1) % n]).abs();
            let next = (v[(j + 2) % n] - v[(j + 1) % n]).abs();
            let tau = (b - a) / (r * dth);
            if tau.abs() < opts.degenerate * scale || jump > opts.jump_ratio * prev.max(next) {
                return None;
            }
            let lam = (t - a) / (b - a);
            let (ia, ib) = (s * n + j, s * n + (j + 1) % n);
            let eta = grad.eta[ia] * (1.0 - lam) + grad.eta[ib] * lam;
            let zeta = grad.zeta[ia] * (1.0 - lam) + grad.zeta[ib] * lam;
            let at = tau.abs();
            c.inv_tau += 1.0 / at;
            c.eta_over_tau += eta / at;
            c.zeta_over_tau += zeta / at;
            c.norm_r += (eta.abs() + at) / at;
            c.norm_y += (zeta.abs() + at) / at;
        }
        Some(c)
    };

    type Acc = (IdentityStat, IdentityStat, IdentityStat, usize, bool);
    let per_slice: Vec<Option<Acc>> = (0..g.nslices())
        .into_par_iter()
        .map(|s| {
            if empty(s) {
                return None;
            }
            let (k, i) = g.slice_coords(s);
            let r = g.r(i);
            let v = vals(s);
            let mut st = IdentityStat::default();
            let mut sr = IdentityStat::default();
            let mut sy = IdentityStat::default();
            let mut degenerate = 0;
            let mut any = false;
            let rn = (i > 0 && i + 1 < g.nr)
                .then(|| (g.slice_index(k, i - 1), g.slice_index(k, i + 1)))
                .filter(|&(a, b)| !empty(a) && !empty(b));
            let yn = (g.ny > 0 && k > 0 && k + 1 < g.ny)
                .then(|| (g.slice_index(k - 1, i), g.slice_index(k + 1, i)))
                .filter(|&(a, b)| !empty(a) && !empty(b));
            for &t in &levels {
                let (am, a0, ap) = (alpha(s, t - delta), alpha(s, t), alpha(s, t + delta));
                if !(in_range(am) && in_range(a0) && in_range(ap)) {
                    continue;
                }
                let Some(c) = crossings(s, &v, t) else {
                    degenerate += 1;
                    continue;
                };
                any = true;
                let fd_t = (ap - am) * 2.0 * r / (2.0 * delta);
                st.add(fd_t, -c.inv_tau, c.inv_tau);
                if let Some((sm, sp)) = rn {
                    let (xm, xp) = (alpha(sm, t), alpha(sp, t));
                    if in_range(xm) && in_range(xp) {
                        let fd = r * 2.0 * (xp - xm) / (2.0 * g.dr());
                        sr.add(fd, c.eta_over_tau, c.norm_r);
                    }
                }
                if let Some((sm, sp)) = yn {
                    let (xm, xp) = (alpha(sm, t), alpha(sp, t));
                    if in_range(xm) && in_range(xp) {
                        let fd = 2.0 * r * (xp - xm) / (2.0 * g.dy());
                        sy.add(fd, c.zeta_over_tau, c.norm_y);
                    }
                }
            }
            Some((st, sr, sy, degenerate, any))
        })
        .collect();

    let mut st = IdentityStat::default();
    let mut sr = IdentityStat::default();
    let mut sy = IdentityStat::default();
    let (mut total, mut excluded, mut degenerate) = (0, 0, 0);
    for (a, b, c, d, any) in per_slice.into_iter().flatten() {
        total += 1;
        if !any {
            excluded += 1;
        }
        degenerate += d;
        st = st.merge(a);
        sr = sr.merge(b);
        sy = sy.merge(c);
    }
    let (st, sr, sy) = (st.finish(), sr.finish(), sy.finish());
    let dy_mu = (g.ny > 0).then_some(sy);
    let holds = st.mismatch <= opts.tol_t
        && sr.mismatch <= opts.tol_r
        && dy_mu.is_none_or(|s| s.mismatch <= opts.tol_y);
    Ok(DensityReport {
        dt_mu: st,
        r_dr_xi: sr,
        dy_mu,
        total_slices: total,
        excluded_slices: excluded,
        degenerate_points: degenerate,
        holds,
    })
}
