//! Distribution functions, circular rearrangement and symmetrization of
//! indicator sets.
//!
//! Distribution functions are stored exactly: each slice keeps its sample
//! values sorted in decreasing order, so `μ(t)` is `r Δθ` times the number of
//! samples above `t`. The rearrangement evaluates
//! `v(r, θ) = inf{t : μ(r, t) ≤ 2 r |θ|}` at cell centres, which picks the
//! `(c+1)`-th largest sample with `c = ⌊2|θ|/Δθ⌋`. The result is exactly even
//! in θ, non-increasing in |θ| and idempotent; per slice it is equimeasurable
//! with the input up to one cell.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{PolarGrid, ScalarField, SliceFlag};

/// Exact distribution of one `(r, y)` slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceDistribution {
    pub flag: SliceFlag,
    /// Samples of the support in decreasing order.
    pub sorted: Vec<f64>,
}

impl SliceDistribution {
    /// Number of samples strictly above `t`.
    pub fn count_above(&self, t: f64) -> usize {
        self.sorted.partition_point(|&v| v > t)
    }

    /// Size of the support (cells over which μ is measured).
    pub fn support(&self) -> usize {
        self.sorted.len()
    }
}

/// Per-slice step functions `t ↦ μ(r, y, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub grid: PolarGrid,
    pub slices: Vec<SliceDistribution>,
    /// True when built from the domain only (μ′), false for the zero-extension.
    pub restricted: bool,
}

impl DistributionTable {
    /// Arc length of one cell on slice `s`.
    pub fn cell_arc(&self, s: usize) -> f64 {
        let (_, i) = self.grid.slice_coords(s);
        self.grid.r(i) * self.grid.dtheta()
    }

    pub fn mu(&self, s: usize, t: f64) -> f64 {
        self.slices[s].count_above(t) as f64 * self.cell_arc(s)
    }

    /// Half-angle `α = μ / 2r`.
    pub fn alpha(&self, s: usize, t: f64) -> f64 {
        0.5 * self.slices[s].count_above(t) as f64 * self.grid.dtheta()
    }

    /// Limit of μ as `t → −∞`.
    pub fn mu_below(&self, s: usize) -> f64 {
        self.slices[s].support() as f64 * self.cell_arc(s)
    }

    /// Distinct thresholds in increasing order with `μ` at each (the step
    /// function is right-continuous, so the value at a breakpoint already
    /// excludes samples equal to it).
    pub fn breakpoints(&self, s: usize) -> Vec<(f64, f64)> {
        let sl = &self.slices[s];
        let arc = self.cell_arc(s);
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (pos, &v) in sl.sorted.iter().enumerate().rev() {
            if out.last().is_some_and(|&(t, _)| t == v) {
                continue;
            }
            // samples strictly above v sit before the first occurrence of v
            let above = sl.sorted[..=pos].partition_point(|&w| w > v);
            out.push((v, above as f64 * arc));
        }
        out
    }

    /// `(min, max)` over every stored sample.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for sl in &self.slices {
            if let (Some(&first), Some(&last)) = (sl.sorted.first(), sl.sorted.last()) {
                hi = hi.max(first);
                lo = lo.min(last);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// CSV with one row per breakpoint per slice: `r,y,t,mu,alpha`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,y,t,mu,alpha\n");
        for s in 0..self.grid.nslices() {
            let (k, i) = self.grid.slice_coords(s);
            let r = self.grid.r(i);
            let y = if self.grid.ny > 0 {
                format!("{}", self.grid.y(k))
            } else {
                String::new()
            };
            for (t, mu) in self.breakpoints(s) {
                let _ = writeln!(out, "{r},{y},{t},{mu},{}", mu / (2.0 * r));
            }
        }
        out
    }
}

fn build_table(u: &ScalarField, restricted: bool) -> DistributionTable {
    let g = u.grid();
    let slices = (0..g.nslices())
        .into_par_iter()
        .map(|s| {
            let sl = u.slice(s);
            let inside = sl.iter().filter(|v| v.is_some()).count();
            let flag = match inside {
                0 => SliceFlag::Empty,
                n if n == g.ntheta => SliceFlag::Full,
                _ => SliceFlag::Partial,
            };
            let mut sorted: Vec<f64> = match (flag, restricted) {
                (SliceFlag::Empty, _) => Vec::new(),
                (_, true) => sl.iter().flatten().copied().collect(),
                (_, false) => sl.iter().map(|v| v.unwrap_or(0.0)).collect(),
            };
            sorted.sort_by(|a, b| b.total_cmp(a));
            SliceDistribution { flag, sorted }
        })
        .collect();
    DistributionTable {
        grid: g.clone(),
        slices,
        restricted,
    }
}

/// Distribution `μ` of the zero-extension; cells outside the domain on a
/// slice that meets it count as 0.
pub fn distribution(u0: &ScalarField) -> DistributionTable {
    build_table(u0, false)
}

/// Distribution `μ′` measured over the domain only.
pub fn restricted_distribution(u: &ScalarField) -> DistributionTable {
    build_table(u, true)
}

/// Rank used by the rearrangement at cell `j` of `target`: the largest
/// number of samples that fit in the centred arc of half-width `|θ_j|`.
fn rank(target: &PolarGrid, src_ntheta: usize, j: usize) -> usize {
    let n = target.ntheta;
    if n == src_ntheta {
        (2 * j + 1).abs_diff(n)
    } else {
        let src_dtheta = 2.0 * std::f64::consts::PI / src_ntheta as f64;
        (2.0 * target.theta(j).abs() / src_dtheta + 1e-9).floor() as usize
    }
}

/// Circular rearrangement of a table onto `target`, which must share the
/// `(r, y)` lattice (the angular resolution may differ). Cells whose rank
/// exceeds the support are OUTSIDE, which only happens for restricted
/// tables; EMPTY slices are OUTSIDE.
pub fn rearrange(table: &DistributionTable, target: &PolarGrid) -> Result<ScalarField> {
    if !table.grid.same_slices(target) {
        return Err(Error::GridMismatch(
            "rearrangement target has a different (r, y) lattice".into(),
        ));
    }
    let n = target.ntheta;
    let ranks: Vec<usize> = (0..n).map(|j| rank(target, table.grid.ntheta, j)).collect();
    let values: Vec<Option<f64>> = table
        .slices
        .par_iter()
        .flat_map_iter(|sl| ranks.iter().map(move |&c| sl.sorted.get(c).copied()))
        .collect();
    ScalarField::new(target.clone(), values)
}

/// `v_μ`: rearrangement of the zero-extension's distribution.
pub fn rearranged(u: &ScalarField) -> Result<ScalarField> {
    let u0 = crate::grid::extend_by_zero(u)?;
    rearrange(&distribution(&u0), u.grid())
}

/// `w_{μ′}`: rearrangement of the restricted distribution.
pub fn rearranged_restricted(u: &ScalarField) -> Result<ScalarField> {
    if u.inside_count() == 0 {
        return Err(Error::EmptyDomain);
    }
    rearrange(&restricted_distribution(u), u.grid())
}

/// Replaces every slice of an indicator by a centred arc holding the same
/// number of cells, rounded to an even count when needed: a cell is in the
/// result iff its rank is below the slice's count, so the output commutes
/// exactly with [`rearrange`] on superlevel sets.
pub fn symmetrize_set(e: &ScalarField) -> Result<ScalarField> {
    if !e.is_indicator() {
        return Err(Error::NotIndicator);
    }
    let g = e.grid();
    let n = g.ntheta;
    let ranks: Vec<usize> = (0..n).map(|j| rank(g, n, j)).collect();
    let mut values = Vec::with_capacity(g.ncells());
    for s in 0..g.nslices() {
        let sl = e.slice(s);
        if sl.iter().all(|v| v.is_none()) {
            values.extend(std::iter::repeat_n(None, n));
            continue;
        }
        let m = sl.iter().filter(|v| **v == Some(1.0)).count();
        values.extend(ranks.iter().map(|&c| Some(if c < m { 1.0 } else { 0.0 })));
    }
    ScalarField::new(g.clone(), values)
}

/// Arc length of `{u₀ > t}` on slice `s`, with u₀ interpolated linearly in θ
/// between cell centres (periodically). OUTSIDE cells of a partial slice
/// count as 0.
pub fn slice_arc_measure(u0: &ScalarField, s: usize, t: f64) -> Result<f64> {
    let sl = u0.slice(s);
    if sl.iter().all(|v| v.is_none()) {
        return Err(Error::Domain(format!("slice {s} is empty")));
    }
    let g = u0.grid();
    let (_, i) = g.slice_coords(s);
    Ok(arc_fraction(sl, t) * g.r(i) * g.dtheta())
}

/// Number of cell-to-cell segments (fractional) where the interpolated
/// slice exceeds `t`.
pub(crate) fn arc_fraction(sl: &[Option<f64>], t: f64) -> f64 {
    let n = sl.len();
    let mut acc = 0.0;
    for j in 0..n {
        let a = sl[j].unwrap_or(0.0);
        let b = sl[(j + 1) % n].unwrap_or(0.0);
        acc += segment_fraction(a, b, t);
    }
    acc
}

fn segment_fraction(a: f64, b: f64, t: f64) -> f64 {
    match (a > t, b > t) {
        (true, true) => 1.0,
        (false, false) => 0.0,
        (true, false) => (a - t) / (a - b),
        (false, true) => (b - t) / (b - a),
    }
}

/// L¹ distance `Σ ∫ |μ₁ − μ₂| dt Δr Δy` between two tables on the same slice
/// lattice. Infinite when some slice has different supports, since then the
/// tables differ on an unbounded t-range.
pub fn distribution_distance(t1: &DistributionTable, t2: &DistributionTable) -> Result<f64> {
    if !t1.grid.same_slices(&t2.grid) {
        return Err(Error::GridMismatch(
            "distribution tables have different slice lattices".into(),
        ));
    }
    let g = &t1.grid;
    let per_slice: Vec<f64> = (0..g.nslices())
        .into_par_iter()
        .map(|s| {
            let (a, b) = (&t1.slices[s], &t2.slices[s]);
            let (arc_a, arc_b) = (t1.cell_arc(s), t2.cell_arc(s));
            let below = (t1.mu_below(s) - t2.mu_below(s)).abs();
            if below > 1e-12 * (t1.mu_below(s) + t2.mu_below(s)) {
                return f64::INFINITY;
            }
            let mut ts: Vec<f64> = a.sorted.iter().chain(&b.sorted).copied().collect();
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            ts.windows(2)
                .map(|w| {
                    let ma = a.count_above(w[0]) as f64 * arc_a;
                    let mb = b.count_above(w[0]) as f64 * arc_b;
                    (ma - mb).abs() * (w[1] - w[0])
                })
                .sum::<f64>()
        })
        .collect();
    Ok(per_slice.iter().sum::<f64>() * g.dr() * g.dy())
}

/// Whether two tables agree within `tol` in the L¹ sense.
pub fn distributions_match(
    t1: &DistributionTable,
    t2: &DistributionTable,
    tol: f64,
) -> Result<bool> {
    Ok(distribution_distance(t1, t2)? <= tol)
}

/// Half-angle `α = μ/2r` sampled on a uniform threshold lattice.
///
/// With `nt` intervals across the sample range `[vmin, vmax]`, the lattice
/// has `nt + 2` levels `vmin − h/2 + l h`, so the first level lies below every
/// sample and the last above every sample.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaField {
    pub grid: PolarGrid,
    pub levels: Vec<f64>,
    /// `α` indexed by `s * levels.len() + l`.
    pub alpha: Vec<f64>,
    /// Slices with no support.
    pub empty: Vec<bool>,
}

impl AlphaField {
    pub fn from_table(table: &DistributionTable, nt: usize) -> AlphaField {
        let (lo, hi) = table.value_range().unwrap_or((0.0, 0.0));
        let nt = nt.max(1);
        let h = if hi > lo { (hi - lo) / nt as f64 } else { 1.0 };
        let levels: Vec<f64> = (0..nt + 2).map(|l| lo - 0.5 * h + l as f64 * h).collect();
        let alpha = (0..table.grid.nslices())
            .into_par_iter()
            .flat_map_iter(|s| {
                levels
                    .iter()
                    .map(move |&t| table.alpha(s, t))
                    .collect::<Vec<_>>()
            })
            .collect();
        let empty = table
            .slices
            .iter()
            .map(|sl| sl.flag == SliceFlag::Empty)
            .collect();
        AlphaField {
            grid: table.grid.clone(),
            levels,
            alpha,
            empty,
        }
    }

    pub fn nlevels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_step(&self) -> f64 {
        if self.levels.len() > 1 {
            self.levels[1] - self.levels[0]
        } else {
            1.0
        }
    }

    pub fn get(&self, s: usize, l: usize) -> f64 {
        self.alpha[s * self.levels.len() + l]
    }

    /// `ξ = μ/r = 2α`.
    pub fn xi(&self, s: usize, l: usize) -> f64 {
        2.0 * self.get(s, l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::extend_by_zero;
    use std::f64::consts::PI;

    fn quadrants(n: usize) -> ScalarField {
        let g = PolarGrid::new(4, n, 0.0, 1.0).unwrap();
        ScalarField::from_fn(g, |_, t, _| {
            Some(if t.sin() * t.cos() > 0.0 { 1.0 } else { 0.0 })
        })
        .unwrap()
    }

    #[test]
    fn constant_slice_measure() {
        let g = PolarGrid::new(3, 16, 0.0, 3.0).unwrap();
        let u = ScalarField::from_fn(g.clone(), |_, _, _| Some(2.0)).unwrap();
        for s in 0..3 {
            let r = g.r(s);
            assert!((slice_arc_measure(&u, s, 1.0).unwrap() - 2.0 * PI * r).abs() < 1e-12);
            assert_eq!(slice_arc_measure(&u, s, 2.0).unwrap(), 0.0);
        }
        let t = distribution(&u);
        assert_eq!(t.breakpoints(0), vec![(2.0, 0.0)]);
        assert!((t.mu(1, 1.9) - 2.0 * PI * g.r(1)).abs() < 1e-12);
    }

    #[test]
    fn quadrant_indicator() {
        let u = quadrants(64);
        let g = u.grid().clone();
        for s in 0..g.nr {
            let r = g.r(s);
            assert!((slice_arc_measure(&u, s, 0.5).unwrap() - PI * r).abs() < 1e-12);
        }
        let t = distribution(&u);
        let r = g.r(2);
        assert!((t.mu(2, -0.1) - 2.0 * PI * r).abs() < 1e-12);
        assert!((t.mu(2, 0.0) - PI * r).abs() < 1e-12);
        assert!((t.mu(2, 0.5) - PI * r).abs() < 1e-12);
        assert_eq!(t.mu(2, 1.0), 0.0);
        let v = rearrange(&t, &g).unwrap();
        for j in 0..g.ntheta {
            let want = if g.theta(j).abs() < PI / 2.0 {
                1.0
            } else {
                0.0
            };
            assert_eq!(v.get(0, 2, j), Some(want));
        }
    }

    #[test]
    fn quarter_disc_arc() {
        let g = PolarGrid::new(2, 4096, 0.0, 1.0).unwrap();
        let u = ScalarField::from_fn(g, |r, t, _| (t > 0.0 && t < PI / 2.0).then(|| r * t.cos()))
            .unwrap();
        let u0 = extend_by_zero(&u).unwrap();
        // r_1 = 0.75, level 0.375 gives the arc θ ∈ (0, π/3)
        let m = slice_arc_measure(&u0, 1, 0.375).unwrap();
        assert!((m - 0.75 * PI / 3.0).abs() < 2e-3, "{m}");
    }

    #[test]
    fn rearrangement_is_even_monotone_idempotent() {
        let g = PolarGrid::new(5, 24, 0.5, 2.0).unwrap();
        let u =
            ScalarField::from_fn(g.clone(), |r, t, _| Some((3.0 * t).sin() * r + t.cos())).unwrap();
        let v = rearranged(&u).unwrap();
        let n = g.ntheta;
        for s in 0..g.nr {
            let sl = v.slice(s);
            for j in 0..n {
                assert_eq!(sl[j], sl[n - 1 - j]);
            }
            for j in n / 2..n - 1 {
                assert!(sl[j].unwrap() >= sl[j + 1].unwrap());
            }
        }
        assert_eq!(rearranged(&v).unwrap(), v);
    }

    #[test]
    fn symmetrize_two_sectors() {
        let g = PolarGrid::new(2, 64, 1.0, 2.0).unwrap();
        let e = ScalarField::from_fn(g.clone(), |_, t, _| {
            Some(if (t > 0.3 && t < 0.8) || (t > -2.5 && t < -1.5) {
                1.0
            } else {
                0.0
            })
        })
        .unwrap();
        let es = symmetrize_set(&e).unwrap();
        for s in 0..2 {
            let m_in = e.slice(s).iter().filter(|v| **v == Some(1.0)).count();
            let m_out = es.slice(s).iter().filter(|v| **v == Some(1.0)).count();
            assert!(m_in.abs_diff(m_out) <= 1);
            assert_eq!(crate::geometry::slice_endpoint_count(&es, s), 2);
        }
        let bad = e.map(|x| x * 2.0).unwrap();
        assert!(matches!(symmetrize_set(&bad), Err(Error::NotIndicator)));
    }

    #[test]
    fn restricted_differs_for_negative_levels() {
        let g = PolarGrid::new(2, 32, 1.0, 2.0).unwrap();
        let u = ScalarField::from_fn(g, |_, t, _| (t.abs() < 1.0).then(|| t.abs() - 0.5)).unwrap();
        let u0 = extend_by_zero(&u).unwrap();
        let mu = distribution(&u0);
        let mup = restricted_distribution(&u);
        assert!(mup.mu(0, -0.1) < mu.mu(0, -0.1));
        assert_eq!(mup.mu(0, 0.1), mu.mu(0, 0.1));
        assert_eq!(mup.mu(0, 10.0), 0.0);
        let w = rearrange(&mup, u.grid()).unwrap();
        assert_eq!(w.inside_count(), u.inside_count());
    }

    #[test]
    fn distances() {
        let g = PolarGrid::new(4, 32, 0.0, 1.0).unwrap();
        let u = ScalarField::from_fn(g, |r, t, _| Some(r * (1.0 + t.cos()))).unwrap();
        let t = distribution(&u);
        assert!(distributions_match(&t, &t, 0.0).unwrap());
        let t2 = distribution(&u.map(|x| 2.0 * x).unwrap());
        assert!(!distributions_match(&t, &t2, 1e-3).unwrap());
        let af = AlphaField::from_table(&t, 8);
        assert_eq!(af.nlevels(), 10);
        assert!(af.levels[0] < 0.0 && *af.levels.last().unwrap() > 2.0 * 0.875);
        assert!((af.get(3, 0) - PI).abs() < 1e-12);
        assert_eq!(af.get(3, 9), 0.0);
    }
}
