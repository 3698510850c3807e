//! Rigidity diagnostics: direction field, α-landscape, orthogonal fit and
//! the combined verdict.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{check_ps, IntegrandSpec, PsReport, SpecClass, Weight, Window};
use crate::grid::{extend_by_zero, PolarGrid, ScalarField};
use crate::symmetrize::{distribution, rearrange, AlphaField};

/// Unit vectors `d(r, y, t)` on the α lattice; `e₁` where α is within `eps`
/// of 0 or π.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionField {
    pub grid: PolarGrid,
    pub levels: Vec<f64>,
    pub d: Vec<[f64; 2]>,
    pub defined: Vec<bool>,
}

impl DirectionField {
    pub fn get(&self, s: usize, l: usize) -> Option<[f64; 2]> {
        let p = s * self.levels.len() + l;
        self.defined[p].then_some(self.d[p])
    }
}

/// Normalized sum of the unit vectors of the superlevel cells of each slice.
pub fn direction_field(u0: &ScalarField, alpha: &AlphaField, eps: f64) -> Result<DirectionField> {
    u0.grid().check_same(&alpha.grid)?;
    let g = u0.grid();
    let n = g.ntheta;
    let dth = g.dtheta();
    let levels = alpha.levels.clone();
    let nl = levels.len();
    let trig: Vec<(f64, f64)> = (0..n)
        .map(|j| (g.theta(j).cos(), g.theta(j).sin()))
        .collect();
    let per_slice: Vec<(Vec<[f64; 2]>, Vec<bool>)> = (0..g.nslices())
        .into_par_iter()
        .map(|s| {
            let sl = u0.slice(s);
            let mut d = vec![[1.0, 0.0]; nl];
            let mut def = vec![false; nl];
            if sl.iter().all(|v| v.is_none()) {
                return (d, def);
            }
            let mut order: Vec<(f64, usize)> = sl
                .iter()
                .enumerate()
                .map(|(j, v)| (v.unwrap_or(0.0), j))
                .collect();
            order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut prefix = Vec::with_capacity(n + 1);
            let (mut cx, mut cy) = (0.0, 0.0);
            prefix.push((0.0, 0.0));
            for &(_, j) in &order {
                cx += trig[j].0;
                cy += trig[j].1;
                prefix.push((cx, cy));
            }
            for (l, &t) in levels.iter().enumerate() {
                let m = order.partition_point(|&(v, _)| v > t);
                let a = 0.5 * m as f64 * dth;
                if a <= eps || a >= PI - eps {
                    continue;
                }
                let (x, y) = prefix[m];
                let norm = (x * x + y * y).sqrt();
                if norm > 1e-12 * m as f64 {
                    d[l] = [x / norm, y / norm];
                    def[l] = true;
                }
            }
            (d, def)
        })
        .collect();
    let mut d = Vec::with_capacity(g.nslices() * nl);
    let mut defined = Vec::with_capacity(g.nslices() * nl);
    for (a, b) in per_slice {
        d.extend(a);
        defined.extend(b);
    }
    Ok(DirectionField {
        grid: g.clone(),
        levels,
        d,
        defined,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AlphaClass {
    Low,
    High,
    Mid,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LandscapeOptions {
    /// Margin for LOW/HIGH; default one angular cell.
    pub eps: Option<f64>,
    /// Jump threshold for singular faces; default 10× the median nonzero
    /// MID–MID jump.
    pub kappa: Option<f64>,
    /// Minimal essential measure; default 10 lattice cells.
    pub min_area: Option<f64>,
}

/// Connected MID region of the α lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeComponent {
    pub cells: usize,
    pub measure: f64,
    pub r_range: (f64, f64),
    pub t_range: (f64, f64),
}

/// Place where two essential components meet or come closest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pinch {
    pub components: (usize, usize),
    pub r: f64,
    pub y: f64,
    pub t: f64,
    /// True when the components share lattice faces, false when only their
    /// closest approach is reported.
    pub touching: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaLandscape {
    pub eps: f64,
    pub kappa: f64,
    pub min_area: f64,
    pub nlevels: usize,
    /// Class per lattice cell, indexed by `slice * nlevels + level`.
    #[serde(skip)]
    pub classes: Vec<AlphaClass>,
    /// Essential component per lattice cell.
    #[serde(skip)]
    pub labels: Vec<Option<usize>>,
    pub components: Vec<LandscapeComponent>,
    /// Measure of MID cells in components below `min_area`.
    pub inconclusive_measure: f64,
    pub singular_faces: usize,
    /// A singular face separates two different essential components.
    pub singular_separation: bool,
    pub pinches: Vec<Pinch>,
}

/// Lattice neighbours of cell `p` (slice-major, level-minor), with a flag
/// telling whether some direction ran off the lattice.
fn neighbours(g: &PolarGrid, nl: usize, p: usize, out: &mut Vec<usize>) -> bool {
    out.clear();
    let (s, l) = (p / nl, p % nl);
    let (k, i) = g.slice_coords(s);
    let mut edge = false;
    let mut push = |q: Option<usize>| match q {
        Some(q) => out.push(q),
        None => edge = true,
    };
    push((l > 0).then(|| p - 1));
    push((l + 1 < nl).then(|| p + 1));
    push((i > 0).then(|| g.slice_index(k, i - 1) * nl + l));
    push((i + 1 < g.nr).then(|| g.slice_index(k, i + 1) * nl + l));
    if g.ny > 0 {
        push((k > 0).then(|| g.slice_index(k - 1, i) * nl + l));
        push((k + 1 < g.ny).then(|| g.slice_index(k + 1, i) * nl + l));
    }
    edge
}

/// Classifies the α lattice and finds the essential MID components.
///
/// Components are connected across faces whose α-jump is at most κ.
/// Thin necks are handled by eroding MID cells next to non-MID cells or the
/// lattice edge, labelling the remaining cores, and then growing the cores
/// back over the eroded cells; so a neck narrower than two cells separates
/// components, which is how a null pinch shows up at finite resolution.
pub fn classify_landscape(alpha: &AlphaField, opts: &LandscapeOptions) -> AlphaLandscape {
    let g = &alpha.grid;
    let nl = alpha.nlevels();
    let np = alpha.alpha.len();
    let eps = opts.eps.unwrap_or(g.dtheta());
    let ht = alpha.level_step();
    let cell = g.dr() * ht * g.dy();
    let min_area = opts.min_area.unwrap_or(10.0 * cell);
    let classes: Vec<AlphaClass> = (0..np)
        .map(|p| {
            let a = alpha.alpha[p];
            if alpha.empty[p / nl] || a <= eps {
                AlphaClass::Low
            } else if a >= PI - eps {
                AlphaClass::High
            } else {
                AlphaClass::Mid
            }
        })
        .collect();
    let mid = |p: usize| classes[p] == AlphaClass::Mid;
    let mut nb = Vec::with_capacity(6);

    let mut jumps = Vec::new();
    for p in (0..np).filter(|&p| mid(p)) {
        neighbours(g, nl, p, &mut nb);
        for &q in nb.iter().filter(|&&q| q > p && mid(q)) {
            let d = (alpha.alpha[p] - alpha.alpha[q]).abs();
            if d > 0.0 {
                jumps.push(d);
            }
        }
    }
    let kappa = opts.kappa.unwrap_or_else(|| {
        if jumps.is_empty() {
            f64::INFINITY
        } else {
            let mut j = jumps.clone();
            let m = j.len() / 2;
            let (_, med, _) = j.select_nth_unstable_by(m, f64::total_cmp);
            10.0 * *med
        }
    });
    let singular = |p: usize, q: usize| (alpha.alpha[p] - alpha.alpha[q]).abs() > kappa;
    let singular_faces = jumps.iter().filter(|&&d| d > kappa).count();

    // erosion
    let core: Vec<bool> = (0..np)
        .map(|p| {
            if !mid(p) {
                return false;
            }
            let mut nb = Vec::with_capacity(6);
            let edge = neighbours(g, nl, p, &mut nb);
            !edge && nb.iter().all(|&q| mid(q))
        })
        .collect();

    let mut label: Vec<Option<usize>> = vec![None; np];
    let mut ncomp = 0;
    let mut queue = VecDeque::new();
    for p0 in 0..np {
        if !core[p0] || label[p0].is_some() {
            continue;
        }
        label[p0] = Some(ncomp);
        queue.push_back(p0);
        while let Some(p) = queue.pop_front() {
            neighbours(g, nl, p, &mut nb);
            for &q in &nb {
                if core[q] && label[q].is_none() && !singular(p, q) {
                    label[q] = Some(ncomp);
                    queue.push_back(q);
                }
            }
        }
        ncomp += 1;
    }
    // grow cores back over eroded MID cells
    queue.extend((0..np).filter(|&p| core[p]));
    while let Some(p) = queue.pop_front() {
        neighbours(g, nl, p, &mut nb);
        for &q in &nb {
            if mid(q) && label[q].is_none() && !singular(p, q) {
                label[q] = label[p];
                queue.push_back(q);
            }
        }
    }
    // leftovers form their own components
    for p0 in 0..np {
        if !mid(p0) || label[p0].is_some() {
            continue;
        }
        label[p0] = Some(ncomp);
        queue.push_back(p0);
        while let Some(p) = queue.pop_front() {
            neighbours(g, nl, p, &mut nb);
            for &q in &nb {
                if mid(q) && label[q].is_none() && !singular(p, q) {
                    label[q] = Some(ncomp);
                    queue.push_back(q);
                }
            }
        }
        ncomp += 1;
    }

    let coord = |p: usize| {
        let (s, l) = (p / nl, p % nl);
        let (k, i) = g.slice_coords(s);
        (g.r(i), g.y(k), alpha.levels[l])
    };
    let mut counts = vec![0usize; ncomp];
    for c in label.iter().flatten() {
        counts[*c] += 1;
    }
    let mut remap = vec![None; ncomp];
    let mut components = Vec::new();
    let mut inconclusive_measure = 0.0;
    for (c, &cnt) in counts.iter().enumerate() {
        let measure = cnt as f64 * cell;
        if measure > min_area {
            remap[c] = Some(components.len());
            components.push(LandscapeComponent {
                cells: cnt,
                measure,
                r_range: (f64::INFINITY, f64::NEG_INFINITY),
                t_range: (f64::INFINITY, f64::NEG_INFINITY),
            });
        } else {
            inconclusive_measure += measure;
        }
    }
    let labels: Vec<Option<usize>> = label.iter().map(|l| l.and_then(|c| remap[c])).collect();
    for (p, l) in labels.iter().enumerate() {
        if let Some(c) = l {
            let (r, _, t) = coord(p);
            let comp = &mut components[*c];
            comp.r_range = (comp.r_range.0.min(r), comp.r_range.1.max(r));
            comp.t_range = (comp.t_range.0.min(t), comp.t_range.1.max(t));
        }
    }

    // contacts between essential components
    let mut contacts: BTreeMap<(usize, usize), (f64, f64, f64, usize)> = BTreeMap::new();
    let mut singular_separation = false;
    let mut boundary: Vec<Vec<usize>> = vec![Vec::new(); components.len()];
    for p in 0..np {
        let Some(a) = labels[p] else { continue };
        neighbours(g, nl, p, &mut nb);
        let mut on_boundary = false;
        for &q in &nb {
            if labels[q] != Some(a) {
                on_boundary = true;
            }
            let Some(b) = labels[q] else { continue };
            if b <= a {
                continue;
            }
            if singular(p, q) {
                singular_separation = true;
            } else {
                let (r1, y1, t1) = coord(p);
                let (r2, y2, t2) = coord(q);
                let e = contacts.entry((a, b)).or_insert((0.0, 0.0, 0.0, 0));
                e.0 += 0.5 * (r1 + r2);
                e.1 += 0.5 * (y1 + y2);
                e.2 += 0.5 * (t1 + t2);
                e.3 += 1;
            }
        }
        if on_boundary {
            boundary[a].push(p);
        }
    }
    let mut pinches: Vec<Pinch> = contacts
        .iter()
        .map(|(&(a, b), &(r, y, t, c))| {
            let c = c as f64;
            Pinch {
                components: (a, b),
                r: r / c,
                y: y / c,
                t: t / c,
                touching: true,
            }
        })
        .collect();
    let rs = (g.rmax - g.rmin).max(f64::MIN_POSITIVE);
    let ts = (alpha.levels[nl - 1] - alpha.levels[0]).max(f64::MIN_POSITIVE);
    let ys = if g.ny > 0 { g.ymax - g.ymin } else { 1.0 };
    for a in 0..components.len() {
        for b in a + 1..components.len() {
            if contacts.contains_key(&(a, b)) {
                continue;
            }
            let mut best = (f64::INFINITY, 0, 0);
            for &p in &boundary[a] {
                let (r1, y1, t1) = coord(p);
                for &q in &boundary[b] {
                    let (r2, y2, t2) = coord(q);
                    let d = ((r1 - r2) / rs).powi(2)
                        + ((t1 - t2) / ts).powi(2)
                        + ((y1 - y2) / ys).powi(2);
                    if d < best.0 {
                        best = (d, p, q);
                    }
                }
            }
            if best.0.is_finite() {
                let (r1, y1, t1) = coord(best.1);
                let (r2, y2, t2) = coord(best.2);
                pinches.push(Pinch {
                    components: (a, b),
                    r: 0.5 * (r1 + r2),
                    y: 0.5 * (y1 + y2),
                    t: 0.5 * (t1 + t2),
                    touching: false,
                });
            }
        }
    }

    AlphaLandscape {
        eps,
        kappa,
        min_area,
        nlevels: nl,
        classes,
        labels,
        components,
        inconclusive_measure,
        singular_faces,
        singular_separation,
        pinches,
    }
}

/// Best orthogonal map found by [`fit_orthogonal`]: `u(r, ±θ + angle)`
/// reproduces `v(r, θ)` with the reported relative L¹ residual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub angle: f64,
    pub reflection: bool,
    pub residual: f64,
}

/// Slice-major dense copy with OUTSIDE as 0, and per-slice cell measures.
fn dense(u: &ScalarField) -> Vec<f64> {
    u.values().iter().map(|v| v.unwrap_or(0.0)).collect()
}

/// Minimizes `‖u ∘ R − v‖₁ / ‖v‖₁` over rotations and reflections.
///
/// Whole-cell rotations are scanned first on a θ-subsampled copy, the best
/// candidates are refined cell by cell on the full data, and the angle is
/// finally polished by golden-section search with linear interpolation in θ.
pub fn fit_orthogonal(u: &ScalarField, v: &ScalarField) -> Result<Fit> {
    u.grid().check_same(v.grid())?;
    let g = u.grid();
    let n = g.ntheta;
    let ns = g.nslices();
    let w: Vec<f64> = (0..ns)
        .map(|s| g.cell_measure(g.slice_coords(s).1))
        .collect();
    let vd = dense(v);
    let norm: f64 = (0..ns)
        .map(|s| vd[s * n..(s + 1) * n].iter().map(|x| x.abs()).sum::<f64>() * w[s])
        .sum();
    if !(norm > 0.0) {
        return Err(Error::DegenerateNorm);
    }
    let ud = dense(u);
    let ur = dense(&u.reflect());
    let src = |refl: bool| if refl { &ur } else { &ud };

    // residual for a whole-cell shift k, sampling every `step`-th column
    let shifted = |refl: bool, k: usize, step: usize| -> f64 {
        let a = src(refl);
        (0..ns)
            .into_par_iter()
            .map(|s| {
                let (ua, va) = (&a[s * n..(s + 1) * n], &vd[s * n..(s + 1) * n]);
                let mut acc = 0.0;
                let mut j = 0;
                while j < n {
                    acc += (ua[(j + k) % n] - va[j]).abs();
                    j += step;
                }
                acc * w[s]
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum::<f64>()
    };
    let step = n.div_ceil(256).max(1);
    let mut best: Option<(f64, bool, usize)> = None;
    let better = |cand: (f64, bool, usize), cur: Option<(f64, bool, usize)>| match cur {
        None => true,
        Some(c) => {
            cand.0 < c.0 || (cand.0 == c.0 && (!cand.1 && c.1 || (cand.1 == c.1 && cand.2 < c.2)))
        }
    };
    for refl in [false, true] {
        let mut coarse: Vec<(f64, usize)> = (0..n)
            .step_by(step)
            .map(|k| (shifted(refl, k, step), k))
            .collect();
        coarse.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, k0) in coarse.iter().take(3) {
            let lo = k0 as isize - step as isize;
            for kk in lo..=k0 as isize + step as isize {
                let k = kk.rem_euclid(n as isize) as usize;
                let cand = (shifted(refl, k, 1) / norm, refl, k);
                if better(cand, best) {
                    best = Some(cand);
                }
            }
        }
    }
    let (cell_res, refl, k) = best.expect("at least one candidate");
    let dth = g.dtheta();
    let a = src(refl);
    // residual for a continuous shift φ (in cells), linear interpolation in θ
    let frac = |phi: f64| -> f64 {
        let base = phi.floor();
        let lam = phi - base;
        let k0 = (base as isize).rem_euclid(n as isize) as usize;
        (0..ns)
            .into_par_iter()
            .map(|s| {
                let (ua, va) = (&a[s * n..(s + 1) * n], &vd[s * n..(s + 1) * n]);
                let mut acc = 0.0;
                for j in 0..n {
                    let x = ua[(j + k0) % n] * (1.0 - lam) + ua[(j + k0 + 1) % n] * lam;
                    acc += (x - va[j]).abs();
                }
                acc * w[s]
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum::<f64>()
            / norm
    };
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (k as f64 - 1.0, k as f64 + 1.0);
    let mut x1 = hi - gr * (hi - lo);
    let mut x2 = lo + gr * (hi - lo);
    let (mut f1, mut f2) = (frac(x1), frac(x2));
    for _ in 0..40 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = frac(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = frac(x2);
        }
        if hi - lo < 1e-6 {
            break;
        }
    }
    let (phi, res) = if f1.min(f2) < cell_res {
        if f1 <= f2 {
            (x1, f1)
        } else {
            (x2, f2)
        }
    } else {
        (k as f64, cell_res)
    };
    let mut angle = (phi * dth).rem_euclid(2.0 * PI);
    if angle > PI {
        angle -= 2.0 * PI;
    }
    Ok(Fit {
        angle,
        reflection: refl,
        residual: res,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    RigidConsistent,
    Counterexample,
    Inconclusive,
}

#[derive(Clone, Copy, Debug)]
pub struct RigidityOptions {
    pub landscape: LandscapeOptions,
    /// Threshold intervals of the α lattice.
    pub nt: usize,
    /// Residual separating "fits" from "does not fit".
    pub threshold: f64,
    /// Allowed angular spread of d within a component, in θ-cells.
    pub dev_cells: f64,
    /// Equality tolerance; `None` uses the self-calibrated one.
    pub ps_tol: Option<f64>,
}

impl Default for RigidityOptions {
    fn default() -> Self {
        RigidityOptions {
            landscape: LandscapeOptions::default(),
            nt: 256,
            threshold: 0.02,
            dev_cells: 3.0,
            ps_tol: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentDirection {
    pub measure: f64,
    pub mean_direction: [f64; 2],
    /// Largest angle between d and the mean direction.
    pub max_dev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeSummary {
    pub components: Vec<ComponentDirection>,
    pub singular_faces: usize,
    pub singular_separation: bool,
    pub inconclusive_measure: f64,
    pub kappa: f64,
    pub pinches: Vec<Pinch>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub ps: PsReport,
    pub landscape: LandscapeSummary,
    /// d is constant within every component and equal across components.
    pub direction_constant: bool,
    pub fit: Fit,
    pub verdict: Verdict,
}

/// Per-component mean direction and spread.
pub fn component_directions(
    land: &AlphaLandscape,
    dir: &DirectionField,
) -> Vec<ComponentDirection> {
    let nc = land.components.len();
    let mut sums = vec![[0.0f64; 2]; nc];
    for (p, l) in land.labels.iter().enumerate() {
        if let (Some(c), true) = (l, dir.defined[p]) {
            sums[*c][0] += dir.d[p][0];
            sums[*c][1] += dir.d[p][1];
        }
    }
    let means: Vec<[f64; 2]> = sums
        .iter()
        .map(|s| {
            let n = (s[0] * s[0] + s[1] * s[1]).sqrt();
            if n > 0.0 {
                [s[0] / n, s[1] / n]
            } else {
                [1.0, 0.0]
            }
        })
        .collect();
    let mut dev = vec![0.0f64; nc];
    for (p, l) in land.labels.iter().enumerate() {
        if let (Some(c), true) = (l, dir.defined[p]) {
            let m = means[*c];
            let d = dir.d[p];
            let ang = (m[0] * d[1] - m[1] * d[0])
                .atan2(m[0] * d[0] + m[1] * d[1])
                .abs();
            dev[*c] = dev[*c].max(ang);
        }
    }
    (0..nc)
        .map(|c| ComponentDirection {
            measure: land.components[c].measure,
            mean_direction: means[c],
            max_dev: dev[c],
        })
        .collect()
}

/// Runs the equality check, the landscape and direction analysis and the
/// orthogonal fit, and combines them into a verdict:
///
/// * RIGID_CONSISTENT — equality holds and `u` is an orthogonal image of
///   `v_μ` up to the residual threshold;
/// * COUNTEREXAMPLE — equality holds, no orthogonal map fits, and the
///   landscape explains why (several essential components, a non-constant
///   direction, or a singular separation);
/// * INCONCLUSIVE — anything else.
pub fn check_rigidity(
    u: &ScalarField,
    spec: &IntegrandSpec,
    opts: &RigidityOptions,
) -> Result<RigidityReport> {
    if spec.class != SpecClass::FStrict {
        return Err(Error::SpecClass(
            "rigidity needs a strictly convex integrand".into(),
        ));
    }
    let g = u.grid();
    let positive = match spec.weight.is_positive() {
        Some(p) => p,
        None => {
            let Weight::Custom(f) = &spec.weight else {
                unreachable!()
            };
            (0..g.ncells()).all(|idx| {
                let (k, i, _) = g.coords(idx);
                u.values()[idx].is_none_or(|t| f(g.r(i), g.y(k), t) > 0.0)
            })
        }
    };
    if !positive {
        return Err(Error::SpecClass(
            "rigidity needs a strictly positive weight".into(),
        ));
    }
    let ps = check_ps(u, spec, &Window::full(), opts.ps_tol)?;
    let u0 = extend_by_zero(u)?;
    let table = distribution(&u0);
    let v = rearrange(&table, g)?;
    let alpha = AlphaField::from_table(&table, opts.nt);
    let land = classify_landscape(&alpha, &opts.landscape);
    let dir = direction_field(&u0, &alpha, land.eps)?;
    let comps = component_directions(&land, &dir);
    let tol = opts.dev_cells * g.dtheta();
    let within = comps.iter().all(|c| c.max_dev <= tol);
    let across = comps.windows(2).all(|w| {
        let (a, b) = (w[0].mean_direction, w[1].mean_direction);
        (a[0] * b[1] - a[1] * b[0])
            .atan2(a[0] * b[0] + a[1] * b[1])
            .abs()
            <= tol
    });
    let direction_constant = within && across;
    let fit = fit_orthogonal(&u0, &v)?;
    let explained = land.components.len() >= 2 || !direction_constant || land.singular_separation;
    let verdict = if ps.equality && fit.residual < opts.threshold {
        Verdict::RigidConsistent
    } else if ps.equality && fit.residual > opts.threshold && explained {
        Verdict::Counterexample
    } else {
        Verdict::Inconclusive
    };
    Ok(RigidityReport {
        ps,
        landscape: LandscapeSummary {
            components: comps,
            singular_faces: land.singular_faces,
            singular_separation: land.singular_separation,
            inconclusive_measure: land.inconclusive_measure,
            kappa: land.kappa,
            pinches: land.pinches,
        },
        direction_constant,
        fit,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_alpha_is_one_component() {
        let g = PolarGrid::new(32, 64, 0.0, 1.0).unwrap();
        let nl = 20;
        let alpha = AlphaField {
            grid: g.clone(),
            levels: (0..nl).map(|l| l as f64 * 0.1).collect(),
            alpha: vec![PI / 2.0; g.nslices() * nl],
            empty: vec![false; g.nslices()],
        };
        let land = classify_landscape(&alpha, &LandscapeOptions::default());
        assert_eq!(land.components.len(), 1);
        assert_eq!(land.components[0].cells, g.nslices() * nl);
        assert_eq!(land.singular_faces, 0);
        assert!(land.kappa.is_infinite());
    }

    #[test]
    fn off_axis_arc_direction() {
        let g = PolarGrid::new(4, 720, 1.0, 2.0).unwrap();
        let t0 = 1.1;
        let u = ScalarField::from_fn(g.clone(), |_, t, _| {
            let d = (t - t0 + PI).rem_euclid(2.0 * PI) - PI;
            Some((0.5 - d.abs()).max(0.0))
        })
        .unwrap();
        let table = distribution(&u);
        let alpha = AlphaField::from_table(&table, 16);
        let dir = direction_field(&u, &alpha, g.dtheta()).unwrap();
        let mut seen = 0;
        for l in 0..alpha.nlevels() {
            if let Some(d) = dir.get(1, l) {
                assert!(
                    (d[0] - t0.cos()).abs() < 1e-2 && (d[1] - t0.sin()).abs() < 1e-2,
                    "{d:?}"
                );
                seen += 1;
            }
        }
        assert!(seen > 5);
    }

    #[test]
    fn fit_identity_and_degenerate() {
        let g = PolarGrid::new(8, 64, 0.0, 1.0).unwrap();
        let u = ScalarField::from_fn(g.clone(), |r, t, _| Some(r * (1.0 + t.cos()))).unwrap();
        let f = fit_orthogonal(&u, &u).unwrap();
        assert_eq!(f.residual, 0.0);
        assert!(f.angle.abs() < 1e-9);
        assert!(!f.reflection);
        let z = u.map(|_| 0.0).unwrap();
        assert!(matches!(fit_orthogonal(&u, &z), Err(Error::DegenerateNorm)));
    }

    #[test]
    fn rejects_non_strict() {
        let g = PolarGrid::new(8, 16, 0.0, 1.0).unwrap();
        let u = ScalarField::from_fn(g, |r, _, _| Some(1.0 - r)).unwrap();
        let spec = IntegrandSpec::parse("abs-tangential", "const:1").unwrap();
        assert!(matches!(
            check_rigidity(&u, &spec, &RigidityOptions::default()),
            Err(Error::SpecClass(_))
        ));
        let zero_weight = IntegrandSpec::parse("dirichlet:2", "const:0").unwrap();
        assert!(matches!(
            check_rigidity(&u, &zero_weight, &RigidityOptions::default()),
            Err(Error::SpecClass(_))
        ));
    }
}
