//! Polar-cylindrical grids, sampled fields, circular projection and
//! zero-extension.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cell-centred grid over `(rmin, rmax) × (−π, π) × (ymin, ymax)`.
///
/// Radial nodes sit at `rmin + (i + ½)Δr` and angular nodes at
/// `−π + (j + ½)Δθ`, so neither the origin nor the seam `θ = ±π` is ever
/// sampled. `ny == 0` means there is no axial direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub nr: usize,
    pub ntheta: usize,
    pub ny: usize,
    pub rmin: f64,
    pub rmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl PolarGrid {
    /// Planar grid (no axial direction).
    pub fn new(nr: usize, ntheta: usize, rmin: f64, rmax: f64) -> Result<Self> {
        let g = PolarGrid {
            nr,
            ntheta,
            ny: 0,
            rmin,
            rmax,
            ymin: 0.0,
            ymax: 0.0,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid with one axial direction.
    pub fn with_axis(
        nr: usize,
        ntheta: usize,
        ny: usize,
        rmin: f64,
        rmax: f64,
        ymin: f64,
        ymax: f64,
    ) -> Result<Self> {
        let g = PolarGrid {
            nr,
            ntheta,
            ny,
            rmin,
            rmax,
            ymin,
            ymax,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nr == 0 || self.ntheta == 0 {
            return Err(Error::InvalidGrid("nr and ntheta must be positive".into()));
        }
        if !(self.rmin.is_finite() && self.rmax.is_finite())
            || self.rmin < 0.0
            || self.rmin >= self.rmax
        {
            return Err(Error::InvalidGrid(format!(
                "need 0 <= rmin < rmax, got rmin={} rmax={}",
                self.rmin, self.rmax
            )));
        }
        if self.ny > 0
            && (!(self.ymin.is_finite() && self.ymax.is_finite()) || self.ymin >= self.ymax)
        {
            return Err(Error::InvalidGrid(format!(
                "need ymin < ymax, got ymin={} ymax={}",
                self.ymin, self.ymax
            )));
        }
        Ok(())
    }

    pub fn dr(&self) -> f64 {
        (self.rmax - self.rmin) / self.nr as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.ntheta as f64
    }

    /// Axial spacing; 1 when there is no axial direction so that it can be
    /// used as a neutral factor in measures.
    pub fn dy(&self) -> f64 {
        if self.ny == 0 {
            1.0
        } else {
            (self.ymax - self.ymin) / self.ny as f64
        }
    }

    pub fn r(&self, i: usize) -> f64 {
        self.rmin + (i as f64 + 0.5) * self.dr()
    }

    pub fn theta(&self, j: usize) -> f64 {
        -PI + (j as f64 + 0.5) * self.dtheta()
    }

    /// Axial node; 0 when there is no axial direction.
    pub fn y(&self, k: usize) -> f64 {
        if self.ny == 0 {
            0.0
        } else {
            self.ymin + (k as f64 + 0.5) * self.dy()
        }
    }

    /// Number of axial layers (at least one).
    pub fn nlayers(&self) -> usize {
        self.ny.max(1)
    }

    /// Number of `(r, y)` slices.
    pub fn nslices(&self) -> usize {
        self.nr * self.nlayers()
    }

    pub fn ncells(&self) -> usize {
        self.nslices() * self.ntheta
    }

    /// Slice index of `(k, i)`.
    pub fn slice_index(&self, k: usize, i: usize) -> usize {
        k * self.nr + i
    }

    /// `(k, i)` of a slice index.
    pub fn slice_coords(&self, s: usize) -> (usize, usize) {
        (s / self.nr, s % self.nr)
    }

    /// Flat cell index, y-major, r-middle, θ-minor.
    pub fn index(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.nr + i) * self.ntheta + j
    }

    /// `(k, i, j)` of a flat cell index.
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let j = idx % self.ntheta;
        let s = idx / self.ntheta;
        (s / self.nr, s % self.nr, j)
    }

    /// Measure `r_i Δr Δθ (Δy)` of a cell in row `i`.
    pub fn cell_measure(&self, i: usize) -> f64 {
        self.r(i) * self.dr() * self.dtheta() * self.dy()
    }

    /// Spacing used for tolerances: the larger of Δr and the widest arc cell.
    pub fn spacing(&self) -> f64 {
        let arc = self.r(self.nr - 1) * self.dtheta();
        let h = self.dr().max(arc);
        if self.ny > 0 {
            h.max(self.dy())
        } else {
            h
        }
    }

    /// Whether two grids describe the same `(r, y)` slice lattice.
    pub fn same_slices(&self, other: &PolarGrid) -> bool {
        self.nr == other.nr
            && self.ny == other.ny
            && self.rmin == other.rmin
            && self.rmax == other.rmax
            && (self.ny == 0 || (self.ymin == other.ymin && self.ymax == other.ymax))
    }

    pub(crate) fn check_same(&self, other: &PolarGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Samples on a [`PolarGrid`]; `None` marks cells outside the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: PolarGrid,
    values: Vec<Option<f64>>,
}

impl ScalarField {
    /// Wraps raw values, checking length and finiteness.
    pub fn new(grid: PolarGrid, values: Vec<Option<f64>>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.ncells() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.ncells(),
                values.len()
            )));
        }
        if let Some(idx) = values
            .iter()
            .position(|v| matches!(v, Some(x) if !x.is_finite()))
        {
            return Err(Error::Domain(format!("non-finite value at cell {idx}")));
        }
        Ok(ScalarField { grid, values })
    }

    /// Samples `f(r, θ, y)` at every cell centre.
    pub fn from_fn<F>(grid: PolarGrid, f: F) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> Option<f64> + Sync,
    {
        let values = (0..grid.ncells())
            .into_par_iter()
            .map(|idx| {
                let (k, i, j) = grid.coords(idx);
                f(grid.r(i), grid.theta(j), grid.y(k))
            })
            .collect();
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> Option<f64> {
        self.values[self.grid.index(k, i, j)]
    }

    /// The `ntheta` samples of slice `s`.
    pub fn slice(&self, s: usize) -> &[Option<f64>] {
        let n = self.grid.ntheta;
        &self.values[s * n..(s + 1) * n]
    }

    pub fn inside_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// Largest absolute inside value (0 for an empty field).
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(min, max)` over inside cells.
    pub fn range(&self) -> Option<(f64, f64)> {
        let mut it = self.values.iter().flatten();
        let first = *it.next()?;
        Some(it.fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v))))
    }

    pub fn is_indicator(&self) -> bool {
        self.values.iter().flatten().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Applies `f` to every inside value.
    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Result<ScalarField> {
        let values = self.values.par_iter().map(|v| v.map(&f)).collect();
        ScalarField::new(self.grid.clone(), values)
    }

    /// Rotates by a whole number of angular cells: the result `w` satisfies
    /// `w(θ_j) = self(θ_{j − shift})`.
    pub fn rotate_cells(&self, shift: isize) -> ScalarField {
        let n = self.grid.ntheta;
        let sh = shift.rem_euclid(n as isize) as usize;
        let mut values = Vec::with_capacity(self.values.len());
        for s in 0..self.grid.nslices() {
            let sl = self.slice(s);
            values.extend((0..n).map(|j| sl[(j + n - sh) % n]));
        }
        ScalarField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Reflects `θ ↦ −θ`.
    pub fn reflect(&self) -> ScalarField {
        let n = self.grid.ntheta;
        let mut values = Vec::with_capacity(self.values.len());
        for s in 0..self.grid.nslices() {
            let sl = self.slice(s);
            values.extend((0..n).map(|j| sl[n - 1 - j]));
        }
        ScalarField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Integral of `g(value)` over inside cells.
    pub fn integrate<F: Fn(f64) -> f64 + Sync>(&self, g: F) -> f64 {
        let n = self.grid.ntheta;
        (0..self.grid.nslices())
            .into_par_iter()
            .map(|s| {
                let (_, i) = self.grid.slice_coords(s);
                let m = self.grid.cell_measure(i);
                self.values[s * n..(s + 1) * n]
                    .iter()
                    .flatten()
                    .map(|&v| g(v))
                    .sum::<f64>()
                    * m
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum()
    }
}

/// Classification of an `(r, y)` slice by how much of it lies in the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SliceFlag {
    Empty,
    Partial,
    Full,
}

/// Per-slice projection flags; `Partial ∪ Full` is the discrete circular
/// projection of the domain and `Full` its annular part.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionMask {
    pub grid: PolarGrid,
    pub flags: Vec<SliceFlag>,
}

impl ProjectionMask {
    pub fn flag(&self, s: usize) -> SliceFlag {
        self.flags[s]
    }

    pub fn count(&self, flag: SliceFlag) -> usize {
        self.flags.iter().filter(|&&f| f == flag).count()
    }
}

/// Classifies every slice as EMPTY, PARTIAL or FULL.
pub fn circular_projection(u: &ScalarField) -> ProjectionMask {
    let g = u.grid();
    let flags = (0..g.nslices())
        .map(|s| {
            let inside = u.slice(s).iter().filter(|v| v.is_some()).count();
            if inside == 0 {
                SliceFlag::Empty
            } else if inside == g.ntheta {
                SliceFlag::Full
            } else {
                SliceFlag::Partial
            }
        })
        .collect();
    ProjectionMask {
        grid: g.clone(),
        flags,
    }
}

/// Zero-extension `u₀`: `u` on the domain, 0 on the rest of every slice that
/// meets the domain, OUTSIDE on empty slices.
pub fn extend_by_zero(u: &ScalarField) -> Result<ScalarField> {
    if u.inside_count() == 0 {
        return Err(Error::EmptyDomain);
    }
    let g = u.grid();
    let mut values = Vec::with_capacity(g.ncells());
    for s in 0..g.nslices() {
        let sl = u.slice(s);
        if sl.iter().all(|v| v.is_none()) {
            values.extend(std::iter::repeat_n(None, g.ntheta));
        } else {
            values.extend(sl.iter().map(|v| Some(v.unwrap_or(0.0))));
        }
    }
    Ok(ScalarField {
        grid: g.clone(),
        values,
    })
}

/// Kind of admissibility violation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    /// `u < 0` on a slice that is only partly inside the domain.
    NegativeOnPartialSlice,
    /// `|u|` above the trace tolerance on the lateral boundary.
    LateralTrace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub cell: usize,
    pub r: f64,
    pub theta: f64,
    pub y: f64,
    pub value: f64,
}

/// Options for [`validate_admissible_with`].
#[derive(Clone, Copy, Debug)]
pub struct AdmissibleOptions {
    /// Trace tolerance multiplier: cells are flagged when
    /// `|u| > factor · spacing · max|u|`.
    pub trace_factor: f64,
}

impl Default for AdmissibleOptions {
    fn default() -> Self {
        AdmissibleOptions { trace_factor: 10.0 }
    }
}

/// Lists cells violating the sign condition on partial slices, and lateral
/// boundary cells whose value exceeds the trace tolerance.
pub fn validate_admissible(u: &ScalarField) -> Vec<Diagnostic> {
    validate_admissible_with(u, AdmissibleOptions::default())
}

pub fn validate_admissible_with(u: &ScalarField, opts: AdmissibleOptions) -> Vec<Diagnostic> {
    let g = u.grid();
    let mask = circular_projection(u);
    let tol = opts.trace_factor * g.spacing() * u.max_abs();
    let n = g.ntheta;
    let in_cylinder = |k: usize, i: usize| mask.flag(g.slice_index(k, i)) != SliceFlag::Empty;
    let mut out = Vec::new();
    for idx in 0..g.ncells() {
        let Some(v) = u.values()[idx] else { continue };
        let (k, i, j) = g.coords(idx);
        let s = g.slice_index(k, i);
        let diag = |kind| Diagnostic {
            kind,
            cell: idx,
            r: g.r(i),
            theta: g.theta(j),
            y: g.y(k),
            value: v,
        };
        if mask.flag(s) == SliceFlag::Partial && v < 0.0 {
            out.push(diag(DiagnosticKind::NegativeOnPartialSlice));
        }
        // A lateral boundary cell has a neighbour inside the projection
        // cylinder but outside the domain.
        let mut lateral =
            u.get(k, i, (j + 1) % n).is_none() || u.get(k, i, (j + n - 1) % n).is_none();
        if i > 0 && in_cylinder(k, i - 1) && u.get(k, i - 1, j).is_none() {
            lateral = true;
        }
        if i + 1 < g.nr && in_cylinder(k, i + 1) && u.get(k, i + 1, j).is_none() {
            lateral = true;
        }
        if k > 0 && in_cylinder(k - 1, i) && u.get(k - 1, i, j).is_none() {
            lateral = true;
        }
        if k + 1 < g.nlayers() && in_cylinder(k + 1, i) && u.get(k + 1, i, j).is_none() {
            lateral = true;
        }
        if lateral && v.abs() > tol {
            out.push(diag(DiagnosticKind::LateralTrace));
        }
    }
    out
}
