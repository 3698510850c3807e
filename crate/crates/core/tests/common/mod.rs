//! Seeded random fields and sets shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use circsym::grid::{PolarGrid, ScalarField};
use rand::Rng;

/// A Gaussian bump in Cartesian coordinates.
#[derive(Clone, Copy, Debug)]
pub struct Bump {
    pub x: f64,
    pub z: f64,
    pub width: f64,
    pub height: f64,
}

impl Bump {
    pub fn random<R: Rng>(rng: &mut R, signed: bool) -> Bump {
        let rho = rng.gen_range(0.0..0.8);
        let phi = rng.gen_range(-PI..PI);
        let height = rng.gen_range(0.3..1.5);
        Bump {
            x: rho * phi.cos(),
            z: rho * phi.sin(),
            width: rng.gen_range(0.12..0.4),
            height: if signed && rng.gen_bool(0.3) {
                -height
            } else {
                height
            },
        }
    }

    pub fn eval(&self, r: f64, t: f64) -> f64 {
        let (dx, dz) = (r * t.cos() - self.x, r * t.sin() - self.z);
        self.height * (-(dx * dx + dz * dz) / (self.width * self.width)).exp()
    }
}

/// Random admissible field on the unit disc grid `nr × ntheta`.
///
/// Even seeds give sign-changing fields on the whole disc (every slice is
/// full); odd seeds give nonnegative fields on an angular sector domain of
/// varying width that vanish on its lateral boundary.
pub fn random_field<R: Rng>(rng: &mut R, nr: usize, ntheta: usize, full: bool) -> ScalarField {
    let g = PolarGrid::new(nr, ntheta, 0.0, 1.0).unwrap();
    let nb = rng.gen_range(1..=4);
    if full {
        let bumps: Vec<Bump> = (0..nb).map(|_| Bump::random(rng, true)).collect();
        ScalarField::from_fn(g, |r, t, _| Some(bumps.iter().map(|b| b.eval(r, t)).sum())).unwrap()
    } else {
        let bumps: Vec<Bump> = (0..nb).map(|_| Bump::random(rng, false)).collect();
        let c = rng.gen_range(-PI..PI);
        let w0 = rng.gen_range(0.6..1.8);
        let w1 = rng.gen_range(0.0..0.5);
        let k = rng.gen_range(1.0..6.0);
        let (r0, r1) = (rng.gen_range(0.0..0.3), rng.gen_range(0.7..1.0));
        ScalarField::from_fn(g, |r, t, _| {
            if r < r0 || r > r1 {
                return None;
            }
            let half = w0 + w1 * (k * r).sin();
            let d = (t - c + PI).rem_euclid(2.0 * PI) - PI;
            if d.abs() >= half {
                return None;
            }
            let lateral = 1.0 - (d / half).powi(2);
            Some(lateral * (0.2 + bumps.iter().map(|b| b.eval(r, t)).sum::<f64>()))
        })
        .unwrap()
    }
}

/// Random blob: union of discs, as an indicator on the whole grid.
pub fn random_blob<R: Rng>(rng: &mut R, g: &PolarGrid) -> ScalarField {
    let n = rng.gen_range(1..=4);
    let discs: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| {
            let rho = rng.gen_range(0.0..0.6);
            let phi = rng.gen_range(-PI..PI);
            (rho * phi.cos(), rho * phi.sin(), rng.gen_range(0.1..0.35))
        })
        .collect();
    ScalarField::from_fn(g.clone(), |r, t, _| {
        let (x, z) = (r * t.cos(), r * t.sin());
        let inside = discs
            .iter()
            .any(|&(cx, cz, rad)| (x - cx).powi(2) + (z - cz).powi(2) < rad * rad);
        Some(if inside { 1.0 } else { 0.0 })
    })
    .unwrap()
}

/// Superlevel indicator `{u > t}` over the cells where `u` is defined.
pub fn superlevel(u: &ScalarField, t: f64) -> ScalarField {
    u.map(|v| if v > t { 1.0 } else { 0.0 }).unwrap()
}
