//! Text serialization of fields (`circsym-field v1`).

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::{PolarGrid, ScalarField};

const MAGIC: &str = "circsym-field v1";

/// Renders a field in the text format. Values use 17 significant digits,
/// which round-trips every `f64` exactly.
pub fn field_to_string(u: &ScalarField) -> String {
    let g = u.grid();
    let mut out = String::with_capacity(g.ncells() * 24 + 128);
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "nr={} ntheta={} ny={}", g.nr, g.ntheta, g.ny);
    let _ = writeln!(out, "rmin={:.16e} rmax={:.16e}", g.rmin, g.rmax);
    if g.ny > 0 {
        let _ = writeln!(out, "ymin={:.16e} ymax={:.16e}", g.ymin, g.ymax);
    }
    out.push_str("data\n");
    for v in u.values() {
        match v {
            Some(x) => {
                let _ = writeln!(out, "{x:.16e}");
            }
            None => out.push_str("NA\n"),
        }
    }
    out
}

pub fn write_field<W: Write>(u: &ScalarField, mut w: W) -> Result<()> {
    w.write_all(field_to_string(u).as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn write_field_file(u: &ScalarField, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, field_to_string(u))?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses `key=value` pairs in the given order.
fn parse_pairs<T: std::str::FromStr>(line: &str, lineno: usize, keys: &[&str]) -> Result<Vec<T>> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != keys.len() {
        return Err(parse_err(lineno, format!("expected {}", keys.join(" "))));
    }
    parts
        .iter()
        .zip(keys)
        .map(|(p, k)| {
            let v = p
                .strip_prefix(k)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| parse_err(lineno, format!("expected `{k}=`, found `{p}`")))?;
            v.parse::<T>()
                .map_err(|_| parse_err(lineno, format!("bad value for {k}: `{v}`")))
        })
        .collect()
}

pub fn read_field<R: BufRead>(r: R) -> Result<ScalarField> {
    let mut lines = r.lines().enumerate().map(|(n, l)| (n + 1, l));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(l))) => Ok((n, l.trim().to_string())),
            Some((n, Err(e))) => Err(parse_err(n, e.to_string())),
            None => Err(parse_err(
                0,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    };
    let (n, magic) = next("header")?;
    if magic != MAGIC {
        return Err(parse_err(n, format!("expected `{MAGIC}`")));
    }
    let (n, dims) = next("dimensions")?;
    let d: Vec<usize> = parse_pairs(&dims, n, &["nr", "ntheta", "ny"])?;
    let (n, rl) = next("radial bounds")?;
    let rb: Vec<f64> = parse_pairs(&rl, n, &["rmin", "rmax"])?;
    let (ymin, ymax) = if d[2] > 0 {
        let (n, yl) = next("axial bounds")?;
        let yb: Vec<f64> = parse_pairs(&yl, n, &["ymin", "ymax"])?;
        (yb[0], yb[1])
    } else {
        (0.0, 0.0)
    };
    let grid = PolarGrid {
        nr: d[0],
        ntheta: d[1],
        ny: d[2],
        rmin: rb[0],
        rmax: rb[1],
        ymin,
        ymax,
    };
    grid.validate().map_err(|e| parse_err(n, e.to_string()))?;
    let (n, data) = next("`data`")?;
    if data != "data" {
        return Err(parse_err(n, "expected `data`"));
    }
    let total = grid.ncells();
    let mut values = Vec::with_capacity(total);
    let mut last = n;
    while values.len() < total {
        let (n, l) = next("value")?;
        last = n;
        if l == "NA" {
            values.push(None);
        } else {
            let x: f64 = l
                .parse()
                .map_err(|_| parse_err(n, format!("bad value `{l}`")))?;
            if !x.is_finite() {
                return Err(parse_err(n, "non-finite value"));
            }
            values.push(Some(x));
        }
    }
    loop {
        match next("") {
            Ok((n, l)) if !l.is_empty() => return Err(parse_err(n, "trailing data")),
            Ok(_) => continue,
            Err(_) => break,
        }
    }
    ScalarField::new(grid, values).map_err(|e| parse_err(last, e.to_string()))
}

pub fn read_field_str(s: &str) -> Result<ScalarField> {
    read_field(s.as_bytes())
}

pub fn read_field_file(path: &std::path::Path) -> Result<ScalarField> {
    let f = std::fs::File::open(path)?;
    read_field(std::io::BufReader::new(f))
}
