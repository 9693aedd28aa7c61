//! Field export: CSV with round-trip precision and plain PGM heatmaps.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::grid::{Field, Grid, GridKind};

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

/// CSV text of a field: `r,value` rows on radial grids and `x,y,value` on
/// disc grids, one row per node, 17 significant digits.
pub fn field_to_csv(grid: &Grid, field: &Field) -> io::Result<String> {
    if field.key() != grid.key() {
        return Err(invalid("field belongs to a different grid"));
    }
    let mut out = String::new();
    match grid.kind() {
        GridKind::Radial => {
            out.push_str("r,value\n");
            for (c, v) in grid.coords().iter().zip(field.values()) {
                writeln!(out, "{:.16e},{:.16e}", c[0], v).unwrap();
            }
        }
        GridKind::Disc2D => {
            out.push_str("x,y,value\n");
            for (c, v) in grid.coords().iter().zip(field.values()) {
                writeln!(out, "{:.16e},{:.16e},{:.16e}", c[0], c[1], v).unwrap();
            }
        }
    }
    Ok(out)
}

pub fn write_field_csv(path: &Path, grid: &Grid, field: &Field) -> io::Result<()> {
    fs::write(path, field_to_csv(grid, field)?)
}

/// Parses the output of [`field_to_csv`]; the value column is the last one
/// and rows must follow the grid's node order.
pub fn field_from_csv(grid: &Grid, text: &str) -> io::Result<Field> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| invalid("empty CSV"))?;
    let columns = header.split(',').count();
    let expected = match grid.kind() {
        GridKind::Radial => 2,
        GridKind::Disc2D => 3,
    };
    if columns != expected {
        return Err(invalid(format!("expected {expected} columns, header is {header:?}")));
    }
    let mut values = Vec::with_capacity(grid.node_count());
    for (row, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != expected {
            return Err(invalid(format!("row {row} has {} columns", parts.len())));
        }
        let value: f64 = parts[expected - 1]
            .parse()
            .map_err(|e| invalid(format!("row {row}: {e}")))?;
        values.push(value);
    }
    Field::from_values(grid, values).map_err(|e| invalid(e.to_string()))
}

pub fn read_field_csv(path: &Path, grid: &Grid) -> io::Result<Field> {
    field_from_csv(grid, &fs::read_to_string(path)?)
}

/// Plain (P2) 8-bit grayscale image of the field, linearly scaled from its
/// interior minimum to maximum. Radial fields are rendered as the disc
/// they describe. Returns the text and the `(min, max)` of the scale.
pub fn field_to_pgm(grid: &Grid, field: &Field) -> io::Result<(String, (f64, f64))> {
    if field.key() != grid.key() {
        return Err(invalid("field belongs to a different grid"));
    }
    let vals = field.values();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &i in grid.interior() {
        lo = lo.min(vals[i]);
        hi = hi.max(vals[i]);
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 0.0);
    }
    let level = |v: f64| -> u8 {
        if hi > lo {
            (((v - lo) / (hi - lo)) * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    };

    let n = grid.n();
    let (side, pixels): (usize, Vec<u8>) = match grid.kind() {
        GridKind::Disc2D => {
            // image rows run top to bottom, i.e. decreasing y
            let mut px = Vec::with_capacity(n * n);
            for row in (0..n).rev() {
                for col in 0..n {
                    let node = row * n + col;
                    px.push(if grid.is_interior(node) { level(vals[node]) } else { 0 });
                }
            }
            (n, px)
        }
        GridKind::Radial => {
            let side = 2 * n - 1;
            let h = grid.spacing();
            let mut px = Vec::with_capacity(side * side);
            for row in 0..side {
                for col in 0..side {
                    let x = (col as f64 - (n - 1) as f64) * h;
                    let y = ((n - 1) as f64 - row as f64) * h;
                    let r = x.hypot(y);
                    if r >= 1.0 {
                        px.push(0);
                        continue;
                    }
                    let t = r / h;
                    let i = (t.floor() as usize).min(n - 2);
                    let frac = t - i as f64;
                    px.push(level((1.0 - frac) * vals[i] + frac * vals[i + 1]));
                }
            }
            (side, px)
        }
    };

    let mut out = format!("P2\n{side} {side}\n255\n");
    for line in pixels.chunks(side) {
        let row: Vec<String> = line.iter().map(u8::to_string).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    Ok((out, (lo, hi)))
}

pub fn write_field_pgm(path: &Path, grid: &Grid, field: &Field) -> io::Result<(f64, f64)> {
    let (text, scale) = field_to_pgm(grid, field)?;
    fs::write(path, text)?;
    Ok(scale)
}
