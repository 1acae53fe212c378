//! CSV form of a [`GridFunction`]: header `axis0,...,axis{n-1},value`, one
//! sample per line in row-major order.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{Grid, GridBox, GridFunction};
use crate::error::{Error, Result};

pub fn write_grid_function<W: Write>(u: &GridFunction, writer: W) -> Result<()> {
    let n = u.dim();
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..n).map(|a| format!("axis{a}")).collect();
    header.push("value".into());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(n + 1);
    for (i, v) in u.values().iter().enumerate() {
        row.clear();
        let p = u.grid().point(i);
        row.extend(p[..n].iter().map(|x| format!("{x:.16e}")));
        row.push(format!("{v:.16e}"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_grid_function(u: &GridFunction, path: impl AsRef<Path>) -> Result<()> {
    write_grid_function(u, BufWriter::new(File::create(path)?))
}

/// Reads a grid function, inferring box and spacing from the midpoints.
pub fn read_grid_function<R: Read>(reader: R) -> Result<GridFunction> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = r.headers()?.clone();
    let n = header.len().saturating_sub(1);
    super::check_dim(n)?;
    for (a, name) in header.iter().take(n).enumerate() {
        if name != format!("axis{a}") {
            return Err(Error::Parse(format!(
                "column {a} should be named axis{a}, found {name:?}"
            )));
        }
    }
    if &header[n] != "value" {
        return Err(Error::Parse("last column must be named value".into()));
    }

    let mut coords: Vec<[f64; 3]> = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut p = [0.0; 3];
        for (a, slot) in p.iter_mut().enumerate().take(n) {
            *slot = parse_f64(&rec[a], line)?;
        }
        coords.push(p);
        values.push(parse_f64(&rec[n], line)?);
    }
    if values.is_empty() {
        return Err(Error::Parse("no samples".into()));
    }

    let mut axes: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            let mut v: Vec<f64> = coords.iter().map(|p| p[a]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let mut spacing: Option<f64> = None;
    for (a, ax) in axes.iter_mut().enumerate() {
        for w in ax.windows(2) {
            let d = w[1] - w[0];
            match spacing {
                None => spacing = Some(d),
                Some(h) if (d - h).abs() <= 1e-9 * h => {}
                Some(h) => {
                    return Err(Error::Parse(format!(
                        "axis {a}: non-uniform spacing ({d} vs {h})"
                    )))
                }
            }
        }
    }
    let h = spacing.ok_or_else(|| {
        Error::Parse("cannot infer the grid spacing from a single sample per axis".into())
    })?;
    let lower: Vec<f64> = axes.iter().map(|ax| ax[0] - 0.5 * h).collect();
    let upper: Vec<f64> = axes.iter().map(|ax| ax[ax.len() - 1] + 0.5 * h).collect();
    let grid = Grid::new(GridBox::new(lower, upper)?, h)?;
    if grid.len() != values.len() {
        return Err(Error::Parse(format!(
            "{} samples do not fill a {:?} grid",
            values.len(),
            grid.shape()
        )));
    }
    for (i, p) in coords.iter().enumerate() {
        let expected = grid.point(i);
        if (0..n).any(|a| (expected[a] - p[a]).abs() > 1e-6 * h) {
            return Err(Error::Parse(format!("sample {i} is out of row-major order")));
        }
    }
    GridFunction::new(grid, values)
}

pub fn load_grid_function(path: impl AsRef<Path>) -> Result<GridFunction> {
    read_grid_function(File::open(path)?)
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Parse(format!("line {}: cannot parse {s:?} as a number", line + 2)))
}
