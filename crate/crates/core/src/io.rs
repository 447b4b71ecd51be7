//! File formats: grid fields as CSV with a JSON metadata header, polynomial
//! coefficient tables, and the kernel matrix dump. Floats are printed with 17
//! significant digits so round-trips are exact.

use crate::almostperiodic::{LatticePolynomial, TrigPolynomial, TrigTerm};
use crate::grid::{BoundaryField, BulkField, GridError, StripGrid};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad metadata header: {0}")]
    BadHeader(String),
    #[error("bad record at line {line}: {msg}")]
    BadRecord { line: usize, msg: String },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Serialize, Deserialize)]
struct GridMeta {
    r: f64,
    #[serde(rename = "L")]
    period: f64,
    n_t: usize,
    n_n: usize,
    d: usize,
}

impl GridMeta {
    fn of(grid: &StripGrid) -> Self {
        Self {
            r: grid.depth(),
            period: grid.period(),
            n_t: grid.n_tangential(),
            n_n: grid.n_normal(),
            d: grid.boundary_dim(),
        }
    }

    fn to_grid(&self) -> Result<StripGrid, GridError> {
        StripGrid::new(self.r, self.period, self.n_t, self.n_n, self.d)
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn field_header(d: usize) -> &'static str {
    if d == 1 {
        "i,k,value"
    } else {
        "i,j,k,value"
    }
}

/// Bulk field as CSV: a JSON grid header, a column header `i[,j],k,value`,
/// then one row per node.
pub fn write_bulk_csv<W: Write>(w: &mut W, u: &BulkField) -> Result<(), IoError> {
    let g = u.grid();
    writeln!(w, "{}", serde_json::to_string(&GridMeta::of(g)).expect("meta serializes"))?;
    writeln!(w, "{}", field_header(g.boundary_dim()))?;
    let nj = if g.boundary_dim() == 1 { 1 } else { g.n_tangential() };
    for k in 0..g.n_normal() {
        for j in 0..nj {
            for i in 0..g.n_tangential() {
                if g.boundary_dim() == 1 {
                    writeln!(w, "{i},{k},{}", fmt(u.at(i, j, k)))?;
                } else {
                    writeln!(w, "{i},{j},{k},{}", fmt(u.at(i, j, k)))?;
                }
            }
        }
    }
    Ok(())
}

/// Boundary field as CSV in the same layout, with `k = 0` on every row.
pub fn write_boundary_csv<W: Write>(w: &mut W, v: &BoundaryField) -> Result<(), IoError> {
    let g = v.grid();
    writeln!(w, "{}", serde_json::to_string(&GridMeta::of(g)).expect("meta serializes"))?;
    writeln!(w, "{}", field_header(g.boundary_dim()))?;
    let nj = if g.boundary_dim() == 1 { 1 } else { g.n_tangential() };
    for j in 0..nj {
        for i in 0..g.n_tangential() {
            if g.boundary_dim() == 1 {
                writeln!(w, "{i},0,{}", fmt(v.at(i, j)))?;
            } else {
                writeln!(w, "{i},{j},0,{}", fmt(v.at(i, j)))?;
            }
        }
    }
    Ok(())
}

fn read_meta_and_header<R: BufRead>(r: &mut R) -> Result<(StripGrid, usize), IoError> {
    let mut meta_line = String::new();
    r.read_line(&mut meta_line)?;
    let meta: GridMeta =
        serde_json::from_str(meta_line.trim()).map_err(|e| IoError::BadHeader(e.to_string()))?;
    let grid = meta.to_grid()?;
    let mut header = String::new();
    r.read_line(&mut header)?;
    let cols = header.trim().split(',').count();
    Ok((grid, cols))
}

fn parse_row(line: &str, lineno: usize, cols: usize) -> Result<(Vec<usize>, f64), IoError> {
    let parts: Vec<&str> = line.trim().split(',').collect();
    if parts.len() != cols {
        return Err(IoError::BadRecord {
            line: lineno,
            msg: format!("expected {cols} columns, got {}", parts.len()),
        });
    }
    let mut idx = Vec::with_capacity(cols - 1);
    for p in &parts[..cols - 1] {
        idx.push(p.parse::<usize>().map_err(|e| IoError::BadRecord {
            line: lineno,
            msg: format!("bad index {p:?}: {e}"),
        })?);
    }
    let value = parts[cols - 1].parse::<f64>().map_err(|e| IoError::BadRecord {
        line: lineno,
        msg: format!("bad value: {e}"),
    })?;
    Ok((idx, value))
}

pub fn read_bulk_csv<R: BufRead>(r: &mut R) -> Result<BulkField, IoError> {
    let (grid, cols) = read_meta_and_header(r)?;
    let mut values = vec![0.0; grid.bulk_len()];
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (idx, value) = parse_row(&line, lineno + 3, cols)?;
        let (i, j, k) = if grid.boundary_dim() == 1 {
            (idx[0], 0, idx[1])
        } else {
            (idx[0], idx[1], idx[2])
        };
        values[grid.bulk_index(i, j, k)] = value;
    }
    Ok(BulkField::from_values(grid, values)?)
}

pub fn read_boundary_csv<R: BufRead>(r: &mut R) -> Result<BoundaryField, IoError> {
    let (grid, cols) = read_meta_and_header(r)?;
    let mut values = vec![0.0; grid.boundary_len()];
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (idx, value) = parse_row(&line, lineno + 3, cols)?;
        let (i, j, k) = if grid.boundary_dim() == 1 {
            (idx[0], 0, idx[1])
        } else {
            (idx[0], idx[1], idx[2])
        };
        if k != 0 {
            return Err(IoError::BadRecord {
                line: lineno + 3,
                msg: format!("boundary field rows must have k = 0, got {k}"),
            });
        }
        values[grid.boundary_index(i, j)] = value;
    }
    Ok(BoundaryField::from_values(grid, values)?)
}

/// Trig polynomial coefficients: `amplitude,omega_1[,omega_2],phase` rows
/// under a header line.
pub fn write_trig_csv<W: Write>(w: &mut W, g: &TrigPolynomial) -> Result<(), IoError> {
    if g.dim() == 1 {
        writeln!(w, "amplitude,omega_1,phase")?;
        for t in g.terms() {
            writeln!(w, "{},{},{}", fmt(t.amplitude), fmt(t.freq[0]), fmt(t.phase))?;
        }
    } else {
        writeln!(w, "amplitude,omega_1,omega_2,phase")?;
        for t in g.terms() {
            writeln!(
                w,
                "{},{},{},{}",
                fmt(t.amplitude),
                fmt(t.freq[0]),
                fmt(t.freq[1]),
                fmt(t.phase)
            )?;
        }
    }
    Ok(())
}

pub fn read_trig_csv<R: BufRead>(r: &mut R) -> Result<TrigPolynomial, IoError> {
    let mut terms = Vec::new();
    let mut dim = None;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with("amplitude") {
            continue;
        }
        let parts: Vec<&str> = t.split(',').collect();
        let d = match parts.len() {
            3 => 1,
            4 => 2,
            n => {
                return Err(IoError::BadRecord {
                    line: lineno + 1,
                    msg: format!("expected 3 or 4 columns, got {n}"),
                })
            }
        };
        if *dim.get_or_insert(d) != d {
            return Err(IoError::BadRecord { line: lineno + 1, msg: "mixed dimensions".into() });
        }
        let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
        let nums = nums.map_err(|e| IoError::BadRecord {
            line: lineno + 1,
            msg: format!("bad number: {e}"),
        })?;
        let freq = if d == 1 { [nums[1], 0.0] } else { [nums[1], nums[2]] };
        terms.push(TrigTerm { amplitude: nums[0], freq, phase: nums[d + 1] });
    }
    let dim = dim.unwrap_or(1);
    Ok(TrigPolynomial::new(dim, terms).expect("dim is 1 or 2"))
}

/// Integer-frequency ambient polynomial: `amplitude,m_1,m_2[,m_3],phase`.
pub fn read_lattice_csv<R: BufRead>(r: &mut R) -> Result<LatticePolynomial, IoError> {
    let mut terms = Vec::new();
    let mut ambient = None;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with("amplitude") {
            continue;
        }
        let parts: Vec<&str> = t.split(',').collect();
        let n = match parts.len() {
            4 => 2,
            5 => 3,
            c => {
                return Err(IoError::BadRecord {
                    line: lineno + 1,
                    msg: format!("expected 4 or 5 columns, got {c}"),
                })
            }
        };
        if *ambient.get_or_insert(n) != n {
            return Err(IoError::BadRecord { line: lineno + 1, msg: "mixed dimensions".into() });
        }
        let amp: f64 = parts[0].parse().map_err(|e| IoError::BadRecord {
            line: lineno + 1,
            msg: format!("bad amplitude: {e}"),
        })?;
        let phase: f64 = parts[n + 1].parse().map_err(|e| IoError::BadRecord {
            line: lineno + 1,
            msg: format!("bad phase: {e}"),
        })?;
        let mut m = [0i64; 3];
        for (a, p) in parts[1..=n].iter().enumerate() {
            m[a] = p.parse().map_err(|e| IoError::BadRecord {
                line: lineno + 1,
                msg: format!("bad frequency index: {e}"),
            })?;
        }
        terms.push((amp, m, phase));
    }
    Ok(LatticePolynomial { ambient_dim: ambient.unwrap_or(2), terms })
}

/// Kernel matrix, row-major, one row per line.
pub fn write_kernel_csv<W: Write>(w: &mut W, matrix: &[Vec<f64>]) -> Result<(), IoError> {
    for row in matrix {
        let line: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}
