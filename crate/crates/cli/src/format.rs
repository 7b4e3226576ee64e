//! Text formats for matrices, masks and tables.
//!
//! Dense matrices: header `rows cols`, then one whitespace-separated row per
//! line. Masks: header `rows cols nnz`, then `i j value` per entry with
//! 1-based indices. Floats are written with 17 significant digits so every
//! value round-trips exactly.

use std::fmt::Write as _;
use std::path::Path;

use grasscomp_core::{Matrix, ObservationMask};

use crate::error::{CliError, CliResult};

/// Round-trip representation of a float.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn dense_to_string(a: &Matrix) -> String {
    let mut out = format!("{} {}\n", a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(&num(a[(i, j)]));
        }
        out.push('\n');
    }
    out
}

fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}

fn parse_usize(tok: Option<&str>, what: &str) -> Result<usize, String> {
    tok.ok_or_else(|| format!("missing {what}"))?
        .parse()
        .map_err(|e| format!("bad {what}: {e}"))
}

fn parse_f64(tok: Option<&str>, what: &str) -> Result<f64, String> {
    let v: f64 = tok
        .ok_or_else(|| format!("missing {what}"))?
        .parse()
        .map_err(|e| format!("bad {what}: {e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite {what}"))
    }
}

pub fn parse_dense(text: &str) -> Result<Matrix, String> {
    let mut it = tokens(text);
    let rows = parse_usize(it.next(), "row count")?;
    let cols = parse_usize(it.next(), "column count")?;
    let mut values = Vec::with_capacity(rows * cols);
    for k in 0..rows * cols {
        values.push(parse_f64(it.next(), &format!("entry {k}"))?);
    }
    if it.next().is_some() {
        return Err("trailing data after matrix".into());
    }
    Ok(Matrix::from_row_slice(rows, cols, &values))
}

pub fn mask_to_string(mask: &ObservationMask, values: &[f64]) -> String {
    let mut out = format!("{} {} {}\n", mask.m(), mask.n(), mask.len());
    for (&(i, j), &v) in mask.entries().iter().zip(values) {
        writeln!(out, "{} {} {}", i + 1, j + 1, num(v)).expect("writing to a String");
    }
    out
}

/// Parses a mask file into `(rows, cols, entries, values)` with 0-based indices,
/// values in the order given (sorted lexicographically if the file is).
pub fn parse_mask(text: &str) -> Result<(usize, usize, Vec<(usize, usize)>, Vec<f64>), String> {
    let mut it = tokens(text);
    let rows = parse_usize(it.next(), "row count")?;
    let cols = parse_usize(it.next(), "column count")?;
    let nnz = parse_usize(it.next(), "entry count")?;
    let mut triples = Vec::with_capacity(nnz);
    for k in 0..nnz {
        let i = parse_usize(it.next(), &format!("row of entry {k}"))?;
        let j = parse_usize(it.next(), &format!("column of entry {k}"))?;
        let v = parse_f64(it.next(), &format!("value of entry {k}"))?;
        if i == 0 || j == 0 {
            return Err(format!("entry {k}: indices are 1-based"));
        }
        triples.push(((i - 1, j - 1), v));
    }
    if it.next().is_some() {
        return Err("trailing data after mask".into());
    }
    triples.sort_by(|a, b| a.0.cmp(&b.0));
    let (entries, values) = triples.into_iter().unzip();
    Ok((rows, cols, entries, values))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_dense(path: &Path) -> CliResult<Matrix> {
    parse_dense(&read_text(path)?).map_err(|e| CliError::io(path, e))
}

/// A CSV table with a header row; floats use [`num`].
#[derive(Debug, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_round_trip_is_exact() {
        let a = Matrix::from_fn(3, 4, |i, j| (i as f64 + 0.1) / (j as f64 + 3.0) * 1e-7 - 0.3);
        let text = dense_to_string(&a);
        assert!(text.starts_with("3 4\n"));
        let b = parse_dense(&text).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dense_rejects_bad_input() {
        assert!(parse_dense("2 2\n1 2 3").is_err());
        assert!(parse_dense("1 1\nx").is_err());
        assert!(parse_dense("1 1\n1 2").is_err());
        assert!(parse_dense("1 1\nNaN").is_err());
    }

    #[test]
    fn mask_round_trip() {
        let mask = ObservationMask::new(3, 2, vec![(2, 0), (1, 0), (0, 1)], None).unwrap();
        let values = [0.5, 1.0 / 3.0, -2.0];
        let text = mask_to_string(&mask, &values);
        assert!(text.starts_with("3 2 3\n1 2 "));
        let (m, n, entries, parsed) = parse_mask(&text).unwrap();
        assert_eq!((m, n), (3, 2));
        assert_eq!(entries, mask.entries());
        assert_eq!(parsed, values);
        assert!(parse_mask("2 2 1\n0 1 1.0").is_err());
    }
}
