//! Dense matrix files: a `rows cols` header line followed by one whitespace-separated row per line.

use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn write_matrix<W: Write>(m: &DMatrix<f64>, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    let mut line = String::new();
    for row in m.row_iter() {
        line.clear();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push(' ');
            }
            // round-trip exact formatting
            line.push_str(&format!("{v:e}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_matrix<R: Read>(input: R) -> Result<DMatrix<f64>> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad matrix header {header:?}"))))
        .collect::<Result<_>>()?;
    if dims.len() != 2 {
        return Err(Error::Parse(format!("matrix header must be `rows cols`, got {header:?}")));
    }
    let (rows, cols) = (dims[0], dims[1]);
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let line = lines.next().ok_or_else(|| Error::Parse(format!("matrix file ends before row {r}")))??;
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(tok.parse::<f64>().map_err(|_| Error::Parse(format!("bad value {tok:?} in row {r}")))?);
        }
        if data.len() - before != cols {
            return Err(Error::Parse(format!("row {r} has {} values, expected {cols}", data.len() - before)));
        }
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}
