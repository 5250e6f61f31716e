//! MatrixMarket coordinate reader for graph adjacency matrices.
//!
//! Supports `%%MatrixMarket matrix coordinate <field> <symmetry>` with field
//! `pattern`, `real`, `integer` or `double` and symmetry `general`,
//! `symmetric` or `skew-symmetric`. Pattern entries get unit weight and
//! symmetric storage is expanded to the full matrix. Repeated entries are
//! summed, except for pattern files where they stay at 1.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Guard against densifying absurdly large files.
const MAX_DENSE_ENTRIES: usize = 1 << 28;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Pattern,
    Real,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

pub fn read_matrix_market<P: AsRef<Path>>(path: P) -> Result<DMatrix<f64>> {
    let file = File::open(path)?;
    parse_matrix_market(BufReader::new(file))
}

pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<DMatrix<f64>> {
    let mut lines = reader.lines().enumerate();
    let parse_err = |line: usize, msg: &str| Error::Parse {
        line: line + 1,
        msg: msg.to_string(),
    };

    let (lineno, header) = match lines.next() {
        Some((i, l)) => (i, l?),
        None => return Err(parse_err(0, "empty input")),
    };
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(lineno, "expected `%%MatrixMarket matrix ...` header"));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(lineno, "only the coordinate format is supported"));
    }
    let field = match tokens[3].as_str() {
        "pattern" => Field::Pattern,
        "real" | "integer" | "double" => Field::Real,
        _ => return Err(parse_err(lineno, "unsupported field type")),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        _ => return Err(parse_err(lineno, "unsupported symmetry type")),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut matrix = DMatrix::zeros(0, 0);
    let mut seen = 0usize;

    for (i, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        match size {
            None => {
                let mut next = || -> Result<usize> {
                    it.next()
                        .ok_or_else(|| parse_err(i, "truncated size line"))?
                        .parse()
                        .map_err(|_| parse_err(i, "invalid size line"))
                };
                let (rows, cols, nnz) = (next()?, next()?, next()?);
                if rows == 0 || cols == 0 {
                    return Err(parse_err(i, "matrix dimensions must be positive"));
                }
                if rows.saturating_mul(cols) > MAX_DENSE_ENTRIES {
                    return Err(parse_err(i, "matrix too large to densify"));
                }
                if symmetry != Symmetry::General && rows != cols {
                    return Err(parse_err(i, "symmetric storage requires a square matrix"));
                }
                matrix = DMatrix::zeros(rows, cols);
                size = Some((rows, cols, nnz));
            }
            Some((rows, cols, nnz)) => {
                if seen == nnz {
                    return Err(parse_err(i, "more entries than declared"));
                }
                let r: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| parse_err(i, "invalid row index"))?;
                let c: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| parse_err(i, "invalid column index"))?;
                if r == 0 || c == 0 || r > rows || c > cols {
                    return Err(parse_err(i, "index out of range"));
                }
                let value = match field {
                    Field::Pattern => 1.0,
                    Field::Real => {
                        let v: f64 = it
                            .next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| parse_err(i, "invalid value"))?;
                        if !v.is_finite() {
                            return Err(parse_err(i, "non-finite value"));
                        }
                        v
                    }
                };
                let (r, c) = (r - 1, c - 1);
                let mut put = |i: usize, j: usize, v: f64| match field {
                    Field::Pattern => matrix[(i, j)] = v,
                    Field::Real => matrix[(i, j)] += v,
                };
                put(r, c, value);
                if r != c {
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => put(c, r, value),
                        Symmetry::Skew => put(c, r, -value),
                    }
                }
                seen += 1;
            }
        }
    }

    match size {
        None => Err(parse_err(0, "missing size line")),
        Some((_, _, nnz)) if seen != nnz => Err(Error::Parse {
            line: 0,
            msg: format!("declared {nnz} entries, found {seen}"),
        }),
        Some(_) => Ok(matrix),
    }
}
