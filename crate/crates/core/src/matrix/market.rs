//! Matrix Market coordinate-format reader (real or integer; general or symmetric).

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn malformed(line: usize, msg: impl Into<String>) -> Error {
    Error::MalformedMatrixMarket {
        line,
        msg: msg.into(),
    }
}

fn parse_header(line_no: usize, line: &str) -> Result<Symmetry> {
    let tokens: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(malformed(line_no, "missing %%MatrixMarket banner"));
    }
    match tokens.get(1..) {
        Some([object, format, field, symmetry]) => {
            if object != "matrix" {
                return Err(malformed(line_no, format!("unsupported object `{object}`")));
            }
            if format != "coordinate" {
                return Err(malformed(line_no, format!("unsupported format `{format}`")));
            }
            if field != "real" && field != "integer" {
                return Err(malformed(line_no, format!("unsupported field `{field}`")));
            }
            match symmetry.as_str() {
                "general" => Ok(Symmetry::General),
                "symmetric" => Ok(Symmetry::Symmetric),
                other => Err(malformed(line_no, format!("unsupported symmetry `{other}`"))),
            }
        }
        _ => Err(malformed(line_no, "banner needs object, format, field and symmetry")),
    }
}

fn parse_usize(line_no: usize, tok: Option<&str>, what: &str) -> Result<usize> {
    tok.ok_or_else(|| malformed(line_no, format!("missing {what}")))?
        .parse()
        .map_err(|_| malformed(line_no, format!("invalid {what}")))
}

/// Parses Matrix Market text into CSR. Symmetric files are expanded to full
/// storage and 1-based indices become 0-based.
pub fn read_matrix_market<T: Scalar, R: Read>(reader: R) -> Result<CsrMatrix<T>> {
    let mut lines = BufReader::new(reader).lines().enumerate().map(|(i, l)| (i + 1, l));

    let (first_no, first) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(malformed(1, "empty input")),
    };
    let symmetry = parse_header(first_no, &first)?;

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    let mut read = 0usize;

    for (line_no, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut tok = trimmed.split_whitespace();
        let Some((n_rows, n_cols, nnz)) = size else {
            let r = parse_usize(line_no, tok.next(), "row count")?;
            let c = parse_usize(line_no, tok.next(), "column count")?;
            let z = parse_usize(line_no, tok.next(), "entry count")?;
            if symmetry == Symmetry::Symmetric && r != c {
                return Err(malformed(line_no, "symmetric matrix must be square"));
            }
            size = Some((r, c, z));
            continue;
        };
        if read == nnz {
            return Err(malformed(line_no, format!("more than the declared {nnz} entries")));
        }
        let row = parse_usize(line_no, tok.next(), "row index")?;
        let col = parse_usize(line_no, tok.next(), "column index")?;
        let val: f64 = tok
            .next()
            .ok_or_else(|| malformed(line_no, "missing value"))?
            .parse()
            .map_err(|_| malformed(line_no, "invalid value"))?;
        if row == 0 || col == 0 || row > n_rows || col > n_cols {
            return Err(Error::IndexOutOfBounds {
                line: line_no,
                row,
                col,
                n_rows,
                n_cols,
            });
        }
        let (i, j) = (row - 1, col - 1);
        let v = T::from_f64_lossy(val);
        let mut push = |i: usize, j: usize| {
            if !seen.insert((i, j)) {
                return Err(Error::DuplicateEntry {
                    line: line_no,
                    row: i + 1,
                    col: j + 1,
                });
            }
            entries.push((i, j, v));
            Ok(())
        };
        push(i, j)?;
        if symmetry == Symmetry::Symmetric && i != j {
            push(j, i)?;
        }
        read += 1;
    }

    let Some((n_rows, n_cols, nnz)) = size else {
        return Err(malformed(first_no, "missing size line"));
    };
    if read != nnz {
        return Err(malformed(first_no, format!("declared {nnz} entries, found {read}")));
    }
    CsrMatrix::from_triplets(n_rows, n_cols, entries)
}

/// Reads a Matrix Market file from disk.
pub fn load_matrix_market<T: Scalar>(path: impl AsRef<Path>) -> Result<CsrMatrix<T>> {
    read_matrix_market(File::open(path)?)
}
