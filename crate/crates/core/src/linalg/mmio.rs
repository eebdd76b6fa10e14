//! Matrix Market coordinate files and dense CSV.

use std::io::{BufRead, Write};

use faer::Mat;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// `%%MatrixMarket matrix coordinate real general`, 1-based indices,
/// values at 17 significant digits so that parsing restores them bit for bit.
pub fn write_matrix_market<W: Write>(a: &CsrMatrix, out: &mut W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.rows, a.cols, a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read_matrix_market<R: BufRead>(input: R) -> Result<CsrMatrix> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty Matrix Market file".into()))??;
    let h = header.to_ascii_lowercase();
    let fields: Vec<&str> = h.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(Error::Parse(format!("unsupported header: {header}")));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(Error::Parse(format!("unsupported field type {}", fields[3])));
    }
    let symmetric = match fields[4] {
        "general" => false,
        "symmetric" => true,
        s => return Err(Error::Parse(format!("unsupported symmetry {s}"))),
    };
    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(Error::Parse(format!("bad size line: {t}")));
                }
                let s = (parse_usize(parts[0])?, parse_usize(parts[1])?, parse_usize(parts[2])?);
                triplets.reserve(s.2);
                size = Some(s);
            }
            Some((r, c, _)) => {
                if parts.len() != 3 {
                    return Err(Error::Parse(format!("bad entry line: {t}")));
                }
                let i = parse_usize(parts[0])?;
                let j = parse_usize(parts[1])?;
                let v: f64 = parts[2].parse().map_err(|e| Error::Parse(format!("{}: {e}", parts[2])))?;
                if i == 0 || j == 0 || i > r || j > c {
                    return Err(Error::Parse(format!("entry ({i},{j}) out of range")));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (r, c, nnz) = size.ok_or_else(|| Error::Parse("missing size line".into()))?;
    let stored = if symmetric {
        triplets.iter().filter(|t| t.0 >= t.1).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {stored}")));
    }
    CsrMatrix::from_triplets(r, c, &triplets)
}

pub fn write_dense_csv<W: Write>(a: &Mat<f64>, out: &mut W) -> Result<()> {
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| format!("{:.16e}", a[(i, j)])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_dense_csv<R: BufRead>(input: R) -> Result<Mat<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in input.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse("ragged CSV matrix".into()));
            }
        }
        rows.push(row);
    }
    let nc = rows.first().map_or(0, |r| r.len());
    Ok(Mat::from_fn(rows.len(), nc, |i, j| rows[i][j]))
}
