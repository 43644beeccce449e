//! File formats for curves and explicit matrices.
//!
//! Curves: JSON `{"dim": d, "points": [[x1, ..., xd], ...]}` or headerless CSV
//! with one point per line. Both round-trip finite doubles exactly.
//!
//! Matrices: optional `#` comment lines, a header line `n m`, then `n` lines of
//! `m` characters from `{0,1}`. Line `i` is column `i`; character `j` is entry `(i, j)`.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freespace::ExplicitMatrix;
use crate::geometry::{Curve, GeometryError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Serialize, Deserialize)]
struct CurveFile {
    dim: usize,
    points: Vec<Vec<f64>>,
}

pub fn curve_to_json(c: &Curve) -> String {
    serde_json::to_string(&CurveFile {
        dim: c.dim(),
        points: c.to_rows(),
    })
    .expect("finite coordinates serialize")
}

pub fn curve_from_json(s: &str) -> Result<Curve, IoError> {
    let f: CurveFile = serde_json::from_str(s)?;
    if let Some((index, p)) = f.points.iter().enumerate().find(|(_, p)| p.len() != f.dim) {
        return Err(GeometryError::DimensionMismatch {
            index,
            expected: f.dim,
            got: p.len(),
        }
        .into());
    }
    Ok(Curve::from_flat(f.dim, f.points.concat())?)
}

pub fn write_curve_csv<W: Write>(c: &Curve, w: W) -> Result<(), IoError> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for v in c.vertices() {
        wr.write_record(v.iter().map(f64::to_string))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_curve_csv<R: Read>(r: R) -> Result<Curve, IoError> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|e| IoError::Parse {
                    line: line + 1,
                    msg: format!("{s:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(Curve::from_rows(rows)?)
}

/// Loads a curve, choosing JSON for `.json` files and CSV otherwise.
pub fn load_curve(path: &Path) -> Result<Curve, IoError> {
    if is_json(path) {
        curve_from_json(&fs::read_to_string(path)?)
    } else {
        read_curve_csv(fs::File::open(path)?)
    }
}

pub fn save_curve(c: &Curve, path: &Path) -> Result<(), IoError> {
    if is_json(path) {
        fs::write(path, curve_to_json(c))?;
        Ok(())
    } else {
        write_curve_csv(c, fs::File::create(path)?)
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

const MATRIX_HEADER_COMMENT: &str =
    "# free space matrix: line i is column i (vertex p_i), character j is entry (i,j); 0 iff d(p_i,q_j) <= delta";

pub fn write_matrix<W: Write>(m: &ExplicitMatrix, mut w: W) -> Result<(), IoError> {
    writeln!(w, "{MATRIX_HEADER_COMMENT}")?;
    writeln!(w, "{} {}", m.n_cols(), m.n_rows())?;
    write!(w, "{m}")?;
    Ok(())
}

pub fn read_matrix<R: Read>(r: R) -> Result<ExplicitMatrix, IoError> {
    let mut lines = BufReader::new(r)
        .lines()
        .enumerate()
        .map(|(k, l)| l.map(|s| (k + 1, s)))
        .filter(|l| !matches!(l, Ok((_, s)) if s.trim().is_empty() || s.trim_start().starts_with('#')));
    let (hline, header) = lines.next().ok_or(IoError::Parse {
        line: 1,
        msg: "missing header".into(),
    })??;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|e| IoError::Parse {
            line: hline,
            msg: format!("bad header {header:?}: {e}"),
        })?;
    let [n, m] = dims[..] else {
        return Err(IoError::Parse {
            line: hline,
            msg: format!("header must be \"n m\", got {header:?}"),
        });
    };
    let mut zeros = Vec::new();
    let mut cols = 0;
    for l in lines {
        let (line, s) = l?;
        let s = s.trim();
        cols += 1;
        if cols > n {
            return Err(IoError::Parse {
                line,
                msg: format!("more than {n} column lines"),
            });
        }
        if s.chars().count() != m {
            return Err(IoError::Parse {
                line,
                msg: format!("expected {m} entries, got {}", s.chars().count()),
            });
        }
        for (j, ch) in s.chars().enumerate() {
            match ch {
                '0' => zeros.push((cols, j + 1)),
                '1' => {}
                other => {
                    return Err(IoError::Parse {
                        line,
                        msg: format!("invalid entry {other:?}"),
                    })
                }
            }
        }
    }
    if cols != n {
        return Err(IoError::Parse {
            line: hline,
            msg: format!("expected {n} column lines, got {cols}"),
        });
    }
    ExplicitMatrix::from_zeros(n, m, zeros).map_err(|e| IoError::Parse {
        line: hline,
        msg: e.to_string(),
    })
}

pub fn load_matrix(path: &Path) -> Result<ExplicitMatrix, IoError> {
    read_matrix(fs::File::open(path)?)
}

pub fn save_matrix(m: &ExplicitMatrix, path: &Path) -> Result<(), IoError> {
    write_matrix(m, fs::File::create(path)?)
}
