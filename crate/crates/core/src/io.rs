//! File formats: JSON matrices (row-major), CSV matrices, JSON path files,
//! and JSON certificates.
//!
//! Matrices: `{"rows": r, "cols": c, "data": [row-major numbers]}`. Floats
//! are written in shortest round-trip decimal form, so writing and re-reading
//! reproduces every value exactly. Paths store segment parameters, never
//! samples; certification re-evaluates everything from the parameters.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::certify::PathCertificate;
use crate::error::{Error, Result};
use crate::path::{OperatorPath, PathSegment, SegmentInvariant, SegmentKind};
use crate::subspace::Subspace;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixFile {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn into_matrix(self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Parse(format!(
                "matrix data has {} entries, expected {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        if !self.data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

/// Read a matrix from JSON (`.json`) or comma-separated rows (anything
/// else that does not look like JSON).
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    let looks_like_json = text.trim_start().starts_with('{');
    if looks_like_json {
        serde_json::from_str::<MatrixFile>(&text)?.into_matrix()
    } else {
        parse_csv(&text)
    }
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, matrix_json(m))?;
    Ok(())
}

pub fn matrix_json(m: &DMatrix<f64>) -> String {
    serde_json::to_string_pretty(&MatrixFile::from_matrix(m)).expect("matrix serializes")
}

fn parse_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "line {}: {} cells, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("no rows in CSV matrix".into()));
    }
    let (r, c) = (rows.len(), rows[0].len());
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    if !flat.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(DMatrix::from_row_slice(r, c, &flat))
}

/// Read a subspace: a matrix file whose columns span it (orthonormalized on
/// load at the given tolerance).
pub fn read_subspace(path: &Path, tol: f64) -> Result<Subspace<f64>> {
    let m = read_matrix(path)?;
    Ok(Subspace::span(&m, tol))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KindFile {
    Affine {
        a: MatrixFile,
        b: MatrixFile,
    },
    RightAffine {
        t: MatrixFile,
        a: MatrixFile,
        b: MatrixFile,
    },
    Rotation {
        base: MatrixFile,
        u: Vec<f64>,
        v: Vec<f64>,
        theta_start: f64,
        theta_end: f64,
    },
    RightRotation {
        base: MatrixFile,
        u: Vec<f64>,
        v: Vec<f64>,
        theta_start: f64,
        theta_end: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InvariantFile {
    ConstantRank { k: usize },
    ConstantKernel { basis: MatrixFile },
    ConstantRange { basis: MatrixFile },
    ComplementedRange { basis: MatrixFile },
    ComplementedKernel { basis: MatrixFile },
    Invertible,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentFile {
    pub kind: KindFile,
    pub invariants: Vec<InvariantFile>,
    pub provenance: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathFile {
    pub rows: usize,
    pub cols: usize,
    pub segments: Vec<SegmentFile>,
}

impl PathFile {
    pub fn from_path(path: &OperatorPath<f64>) -> Self {
        Self {
            rows: path.rows(),
            cols: path.cols(),
            segments: path.segments().iter().map(segment_to_file).collect(),
        }
    }

    pub fn into_path(self) -> Result<OperatorPath<f64>> {
        let segments = self
            .segments
            .into_iter()
            .map(segment_from_file)
            .collect::<Result<Vec<_>>>()?;
        let path = OperatorPath::try_new(segments)?;
        if (path.rows(), path.cols()) != (self.rows, self.cols) {
            return Err(Error::Parse(format!(
                "declared dims {}x{} disagree with segments {}x{}",
                self.rows,
                self.cols,
                path.rows(),
                path.cols()
            )));
        }
        Ok(path)
    }
}

fn segment_to_file(seg: &PathSegment<f64>) -> SegmentFile {
    let kind = match &seg.kind {
        SegmentKind::Affine { a, b } => KindFile::Affine {
            a: MatrixFile::from_matrix(a),
            b: MatrixFile::from_matrix(b),
        },
        SegmentKind::RightAffine { t, a, b } => KindFile::RightAffine {
            t: MatrixFile::from_matrix(t),
            a: MatrixFile::from_matrix(a),
            b: MatrixFile::from_matrix(b),
        },
        SegmentKind::Rotation {
            base,
            u,
            v,
            theta_start,
            theta_end,
        } => KindFile::Rotation {
            base: MatrixFile::from_matrix(base),
            u: u.iter().copied().collect(),
            v: v.iter().copied().collect(),
            theta_start: *theta_start,
            theta_end: *theta_end,
        },
        SegmentKind::RightRotation {
            base,
            u,
            v,
            theta_start,
            theta_end,
        } => KindFile::RightRotation {
            base: MatrixFile::from_matrix(base),
            u: u.iter().copied().collect(),
            v: v.iter().copied().collect(),
            theta_start: *theta_start,
            theta_end: *theta_end,
        },
    };
    let invariants = seg
        .invariants
        .iter()
        .map(|inv| match inv {
            SegmentInvariant::ConstantRank(k) => InvariantFile::ConstantRank { k: *k },
            SegmentInvariant::ConstantKernel(s) => InvariantFile::ConstantKernel {
                basis: MatrixFile::from_matrix(s.basis()),
            },
            SegmentInvariant::ConstantRange(s) => InvariantFile::ConstantRange {
                basis: MatrixFile::from_matrix(s.basis()),
            },
            SegmentInvariant::ComplementedRange(s) => InvariantFile::ComplementedRange {
                basis: MatrixFile::from_matrix(s.basis()),
            },
            SegmentInvariant::ComplementedKernel(s) => InvariantFile::ComplementedKernel {
                basis: MatrixFile::from_matrix(s.basis()),
            },
            SegmentInvariant::Invertible => InvariantFile::Invertible,
        })
        .collect();
    SegmentFile {
        kind,
        invariants,
        provenance: seg.provenance.clone(),
    }
}

fn segment_from_file(file: SegmentFile) -> Result<PathSegment<f64>> {
    let kind = match file.kind {
        KindFile::Affine { a, b } => SegmentKind::Affine {
            a: a.into_matrix()?,
            b: b.into_matrix()?,
        },
        KindFile::RightAffine { t, a, b } => SegmentKind::RightAffine {
            t: t.into_matrix()?,
            a: a.into_matrix()?,
            b: b.into_matrix()?,
        },
        KindFile::Rotation {
            base,
            u,
            v,
            theta_start,
            theta_end,
        } => SegmentKind::Rotation {
            base: base.into_matrix()?,
            u: plane_vector(u)?,
            v: plane_vector(v)?,
            theta_start,
            theta_end,
        },
        KindFile::RightRotation {
            base,
            u,
            v,
            theta_start,
            theta_end,
        } => SegmentKind::RightRotation {
            base: base.into_matrix()?,
            u: plane_vector(u)?,
            v: plane_vector(v)?,
            theta_start,
            theta_end,
        },
    };
    let invariants = file
        .invariants
        .into_iter()
        .map(|inv| {
            Ok(match inv {
                InvariantFile::ConstantRank { k } => SegmentInvariant::ConstantRank(k),
                InvariantFile::ConstantKernel { basis } => {
                    SegmentInvariant::ConstantKernel(subspace_from_file(basis)?)
                }
                InvariantFile::ConstantRange { basis } => {
                    SegmentInvariant::ConstantRange(subspace_from_file(basis)?)
                }
                InvariantFile::ComplementedRange { basis } => {
                    SegmentInvariant::ComplementedRange(subspace_from_file(basis)?)
                }
                InvariantFile::ComplementedKernel { basis } => {
                    SegmentInvariant::ComplementedKernel(subspace_from_file(basis)?)
                }
                InvariantFile::Invertible => SegmentInvariant::Invertible,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if invariants.is_empty() {
        return Err(Error::Parse("segment declares no invariants".into()));
    }
    Ok(PathSegment::new(kind, invariants, &file.provenance))
}

fn plane_vector(v: Vec<f64>) -> Result<DVector<f64>> {
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(DVector::from_vec(v))
}

fn subspace_from_file(basis: MatrixFile) -> Result<Subspace<f64>> {
    Subspace::from_orthonormal(basis.into_matrix()?)
}

pub fn read_path(path: &Path) -> Result<OperatorPath<f64>> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str::<PathFile>(&text)?.into_path()
}

pub fn write_path(path: &Path, value: &OperatorPath<f64>) -> Result<()> {
    fs::write(
        path,
        serde_json::to_string_pretty(&PathFile::from_path(value))?,
    )?;
    Ok(())
}

pub fn write_certificate(path: &Path, cert: &PathCertificate) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(cert)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connect::connect_rank_stratum;
    use crate::sample::random_stratum_point;
    use crate::thresholds::DEFAULT_TOL;
    use proptest::prelude::*;

    #[test]
    fn csv_matrices_parse() {
        let m = parse_csv("1.0, 2.0\n3.5,-4.25\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.5, -4.25]));
        assert!(parse_csv("1.0\n2.0,3.0\n").is_err());
        assert!(parse_csv("").is_err());
    }

    #[test]
    fn path_files_round_trip_by_value() {
        let t1: DMatrix<f64> = random_stratum_point(3, 4, 2, 71).unwrap();
        let t2: DMatrix<f64> = random_stratum_point(3, 4, 2, 72).unwrap();
        let path = connect_rank_stratum(&t1, &t2, DEFAULT_TOL).unwrap();
        let json = serde_json::to_string(&PathFile::from_path(&path)).unwrap();
        let back = serde_json::from_str::<PathFile>(&json)
            .unwrap()
            .into_path()
            .unwrap();
        assert_eq!(back.segments().len(), path.segments().len());
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let a = path.evaluate(t).unwrap();
            let b = back.evaluate(t).unwrap();
            assert_eq!(a, b, "value drift at t={t}");
        }
    }

    proptest! {
        #[test]
        fn matrix_json_round_trip_is_exact(
            rows in 1usize..5,
            cols in 1usize..5,
            seed in proptest::num::i64::ANY,
        ) {
            // arbitrary finite values, including awkward magnitudes
            let mut state = seed as u64;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                f64::from_bits((state >> 12) | 0x3ff0000000000000) * 1e3 - 1.5e3
            };
            let m = DMatrix::from_fn(rows, cols, |_, _| next());
            let json = matrix_json(&m);
            let back = serde_json::from_str::<MatrixFile>(&json).unwrap().into_matrix().unwrap();
            prop_assert_eq!(m, back);
        }

        #[test]
        fn csv_round_trip_within_display(rows in 1usize..4, cols in 1usize..4) {
            let m = DMatrix::from_fn(rows, cols, |i, j| (i * cols + j) as f64 / 7.0);
            let csv: String = (0..rows)
                .map(|i| (0..cols).map(|j| format!("{:.17e}", m[(i, j)])).collect::<Vec<_>>().join(","))
                .collect::<Vec<_>>()
                .join("\n");
            let back = parse_csv(&csv).unwrap();
            prop_assert_eq!(m, back);
        }
    }
}
