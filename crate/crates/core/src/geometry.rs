//! Tangent spaces of the rank strata and the stratification bookkeeping.
//!
//! At a rank-k point `x`, the stratum's tangent space is the set of
//! operators mapping `null(x)` into `range(x)`. Its dimension is computed
//! two independent ways: as the nullity of the explicit constraint map
//! `t ↦ B⊥ᵀ·t·B_N` on the full matrix space, and from the closed form
//! `(rows + cols − k)·k`; the two must agree exactly.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, numerical_rank};
use crate::sample::random_stratum_point;
use crate::scalar::{real, to_f64, Real};
use crate::thresholds;

/// Outcome of a tangent-dimension computation at one base point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TangentSpaceReport {
    pub base_point_rank: usize,
    /// Dimension of the full matrix space, `rows * cols`.
    pub ambient_dim: usize,
    /// Nullity of the constraint map (agrees with the closed form).
    pub tangent_dim: usize,
    /// Rank of the constraint map; `tangent_dim + complement_dim = ambient_dim`.
    pub complement_dim: usize,
    /// Trailing singular-value ratio of the constraint-map rank decision.
    pub residual: f64,
}

/// Whether `t` is tangent to the rank stratum at `x`, together with the raw
/// membership defect `‖B⊥ᵀ·t·B_N‖_F` (compared against `tol·‖t‖_F`).
pub fn tangent_membership<T: Real>(x: &DMatrix<T>, t: &DMatrix<T>, tol: T) -> Result<(bool, T)> {
    if x.shape() != t.shape() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            x.shape(),
            t.shape()
        )));
    }
    let kernel = linalg::null_space(x, tol);
    let range_perp = linalg::column_space(x, tol).orthogonal_complement();
    if kernel.dim() == 0 || range_perp.dim() == 0 {
        return Ok((true, T::zero()));
    }
    let defect = (range_perp.basis().transpose() * t * kernel.basis()).norm();
    Ok((defect <= tol * t.norm(), defect))
}

/// Tangent dimension at `x` by explicit nullity, cross-checked against the
/// closed form. A disagreement (or an ambiguous rank decision at `x`) is an
/// error, not a report.
pub fn tangent_space_dim<T: Real>(x: &DMatrix<T>, tol: T) -> Result<TangentSpaceReport> {
    let (rows, cols) = x.shape();
    let decision = numerical_rank(x, tol);
    if decision.trailing_ratio > tol * real(0.01) {
        return Err(Error::NumericalDegeneracy(format!(
            "rank decision at the base point is ambiguous: trailing ratio {:.3e} against tol {:.3e}",
            to_f64(decision.trailing_ratio),
            to_f64(tol)
        )));
    }
    let k = decision.rank;
    let ambient_dim = rows * cols;

    let kernel = linalg::null_space(x, tol);
    let range_perp = linalg::column_space(x, tol).orthogonal_complement();
    let (constraint_rank, residual) = if kernel.dim() == 0 || range_perp.dim() == 0 {
        (0, 0.0)
    } else {
        // vec(B⊥ᵀ·t·B_N) = (B_Nᵀ ⊗ B⊥ᵀ)·vec(t)
        let constraint = kernel
            .basis()
            .transpose()
            .kronecker(&range_perp.basis().transpose());
        let d = numerical_rank(&constraint, tol);
        (d.rank, to_f64(d.trailing_ratio))
    };
    let tangent_dim = ambient_dim - constraint_rank;
    let formula = stratum_dim(rows, cols, k)?;
    if tangent_dim != formula {
        return Err(Error::NumericalDegeneracy(format!(
            "nullity gives tangent dimension {tangent_dim}, closed form gives {formula}"
        )));
    }
    Ok(TangentSpaceReport {
        base_point_rank: k,
        ambient_dim,
        tangent_dim,
        complement_dim: constraint_rank,
        residual,
    })
}

/// Closed-form dimension of the rank-k stratum in the space of
/// `m × n`-shaped operators: `(m + n − k)·k`.
pub fn stratum_dim(m: usize, n: usize, k: usize) -> Result<usize> {
    if k > m.min(n) {
        return Err(Error::OutOfRange(format!("rank {k} exceeds min({m}, {n})")));
    }
    Ok((m + n - k) * k)
}

/// One stratum of the stratification, with its sampled certificate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StratumEntry {
    pub k: usize,
    /// Closed-form dimension.
    pub dim: usize,
    /// Nullity-based tangent dimension at a seeded random rank-k point.
    pub sample_tangent_dim: usize,
    pub certified: bool,
}

/// The rank stratification of the whole `rows × cols` matrix space.
#[derive(Debug, Clone, Serialize)]
pub struct StratificationReport {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<StratumEntry>,
    /// A dense Gaussian sample landed in the top stratum, as it must.
    pub top_stratum_hit: bool,
}

/// Certify the stratification: one entry per rank `0..=min(rows, cols)`,
/// each checked at a seeded random point of that rank.
pub fn stratification_report(rows: usize, cols: usize, seed: u64) -> Result<StratificationReport> {
    if rows == 0 || cols == 0 {
        return Err(Error::OutOfRange("dimensions must be positive".into()));
    }
    let tol = thresholds::DEFAULT_TOL;
    let mut entries = Vec::new();
    for k in 0..=rows.min(cols) {
        let x: DMatrix<f64> = random_stratum_point(rows, cols, k, seed.wrapping_add(k as u64))?;
        let report = tangent_space_dim(&x, tol)?;
        let dim = stratum_dim(rows, cols, k)?;
        entries.push(StratumEntry {
            k,
            dim,
            sample_tangent_dim: report.tangent_dim,
            certified: report.tangent_dim == dim && report.base_point_rank == k,
        });
    }
    let mut rng =
        crate::sample::rng_from_seed(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1));
    let dense: DMatrix<f64> = crate::sample::gaussian_matrix(rows, cols, &mut rng);
    let top_stratum_hit = numerical_rank(&dense, tol).rank == rows.min(cols);
    Ok(StratificationReport {
        rows,
        cols,
        entries,
        top_stratum_hit,
    })
}

/// The canonical rank-k pair: the `rows × cols` block embedding with `k`
/// leading ones and its reflected partner, satisfying both composition
/// identities exactly in integer arithmetic.
pub fn canonical_embeddings<T: Real>(
    rows: usize,
    cols: usize,
    k: usize,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    if k > rows.min(cols) {
        return Err(Error::OutOfRange(format!(
            "rank {k} exceeds min({rows}, {cols})"
        )));
    }
    let mut ik = DMatrix::zeros(rows, cols);
    let mut ik_plus = DMatrix::zeros(cols, rows);
    for i in 0..k {
        ik[(i, i)] = T::one();
        ik_plus[(i, i)] = T::one();
    }
    Ok((ik, ik_plus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{rotate_left, rotate_right};
    use crate::sample::{gaussian_matrix, rng_from_seed};
    use crate::thresholds::DEFAULT_TOL;
    use nalgebra::{DMatrix, DVector};

    fn m64(r: usize, c: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, data)
    }

    #[test]
    fn membership_examples() {
        let x = m64(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        // x itself always belongs: x maps its kernel to zero
        assert!(tangent_membership(&x, &x, DEFAULT_TOL).unwrap().0);
        // e2 ↦ e2 leaves the kernel pointing outside the range
        let t = m64(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert!(!tangent_membership(&x, &t, DEFAULT_TOL).unwrap().0);
        // full-rank base points accept everything
        let full = DMatrix::<f64>::identity(2, 2);
        assert!(tangent_membership(&full, &t, DEFAULT_TOL).unwrap().0);
    }

    #[test]
    fn tangent_dim_matches_closed_form() {
        let x: DMatrix<f64> = random_stratum_point(2, 2, 1, 7).unwrap();
        let report = tangent_space_dim(&x, DEFAULT_TOL).unwrap();
        assert_eq!(report.tangent_dim, 3);
        assert_eq!(report.complement_dim, 1);

        let zero = DMatrix::<f64>::zeros(3, 2);
        assert_eq!(
            tangent_space_dim(&zero, DEFAULT_TOL).unwrap().tangent_dim,
            0
        );

        let x: DMatrix<f64> = random_stratum_point(3, 2, 2, 8).unwrap();
        let report = tangent_space_dim(&x, DEFAULT_TOL).unwrap();
        assert_eq!(report.tangent_dim, 6);
    }

    #[test]
    fn stratum_dim_formula() {
        assert_eq!(stratum_dim(2, 2, 1).unwrap(), 3);
        assert_eq!(stratum_dim(7, 5, 0).unwrap(), 0);
        assert_eq!(stratum_dim(4, 3, 2).unwrap(), 10);
        assert!(stratum_dim(2, 2, 3).is_err());
    }

    #[test]
    fn stratification_examples() {
        let report = stratification_report(2, 2, 0).unwrap();
        let dims: Vec<usize> = report.entries.iter().map(|e| e.dim).collect();
        assert_eq!(dims, vec![0, 3, 4]);
        assert!(report.entries.iter().all(|e| e.certified));
        assert!(report.top_stratum_hit);

        let dims: Vec<usize> = stratification_report(1, 1, 0)
            .unwrap()
            .entries
            .iter()
            .map(|e| e.dim)
            .collect();
        assert_eq!(dims, vec![0, 1]);

        let dims: Vec<usize> = stratification_report(3, 2, 0)
            .unwrap()
            .entries
            .iter()
            .map(|e| e.dim)
            .collect();
        assert_eq!(dims, vec![0, 4, 6]);
    }

    #[test]
    fn canonical_embeddings_satisfy_exact_identities() {
        let (ik, ik_plus) = canonical_embeddings::<f64>(3, 2, 1).unwrap();
        assert_eq!(&ik * &ik_plus * &ik, ik);
        assert_eq!(&ik_plus * &ik * &ik_plus, ik_plus);

        let (z, zp) = canonical_embeddings::<f64>(2, 3, 0).unwrap();
        assert_eq!(z.norm(), 0.0);
        assert_eq!(zp.norm(), 0.0);

        // full block: identity square inside
        let (ik, ik_plus) = canonical_embeddings::<f64>(3, 2, 2).unwrap();
        assert_eq!(&ik_plus * &ik, DMatrix::identity(2, 2));
    }

    #[test]
    fn complement_block_dimension_and_direct_sum() {
        for (rows, cols, k) in [(2, 2, 1), (4, 3, 2), (5, 2, 0), (3, 3, 3)] {
            let (ik, ik_plus) = canonical_embeddings::<f64>(rows, cols, k).unwrap();
            let p_cod = DMatrix::identity(rows, rows) - &ik * &ik_plus;
            let p_dom = DMatrix::identity(cols, cols) - &ik_plus * &ik;
            // image of t ↦ p_cod·t·p_dom
            let map = p_dom.transpose().kronecker(&p_cod);
            let dim_mplus = numerical_rank(&map, DEFAULT_TOL).rank;
            assert_eq!(dim_mplus, (rows - k) * (cols - k));
            let tangent = stratum_dim(rows, cols, k).unwrap();
            assert_eq!(tangent + dim_mplus, rows * cols);
        }
    }

    #[test]
    fn rank_preserving_curve_is_tangent_by_finite_differences() {
        let mut rng = rng_from_seed(13);
        let x: DMatrix<f64> = random_stratum_point(4, 3, 2, 19).unwrap();
        let gu: DVector<f64> = gaussian_matrix(4, 1, &mut rng).column(0).clone_owned();
        let gu = gu.normalize();
        let mut gv: DVector<f64> = gaussian_matrix(4, 1, &mut rng).column(0).clone_owned();
        gv = (&gv - &gu * gu.dot(&gv)).normalize();
        let hu: DVector<f64> = gaussian_matrix(3, 1, &mut rng).column(0).clone_owned();
        let hu = hu.normalize();
        let mut hv: DVector<f64> = gaussian_matrix(3, 1, &mut rng).column(0).clone_owned();
        hv = (&hv - &hu * hu.dot(&hv)).normalize();

        let curve = |t: f64| rotate_right(&rotate_left(&x, &gu, &gv, t), &hu, &hv, t);
        let h = 1e-4;
        let diff = (curve(h) - curve(-h)) / (2.0 * h);
        let (ok, defect) = tangent_membership(&x, &diff, 1e-6).unwrap();
        assert!(ok, "defect {defect}");
        assert!(defect <= 1e-6);
    }
}
