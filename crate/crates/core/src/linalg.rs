//! Dense real-matrix kernels: rank decisions, column/null spaces, linear
//! solves, and restricted inverses. Everything else in the crate is built on
//! these.
//!
//! Matrices are `nalgebra::DMatrix` values in the usual orientation: a matrix
//! with `r` rows and `c` cols is a linear map from `R^c` (the domain) into
//! `R^r` (the codomain).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{real, to_f64, Real};
use crate::subspace::Subspace;
use crate::thresholds;

/// Thin singular value decomposition `a = u · diag(sigma) · vᵀ` with
/// `min(rows, cols)` columns in `u` and `v`, singular values sorted
/// descending.
///
/// Computed by one-sided Jacobi: rotate column pairs until all are mutually
/// orthogonal, then read the singular values off as column norms. Slower
/// than bidiagonalization but unconditionally convergent and accurate on
/// clustered spectra, which subspace geometry produces all the time
/// (products of orthonormal bases cluster at 1).
#[derive(Debug, Clone)]
pub(crate) struct ThinSvd<T: Real> {
    pub u: DMatrix<T>,
    pub sigma: DVector<T>,
    pub v: DMatrix<T>,
}

pub(crate) fn thin_svd<T: Real>(a: &DMatrix<T>) -> ThinSvd<T> {
    let (m, n) = a.shape();
    if m >= n {
        jacobi_tall(a)
    } else {
        let t = jacobi_tall(&a.transpose());
        ThinSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        }
    }
}

/// Singular values only, sorted descending.
pub fn singular_values<T: Real>(a: &DMatrix<T>) -> DVector<T> {
    thin_svd(a).sigma
}

fn jacobi_tall<T: Real>(a: &DMatrix<T>) -> ThinSvd<T> {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    if n == 0 {
        return ThinSvd {
            u: DMatrix::zeros(m, 0),
            sigma: DVector::zeros(0),
            v: DMatrix::zeros(0, 0),
        };
    }
    let mut u = a.clone();
    let mut v = DMatrix::identity(n, n);
    let eps = T::default_epsilon() * real(4.0);
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let aii = u.column(i).dot(&u.column(i));
                let ajj = u.column(j).dot(&u.column(j));
                let aij = u.column(i).dot(&u.column(j));
                if aii == T::zero() || ajj == T::zero() {
                    continue;
                }
                if aij.abs() <= eps * (aii * ajj).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (ajj - aii) / (aij * real(2.0));
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for mat in [&mut u, &mut v] {
                    for r in 0..mat.nrows() {
                        let x = mat[(r, i)];
                        let y = mat[(r, j)];
                        mat[(r, i)] = c * x - s * y;
                        mat[(r, j)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    // column norms are the singular values; sort descending
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<T> = (0..n).map(|k| u.column(k).norm()).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).expect("finite norms"));
    let mut u_sorted = DMatrix::zeros(m, n);
    let mut v_sorted = DMatrix::zeros(n, n);
    let mut sigma = DVector::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        sigma[dst] = norms[src];
        v_sorted.set_column(dst, &v.column(src));
        if norms[src] > T::zero() {
            u_sorted.set_column(dst, &u.column(src).unscale(norms[src]));
        }
    }
    ThinSvd {
        u: u_sorted,
        sigma,
        v: v_sorted,
    }
}

/// Outcome of a numerical rank decision.
///
/// `leading_gap = sigma_rank / sigma_1` (1 for the zero matrix) and
/// `trailing_ratio = sigma_{rank+1} / sigma_1` (0 when nothing trails), so a
/// decision is comfortable when `trailing_ratio << tolerance <= leading_gap`.
#[derive(Debug, Clone, Copy)]
pub struct RankDecision<T> {
    pub rank: usize,
    pub leading_gap: T,
    pub trailing_ratio: T,
    pub tolerance: T,
}

/// Rank of `t` counted as the singular values above `tol * sigma_1`.
///
/// Total on finite matrices; the zero matrix has rank 0 with degenerate gap
/// fields (`leading_gap = 1`, `trailing_ratio = 0`).
pub fn numerical_rank<T: Real>(t: &DMatrix<T>, tol: T) -> RankDecision<T> {
    debug_assert!(tol > T::zero() && tol < T::one());
    let p = t.nrows().min(t.ncols());
    let degenerate = RankDecision {
        rank: 0,
        leading_gap: T::one(),
        trailing_ratio: T::zero(),
        tolerance: tol,
    };
    if p == 0 {
        return degenerate;
    }
    let s = singular_values(t);
    let s1 = s[0];
    if s1 <= T::zero() {
        return degenerate;
    }
    let cut = tol * s1;
    let rank = s.iter().take_while(|&&x| x > cut).count();
    if rank == 0 {
        return degenerate;
    }
    RankDecision {
        rank,
        leading_gap: s[rank - 1] / s1,
        trailing_ratio: if rank < p { s[rank] / s1 } else { T::zero() },
        tolerance: tol,
    }
}

/// Orthonormal basis of the numerical column space of `t`.
pub fn column_space<T: Real>(t: &DMatrix<T>, tol: T) -> Subspace<T> {
    let m = t.nrows();
    if m == 0 || t.ncols() == 0 {
        return Subspace::zero(m);
    }
    let svd = thin_svd(t);
    let s1 = svd.sigma[0];
    let rank = if s1 <= T::zero() {
        0
    } else {
        let cut = tol * s1;
        svd.sigma.iter().take_while(|&&x| x > cut).count()
    };
    Subspace::from_orthonormal_unchecked(svd.u.columns(0, rank).into_owned())
}

/// Orthonormal basis of the numerical row space of `t` (a subspace of the
/// domain).
pub fn row_space<T: Real>(t: &DMatrix<T>, tol: T) -> Subspace<T> {
    column_space(&t.transpose(), tol)
}

/// Orthonormal basis of the numerical null space of `t`; its dimension is
/// `cols - rank`.
pub fn null_space<T: Real>(t: &DMatrix<T>, tol: T) -> Subspace<T> {
    let n = t.ncols();
    if n == 0 {
        return Subspace::zero(0);
    }
    if t.nrows() == 0 {
        return Subspace::full(n);
    }
    row_space(t, tol).orthogonal_complement()
}

/// Solve `A X = B` for square, comfortably nonsingular `A`.
pub fn solve<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, tol: T) -> Result<DMatrix<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "solve needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.nrows() != n {
        return Err(Error::ShapeMismatch(format!(
            "right-hand side has {} rows, expected {}",
            b.nrows(),
            n
        )));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, b.ncols()));
    }
    let svd = thin_svd(a);
    let (smax, smin) = (svd.sigma[0], svd.sigma[n - 1]);
    if smax <= T::zero() || smin <= tol * smax {
        return Err(Error::NumericallySingular {
            ratio: to_f64(if smax > T::zero() {
                smin / smax
            } else {
                T::zero()
            }),
            tol: to_f64(tol),
        });
    }
    Ok(apply_pinv(&svd, b))
}

/// `v · diag(1/sigma) · uᵀ · b`, dropping exactly-zero singular values.
fn apply_pinv<T: Real>(svd: &ThinSvd<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut coeffs = svd.u.transpose() * b;
    for (k, &s) in svd.sigma.iter().enumerate() {
        let scale = if s > T::zero() {
            T::one() / s
        } else {
            T::zero()
        };
        for c in 0..coeffs.ncols() {
            coeffs[(k, c)] *= scale;
        }
    }
    &svd.v * coeffs
}

/// The inverse of `t` on the complement `r` of its kernel, extended by zero
/// on the complement `n_star` of its range.
///
/// The result `t_plus` satisfies `t_plus * t = P` (projector onto `r` along
/// the kernel) and `t * t_plus = Q` (projector onto the range along
/// `n_star`).
pub fn restricted_inverse<T: Real>(
    t: &DMatrix<T>,
    r: &Subspace<T>,
    n_star: &Subspace<T>,
    tol: T,
) -> Result<DMatrix<T>> {
    let (rows, cols) = (t.nrows(), t.ncols());
    if r.ambient_dim() != cols {
        return Err(Error::ShapeMismatch(format!(
            "domain complement lives in R^{} but the operator domain is R^{}",
            r.ambient_dim(),
            cols
        )));
    }
    if n_star.ambient_dim() != rows {
        return Err(Error::ShapeMismatch(format!(
            "codomain complement lives in R^{} but the operator codomain is R^{}",
            n_star.ambient_dim(),
            rows
        )));
    }
    let kernel = null_space(t, tol);
    let range = column_space(t, tol);
    check_complementary(r, &kernel, "domain: r + null(t)")?;
    check_complementary(&range, n_star, "codomain: range(t) + n_star")?;

    // t restricted to r, expressed on the chosen basis columns
    let c = t * r.basis();
    let k = c.ncols();
    if k == 0 {
        return Ok(DMatrix::zeros(cols, rows));
    }
    let svd = thin_svd(&c);
    let (smax, smin) = (svd.sigma[0], svd.sigma[k.min(rows) - 1]);
    if smax <= T::zero() || smin <= tol * smax {
        return Err(Error::NumericallySingular {
            ratio: to_f64(if smax > T::zero() {
                smin / smax
            } else {
                T::zero()
            }),
            tol: to_f64(tol),
        });
    }
    let p = oblique_matrix(range.basis(), n_star.basis())?;
    Ok(r.basis() * apply_pinv(&svd, &p))
}

/// Matrix of the idempotent with the given range and kernel bases.
///
/// Solves against the stacked basis; callers are expected to have validated
/// complementarity, but the stacking is gated here as well.
pub(crate) fn oblique_matrix<T: Real>(
    range_basis: &DMatrix<T>,
    kernel_basis: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    let n = range_basis.nrows();
    let r = range_basis.ncols();
    let k = kernel_basis.ncols();
    if kernel_basis.nrows() != n || r + k != n {
        return Err(Error::NotComplementary(format!(
            "stacked basis is {}+{} columns in R^{}",
            r, k, n
        )));
    }
    if r == 0 {
        return Ok(DMatrix::zeros(n, n));
    }
    if k == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    let mut stacked = DMatrix::zeros(n, n);
    stacked.columns_mut(0, r).copy_from(range_basis);
    stacked.columns_mut(r, k).copy_from(kernel_basis);
    let smin = smallest_singular_value(&stacked);
    if smin < real(thresholds::COMPLEMENT_SIGMA) {
        return Err(Error::NotComplementary(format!(
            "stacked basis sigma_min {:.3e}",
            to_f64(smin)
        )));
    }
    let inverse = stacked
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::NumericalDegeneracy("stacked basis failed to invert".into()))?;
    Ok(range_basis * inverse.rows(0, r))
}

/// Fill the zero columns of a left-factor `u` (those with `sigma = 0`) with
/// an orthonormal completion, keeping the leading columns untouched.
pub(crate) fn complete_columns<T: Real>(u: &DMatrix<T>, sigma: &DVector<T>) -> DMatrix<T> {
    let nonzero = sigma.iter().take_while(|&&s| s > T::zero()).count();
    if nonzero == u.ncols() {
        return u.clone();
    }
    let kept = u.columns(0, nonzero).into_owned();
    let completion = complement_basis(&kept, u.nrows());
    let mut out = DMatrix::zeros(u.nrows(), u.ncols());
    out.columns_mut(0, nonzero).copy_from(&kept);
    out.columns_mut(nonzero, u.ncols() - nonzero)
        .copy_from(&completion.columns(0, u.ncols() - nonzero));
    out
}

/// Orthonormal basis of the orthogonal complement of `span(basis)` in
/// `R^ambient`. `basis` must have orthonormal columns.
pub(crate) fn complement_basis<T: Real>(basis: &DMatrix<T>, ambient: usize) -> DMatrix<T> {
    let d = basis.ncols();
    if d == 0 {
        return DMatrix::identity(ambient, ambient);
    }
    if d >= ambient {
        return DMatrix::zeros(ambient, 0);
    }
    let proj = DMatrix::identity(ambient, ambient) - basis * basis.transpose();
    let svd = thin_svd(&proj);
    // the projector's spectrum splits cleanly into (ambient - d) ones and d zeros
    debug_assert!(svd.sigma[ambient - d - 1] > real(0.5));
    svd.u.columns(0, ambient - d).into_owned()
}

/// Smallest singular value of an arbitrary dense matrix.
pub(crate) fn smallest_singular_value<T: Real>(m: &DMatrix<T>) -> T {
    let p = m.nrows().min(m.ncols());
    if p == 0 {
        return T::zero();
    }
    let s = singular_values(m);
    s[p - 1]
}

/// `sigma_min` of the stacked basis `[B_a | B_b]`; zero when the dimensions
/// cannot form a direct sum. The direct-sum certificate used everywhere.
pub fn stacked_sigma_min<T: Real>(a: &Subspace<T>, b: &Subspace<T>) -> T {
    let n = a.ambient_dim();
    if b.ambient_dim() != n || a.dim() + b.dim() != n {
        return T::zero();
    }
    if n == 0 {
        return T::one();
    }
    let mut stacked = DMatrix::zeros(n, n);
    stacked.columns_mut(0, a.dim()).copy_from(a.basis());
    stacked.columns_mut(a.dim(), b.dim()).copy_from(b.basis());
    smallest_singular_value(&stacked)
}

fn check_complementary<T: Real>(a: &Subspace<T>, b: &Subspace<T>, what: &str) -> Result<()> {
    if a.ambient_dim() != b.ambient_dim() || a.dim() + b.dim() != a.ambient_dim() {
        return Err(Error::NotComplementary(format!(
            "{what}: dimensions {}+{} in R^{}",
            a.dim(),
            b.dim(),
            a.ambient_dim()
        )));
    }
    let smin = stacked_sigma_min(a, b);
    if smin < real(thresholds::COMPLEMENT_SIGMA) {
        return Err(Error::NotComplementary(format!(
            "{what}: stacked basis sigma_min {:.3e}",
            to_f64(smin)
        )));
    }
    Ok(())
}
