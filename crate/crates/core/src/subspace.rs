//! Subspace arithmetic and projector algebra: sums, intersections,
//! complements, common complements of equal-dimensional pairs, graph
//! operators, and oblique (idempotent) projectors.
//!
//! A decomposition `E = E1 ⊕ R` determines two idempotents: the projector
//! with range `E1` and kernel `R`, and its complement. Any other complement
//! `E*` of `R` is the graph `{x + αx : x ∈ E*}` of a unique linear map
//! `α : E* → R`, and the projectors update by the rank-structured identity
//! `P(range E1, ker R) = P(range E*, ker R) + α ∘ P(range E*, ker R)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{real, to_f64, Real};
use crate::thresholds;

/// A linear subspace of `R^ambient`, stored as an orthonormal column basis
/// (possibly with zero columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace<T: Real> {
    ambient: usize,
    basis: DMatrix<T>,
}

impl<T: Real> Subspace<T> {
    /// The zero subspace of `R^ambient`.
    pub fn zero(ambient: usize) -> Self {
        Self {
            ambient,
            basis: DMatrix::zeros(ambient, 0),
        }
    }

    /// All of `R^ambient`.
    pub fn full(ambient: usize) -> Self {
        Self {
            ambient,
            basis: DMatrix::identity(ambient, ambient),
        }
    }

    /// The `i`-th coordinate axis.
    pub fn coordinate(ambient: usize, i: usize) -> Self {
        let mut basis = DMatrix::zeros(ambient, 1);
        basis[(i, 0)] = T::one();
        Self { ambient, basis }
    }

    /// The line spanned by a nonzero vector.
    pub fn line(v: &DVector<T>) -> Result<Self> {
        let norm = v.norm();
        if norm <= T::zero() {
            return Err(Error::NumericalDegeneracy(
                "cannot span a line by zero".into(),
            ));
        }
        Ok(Self {
            ambient: v.len(),
            basis: DMatrix::from_column_slice(v.len(), 1, v.unscale(norm).as_slice()),
        })
    }

    /// Subspace spanned by the columns of `cols` (orthonormalized, with the
    /// numerical rank decided at `tol`).
    pub fn span(cols: &DMatrix<T>, tol: T) -> Self {
        linalg::column_space(cols, tol)
    }

    /// Wrap a matrix whose columns are already orthonormal, after checking
    /// the defect `‖BᵀB − I‖`.
    pub fn from_orthonormal(basis: DMatrix<T>) -> Result<Self> {
        let d = basis.ncols();
        let defect = (basis.transpose() * &basis - DMatrix::identity(d, d)).norm();
        if defect > real(thresholds::ORTHONORMAL_DEFECT) {
            return Err(Error::NumericalDegeneracy(format!(
                "basis orthonormality defect {:.3e}",
                to_f64(defect)
            )));
        }
        Ok(Self::from_orthonormal_unchecked(basis))
    }

    pub(crate) fn from_orthonormal_unchecked(basis: DMatrix<T>) -> Self {
        Self {
            ambient: basis.nrows(),
            basis,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn codim(&self) -> usize {
        self.ambient - self.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    /// The orthonormal basis, one column per dimension.
    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    /// First basis vector, if any.
    pub fn first_direction(&self) -> Option<DVector<T>> {
        (self.dim() > 0).then(|| self.basis.column(0).clone_owned())
    }

    /// Orthogonal projection of `v` onto this subspace.
    pub fn project(&self, v: &DVector<T>) -> DVector<T> {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Distance from `v` to the subspace, relative to `‖v‖`.
    pub fn residual(&self, v: &DVector<T>) -> T {
        let norm = v.norm();
        if norm <= T::zero() {
            return T::zero();
        }
        (v - self.project(v)).norm() / norm
    }

    /// Orthogonal complement in the ambient space.
    pub fn orthogonal_complement(&self) -> Self {
        Self::from_orthonormal_unchecked(linalg::complement_basis(&self.basis, self.ambient))
    }

    /// Sum of two subspaces of the same ambient space.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.ambient != other.ambient {
            return Err(Error::AmbientMismatch(self.ambient, other.ambient));
        }
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        let mut stacked = DMatrix::zeros(self.ambient, self.dim() + other.dim());
        stacked.columns_mut(0, self.dim()).copy_from(&self.basis);
        stacked
            .columns_mut(self.dim(), other.dim())
            .copy_from(&other.basis);
        Ok(Self::span(&stacked, real(thresholds::DEFAULT_TOL)))
    }

    /// Intersection, computed through the null space of the stacked basis
    /// `[B1 | −B2]`: a null vector `(c1; c2)` means `B1·c1 = B2·c2`, which is
    /// exactly a common vector. The stacked singular values are
    /// `2·sin(θ_i/2)` in the principal angles, so the null-space rank cutoff
    /// realizes the angle knob: directions under (about)
    /// [`thresholds::INTERSECTION_ANGLE`] radians count as common.
    ///
    /// Rotational freedom inside clustered angles never matters here; only
    /// the null subspace as a whole is used.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        if self.ambient != other.ambient {
            return Err(Error::AmbientMismatch(self.ambient, other.ambient));
        }
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(self.ambient));
        }
        let (d1, d2) = (self.dim(), other.dim());
        let mut stacked = DMatrix::zeros(self.ambient, d1 + d2);
        stacked.columns_mut(0, d1).copy_from(&self.basis);
        stacked.columns_mut(d1, d2).copy_from(&(-&other.basis));
        let null = linalg::null_space(&stacked, real(thresholds::INTERSECTION_ANGLE * 0.5));
        if null.dim() == 0 {
            return Ok(Self::zero(self.ambient));
        }
        // common vectors, each of norm 1/sqrt(2) and mutually orthogonal
        let meet = &self.basis * null.basis().rows(0, d1);
        let out = Self::span(&meet, real(thresholds::DEFAULT_TOL));
        debug_assert_eq!(out.dim(), null.dim());
        Ok(out)
    }

    /// Orthogonal complement of the contained subspace `sub` taken inside
    /// `self`; the result has dimension `self.dim() - sub.dim()` by
    /// construction (a relative rank cutoff would misread the all-noise case
    /// where `sub` exhausts `self`).
    pub(crate) fn reduce_by(&self, sub: &Self) -> Self {
        if sub.is_zero() {
            return self.clone();
        }
        let expected = self.dim() - sub.dim();
        if expected == 0 {
            return Self::zero(self.ambient);
        }
        let proj = &self.basis - sub.basis() * (sub.basis().transpose() * &self.basis);
        let svd = linalg::thin_svd(&proj);
        // surviving directions carry singular values of order their angle to
        // `sub`; anything smaller is rounding junk
        debug_assert!(svd.sigma[expected - 1] > real(1e-8));
        Self::from_orthonormal_unchecked(svd.u.columns(0, expected).into_owned())
    }
}

/// Largest principal angle between two subspaces of equal dimension, in
/// radians. Subspaces of different dimensions are never equal; the sentinel
/// is a right angle.
pub fn max_principal_angle<T: Real>(a: &Subspace<T>, b: &Subspace<T>) -> T {
    if a.ambient_dim() != b.ambient_dim() || a.dim() != b.dim() {
        return T::frac_pi_2();
    }
    if a.dim() == 0 {
        return T::zero();
    }
    // sin(theta_max) is the spectral norm of (I - P_a) B_b
    let rejected = b.basis() - a.basis() * (a.basis().transpose() * b.basis());
    let s = linalg::singular_values(&rejected)[0];
    s.min(T::one()).asin()
}

/// A certified direct sum `R^ambient = part_a ⊕ part_b`.
///
/// Construction fails unless the stacked basis `[B_a | B_b]` is square with
/// `sigma_min` at least [`thresholds::COMPLEMENT_SIGMA`].
#[derive(Debug, Clone)]
pub struct Decomposition<T: Real> {
    part_a: Subspace<T>,
    part_b: Subspace<T>,
    sigma_min: T,
}

impl<T: Real> Decomposition<T> {
    pub fn try_new(part_a: Subspace<T>, part_b: Subspace<T>) -> Result<Self> {
        if part_a.ambient_dim() != part_b.ambient_dim() {
            return Err(Error::AmbientMismatch(
                part_a.ambient_dim(),
                part_b.ambient_dim(),
            ));
        }
        if part_a.dim() + part_b.dim() != part_a.ambient_dim() {
            return Err(Error::NotComplementary(format!(
                "dimensions {} + {} != ambient {}",
                part_a.dim(),
                part_b.dim(),
                part_a.ambient_dim()
            )));
        }
        let sigma_min = linalg::stacked_sigma_min(&part_a, &part_b);
        if sigma_min < real(thresholds::COMPLEMENT_SIGMA) {
            return Err(Error::NotComplementary(format!(
                "stacked basis sigma_min {:.3e}",
                to_f64(sigma_min)
            )));
        }
        Ok(Self {
            part_a,
            part_b,
            sigma_min,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.part_a.ambient_dim()
    }

    pub fn part_a(&self) -> &Subspace<T> {
        &self.part_a
    }

    pub fn part_b(&self) -> &Subspace<T> {
        &self.part_b
    }

    /// The direct-sum certificate: `sigma_min` of the stacked basis.
    pub fn sigma_min(&self) -> T {
        self.sigma_min
    }
}

/// A subspace complementary to both `e1` and `e2` simultaneously.
///
/// Requires `dim e1 = dim e2`. Writing `D = e1 ∩ e2`, pick complements
/// `e1*`, `e2*` of `D` inside each subspace, let `H` complement `e1 + e2`
/// in the ambient space, pair the bases of `e1*` and `e2*` index by index
/// into an isomorphism `α`, and take the graph `H1 = {x + αx : x ∈ e1*}`.
/// The result is `R = H ⊕ H1`.
pub fn common_complement<T: Real>(e1: &Subspace<T>, e2: &Subspace<T>) -> Result<Subspace<T>> {
    if e1.ambient_dim() != e2.ambient_dim() {
        return Err(Error::AmbientMismatch(e1.ambient_dim(), e2.ambient_dim()));
    }
    if e1.dim() != e2.dim() {
        return Err(Error::DimensionMismatch(e1.dim(), e2.dim()));
    }
    let meet = e1.intersect(e2)?;
    let e1s = e1.reduce_by(&meet);
    let e2s = e2.reduce_by(&meet);
    let joined = e1.sum(e2)?;
    debug_assert_eq!(joined.dim(), e1s.dim() + e2s.dim() + meet.dim());
    let h = joined.orthogonal_complement();

    // graph of the index-pairing isomorphism e1* -> e2*, with both bases
    // rotated onto their principal vectors first: paired directions then
    // satisfy b1·b2 = cos(angle) >= 0, so the sums below have norm >= sqrt(2)
    // and stay mutually orthogonal
    let h1 = if e1s.dim() == 0 {
        Subspace::zero(e1.ambient_dim())
    } else {
        let svd = linalg::thin_svd(&(e1s.basis().transpose() * e2s.basis()));
        let u_full = linalg::complete_columns(&svd.u, &svd.sigma);
        let b1 = e1s.basis() * u_full;
        let b2 = e2s.basis() * &svd.v;
        let diag = b1 + b2;
        let h1 = Subspace::span(&diag, real(thresholds::DEFAULT_TOL));
        debug_assert_eq!(h1.dim(), e1s.dim());
        h1
    };
    let r = h.sum(&h1)?;

    Decomposition::try_new(e1.clone(), r.clone())
        .and_then(|_| Decomposition::try_new(e2.clone(), r.clone()))
        .map_err(|e| {
            Error::NumericalDegeneracy(format!("common complement failed to certify: {e}"))
        })?;
    Ok(r)
}

/// The unique linear map `α : domain -> codomain` whose graph realizes a
/// complement of `codomain`, expressed on the orthonormal bases of both.
#[derive(Debug, Clone)]
pub struct GraphOperator<T: Real> {
    domain: Subspace<T>,
    codomain: Subspace<T>,
    coeffs: DMatrix<T>,
}

impl<T: Real> GraphOperator<T> {
    /// The zero map (its graph is the domain itself).
    pub fn zero(domain: Subspace<T>, codomain: Subspace<T>) -> Self {
        let coeffs = DMatrix::zeros(codomain.dim(), domain.dim());
        Self {
            domain,
            codomain,
            coeffs,
        }
    }

    pub fn from_coeffs(
        domain: Subspace<T>,
        codomain: Subspace<T>,
        coeffs: DMatrix<T>,
    ) -> Result<Self> {
        if coeffs.nrows() != codomain.dim() || coeffs.ncols() != domain.dim() {
            return Err(Error::ShapeMismatch(format!(
                "coefficients are {}x{}, expected {}x{}",
                coeffs.nrows(),
                coeffs.ncols(),
                codomain.dim(),
                domain.dim()
            )));
        }
        Ok(Self {
            domain,
            codomain,
            coeffs,
        })
    }

    pub fn domain(&self) -> &Subspace<T> {
        &self.domain
    }

    pub fn codomain(&self) -> &Subspace<T> {
        &self.codomain
    }

    pub fn coeffs(&self) -> &DMatrix<T> {
        &self.coeffs
    }

    pub fn norm(&self) -> T {
        self.coeffs.norm()
    }

    /// The ambient matrix acting as `α` on the domain subspace and as zero on
    /// its orthogonal complement.
    pub fn embedded(&self) -> DMatrix<T> {
        self.codomain.basis() * &self.coeffs * self.domain.basis().transpose()
    }
}

/// Recover `α` from the decompositions `E = e1 ⊕ r = estar ⊕ r`: for each
/// basis vector `x` of `estar` there is a unique `e ∈ e1` projecting to `x`
/// along `r`, and `αx = e − x ∈ r`.
pub fn graph_operator<T: Real>(
    e1: &Subspace<T>,
    estar: &Subspace<T>,
    r: &Subspace<T>,
) -> Result<GraphOperator<T>> {
    Decomposition::try_new(e1.clone(), r.clone())?;
    Decomposition::try_new(estar.clone(), r.clone())?;
    let d = estar.dim();
    if d == 0 {
        return Ok(GraphOperator::zero(estar.clone(), r.clone()));
    }
    let p = oblique_projector(estar, r)?;
    // coordinates (on estar's basis) of the projections of e1's basis
    let m = estar.basis().transpose() * (p.matrix() * e1.basis());
    let inv = m
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::NotComplementary("graph coordinates are singular".into()))?;
    let lifted = e1.basis() * inv;
    let coeffs = r.basis().transpose() * (&lifted - estar.basis());
    debug_assert!({
        let residual = (&lifted - estar.basis()) - r.basis() * &coeffs;
        residual.norm() <= real::<T>(1e-8) * (T::one() + lifted.norm())
    });
    GraphOperator::from_coeffs(estar.clone(), r.clone(), coeffs)
}

/// The subspace `{x + αx : x ∈ domain}`; always a complement of `α`'s
/// codomain.
pub fn graph_subspace<T: Real>(alpha: &GraphOperator<T>) -> Subspace<T> {
    if alpha.domain.dim() == 0 {
        return Subspace::zero(alpha.domain.ambient_dim());
    }
    let cols = alpha.domain.basis() + alpha.codomain.basis() * &alpha.coeffs;
    let out = Subspace::span(&cols, real(thresholds::DEFAULT_TOL));
    debug_assert_eq!(out.dim(), alpha.domain.dim());
    out
}

/// An idempotent with prescribed range and kernel.
#[derive(Debug, Clone)]
pub struct ObliqueProjector<T: Real> {
    matrix: DMatrix<T>,
    range_space: Subspace<T>,
    kernel_space: Subspace<T>,
}

impl<T: Real> ObliqueProjector<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn range_space(&self) -> &Subspace<T> {
        &self.range_space
    }

    pub fn kernel_space(&self) -> &Subspace<T> {
        &self.kernel_space
    }

    /// The complementary idempotent `I − P` (range and kernel swapped).
    pub fn complement(&self) -> Self {
        let n = self.matrix.nrows();
        Self {
            matrix: DMatrix::identity(n, n) - &self.matrix,
            range_space: self.kernel_space.clone(),
            kernel_space: self.range_space.clone(),
        }
    }
}

/// The projector with the given range and kernel; requires them to form a
/// direct sum of the ambient space.
pub fn oblique_projector<T: Real>(
    range: &Subspace<T>,
    kernel: &Subspace<T>,
) -> Result<ObliqueProjector<T>> {
    if range.ambient_dim() != kernel.ambient_dim() {
        return Err(Error::AmbientMismatch(
            range.ambient_dim(),
            kernel.ambient_dim(),
        ));
    }
    let matrix = linalg::oblique_matrix(range.basis(), kernel.basis())?;
    Ok(ObliqueProjector {
        matrix,
        range_space: range.clone(),
        kernel_space: kernel.clone(),
    })
}

/// Update `P(range E*, ker R)` to `P(range E1, ker R)` where `E1` is the
/// graph of `α : E* → R`, using `P_new = P + α∘P` instead of re-solving.
pub fn projector_update<T: Real>(
    p: &ObliqueProjector<T>,
    alpha: &GraphOperator<T>,
) -> Result<ObliqueProjector<T>> {
    if alpha.domain.dim() != p.range_space.dim()
        || alpha.codomain.dim() != p.kernel_space.dim()
        || alpha.domain.ambient_dim() != p.range_space.ambient_dim()
    {
        return Err(Error::ShapeMismatch(format!(
            "graph operator is {}d -> {}d but projector splits {} = {} + {}",
            alpha.domain.dim(),
            alpha.codomain.dim(),
            p.range_space.ambient_dim(),
            p.range_space.dim(),
            p.kernel_space.dim()
        )));
    }
    let a = alpha.embedded();
    let matrix = &p.matrix + a * &p.matrix;
    Ok(ObliqueProjector {
        matrix,
        range_space: graph_subspace(alpha),
        kernel_space: p.kernel_space.clone(),
    })
}
