//! Parametrized operator paths and their segment constructors.
//!
//! A segment is one of four closed-form families on `λ ∈ [0, 1]`:
//! affine pencils `A + λB`, right pencils `T(A + λB)`, and left/right
//! plane rotations `G(θ(λ))·M` / `M·G(θ(λ))` where `G` rotates in
//! `span(u, v)` and fixes the orthogonal complement. Each segment declares
//! the invariants it claims to preserve; certification re-checks the claims
//! by sampling (see [`crate::certify`]).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{real, to_f64, Real};
use crate::subspace::{graph_operator, oblique_projector, GraphOperator, Subspace};
use crate::thresholds;

/// Closed-form segment families.
#[derive(Debug, Clone)]
pub enum SegmentKind<T: Real> {
    /// `λ ↦ a + λ·b`
    Affine { a: DMatrix<T>, b: DMatrix<T> },
    /// `λ ↦ t·(a + λ·b)`
    RightAffine {
        t: DMatrix<T>,
        a: DMatrix<T>,
        b: DMatrix<T>,
    },
    /// `λ ↦ G(θ(λ))·base`, rotating in `span(u, v)` of the codomain,
    /// `θ(λ) = theta_start + λ(theta_end − theta_start)`
    Rotation {
        base: DMatrix<T>,
        u: DVector<T>,
        v: DVector<T>,
        theta_start: T,
        theta_end: T,
    },
    /// `λ ↦ base·G(θ(λ))`, rotating in `span(u, v)` of the domain
    RightRotation {
        base: DMatrix<T>,
        u: DVector<T>,
        v: DVector<T>,
        theta_start: T,
        theta_end: T,
    },
}

/// What a segment claims to preserve at every parameter value.
#[derive(Debug, Clone)]
pub enum SegmentInvariant<T: Real> {
    ConstantRank(usize),
    ConstantKernel(Subspace<T>),
    ConstantRange(Subspace<T>),
    /// The sampled range stays complementary to this subspace.
    ComplementedRange(Subspace<T>),
    /// The sampled kernel stays complementary to this subspace.
    ComplementedKernel(Subspace<T>),
    Invertible,
}

impl<T: Real> SegmentInvariant<T> {
    /// The invariant satisfied by the transposed family.
    ///
    /// Kernels and ranges trade places through orthogonal complements:
    /// `N(Xᵀ) = R(X)^⊥` and `R(Xᵀ) = N(X)^⊥`.
    fn transposed(&self) -> Self {
        match self {
            Self::ConstantRank(k) => Self::ConstantRank(*k),
            Self::ConstantKernel(n) => Self::ConstantRange(n.orthogonal_complement()),
            Self::ConstantRange(r) => Self::ConstantKernel(r.orthogonal_complement()),
            Self::ComplementedKernel(r) => Self::ComplementedRange(r.orthogonal_complement()),
            Self::ComplementedRange(n) => Self::ComplementedKernel(n.orthogonal_complement()),
            Self::Invertible => Self::Invertible,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::ConstantRank(_) => "constant_rank",
            Self::ConstantKernel(_) => "constant_kernel",
            Self::ConstantRange(_) => "constant_range",
            Self::ComplementedRange(_) => "complemented_range",
            Self::ComplementedKernel(_) => "complemented_kernel",
            Self::Invertible => "invertible",
        }
    }
}

/// One parametrized piece of an operator path.
#[derive(Debug, Clone)]
pub struct PathSegment<T: Real> {
    pub kind: SegmentKind<T>,
    pub invariants: Vec<SegmentInvariant<T>>,
    pub provenance: String,
}

impl<T: Real> PathSegment<T> {
    pub fn new(
        kind: SegmentKind<T>,
        invariants: Vec<SegmentInvariant<T>>,
        provenance: &str,
    ) -> Self {
        debug_assert!(!invariants.is_empty());
        Self {
            kind,
            invariants,
            provenance: provenance.to_string(),
        }
    }

    /// A segment that sits still at `m`.
    pub fn constant(m: DMatrix<T>, invariants: Vec<SegmentInvariant<T>>, provenance: &str) -> Self {
        let b = DMatrix::zeros(m.nrows(), m.ncols());
        Self::new(SegmentKind::Affine { a: m, b }, invariants, provenance)
    }

    pub fn dims(&self) -> (usize, usize) {
        match &self.kind {
            SegmentKind::Affine { a, .. } => a.shape(),
            SegmentKind::RightAffine { t, a, .. } => (t.nrows(), a.ncols()),
            SegmentKind::Rotation { base, .. } => base.shape(),
            SegmentKind::RightRotation { base, .. } => base.shape(),
        }
    }

    /// Evaluate at `lambda ∈ [0, 1]`.
    pub fn at(&self, lambda: T) -> DMatrix<T> {
        match &self.kind {
            SegmentKind::Affine { a, b } => a + b * lambda,
            SegmentKind::RightAffine { t, a, b } => t * (a + b * lambda),
            SegmentKind::Rotation {
                base,
                u,
                v,
                theta_start,
                theta_end,
            } => rotate_left(base, u, v, angle_at(*theta_start, *theta_end, lambda)),
            SegmentKind::RightRotation {
                base,
                u,
                v,
                theta_start,
                theta_end,
            } => rotate_right(base, u, v, angle_at(*theta_start, *theta_end, lambda)),
        }
    }

    pub fn start(&self) -> DMatrix<T> {
        self.at(T::zero())
    }

    pub fn end(&self) -> DMatrix<T> {
        self.at(T::one())
    }

    /// The same family walked backwards.
    pub fn reversed(&self) -> Self {
        let kind = match &self.kind {
            SegmentKind::Affine { a, b } => SegmentKind::Affine { a: a + b, b: -b },
            SegmentKind::RightAffine { t, a, b } => SegmentKind::RightAffine {
                t: t.clone(),
                a: a + b,
                b: -b,
            },
            SegmentKind::Rotation {
                base,
                u,
                v,
                theta_start,
                theta_end,
            } => SegmentKind::Rotation {
                base: base.clone(),
                u: u.clone(),
                v: v.clone(),
                theta_start: *theta_end,
                theta_end: *theta_start,
            },
            SegmentKind::RightRotation {
                base,
                u,
                v,
                theta_start,
                theta_end,
            } => SegmentKind::RightRotation {
                base: base.clone(),
                u: u.clone(),
                v: v.clone(),
                theta_start: *theta_end,
                theta_end: *theta_start,
            },
        };
        Self {
            kind,
            invariants: self.invariants.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// The transposed family `λ ↦ (segment(λ))ᵀ`, with invariants mapped
    /// through the kernel/range duality.
    pub fn transposed(&self) -> Self {
        let kind = match &self.kind {
            SegmentKind::Affine { a, b } => SegmentKind::Affine {
                a: a.transpose(),
                b: b.transpose(),
            },
            SegmentKind::RightAffine { t, a, b } => SegmentKind::Affine {
                a: (t * a).transpose(),
                b: (t * b).transpose(),
            },
            SegmentKind::Rotation {
                base,
                u,
                v,
                theta_start,
                theta_end,
            } => SegmentKind::RightRotation {
                base: base.transpose(),
                u: u.clone(),
                v: v.clone(),
                theta_start: -*theta_start,
                theta_end: -*theta_end,
            },
            SegmentKind::RightRotation {
                base,
                u,
                v,
                theta_start,
                theta_end,
            } => SegmentKind::Rotation {
                base: base.transpose(),
                u: u.clone(),
                v: v.clone(),
                theta_start: -*theta_start,
                theta_end: -*theta_end,
            },
        };
        Self {
            kind,
            invariants: self.invariants.iter().map(|i| i.transposed()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Compose with a constant right factor: `λ ↦ segment(λ)·m`.
    ///
    /// Only meaningful for segments without subspace invariants (the factor
    /// moves kernels around); restricted to the left families.
    pub(crate) fn right_composed(&self, m: &DMatrix<T>) -> Self {
        debug_assert!(self.invariants.iter().all(|i| matches!(
            i,
            SegmentInvariant::ConstantRank(_) | SegmentInvariant::Invertible
        )));
        let kind = match &self.kind {
            SegmentKind::Affine { a, b } => SegmentKind::Affine { a: a * m, b: b * m },
            SegmentKind::Rotation {
                base,
                u,
                v,
                theta_start,
                theta_end,
            } => SegmentKind::Rotation {
                base: base * m,
                u: u.clone(),
                v: v.clone(),
                theta_start: *theta_start,
                theta_end: *theta_end,
            },
            _ => unreachable!("right composition is only used on left-family segments"),
        };
        Self {
            kind,
            invariants: self.invariants.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

/// An ordered concatenation of segments with matching joints, reparametrized
/// uniformly: `t ∈ [0, 1]` spends equal time in each segment.
#[derive(Debug, Clone)]
pub struct OperatorPath<T: Real> {
    segments: Vec<PathSegment<T>>,
    rows: usize,
    cols: usize,
}

impl<T: Real> OperatorPath<T> {
    /// Validate and wrap a segment list: consistent shapes, finite endpoint
    /// values, nonempty invariant declarations, and joints matching to
    /// [`thresholds::ENDPOINT_RTOL`] (relative Frobenius).
    pub fn try_new(segments: Vec<PathSegment<T>>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::ShapeMismatch("a path needs at least one segment".into()))?;
        let (rows, cols) = first.dims();
        for (i, seg) in segments.iter().enumerate() {
            if seg.dims() != (rows, cols) {
                return Err(Error::ShapeMismatch(format!(
                    "segment {} is {:?}, expected {:?}",
                    i,
                    seg.dims(),
                    (rows, cols)
                )));
            }
            if seg.invariants.is_empty() {
                return Err(Error::ShapeMismatch(format!(
                    "segment {i} declares no invariants"
                )));
            }
            for m in [seg.start(), seg.end()] {
                if !m.iter().all(|x| x.is_finite()) {
                    return Err(Error::NonFinite);
                }
            }
        }
        for i in 0..segments.len() - 1 {
            let end = segments[i].end();
            let start = segments[i + 1].start();
            let gap = (&end - &start).norm();
            let bound = real::<T>(thresholds::ENDPOINT_RTOL) * (T::one() + end.norm());
            if gap > bound {
                return Err(Error::NumericalDegeneracy(format!(
                    "segments {} and {} do not join: gap {:.3e}",
                    i,
                    i + 1,
                    to_f64(gap)
                )));
            }
        }
        Ok(Self {
            segments,
            rows,
            cols,
        })
    }

    pub fn segments(&self) -> &[PathSegment<T>] {
        &self.segments
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Value at global parameter `t ∈ [0, 1]`: segment `⌊t·len⌋` evaluated at
    /// the local remainder, so `t = 0` and `t = 1` are the exact endpoints.
    pub fn evaluate(&self, t: T) -> Result<DMatrix<T>> {
        if !(t >= T::zero() && t <= T::one()) {
            return Err(Error::OutOfDomain(to_f64(t)));
        }
        let k = self.segments.len();
        let scaled = t * real::<T>(k as f64);
        let idx = (to_f64(scaled).floor() as usize).min(k - 1);
        let lambda = scaled - real::<T>(idx as f64);
        Ok(self.segments[idx].at(lambda))
    }

    pub fn start(&self) -> DMatrix<T> {
        self.segments[0].start()
    }

    pub fn end(&self) -> DMatrix<T> {
        self.segments[self.segments.len() - 1].end()
    }

    pub fn reversed(&self) -> Self {
        Self {
            segments: self.segments.iter().rev().map(|s| s.reversed()).collect(),
            rows: self.rows,
            cols: self.cols,
        }
    }

    pub fn transposed(&self) -> Self {
        Self {
            segments: self.segments.iter().map(|s| s.transposed()).collect(),
            rows: self.cols,
            cols: self.rows,
        }
    }

    pub(crate) fn into_segments(self) -> Vec<PathSegment<T>> {
        self.segments
    }
}

fn angle_at<T: Real>(start: T, end: T, lambda: T) -> T {
    start + lambda * (end - start)
}

/// `cos`/`sin` with half-turn angles evaluated exactly, so rotation segments
/// land on their stored endpoints instead of picking up `sin(π) ≈ 1.2e-16`.
fn sincos<T: Real>(theta: T) -> (T, T) {
    if theta == T::zero() {
        (T::one(), T::zero())
    } else if theta == T::pi() || theta == -T::pi() {
        (-T::one(), T::zero())
    } else {
        (theta.cos(), theta.sin())
    }
}

/// `G(θ)·base` where `G` rotates `u` toward `v` and fixes `span(u, v)^⊥`,
/// applied as a rank-2 update.
pub(crate) fn rotate_left<T: Real>(
    base: &DMatrix<T>,
    u: &DVector<T>,
    v: &DVector<T>,
    theta: T,
) -> DMatrix<T> {
    let (c, s) = sincos(theta);
    let a = u.transpose() * base;
    let b = v.transpose() * base;
    let mut out = base.clone();
    out += u * (a.scale(c - T::one()) - b.scale(s));
    out += v * (b.scale(c - T::one()) + a.scale(s));
    out
}

/// `base·G(θ)`, the domain-side mirror of [`rotate_left`].
pub(crate) fn rotate_right<T: Real>(
    base: &DMatrix<T>,
    u: &DVector<T>,
    v: &DVector<T>,
    theta: T,
) -> DMatrix<T> {
    let (c, s) = sincos(theta);
    let p = base * u;
    let q = base * v;
    let mut out = base.clone();
    out += (p.scale(c - T::one()) + q.scale(s)) * u.transpose();
    out += (q.scale(c - T::one()) - p.scale(s)) * v.transpose();
    out
}

/// Segment realigning the range of `t0` onto `fstar` while its kernel stays
/// put: `λ ↦ (P + λ·α∘P)·t0` runs from `P(range fstar, ker n)·t0` at `λ = 0`
/// to `t0` itself at `λ = 1`, where `α` is the graph operator realizing
/// `range(t0)` over `fstar` across `n`.
///
/// Requires the codomain to split both as `range(t0) ⊕ n` and `fstar ⊕ n`.
pub fn seg_range_align<T: Real>(
    t0: &DMatrix<T>,
    fstar: &Subspace<T>,
    n: &Subspace<T>,
    tol: T,
) -> Result<PathSegment<T>> {
    let rows = t0.nrows();
    if fstar.ambient_dim() != rows || n.ambient_dim() != rows {
        return Err(Error::ShapeMismatch(format!(
            "codomain subspaces live in R^{}/R^{}, operator codomain is R^{}",
            fstar.ambient_dim(),
            n.ambient_dim(),
            rows
        )));
    }
    let range = linalg::column_space(t0, tol);
    let alpha = graph_operator(&range, fstar, n)?;
    let p = oblique_projector(fstar, n)?;
    let a0 = p.matrix() * t0;
    let b = alpha.embedded() * &a0;
    let kernel = linalg::null_space(t0, tol);
    Ok(PathSegment::new(
        SegmentKind::Affine { a: a0, b },
        vec![
            SegmentInvariant::ConstantRank(range.dim()),
            SegmentInvariant::ConstantKernel(kernel),
            SegmentInvariant::ComplementedRange(n.clone()),
        ],
        "range-align",
    ))
}

/// Segment realigning the kernel of `t0` onto `estar` while its range stays
/// put: `λ ↦ t0·(P − λ·α∘P')` runs from `t0·P(range r0, ker estar)` at
/// `λ = 0` to `t0` at `λ = 1`.
///
/// Requires the domain to split both as `null(t0) ⊕ r0` and `estar ⊕ r0`.
pub fn seg_kernel_align<T: Real>(
    t0: &DMatrix<T>,
    r0: &Subspace<T>,
    estar: &Subspace<T>,
    tol: T,
) -> Result<PathSegment<T>> {
    let cols = t0.ncols();
    if r0.ambient_dim() != cols || estar.ambient_dim() != cols {
        return Err(Error::ShapeMismatch(format!(
            "domain subspaces live in R^{}/R^{}, operator domain is R^{}",
            r0.ambient_dim(),
            estar.ambient_dim(),
            cols
        )));
    }
    let kernel = linalg::null_space(t0, tol);
    let alpha = graph_operator(&kernel, estar, r0)?;
    let p_r0 = oblique_projector(r0, estar)?;
    let p_estar = oblique_projector(estar, r0)?;
    let a = p_r0.matrix().clone();
    let b = -(alpha.embedded() * p_estar.matrix());
    let range = linalg::column_space(t0, tol);
    Ok(PathSegment::new(
        SegmentKind::RightAffine {
            t: t0.clone(),
            a,
            b,
        },
        vec![
            SegmentInvariant::ConstantRank(range.dim()),
            SegmentInvariant::ConstantRange(range),
            SegmentInvariant::ComplementedKernel(r0.clone()),
        ],
        "kernel-align",
    ))
}

/// Which representative an invertible-factor path terminates at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlEndpoint {
    /// The identity (positive determinant).
    Identity,
    /// `diag(−1, 1, …, 1)` (negative determinant).
    Reflection,
}

/// A path inside the invertible matrices from `q` to the identity when
/// `det q > 0`, or to `diag(−1, 1, …, 1)` when `det q < 0`.
///
/// Construction: split `q = w·s` (polar), walk the stretch factor out along
/// the chord `q → w` (convex combinations of positive-definite stretches stay
/// invertible), then shrink the plane-rotation angles of a Givens
/// factorization of `w` one at a time, left to right. The terminal segment
/// lands exactly on the stored representative.
pub fn gl_connect<T: Real>(q: &DMatrix<T>, tol: T) -> Result<(OperatorPath<T>, GlEndpoint)> {
    let n = q.nrows();
    if q.ncols() != n || n == 0 {
        return Err(Error::ShapeMismatch(format!(
            "gl_connect needs a nonempty square matrix, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    let svd = linalg::thin_svd(q);
    let s = &svd.sigma;
    if s[0] <= T::zero() || s[n - 1] <= tol * s[0] {
        return Err(Error::NumericallySingular {
            ratio: to_f64(if s[0] > T::zero() {
                s[n - 1] / s[0]
            } else {
                T::zero()
            }),
            tol: to_f64(tol),
        });
    }
    let w = &svd.u * svd.v.transpose();

    let reflecting = w.determinant() < T::zero();
    let mut target = DMatrix::identity(n, n);
    if reflecting {
        target[(0, 0)] = -T::one();
    }
    let tag = if reflecting {
        GlEndpoint::Reflection
    } else {
        GlEndpoint::Identity
    };

    // Givens-reduce w (right-multiplied by the reflection when det < 0, so
    // the residue is always the identity), recording plane angles.
    let mut m = w.clone();
    if reflecting {
        for i in 0..n {
            m[(i, 0)] = -m[(i, 0)];
        }
    }
    let mut rotations: Vec<(usize, usize, T)> = Vec::new();
    for j in 0..n.saturating_sub(1) {
        for i in j + 1..n {
            let theta = m[(i, j)].atan2(m[(j, j)]);
            if theta != T::zero() {
                let (ej, ei) = (coordinate(n, j), coordinate(n, i));
                m = rotate_left(&m, &ej, &ei, -theta);
                rotations.push((j, i, theta));
            }
        }
    }

    // Rebuild the rotation chain backwards from the exact representative so
    // every shrink segment ends on its stored base.
    let mut segments: Vec<PathSegment<T>> = Vec::new();
    let mut cur = target.clone();
    for &(j, i, theta) in rotations.iter().rev() {
        let (ej, ei) = (coordinate(n, j), coordinate(n, i));
        segments.push(PathSegment::new(
            SegmentKind::Rotation {
                base: cur.clone(),
                u: ej.clone(),
                v: ei.clone(),
                theta_start: theta,
                theta_end: T::zero(),
            },
            vec![SegmentInvariant::Invertible],
            "rotation-shrink",
        ));
        cur = rotate_left(&cur, &ej, &ei, theta);
    }
    segments.reverse();

    let stretch_gap = (&cur - q).norm();
    let negligible = real::<T>(1e-12) * (T::one() + q.norm());
    if stretch_gap > negligible {
        segments.insert(
            0,
            PathSegment::new(
                SegmentKind::Affine {
                    a: q.clone(),
                    b: &cur - q,
                },
                vec![SegmentInvariant::Invertible],
                "polar-stretch",
            ),
        );
    }
    if segments.is_empty() || rotations.is_empty() && stretch_gap > negligible {
        // pin the terminal value to the exact representative
        segments.push(PathSegment::constant(
            target,
            vec![SegmentInvariant::Invertible],
            "constant",
        ));
    }
    Ok((OperatorPath::try_new(segments)?, tag))
}

fn coordinate<T: Real>(n: usize, i: usize) -> DVector<T> {
    let mut v = DVector::zeros(n);
    v[i] = T::one();
    v
}

/// Default spare direction for a sign flip: the first orthonormal basis
/// vector of `range(t)^⊥`, if the range leaves room.
pub fn spare_direction<T: Real>(t: &DMatrix<T>, tol: T) -> Option<DVector<T>> {
    linalg::column_space(t, tol)
        .orthogonal_complement()
        .first_direction()
}

/// Rotation segment from `D_e·t` to `t`, where `D_e` reflects the range
/// direction `e` and the rotation turns in `span(e, f)` with `f ⊥ range(t)`.
///
/// Every point `G(πλ)·D_e·t` has the rank of `t` because `G` is invertible;
/// the kernel never moves. This is the constant-rank way to undo a single
/// reflected direction, and it only needs the range to miss one direction of
/// the codomain.
pub fn seg_sign_flip<T: Real>(
    t: &DMatrix<T>,
    flip_dir: &DVector<T>,
    spare_dir: &DVector<T>,
    tol: T,
) -> Result<PathSegment<T>> {
    let rows = t.nrows();
    if flip_dir.len() != rows || spare_dir.len() != rows {
        return Err(Error::ShapeMismatch(format!(
            "directions live in R^{}/R^{}, codomain is R^{}",
            flip_dir.len(),
            spare_dir.len(),
            rows
        )));
    }
    let range = linalg::column_space(t, tol);
    if range.dim() == rows {
        return Err(Error::NoSpareDirection);
    }
    let norm = flip_dir.norm();
    if norm <= T::zero() {
        return Err(Error::NotInRange(1.0));
    }
    let e = flip_dir.unscale(norm);
    let res = range.residual(&e);
    if res > real(thresholds::COMPLEMENT_SIGMA) {
        return Err(Error::NotInRange(to_f64(res)));
    }
    // the spare direction is orthogonalized against the range (and hence e)
    let mut f = spare_dir - range.project(spare_dir);
    let fnorm = f.norm();
    if fnorm <= real::<T>(1e-12) * spare_dir.norm() {
        return Err(Error::NoSpareDirection);
    }
    f = f.unscale(fnorm);

    let reflected = t - (&e * (e.transpose() * t)).scale(real(2.0));
    let kernel = linalg::null_space(t, tol);
    Ok(PathSegment::new(
        SegmentKind::Rotation {
            base: reflected,
            u: e,
            v: f,
            theta_start: T::zero(),
            theta_end: T::pi(),
        },
        vec![
            SegmentInvariant::ConstantRank(range.dim()),
            SegmentInvariant::ConstantKernel(kernel),
        ],
        "sign-flip",
    ))
}

/// Domain-side sign flip: from `t·D_v` to `t`, rotating in a plane spanned by
/// a row-space direction `v` and a kernel direction `g`. The mirror image of
/// [`seg_sign_flip`] under transposition; the range never moves.
pub fn seg_sign_flip_domain<T: Real>(
    t: &DMatrix<T>,
    flip_dir: &DVector<T>,
    spare_dir: &DVector<T>,
    tol: T,
) -> Result<PathSegment<T>> {
    let seg = seg_sign_flip(&t.transpose(), flip_dir, spare_dir, tol)?;
    let mut out = seg.transposed();
    out.provenance = "sign-flip-domain".to_string();
    Ok(out)
}

/// The affine pencil `λ ↦ (1 − 2λ)·P + (1 − λ)·α∘P` from `P + α∘P` down to
/// `−P`, where `P` projects onto `estar` along `r`.
///
/// Kept as a regression fixture: the pencil's range collapses into `r` at the
/// midpoint, so certifying the declared complemented-range claim must fail
/// near `λ = 1/2`. Use [`seg_sign_flip`] for a sign reversal that actually
/// stays inside its stratum.
pub fn seg_reversal_pencil<T: Real>(
    estar: &Subspace<T>,
    r: &Subspace<T>,
    alpha: &GraphOperator<T>,
) -> Result<PathSegment<T>> {
    if alpha.domain().dim() != estar.dim() || alpha.codomain().dim() != r.dim() {
        return Err(Error::ShapeMismatch(format!(
            "graph operator is {}d -> {}d, projector splits {} + {}",
            alpha.domain().dim(),
            alpha.codomain().dim(),
            estar.dim(),
            r.dim()
        )));
    }
    if alpha.norm() <= T::zero() {
        return Err(Error::OutOfRange(
            "the reversal pencil needs a nonzero graph operator".into(),
        ));
    }
    let p = oblique_projector(estar, r)?;
    let ap = alpha.embedded() * p.matrix();
    let a0 = p.matrix() + &ap;
    let b = -(p.matrix().scale(real(2.0)) + ap);
    Ok(PathSegment::new(
        SegmentKind::Affine { a: a0, b },
        vec![SegmentInvariant::ComplementedRange(r.clone())],
        "reversal-pencil",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::DEFAULT_TOL;

    fn m64(r: usize, c: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, data)
    }

    fn rank_invariant(seg: &PathSegment<f64>) -> usize {
        seg.invariants
            .iter()
            .find_map(|i| match i {
                SegmentInvariant::ConstantRank(k) => Some(*k),
                _ => None,
            })
            .expect("rank declared")
    }

    #[test]
    fn evaluate_reparametrizes_uniformly() {
        let a = m64(1, 1, &[0.0]);
        let seg1 = PathSegment::new(
            SegmentKind::Affine {
                a: a.clone(),
                b: m64(1, 1, &[1.0]),
            },
            vec![SegmentInvariant::ConstantRank(0)],
            "test",
        );
        let seg2 = PathSegment::new(
            SegmentKind::Affine {
                a: m64(1, 1, &[1.0]),
                b: m64(1, 1, &[2.0]),
            },
            vec![SegmentInvariant::ConstantRank(0)],
            "test",
        );
        let path = OperatorPath::try_new(vec![seg1.clone(), seg2]).unwrap();
        assert_eq!(path.evaluate(0.0).unwrap()[(0, 0)], 0.0);
        assert_eq!(path.evaluate(1.0).unwrap()[(0, 0)], 3.0);
        // the midpoint is the end of the first segment
        assert!((path.evaluate(0.5).unwrap()[(0, 0)] - seg1.end()[(0, 0)]).abs() <= 1e-12);
        assert!(matches!(path.evaluate(1.5), Err(Error::OutOfDomain(_))));

        let single = OperatorPath::try_new(vec![seg1]).unwrap();
        assert_eq!(single.evaluate(0.0).unwrap()[(0, 0)], 0.0);
        assert_eq!(single.evaluate(1.0).unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn range_align_endpoints_and_kernel() {
        let t0 = m64(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let fstar = Subspace::coordinate(2, 0);
        let n = Subspace::coordinate(2, 1);
        let seg = seg_range_align(&t0, &fstar, &n, DEFAULT_TOL).unwrap();

        assert!((seg.start() - m64(2, 2, &[1.0, 0.0, 0.0, 0.0])).norm() < 1e-12);
        assert!((seg.end() - &t0).norm() < 1e-12);

        let kernel = linalg::null_space(&t0, DEFAULT_TOL);
        for i in 0..=100 {
            let sample = seg.at(i as f64 / 100.0);
            let k = linalg::null_space(&sample, DEFAULT_TOL);
            assert!(crate::subspace::max_principal_angle(&k, &kernel) < 1e-7);
        }
    }

    #[test]
    fn range_align_constant_when_aligned() {
        let t0 = m64(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let fstar = Subspace::coordinate(2, 0);
        let n = Subspace::coordinate(2, 1);
        let seg = seg_range_align(&t0, &fstar, &n, DEFAULT_TOL).unwrap();
        assert!((seg.start() - seg.end()).norm() < 1e-12);
    }

    #[test]
    fn kernel_align_endpoints_and_range() {
        let t0 = m64(1, 2, &[1.0, 1.0]);
        let r0 = Subspace::coordinate(2, 0);
        let estar = Subspace::coordinate(2, 1);
        let seg = seg_kernel_align(&t0, &r0, &estar, DEFAULT_TOL).unwrap();

        assert!((seg.start() - m64(1, 2, &[1.0, 0.0])).norm() < 1e-12);
        assert!((seg.end() - &t0).norm() < 1e-12);

        let range = linalg::column_space(&t0, DEFAULT_TOL);
        for i in 0..=100 {
            let sample = seg.at(i as f64 / 100.0);
            let r = linalg::column_space(&sample, DEFAULT_TOL);
            assert!(crate::subspace::max_principal_angle(&r, &range) < 1e-7);
        }
    }

    #[test]
    fn gl_connect_identity_is_constant() {
        let (path, tag) = gl_connect(&DMatrix::<f64>::identity(2, 2), DEFAULT_TOL).unwrap();
        assert_eq!(tag, GlEndpoint::Identity);
        let end = path.end();
        assert_eq!(end, DMatrix::identity(2, 2));
        assert!((path.start() - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn gl_connect_quarter_turn_is_one_rotation() {
        let q = m64(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let (path, tag) = gl_connect(&q, DEFAULT_TOL).unwrap();
        assert_eq!(tag, GlEndpoint::Identity);
        assert_eq!(path.segments().len(), 1);
        assert!((path.start() - &q).norm() < 1e-12);
        assert_eq!(path.end(), DMatrix::identity(2, 2));
        for i in 0..=100 {
            let sample = path.evaluate(i as f64 / 100.0).unwrap();
            assert!((sample.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gl_connect_reflection_detected() {
        let q = m64(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        let (path, tag) = gl_connect(&q, DEFAULT_TOL).unwrap();
        assert_eq!(tag, GlEndpoint::Reflection);
        assert_eq!(path.end(), q);
        assert!((path.start() - &q).norm() < 1e-12);
    }

    #[test]
    fn gl_connect_lands_exactly_on_representative() {
        let q = m64(3, 3, &[0.2, -1.3, 0.4, 0.9, 0.11, -0.5, 0.3, 0.6, 1.7]);
        let (path, tag) = gl_connect(&q, DEFAULT_TOL).unwrap();
        let mut target = DMatrix::<f64>::identity(3, 3);
        if tag == GlEndpoint::Reflection {
            target[(0, 0)] = -1.0;
        }
        assert_eq!(path.end(), target);
        assert!((path.start() - &q).norm() <= 1e-9 * (1.0 + q.norm()));
        // invertible all the way down, determinant sign fixed
        let sign0 = q.determinant().signum();
        for i in 0..=200 {
            let sample = path.evaluate(i as f64 / 200.0).unwrap();
            let s = linalg::singular_values(&sample);
            assert!(s[2] > 1e-6 * s[0]);
            assert_eq!(sample.determinant().signum(), sign0);
        }
    }

    #[test]
    fn sign_flip_rotates_reflection_away() {
        let t = m64(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let e = nalgebra::dvector![1.0, 0.0];
        let f = nalgebra::dvector![0.0, 1.0];
        let seg = seg_sign_flip(&t, &e, &f, DEFAULT_TOL).unwrap();

        // theta = 0 endpoint is exactly the reflected operator
        assert_eq!(seg.start(), m64(2, 2, &[-1.0, 0.0, 0.0, 0.0]));
        assert!((seg.end() - &t).norm() <= 1e-14);
        for i in 0..=100 {
            let sample = seg.at(i as f64 / 100.0);
            assert_eq!(linalg::numerical_rank(&sample, DEFAULT_TOL).rank, 1);
        }
        assert_eq!(rank_invariant(&seg), 1);
    }

    #[test]
    fn sign_flip_needs_room_and_membership() {
        let full = DMatrix::<f64>::identity(2, 2);
        let e = nalgebra::dvector![1.0, 0.0];
        assert!(matches!(
            seg_sign_flip(&full, &e, &e, DEFAULT_TOL),
            Err(Error::NoSpareDirection)
        ));

        let t = m64(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let outside = nalgebra::dvector![0.0, 1.0];
        assert!(matches!(
            seg_sign_flip(&t, &outside, &outside, DEFAULT_TOL),
            Err(Error::NotInRange(_))
        ));
    }

    #[test]
    fn domain_flip_matches_transpose_oracle() {
        let t = m64(2, 3, &[1.0, 0.5, 0.0, 0.0, 2.0, 0.0]);
        // row space direction and kernel direction of t
        let v = nalgebra::dvector![1.0, 0.0, 0.0];
        let g = nalgebra::dvector![0.0, 0.0, 1.0];
        let seg = seg_sign_flip_domain(&t, &v, &g, DEFAULT_TOL).unwrap();
        let mirror = seg_sign_flip(&t.transpose(), &v, &g, DEFAULT_TOL).unwrap();
        for i in 0..=50 {
            let lambda = i as f64 / 50.0;
            let diff = (seg.at(lambda) - mirror.at(lambda).transpose()).norm();
            assert!(diff == 0.0, "transpose symmetry broke at {lambda}: {diff}");
        }
        // range is preserved throughout
        let range = linalg::column_space(&t, DEFAULT_TOL);
        for i in 0..=100 {
            let r = linalg::column_space(&seg.at(i as f64 / 100.0), DEFAULT_TOL);
            assert!(crate::subspace::max_principal_angle(&r, &range) < 1e-7);
        }
    }

    #[test]
    fn reversal_pencil_degenerates_midway() {
        let estar = Subspace::coordinate(2, 0);
        let r = Subspace::coordinate(2, 1);
        let alpha =
            GraphOperator::from_coeffs(estar.clone(), r.clone(), DMatrix::from_element(1, 1, 1.0))
                .unwrap();
        let seg = seg_reversal_pencil(&estar, &r, &alpha).unwrap();

        // endpoints of the pencil
        assert!((seg.start() - m64(2, 2, &[1.0, 0.0, 1.0, 0.0])).norm() < 1e-12);
        assert!((seg.end() - m64(2, 2, &[-1.0, 0.0, 0.0, 0.0])).norm() < 1e-12);

        // the midpoint's range falls into r: the complemented-range claim dies
        let mid = seg.at(0.5);
        assert!((mid - m64(2, 2, &[0.0, 0.0, 0.5, 0.0])).norm() < 1e-12);
        let mid_range = linalg::column_space(&seg.at(0.5), DEFAULT_TOL);
        assert_eq!(mid_range.dim(), 1);
        assert!(linalg::stacked_sigma_min(&mid_range, &r) < 1e-8);
    }

    #[test]
    fn reversed_and_transposed_are_pointwise() {
        let t0 = m64(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let fstar = Subspace::coordinate(2, 0);
        let n = Subspace::coordinate(2, 1);
        let seg = seg_range_align(&t0, &fstar, &n, DEFAULT_TOL).unwrap();
        let rev = seg.reversed();
        let tr = seg.transposed();
        for i in 0..=20 {
            let lambda = i as f64 / 20.0;
            assert!((rev.at(lambda) - seg.at(1.0 - lambda)).norm() < 1e-12);
            assert!((tr.at(lambda) - seg.at(lambda).transpose()).norm() < 1e-12);
        }
    }
}
