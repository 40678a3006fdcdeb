//! Explicit paths between two operators inside a stratum: fixed rank,
//! Fredholm (fixed kernel and cokernel dimensions), and equivalence classes
//! walked along chains of kernel/range hops.
//!
//! Each connector composes the same four moves: realign kernels across a
//! common complement, realign ranges across a common complement, deform the
//! remaining invertible factor to a canonical representative, and, when that
//! representative is a reflection, rotate the reflected direction away
//! through a spare direction outside the range.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, numerical_rank};
use crate::path::{
    gl_connect, seg_kernel_align, seg_range_align, seg_sign_flip, GlEndpoint, OperatorPath,
    PathSegment, SegmentInvariant, SegmentKind,
};
use crate::scalar::{real, Real};
use crate::subspace::{common_complement, oblique_projector, Decomposition, Subspace};

/// Which stratum a path is supposed to stay inside.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StratumVariant {
    /// Operators of rank exactly `k`.
    Rank(usize),
    /// Operators with the given kernel and cokernel dimensions.
    Fredholm {
        kernel_dim: usize,
        cokernel_dim: usize,
    },
}

/// A stratum variant pinned to concrete domain/codomain dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StratumSpec {
    pub variant: StratumVariant,
    pub domain_dim: usize,
    pub codomain_dim: usize,
}

impl StratumSpec {
    pub fn rank(domain_dim: usize, codomain_dim: usize, k: usize) -> Result<Self> {
        if k > domain_dim.min(codomain_dim) {
            return Err(Error::OutOfRange(format!(
                "rank {k} exceeds min({domain_dim}, {codomain_dim})"
            )));
        }
        Ok(Self {
            variant: StratumVariant::Rank(k),
            domain_dim,
            codomain_dim,
        })
    }

    pub fn fredholm(
        domain_dim: usize,
        codomain_dim: usize,
        kernel_dim: usize,
        cokernel_dim: usize,
    ) -> Result<Self> {
        if kernel_dim > domain_dim || cokernel_dim > codomain_dim {
            return Err(Error::OutOfRange(format!(
                "kernel/cokernel dims {kernel_dim}/{cokernel_dim} exceed {domain_dim}/{codomain_dim}"
            )));
        }
        if domain_dim - kernel_dim != codomain_dim - cokernel_dim {
            return Err(Error::FredholmDataMismatch(format!(
                "index inconsistency: {domain_dim} - {kernel_dim} != {codomain_dim} - {cokernel_dim}"
            )));
        }
        Ok(Self {
            variant: StratumVariant::Fredholm {
                kernel_dim,
                cokernel_dim,
            },
            domain_dim,
            codomain_dim,
        })
    }

    /// The rank every sample on a certified path must have.
    pub fn expected_rank(&self) -> usize {
        match self.variant {
            StratumVariant::Rank(k) => k,
            StratumVariant::Fredholm { kernel_dim, .. } => self.domain_dim - kernel_dim,
        }
    }
}

/// Path from `t1` to `t2` through operators of the same rank `k`.
///
/// Requires room to move: if the operators are square and invertible the
/// stratum splits into two components by determinant sign, and opposite
/// signs are rejected as disconnected.
pub fn connect_rank_stratum<T: Real>(
    t1: &DMatrix<T>,
    t2: &DMatrix<T>,
    tol: T,
) -> Result<OperatorPath<T>> {
    if t1.shape() != t2.shape() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            t1.shape(),
            t2.shape()
        )));
    }
    let (rows, cols) = t1.shape();
    let d1 = numerical_rank(t1, tol);
    let d2 = numerical_rank(t2, tol);
    if d1.rank != d2.rank {
        return Err(Error::RankMismatch(d1.rank, d2.rank));
    }
    let k = d1.rank;

    if nearly_equal(t1, t2) {
        return constant_path(t1, t2, vec![SegmentInvariant::ConstantRank(k)]);
    }
    if k == 0 {
        // the zero stratum is a single point; inputs differ only by noise
        return constant_path(t1, t2, vec![SegmentInvariant::ConstantRank(0)]);
    }
    if k == rows && k == cols {
        return connect_invertible(t1, t2, k, tol);
    }
    if k == rows {
        // full range: the spare direction for the sign flip lives on the
        // kernel side, so run the construction on the transposed pair
        let path = connect_rank_pipeline(&t1.transpose(), &t2.transpose(), k, tol)?;
        return Ok(path.transposed());
    }
    connect_rank_pipeline(t1, t2, k, tol)
}

/// The generic pipeline; callers guarantee `1 <= k < rows`.
fn connect_rank_pipeline<T: Real>(
    t1: &DMatrix<T>,
    t2: &DMatrix<T>,
    k: usize,
    tol: T,
) -> Result<OperatorPath<T>> {
    // common complement of row spaces; aligns both kernels onto it
    let r1 = linalg::row_space(t1, tol);
    let r2 = linalg::row_space(t2, tol);
    let n0 = common_complement(&r1, &r2)?;
    let ka1 = seg_kernel_align(t1, &r1, &n0, tol)?;
    let ka2 = seg_kernel_align(t2, &r2, &n0, tol)?;
    let l1 = ka1.start();
    let l2 = ka2.start();

    // common complement of the ranges; aligns l2's range onto range(t1)
    let rng1 = linalg::column_space(t1, tol);
    let rng2 = linalg::column_space(t2, tol);
    let n_star = common_complement(&rng1, &rng2)?;
    let ra = seg_range_align(&l2, &rng1, &n_star, tol)?;

    // what remains connects two operators with equal kernel and range:
    // an invertible factor on range(t1)
    let l1_plus = linalg::restricted_inverse(&l1, &r1, &n_star, tol)?;
    let p_range = oblique_projector(&rng1, &n_star)?;
    let q_full = p_range.matrix() * &l2 * &l1_plus;
    let (middle, flip) = invertible_middle(&q_full, &l1, &rng1, k, tol)?;

    let mut segments = vec![ka1.reversed()];
    if let Some(flip_seg) = flip {
        segments.push(flip_seg.reversed());
    }
    segments.extend(middle);
    segments.push(ra);
    segments.push(ka2);
    OperatorPath::try_new(segments)
}

/// The lifted middle segments plus, when the canonical representative is
/// the reflection, the sign-flip segment the caller prepends in reversed
/// form.
type MiddlePieces<T> = (Vec<PathSegment<T>>, Option<PathSegment<T>>);

/// Segments from `base` (or its first-direction reflection) to
/// `q_full·base`, running the invertible factor `q_full|_range` backwards
/// through its canonical representative.
fn invertible_middle<T: Real>(
    q_full: &DMatrix<T>,
    base: &DMatrix<T>,
    range: &Subspace<T>,
    k: usize,
    tol: T,
) -> Result<MiddlePieces<T>> {
    let b = range.basis();
    let q_k = b.transpose() * q_full * b;
    let (gl, tag) = gl_connect(&q_k, tol)?;

    let kernel = linalg::null_space(base, tol);
    let invariants = vec![
        SegmentInvariant::ConstantRank(k),
        SegmentInvariant::ConstantKernel(kernel),
        SegmentInvariant::ConstantRange(range.clone()),
    ];
    let bt_base = b.transpose() * base;
    let lifted: Vec<PathSegment<T>> = gl
        .segments()
        .iter()
        .rev()
        .map(|seg| lift_segment(&seg.reversed(), b, &bt_base, &invariants))
        .collect();

    let flip = match tag {
        GlEndpoint::Identity => None,
        GlEndpoint::Reflection => {
            let e = range.first_direction().expect("k >= 1");
            let f = range
                .orthogonal_complement()
                .first_direction()
                .ok_or(Error::NoSpareDirection)?;
            Some(seg_sign_flip(base, &e, &f, tol)?)
        }
    };
    Ok((lifted, flip))
}

/// Conjugate a coordinate segment on `R^k` into the ambient codomain:
/// `γ(λ) ↦ B·γ(λ)·(Bᵀ·base)`.
fn lift_segment<T: Real>(
    seg: &PathSegment<T>,
    b: &DMatrix<T>,
    bt_base: &DMatrix<T>,
    invariants: &[SegmentInvariant<T>],
) -> PathSegment<T> {
    let kind = match &seg.kind {
        SegmentKind::Affine { a, b: bb } => SegmentKind::Affine {
            a: b * a * bt_base,
            b: b * bb * bt_base,
        },
        SegmentKind::Rotation {
            base,
            u,
            v,
            theta_start,
            theta_end,
        } => SegmentKind::Rotation {
            base: b * base * bt_base,
            u: b * u,
            v: b * v,
            theta_start: *theta_start,
            theta_end: *theta_end,
        },
        _ => unreachable!("gl_connect emits only affine and rotation segments"),
    };
    PathSegment::new(kind, invariants.to_vec(), &seg.provenance)
}

/// The square full-rank corner: both components of the invertibles are path
/// connected, but not to each other.
fn connect_invertible<T: Real>(
    t1: &DMatrix<T>,
    t2: &DMatrix<T>,
    k: usize,
    tol: T,
) -> Result<OperatorPath<T>> {
    let (s1, s2) = (t1.determinant(), t2.determinant());
    if s1 * s2 < T::zero() {
        return Err(Error::StratumDisconnected(
            "determinant signs differ between the two invertible operators".into(),
        ));
    }
    // q·t1 = t2, walked from the identity out to q and composed with t1
    let q = linalg::solve(&t1.transpose(), &t2.transpose(), tol)?.transpose();
    let (gl, tag) = gl_connect(&q, tol)?;
    debug_assert_eq!(tag, GlEndpoint::Identity);
    let mut segments: Vec<PathSegment<T>> = gl
        .reversed()
        .into_segments()
        .iter()
        .map(|seg| {
            let mut s = seg.right_composed(t1);
            s.invariants.push(SegmentInvariant::ConstantRank(k));
            s
        })
        .collect();
    // pin the far endpoint onto t2 itself
    let reached = segments.last().expect("gl paths are nonempty").end();
    if reached != *t2 {
        let gap = t2 - &reached;
        segments.push(PathSegment::new(
            SegmentKind::Affine { a: reached, b: gap },
            vec![
                SegmentInvariant::Invertible,
                SegmentInvariant::ConstantRank(k),
            ],
            "endpoint-correction",
        ));
    }
    OperatorPath::try_new(segments)
}

/// Path from `t1` to `t2` keeping kernel dimension and cokernel dimension
/// fixed at the spec's values. The positive cokernel dimension guarantees
/// the spare direction the sign flip needs.
pub fn connect_fredholm<T: Real>(
    t1: &DMatrix<T>,
    t2: &DMatrix<T>,
    spec: &StratumSpec,
    tol: T,
) -> Result<OperatorPath<T>> {
    let StratumVariant::Fredholm {
        kernel_dim,
        cokernel_dim,
    } = spec.variant
    else {
        return Err(Error::FredholmDataMismatch(
            "spec does not describe a Fredholm stratum".into(),
        ));
    };
    if cokernel_dim == 0 {
        return Err(Error::FredholmDataMismatch(
            "cokernel dimension must be positive".into(),
        ));
    }
    for t in [t1, t2] {
        if t.shape() != (spec.codomain_dim, spec.domain_dim) {
            return Err(Error::FredholmDataMismatch(format!(
                "operator is {:?}, spec wants {:?}",
                t.shape(),
                (spec.codomain_dim, spec.domain_dim)
            )));
        }
        let d = numerical_rank(t, tol);
        if d.rank != spec.expected_rank() {
            return Err(Error::FredholmDataMismatch(format!(
                "operator has kernel dimension {}, spec wants {}",
                spec.domain_dim - d.rank,
                kernel_dim
            )));
        }
    }
    let k = spec.expected_rank();
    if nearly_equal(t1, t2) {
        return constant_path(t1, t2, vec![SegmentInvariant::ConstantRank(k)]);
    }
    if k == 0 {
        return constant_path(t1, t2, vec![SegmentInvariant::ConstantRank(0)]);
    }

    // ranges first: align both onto a common complement of the cokernels
    let n1 = linalg::column_space(t1, tol).orthogonal_complement();
    let n2 = linalg::column_space(t2, tol).orthogonal_complement();
    let fstar = common_complement(&n1, &n2)?;
    let ra1 = seg_range_align(t1, &fstar, &n1, tol)?;
    let ra2 = seg_range_align(t2, &fstar, &n2, tol)?;
    let t1p = ra1.start();
    let t2p = ra2.start();

    // kernels second
    let ker1 = linalg::null_space(&t1p, tol);
    let ker2 = linalg::null_space(&t2p, tol);
    let r = common_complement(&ker1, &ker2)?;
    let ka = seg_kernel_align(&t2p, &r, &ker1, tol)?;

    // invertible factor on the aligned range
    let t1_plus = linalg::restricted_inverse(&t1p, &r, &n1, tol)?;
    let q_full = &t2p * &t1_plus;
    let (middle, flip) = invertible_middle(&q_full, &t1p, &fstar, k, tol)?;

    let mut segments = vec![ra1.reversed()];
    if let Some(flip_seg) = flip {
        segments.push(flip_seg.reversed());
    }
    segments.extend(middle);
    segments.push(ka);
    segments.push(ra2);
    OperatorPath::try_new(segments)
}

/// The witness data linking two operators through chains of kernel and range
/// hops: hop subspaces plus one common complement per adjacent pair.
#[derive(Debug, Clone)]
pub struct EquivalenceChain<T: Real> {
    kernel_chain: Vec<Subspace<T>>,
    range_chain: Vec<Subspace<T>>,
    kernel_witnesses: Vec<Subspace<T>>,
    range_witnesses: Vec<Subspace<T>>,
}

impl<T: Real> EquivalenceChain<T> {
    pub fn kernel_chain(&self) -> &[Subspace<T>] {
        &self.kernel_chain
    }

    pub fn range_chain(&self) -> &[Subspace<T>] {
        &self.range_chain
    }

    pub fn kernel_witnesses(&self) -> &[Subspace<T>] {
        &self.kernel_witnesses
    }

    pub fn range_witnesses(&self) -> &[Subspace<T>] {
        &self.range_witnesses
    }

    /// The same chain read from `tstar` back to `t0`.
    pub fn reversed(&self) -> Self {
        let rev = |v: &[Subspace<T>]| v.iter().rev().cloned().collect();
        Self {
            kernel_chain: rev(&self.kernel_chain),
            range_chain: rev(&self.range_chain),
            kernel_witnesses: rev(&self.kernel_witnesses),
            range_witnesses: rev(&self.range_witnesses),
        }
    }
}

/// Produce common-complement witnesses for every adjacent pair along the
/// kernel chain `N(t0), hops..., N(tstar)` and the range chain
/// `R(t0), hops..., R(tstar)`.
pub fn build_chain<T: Real>(
    t0: &DMatrix<T>,
    tstar: &DMatrix<T>,
    kernel_hops: &[Subspace<T>],
    range_hops: &[Subspace<T>],
    tol: T,
) -> Result<EquivalenceChain<T>> {
    if t0.shape() != tstar.shape() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            t0.shape(),
            tstar.shape()
        )));
    }
    let kernel_nodes = chain_nodes(
        linalg::null_space(t0, tol),
        kernel_hops,
        linalg::null_space(tstar, tol),
    );
    let range_nodes = chain_nodes(
        linalg::column_space(t0, tol),
        range_hops,
        linalg::column_space(tstar, tol),
    );
    let kernel_witnesses = witnesses_along("kernel", &kernel_nodes)?;
    let range_witnesses = witnesses_along("range", &range_nodes)?;
    Ok(EquivalenceChain {
        kernel_chain: kernel_hops.to_vec(),
        range_chain: range_hops.to_vec(),
        kernel_witnesses,
        range_witnesses,
    })
}

fn chain_nodes<T: Real>(
    first: Subspace<T>,
    hops: &[Subspace<T>],
    last: Subspace<T>,
) -> Vec<Subspace<T>> {
    let mut nodes = Vec::with_capacity(hops.len() + 2);
    nodes.push(first);
    nodes.extend(hops.iter().cloned());
    nodes.push(last);
    nodes
}

fn witnesses_along<T: Real>(side: &'static str, nodes: &[Subspace<T>]) -> Result<Vec<Subspace<T>>> {
    let mut witnesses = Vec::with_capacity(nodes.len() - 1);
    for (i, pair) in nodes.windows(2).enumerate() {
        if pair[0].dim() != pair[1].dim() || pair[0].ambient_dim() != pair[1].ambient_dim() {
            return Err(Error::InfeasibleHop {
                side,
                index: i,
                left: pair[0].dim(),
                right: pair[1].dim(),
            });
        }
        witnesses.push(common_complement(&pair[0], &pair[1])?);
    }
    Ok(witnesses)
}

/// Check every witness of `chain` against the operators it claims to link.
pub fn validate_chain<T: Real>(
    t0: &DMatrix<T>,
    tstar: &DMatrix<T>,
    chain: &EquivalenceChain<T>,
    tol: T,
) -> Result<()> {
    let kernel_nodes = chain_nodes(
        linalg::null_space(t0, tol),
        &chain.kernel_chain,
        linalg::null_space(tstar, tol),
    );
    let range_nodes = chain_nodes(
        linalg::column_space(t0, tol),
        &chain.range_chain,
        linalg::column_space(tstar, tol),
    );
    for (side, nodes, witnesses) in [
        ("kernel", &kernel_nodes, &chain.kernel_witnesses),
        ("range", &range_nodes, &chain.range_witnesses),
    ] {
        if witnesses.len() + 1 != nodes.len() {
            return Err(Error::ChainInvalid(format!(
                "{side} side has {} witnesses for {} adjacent pairs",
                witnesses.len(),
                nodes.len() - 1
            )));
        }
        for (i, w) in witnesses.iter().enumerate() {
            for node in [&nodes[i], &nodes[i + 1]] {
                Decomposition::try_new(node.clone(), w.clone()).map_err(|e| {
                    Error::ChainInvalid(format!("{side} witness {i} fails to certify: {e}"))
                })?;
            }
        }
    }
    Ok(())
}

/// Path from `t0` to `tstar` through the equivalence class carved out by the
/// chain: kernel hops first (range pinned), then range hops (kernel pinned),
/// then the invertible endgame through the last witnesses.
pub fn connect_equiv_class<T: Real>(
    t0: &DMatrix<T>,
    tstar: &DMatrix<T>,
    chain: &EquivalenceChain<T>,
    tol: T,
) -> Result<OperatorPath<T>> {
    if t0.shape() != tstar.shape() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            t0.shape(),
            tstar.shape()
        )));
    }
    let rows = t0.nrows();
    let k = numerical_rank(t0, tol).rank;
    if k == rows {
        return Err(Error::HypothesisViolated(
            "the range of t0 must miss part of the codomain".into(),
        ));
    }
    validate_chain(t0, tstar, chain, tol)?;
    if nearly_equal(t0, tstar) && chain.kernel_chain.is_empty() && chain.range_chain.is_empty() {
        return constant_path(t0, tstar, vec![SegmentInvariant::ConstantRank(k)]);
    }
    if k == 0 {
        return constant_path(t0, tstar, vec![SegmentInvariant::ConstantRank(0)]);
    }

    let mut segments = Vec::new();
    let mut current = t0.clone();
    // kernel walk: each hop multiplies by a projector onto the witness
    for (idx, n_k) in chain.kernel_chain.iter().enumerate() {
        let seg = seg_kernel_align(&current, &chain.kernel_witnesses[idx], n_k, tol)?;
        current = seg.start();
        segments.push(seg.reversed());
    }
    // range walk
    for (idx, f_i) in chain.range_chain.iter().enumerate() {
        let seg = seg_range_align(&current, f_i, &chain.range_witnesses[idx], tol)?;
        current = seg.start();
        segments.push(seg.reversed());
    }
    let t_mn = current;

    // endgame: fold tstar through the last witnesses, then close the
    // invertible factor
    let r_last = chain
        .kernel_witnesses
        .last()
        .expect("kernel side always has a witness");
    let s_last = chain
        .range_witnesses
        .last()
        .expect("range side always has a witness");
    let n_m = linalg::null_space(&t_mn, tol);
    let f_n = linalg::column_space(&t_mn, tol);
    let ka_star = seg_kernel_align(tstar, r_last, &n_m, tol)?;
    let t_star_p = ka_star.start();
    let ra_star = seg_range_align(&t_star_p, &f_n, s_last, tol)?;

    let t_mn_plus = linalg::restricted_inverse(&t_mn, r_last, s_last, tol)?;
    let p_fn = oblique_projector(&f_n, s_last)?;
    let q_full = p_fn.matrix() * tstar * &t_mn_plus;
    let (middle, flip) = invertible_middle(&q_full, &t_mn, &f_n, k, tol)?;

    if let Some(flip_seg) = flip {
        segments.push(flip_seg.reversed());
    }
    segments.extend(middle);
    segments.push(ra_star);
    segments.push(ka_star);
    OperatorPath::try_new(segments)
}

fn nearly_equal<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> bool {
    (a - b).norm() <= real::<T>(1e-12) * (T::one() + a.norm())
}

fn constant_path<T: Real>(
    t1: &DMatrix<T>,
    t2: &DMatrix<T>,
    invariants: Vec<SegmentInvariant<T>>,
) -> Result<OperatorPath<T>> {
    OperatorPath::try_new(vec![PathSegment::new(
        SegmentKind::Affine {
            a: t1.clone(),
            b: t2 - t1,
        },
        invariants,
        "constant",
    )])
}
