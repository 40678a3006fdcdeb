//! Sampled certification: evaluate a path on a uniform grid per segment and
//! re-check every declared invariant plus stratum membership, recording the
//! worst case of each quantity. Failures are verdicts, never errors.
//!
//! All thresholds come from [`crate::thresholds`]. Sampling fans out across
//! a worker pool; the reduction keeps only order-independent statistics
//! (mins, maxes, earliest failing sample), so certificates are deterministic
//! for fixed inputs.

use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

use crate::connect::StratumSpec;
use crate::linalg::{self, numerical_rank, stacked_sigma_min};
use crate::path::{OperatorPath, PathSegment, SegmentInvariant};
use crate::scalar::{real, to_f64, Real};
use crate::subspace::max_principal_angle;
use crate::thresholds;

/// Worst-case evidence collected on one segment.
#[derive(Debug, Clone, Serialize)]
pub struct SegmentReport {
    pub segment_index: usize,
    pub provenance: String,
    pub declared_invariants: Vec<String>,
    /// Smallest `sigma_k/sigma_1` seen across samples.
    pub min_leading_gap: f64,
    /// Largest `sigma_{k+1}/sigma_1` seen across samples.
    pub max_trailing_ratio: f64,
    /// Largest principal angle between sampled kernels and the declared one.
    pub max_kernel_angle: Option<f64>,
    /// Largest principal angle between sampled ranges and the declared one.
    pub max_range_angle: Option<f64>,
    /// Smallest stacked-basis `sigma_min` over the complementarity checks.
    pub min_complement_sigma: Option<f64>,
    /// Smallest `sigma_min/sigma_max` over samples of invertible segments.
    pub min_invertible_ratio: Option<f64>,
    /// Frobenius gap to the next segment's start (absent on the last one).
    pub endpoint_mismatch: Option<f64>,
}

/// The first check that went under its threshold.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub segment_index: usize,
    pub sample_index: usize,
    pub check: String,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail { first_failure: Failure },
}

/// Numerical witness that a path stays inside its declared stratum.
#[derive(Debug, Clone, Serialize)]
pub struct PathCertificate {
    pub samples_per_segment: usize,
    pub tolerance: f64,
    pub stratum: String,
    pub per_segment: Vec<SegmentReport>,
    pub verdict: Verdict,
    pub wall_time_s: f64,
}

impl PathCertificate {
    pub fn passed(&self) -> bool {
        matches!(self.verdict, Verdict::Pass)
    }

    pub fn first_failure(&self) -> Option<&Failure> {
        match &self.verdict {
            Verdict::Pass => None,
            Verdict::Fail { first_failure } => Some(first_failure),
        }
    }
}

fn describe_spec(spec: &StratumSpec) -> String {
    match spec.variant {
        crate::connect::StratumVariant::Rank(k) => format!("rank:{k}"),
        crate::connect::StratumVariant::Fredholm {
            kernel_dim,
            cokernel_dim,
        } => format!("fredholm:{kernel_dim},{cokernel_dim}"),
    }
}

/// Certify `path` against `spec` with `samples` evaluation points per
/// segment (at least 2; the default is [`thresholds::DEFAULT_SAMPLES`]).
pub fn certify<T: Real>(
    path: &OperatorPath<T>,
    spec: &StratumSpec,
    samples: usize,
    tol: T,
) -> PathCertificate {
    let clock = Instant::now();
    let samples = samples.max(2);
    let expected_rank = spec.expected_rank();

    let mut per_segment = Vec::with_capacity(path.segments().len());
    let mut first_failure: Option<Failure> = None;

    if (path.rows(), path.cols()) != (spec.codomain_dim, spec.domain_dim) {
        first_failure = Some(Failure {
            segment_index: 0,
            sample_index: 0,
            check: "path_shape".into(),
            value: path.rows() as f64,
            threshold: spec.codomain_dim as f64,
        });
    }

    for (index, seg) in path.segments().iter().enumerate() {
        let stats = (0..samples)
            .into_par_iter()
            .map(|j| sample_stats(seg, index, j, samples, expected_rank, tol))
            .reduce(SampleStats::neutral, SampleStats::combine);

        let mut report = SegmentReport {
            segment_index: index,
            provenance: seg.provenance.clone(),
            declared_invariants: seg.invariants.iter().map(|i| i.name().into()).collect(),
            min_leading_gap: stats.min_leading_gap,
            max_trailing_ratio: stats.max_trailing_ratio,
            max_kernel_angle: stats.max_kernel_angle,
            max_range_angle: stats.max_range_angle,
            min_complement_sigma: stats.min_complement_sigma,
            min_invertible_ratio: stats.min_invertible_ratio,
            endpoint_mismatch: None,
        };

        let mut segment_failure = stats.failure;
        // determinant signs must not mix along an invertible segment
        if segment_failure.is_none() {
            if let (Some(pos), Some(neg)) = (stats.first_positive_det, stats.first_negative_det) {
                segment_failure = Some(Failure {
                    segment_index: index,
                    sample_index: pos.max(neg),
                    check: "determinant_sign".into(),
                    value: 0.0,
                    threshold: 0.0,
                });
            }
        }

        if index + 1 < path.segments().len() {
            let end = seg.end();
            let start = path.segments()[index + 1].start();
            let gap = to_f64((&end - &start).norm());
            report.endpoint_mismatch = Some(gap);
            let bound = thresholds::ENDPOINT_RTOL * (1.0 + to_f64(end.norm()));
            if segment_failure.is_none() && gap > bound {
                segment_failure = Some(Failure {
                    segment_index: index,
                    sample_index: samples - 1,
                    check: "segment_joint".into(),
                    value: gap,
                    threshold: bound,
                });
            }
        }

        per_segment.push(report);
        if first_failure.is_none() {
            first_failure = segment_failure;
        }
    }

    PathCertificate {
        samples_per_segment: samples,
        tolerance: to_f64(tol),
        stratum: describe_spec(spec),
        per_segment,
        verdict: match first_failure {
            None => Verdict::Pass,
            Some(first_failure) => Verdict::Fail { first_failure },
        },
        wall_time_s: clock.elapsed().as_secs_f64(),
    }
}

#[derive(Debug, Clone)]
struct SampleStats {
    min_leading_gap: f64,
    max_trailing_ratio: f64,
    max_kernel_angle: Option<f64>,
    max_range_angle: Option<f64>,
    min_complement_sigma: Option<f64>,
    min_invertible_ratio: Option<f64>,
    first_positive_det: Option<usize>,
    first_negative_det: Option<usize>,
    failure: Option<Failure>,
}

impl SampleStats {
    fn neutral() -> Self {
        Self {
            min_leading_gap: 1.0,
            max_trailing_ratio: 0.0,
            max_kernel_angle: None,
            max_range_angle: None,
            min_complement_sigma: None,
            min_invertible_ratio: None,
            first_positive_det: None,
            first_negative_det: None,
            failure: None,
        }
    }

    fn combine(a: Self, b: Self) -> Self {
        let opt_max = |x: Option<f64>, y: Option<f64>| match (x, y) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        };
        let opt_min = |x: Option<f64>, y: Option<f64>| match (x, y) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        let opt_min_idx = |x: Option<usize>, y: Option<usize>| match (x, y) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        let failure = match (a.failure, b.failure) {
            (Some(fa), Some(fb)) => Some(if fa.sample_index <= fb.sample_index {
                fa
            } else {
                fb
            }),
            (fa, fb) => fa.or(fb),
        };
        Self {
            min_leading_gap: a.min_leading_gap.min(b.min_leading_gap),
            max_trailing_ratio: a.max_trailing_ratio.max(b.max_trailing_ratio),
            max_kernel_angle: opt_max(a.max_kernel_angle, b.max_kernel_angle),
            max_range_angle: opt_max(a.max_range_angle, b.max_range_angle),
            min_complement_sigma: opt_min(a.min_complement_sigma, b.min_complement_sigma),
            min_invertible_ratio: opt_min(a.min_invertible_ratio, b.min_invertible_ratio),
            first_positive_det: opt_min_idx(a.first_positive_det, b.first_positive_det),
            first_negative_det: opt_min_idx(a.first_negative_det, b.first_negative_det),
            failure,
        }
    }
}

fn sample_stats<T: Real>(
    seg: &PathSegment<T>,
    segment_index: usize,
    sample_index: usize,
    samples: usize,
    expected_rank: usize,
    tol: T,
) -> SampleStats {
    let lambda = real::<T>(sample_index as f64 / (samples - 1) as f64);
    let m = seg.at(lambda);
    let mut stats = SampleStats::neutral();
    let fail = |check: &str, value: f64, threshold: f64| Failure {
        segment_index,
        sample_index,
        check: check.into(),
        value,
        threshold,
    };

    // stratum membership: rank with comfortable margins
    let decision = numerical_rank(&m, tol);
    stats.min_leading_gap = to_f64(decision.leading_gap);
    stats.max_trailing_ratio = to_f64(decision.trailing_ratio);
    if decision.rank != expected_rank {
        stats.failure = Some(fail(
            "rank_value",
            decision.rank as f64,
            expected_rank as f64,
        ));
        return stats;
    }
    if expected_rank > 0 && stats.min_leading_gap < thresholds::RANK_LEADING {
        stats.failure = Some(fail(
            "rank_leading_gap",
            stats.min_leading_gap,
            thresholds::RANK_LEADING,
        ));
        return stats;
    }
    if stats.max_trailing_ratio > thresholds::RANK_TRAILING {
        stats.failure = Some(fail(
            "rank_trailing_ratio",
            stats.max_trailing_ratio,
            thresholds::RANK_TRAILING,
        ));
        return stats;
    }

    for invariant in &seg.invariants {
        match invariant {
            SegmentInvariant::ConstantRank(k) => {
                if *k != expected_rank {
                    stats.failure = Some(fail("declared_rank", *k as f64, expected_rank as f64));
                    return stats;
                }
            }
            SegmentInvariant::ConstantKernel(n) => {
                let kernel = linalg::null_space(&m, tol);
                let angle = to_f64(max_principal_angle(&kernel, n));
                stats.max_kernel_angle = Some(angle);
                if angle > thresholds::SUBSPACE_ANGLE {
                    stats.failure =
                        Some(fail("constant_kernel", angle, thresholds::SUBSPACE_ANGLE));
                    return stats;
                }
            }
            SegmentInvariant::ConstantRange(r) => {
                let range = linalg::column_space(&m, tol);
                let angle = to_f64(max_principal_angle(&range, r));
                stats.max_range_angle = Some(angle);
                if angle > thresholds::SUBSPACE_ANGLE {
                    stats.failure = Some(fail("constant_range", angle, thresholds::SUBSPACE_ANGLE));
                    return stats;
                }
            }
            SegmentInvariant::ComplementedRange(n) => {
                let range = linalg::column_space(&m, tol);
                let sigma = to_f64(stacked_sigma_min(&range, n));
                stats.min_complement_sigma = opt_min(stats.min_complement_sigma, sigma);
                if sigma < thresholds::COMPLEMENT_SIGMA {
                    stats.failure = Some(fail(
                        "complemented_range",
                        sigma,
                        thresholds::COMPLEMENT_SIGMA,
                    ));
                    return stats;
                }
            }
            SegmentInvariant::ComplementedKernel(r) => {
                let kernel = linalg::null_space(&m, tol);
                let sigma = to_f64(stacked_sigma_min(&kernel, r));
                stats.min_complement_sigma = opt_min(stats.min_complement_sigma, sigma);
                if sigma < thresholds::COMPLEMENT_SIGMA {
                    stats.failure = Some(fail(
                        "complemented_kernel",
                        sigma,
                        thresholds::COMPLEMENT_SIGMA,
                    ));
                    return stats;
                }
            }
            SegmentInvariant::Invertible => {
                if !m.is_square() {
                    stats.failure = Some(fail(
                        "invertible_square",
                        m.nrows() as f64,
                        m.ncols() as f64,
                    ));
                    return stats;
                }
                let s = linalg::singular_values(&m);
                let ratio = if s[0] > T::zero() {
                    to_f64(s[s.len() - 1] / s[0])
                } else {
                    0.0
                };
                stats.min_invertible_ratio = opt_min(stats.min_invertible_ratio, ratio);
                if ratio < thresholds::INVERTIBLE_RATIO {
                    stats.failure = Some(fail(
                        "invertible_ratio",
                        ratio,
                        thresholds::INVERTIBLE_RATIO,
                    ));
                    return stats;
                }
                if m.determinant() >= T::zero() {
                    stats.first_positive_det = Some(sample_index);
                } else {
                    stats.first_negative_det = Some(sample_index);
                }
            }
        }
    }
    stats
}

fn opt_min(x: Option<f64>, y: f64) -> Option<f64> {
    Some(match x {
        Some(x) => x.min(y),
        None => y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connect::{connect_rank_stratum, StratumSpec};
    use crate::path::{
        seg_reversal_pencil, seg_sign_flip, OperatorPath, PathSegment, SegmentInvariant,
    };
    use crate::sample::random_stratum_point;
    use crate::subspace::{GraphOperator, Subspace};
    use crate::thresholds::DEFAULT_TOL;
    use nalgebra::DMatrix;

    #[test]
    fn constant_valid_path_passes() {
        let t: DMatrix<f64> = random_stratum_point(3, 3, 2, 23).unwrap();
        let path = OperatorPath::try_new(vec![PathSegment::constant(
            t,
            vec![SegmentInvariant::ConstantRank(2)],
            "constant",
        )])
        .unwrap();
        let spec = StratumSpec::rank(3, 3, 2).unwrap();
        let cert = certify(&path, &spec, 100, DEFAULT_TOL);
        assert!(cert.passed(), "{:?}", cert.first_failure());
    }

    #[test]
    fn reversal_pencil_fails_at_the_midpoint_sample() {
        let estar = Subspace::<f64>::coordinate(2, 0);
        let r = Subspace::coordinate(2, 1);
        let alpha =
            GraphOperator::from_coeffs(estar.clone(), r.clone(), DMatrix::from_element(1, 1, 1.0))
                .unwrap();
        let seg = seg_reversal_pencil(&estar, &r, &alpha).unwrap();
        let path = OperatorPath::try_new(vec![seg]).unwrap();
        let spec = StratumSpec::rank(2, 2, 1).unwrap();
        // odd sample count puts a sample exactly on the midpoint
        let cert = certify(&path, &spec, 101, DEFAULT_TOL);
        assert!(!cert.passed());
        let failure = cert.first_failure().unwrap();
        assert_eq!(failure.check, "complemented_range");
        assert_eq!(failure.sample_index, 50);

        // the sign-flip rotation does the same job without leaving the stratum
        let t = seg_reversal_pencil(&estar, &r, &alpha).unwrap().start();
        let e = crate::linalg::column_space(&t, DEFAULT_TOL)
            .first_direction()
            .unwrap();
        let f = crate::path::spare_direction(&t, DEFAULT_TOL).unwrap();
        let flip = seg_sign_flip(&t, &e, &f, DEFAULT_TOL).unwrap();
        // flip runs from the reflected operator (= -t for rank one) to t
        assert!((flip.start() + &t).norm() <= 1e-12);
        let flip_path = OperatorPath::try_new(vec![flip]).unwrap();
        let cert = certify(&flip_path, &spec, 101, DEFAULT_TOL);
        assert!(cert.passed(), "{:?}", cert.first_failure());
    }

    #[test]
    fn connect_output_certifies_end_to_end() {
        let t1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let t2 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let path = connect_rank_stratum(&t1, &t2, DEFAULT_TOL).unwrap();
        let spec = StratumSpec::rank(2, 2, 1).unwrap();
        let cert = certify(&path, &spec, 100, DEFAULT_TOL);
        assert!(cert.passed(), "{:?}", cert.first_failure());
        assert_eq!(cert.per_segment.len(), path.segments().len());
    }

    #[test]
    fn certificates_are_deterministic() {
        let t1: DMatrix<f64> = random_stratum_point(4, 4, 2, 61).unwrap();
        let t2: DMatrix<f64> = random_stratum_point(4, 4, 2, 62).unwrap();
        let path = connect_rank_stratum(&t1, &t2, DEFAULT_TOL).unwrap();
        let spec = StratumSpec::rank(4, 4, 2).unwrap();
        let a = certify(&path, &spec, 64, DEFAULT_TOL);
        let b = certify(&path, &spec, 64, DEFAULT_TOL);
        let canon = |c: &PathCertificate| {
            c.per_segment
                .iter()
                .map(|s| {
                    (
                        s.min_leading_gap.to_bits(),
                        s.max_trailing_ratio.to_bits(),
                        s.max_kernel_angle.map(f64::to_bits),
                        s.max_range_angle.map(f64::to_bits),
                        s.min_complement_sigma.map(f64::to_bits),
                        s.min_invertible_ratio.map(f64::to_bits),
                    )
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(canon(&a), canon(&b));
        assert_eq!(a.passed(), b.passed());
    }

    #[test]
    fn wrong_rank_spec_fails_fast() {
        let t: DMatrix<f64> = random_stratum_point(3, 3, 2, 29).unwrap();
        let path = OperatorPath::try_new(vec![PathSegment::constant(
            t,
            vec![SegmentInvariant::ConstantRank(2)],
            "constant",
        )])
        .unwrap();
        let spec = StratumSpec::rank(3, 3, 1).unwrap();
        let cert = certify(&path, &spec, 16, DEFAULT_TOL);
        let failure = cert.first_failure().unwrap();
        assert_eq!(failure.check, "rank_value");
    }
}
