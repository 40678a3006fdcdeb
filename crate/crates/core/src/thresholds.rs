//! Certification thresholds, collected in one place.
//!
//! Every numerical gate used by constructors, certificates, and the test
//! suites is defined here; nothing downstream hard-codes its own cutoff.

/// Default relative singular-value cutoff for rank decisions.
///
/// `sigma_i > DEFAULT_TOL * sigma_1` counts toward the rank. Scale-invariant,
/// and far above f64 rounding for the desk-scale dimensions this crate targets.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Orthonormality defect `‖BᵀB − I‖` allowed on stored subspace bases.
pub const ORTHONORMAL_DEFECT: f64 = 1e-12;

/// Smallest singular value of a stacked basis `[B_a | B_b]` certifying a
/// direct sum. Below this the pair is treated as non-complementary.
pub const COMPLEMENT_SIGMA: f64 = 1e-8;

/// Largest `sigma_{k+1}/sigma_1` tolerated on a sample certified as rank k.
pub const RANK_TRAILING: f64 = 1e-8;

/// Smallest `sigma_k/sigma_1` required on a sample certified as rank k.
pub const RANK_LEADING: f64 = 1e-6;

/// Largest principal angle (radians) between a sampled kernel/range and its
/// declared constant subspace.
pub const SUBSPACE_ANGLE: f64 = 1e-7;

/// Smallest `sigma_min/sigma_max` required of samples on segments declared
/// invertible.
pub const INVERTIBLE_RATIO: f64 = 1e-6;

/// Relative Frobenius mismatch allowed where consecutive segments join,
/// and between path endpoints and the operators they claim to connect.
pub const ENDPOINT_RTOL: f64 = 1e-9;

/// Principal angle (radians) below which two directions are treated as a
/// common direction when intersecting subspaces. The single knob of the
/// intersection routine.
pub const INTERSECTION_ANGLE: f64 = 1e-7;

/// Default number of evaluation points per segment when certifying.
pub const DEFAULT_SAMPLES: usize = 100;
