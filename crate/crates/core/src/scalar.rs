//! Scalar abstraction: the toolkit is generic over the real field used for
//! matrix entries. `f64` is the working default (see the aliases at the crate
//! root); `f32` is available for quick low-precision experiments.

use nalgebra::RealField;
use num_traits::FromPrimitive;

/// Real scalar usable as a matrix entry type.
///
/// Bridges `num-traits` conversions and `nalgebra`'s field operations; all
/// dense kernels (SVD, LU, QR) are available for any implementor.
pub trait Real: RealField + FromPrimitive + Copy {}

impl Real for f32 {}
impl Real for f64 {}

/// Convert an `f64` literal (tolerances, thresholds) into the scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal converts to scalar")
}

/// Widen a scalar back to `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    nalgebra::try_convert(x).unwrap_or(f64::NAN)
}
