use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar type accepted by the numerical core.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Converts an `f64` constant. Panics only if the target type cannot
    /// represent finite `f64` values at all.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the type.
    fn eps() -> Self;
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

/// Spectral norm of a small dense matrix.
pub(crate) fn op_norm<T: Real>(m: &nalgebra::DMatrix<T>) -> T {
    if m.nrows() == 0 || m.ncols() == 0 {
        return T::zero();
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(T::zero(), |acc, &v| if v > acc { v } else { acc })
}

/// Largest absolute entry.
pub(crate) fn max_abs<T: Real>(m: &nalgebra::DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, &v| {
        let a = v.abs();
        if a > acc {
            a
        } else {
            acc
        }
    })
}
