//! Scalar bounds for the numeric core.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable throughout the crate: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy cast from `f64`, the precision used by RNG draws and file I/O.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }

    /// Cast to `f64` for serialization and reporting.
    fn to64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Mean of a slice; zero on empty input.
pub fn mean<R: Real>(xs: &[R]) -> R {
    if xs.is_empty() {
        return R::zero();
    }
    xs.iter().copied().sum::<R>() / R::of(xs.len() as f64)
}

/// Population standard deviation of a slice.
pub fn std_dev<R: Real>(xs: &[R]) -> R {
    if xs.is_empty() {
        return R::zero();
    }
    let m = mean(xs);
    let var = xs
        .iter()
        .map(|&x| (x - m) * (x - m))
        .sum::<R>()
        / R::of(xs.len() as f64);
    var.sqrt()
}

/// Squared Euclidean norm.
pub fn norm_sq<R: Real>(xs: &[R]) -> R {
    xs.iter().map(|&x| x * x).sum()
}

/// Dot product of equal-length slices.
pub fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
