//! Scalar abstraction: every floating type the toolkit works with.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating scalar used throughout the crate: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand conversion from an `f64` literal into the working scalar.
#[inline]
pub fn real<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("f64 constant convertible to scalar")
}

/// Numerically stable `ln(1 + e^x)`.
#[inline]
pub fn softplus<F: Real>(x: F) -> F {
    if x > F::zero() {
        x + x.neg().exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Log-sum-exp over a slice; `-inf` for an empty slice.
pub fn log_sum_exp<F: Real>(xs: &[F]) -> F {
    let mut max = F::neg_infinity();
    for &x in xs {
        if x > max {
            max = x;
        }
    }
    if max.is_infinite() && max < F::zero() {
        return F::neg_infinity();
    }
    let mut acc = F::zero();
    for &x in xs {
        acc += (x - max).exp();
    }
    max + acc.ln()
}
