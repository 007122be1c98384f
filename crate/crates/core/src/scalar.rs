//! Scalar abstraction shared by the geometry, quadrature and popularity code.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive, Zero};

/// Real floating point type the closed-form parts of the crate are written against.
///
/// Implemented for `f32` and `f64` only.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only if the target type cannot represent it.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Values that can be accumulated by the quadrature routines: reals and complex numbers.
pub trait QuadValue<T: Scalar>:
    Copy
    + Debug
    + Zero
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<T, Output = Self>
    + Send
    + Sync
{
    fn magnitude(&self) -> T;

    fn is_finite_value(&self) -> bool;
}

macro_rules! impl_quad_value {
    ($t:ty) => {
        impl QuadValue<$t> for $t {
            fn magnitude(&self) -> $t {
                self.abs()
            }

            fn is_finite_value(&self) -> bool {
                self.is_finite()
            }
        }

        impl QuadValue<$t> for Complex<$t> {
            fn magnitude(&self) -> $t {
                self.norm()
            }

            fn is_finite_value(&self) -> bool {
                self.re.is_finite() && self.im.is_finite()
            }
        }
    };
}

impl_quad_value!(f32);
impl_quad_value!(f64);
