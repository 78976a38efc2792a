//! Arithmetic kernels shared by the simulators and the cost instrumentation.
//!
//! The per-junction updates are written once, generically over [`Sample`],
//! so that the plain `f64` hot path and the operation-counting path in
//! [`crate::cost`] execute literally the same expressions. With `f64` every
//! method is a single inlined machine op.

/// Scalar-like sample abstraction: additions/subtractions and multiplication
/// by a filter coefficient.
pub(crate) trait Sample: Copy {
    fn zero() -> Self;
    /// Lifts a plain value into the sample domain (initialization, not a
    /// counted arithmetic operation).
    fn from_value(v: f64) -> Self;
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn scale(self, k: f64) -> Self;
}

impl Sample for f64 {
    #[inline(always)]
    fn zero() -> Self {
        0.0
    }
    #[inline(always)]
    fn from_value(v: f64) -> Self {
        v
    }
    #[inline(always)]
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    #[inline(always)]
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    #[inline(always)]
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

pub(crate) const ONE_THIRD: f64 = 1.0 / 3.0;

/// One first-order allpass update in the one-multiplier-per-coefficient
/// direct form: `y = k*x + s`, `s <- x - k*y`. Two sums, two products.
#[inline(always)]
pub(crate) fn allpass<T: Sample>(k: f64, s: &mut T, x: T) -> T {
    let y = x.scale(k).add(*s);
    *s = x.sub(y.scale(k));
    y
}

/// Junction pressure of a six-port scattering node: one third of the summed
/// incoming waves. Five sums, one product.
#[inline(always)]
pub(crate) fn junction_pressure<T: Sample>(p: &[T; 6]) -> T {
    p[0].add(p[1])
        .add(p[2])
        .add(p[3])
        .add(p[4])
        .add(p[5])
        .scale(ONE_THIRD)
}

/// Finite-difference junction update: one third of the six neighbor
/// pressures minus the local history term. Six sums, one product.
#[inline(always)]
pub(crate) fn step_pressure<T: Sample>(nbrs: &[T; 6], history: T) -> T {
    junction_pressure(nbrs).sub(history)
}
