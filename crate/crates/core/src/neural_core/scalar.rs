//! Float abstraction so the same network runs in f64 for gradient checks
//! and f32 for training throughput.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn maximum(self, other: Self) -> Self;
    fn is_finite_scalar(self) -> bool;
    /// Dot product; implemented per type so the loop vectorizes (the
    /// generic version compiles to scalar code, 4x slower).
    fn vdot(a: &[Self], b: &[Self]) -> Self;
    /// `acc += g * row`, same monomorphization rationale as [`Self::vdot`].
    fn vaxpy(acc: &mut [Self], g: Self, row: &[Self]);
}

// chunks_exact gives the optimizer fixed-length subslices, which removes
// the per-element bounds checks that otherwise block vectorization.
macro_rules! impl_kernels {
    ($t:ty) => {
        #[inline]
        fn vdot(a: &[$t], b: &[$t]) -> $t {
            debug_assert_eq!(a.len(), b.len());
            let mut s = [0.0; 8];
            let mut ca = a.chunks_exact(8);
            let mut cb = b.chunks_exact(8);
            for (xa, xb) in (&mut ca).zip(&mut cb) {
                for j in 0..8 {
                    s[j] += xa[j] * xb[j];
                }
            }
            let mut rest = 0.0;
            for (xa, xb) in ca.remainder().iter().zip(cb.remainder()) {
                rest += xa * xb;
            }
            ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7])) + rest
        }

        #[inline]
        fn vaxpy(acc: &mut [$t], g: $t, row: &[$t]) {
            debug_assert_eq!(acc.len(), row.len());
            for (a, r) in acc.iter_mut().zip(row) {
                *a += g * r;
            }
        }
    };
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn maximum(self, other: Self) -> Self {
        f64::max(self, other)
    }
    fn is_finite_scalar(self) -> bool {
        self.is_finite()
    }
    impl_kernels!(f64);
}

impl Scalar for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn exp(self) -> Self {
        f32::exp(self)
    }
    fn ln(self) -> Self {
        f32::ln(self)
    }
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
    fn abs(self) -> Self {
        f32::abs(self)
    }
    fn maximum(self, other: Self) -> Self {
        f32::max(self, other)
    }
    fn is_finite_scalar(self) -> bool {
        self.is_finite()
    }
    impl_kernels!(f32);
}

/// Eight-accumulator dot product (dispatches to the per-type kernel).
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    T::vdot(a, b)
}

/// `acc += g * row`
#[inline]
pub fn axpy<T: Scalar>(acc: &mut [T], g: T, row: &[T]) {
    T::vaxpy(acc, g, row)
}

/// y = x @ W^T for row-major W[out][inp]; x is n rows of `inp`.
/// Weight-row-outer loop keeps each W row hot across all positions.
pub fn gemm_nt<T: Scalar>(x: &[T], w: &[T], y: &mut [T], n: usize, inp: usize, out: usize) {
    debug_assert_eq!(x.len(), n * inp);
    debug_assert_eq!(w.len(), out * inp);
    debug_assert_eq!(y.len(), n * out);
    for o in 0..out {
        let wrow = &w[o * inp..(o + 1) * inp];
        for p in 0..n {
            y[p * out + o] = dot(&x[p * inp..(p + 1) * inp], wrow);
        }
    }
}

/// dx += dy @ W (same W layout as [`gemm_nt`]).
pub fn grad_input<T: Scalar>(dy: &[T], w: &[T], dx: &mut [T], n: usize, inp: usize, out: usize) {
    for o in 0..out {
        let wrow = &w[o * inp..(o + 1) * inp];
        for p in 0..n {
            let g = dy[p * out + o];
            if g != T::ZERO {
                axpy(&mut dx[p * inp..(p + 1) * inp], g, wrow);
            }
        }
    }
}

/// dW += dy^T @ x.
pub fn grad_weight<T: Scalar>(dy: &[T], x: &[T], dw: &mut [T], n: usize, inp: usize, out: usize) {
    for o in 0..out {
        let dwrow = &mut dw[o * inp..(o + 1) * inp];
        for p in 0..n {
            let g = dy[p * out + o];
            if g != T::ZERO {
                axpy(dwrow, g, &x[p * inp..(p + 1) * inp]);
            }
        }
    }
}
