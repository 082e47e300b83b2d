//! Scalar abstraction for the geometry kernel.
//!
//! All polyhedral computations are generic over [`Scalar`], a field with
//! exact-enough comparisons for pivoting and projection. The analysis
//! pipeline instantiates everything at [`Rat`] (arbitrary-precision
//! rationals); `f64` also satisfies the bounds and is usable for quick
//! experiments, but the shipped pipeline never runs the kernel on floats.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};

use num_traits::{FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// Exact rational scalar used by the analysis pipeline.
pub type Rat = num_rational::BigRational;

/// Numeric requirements of the polyhedral kernel.
///
/// `PartialOrd` rather than `Ord` so that `f64` qualifies; the kernel
/// compares through [`scmp`], which rejects incomparable values (NaN).
pub trait Scalar:
    Num
    + NumAssign
    + Signed
    + PartialOrd
    + FromPrimitive
    + ToPrimitive
    + Clone
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Num
        + NumAssign
        + Signed
        + PartialOrd
        + FromPrimitive
        + ToPrimitive
        + Clone
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Total comparison; panics on incomparable values (NaN floats).
#[inline]
pub fn scmp<S: Scalar>(a: &S, b: &S) -> Ordering {
    a.partial_cmp(b).expect("scalar comparison failed (NaN?)")
}

/// `n/d` as a scalar.
#[inline]
pub fn ratio<S: Scalar>(n: i64, d: i64) -> S {
    assert!(d != 0, "zero denominator");
    S::from_i64(n).expect("scalar from i64") / S::from_i64(d).expect("scalar from i64")
}

/// Integer as a scalar.
#[inline]
pub fn int<S: Scalar>(n: i64) -> S {
    S::from_i64(n).expect("scalar from i64")
}

/// Lexicographic comparison of coordinate vectors.
pub fn lex_cmp<S: Scalar>(a: &[S], b: &[S]) -> Ordering {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        match scmp(x, y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Dot product.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        acc += x.clone() * y.clone();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_roundtrip_to_f64() {
        let q: Rat = ratio(2, 3);
        let f = q.to_f64().unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn big_rational_to_f64_survives_large_terms() {
        // Large numerator/denominator must not degenerate to inf/inf.
        let big = Rat::new(
            num_bigint::BigInt::from(10u8).pow(40) + 1,
            num_bigint::BigInt::from(10u8).pow(40) * 3,
        );
        let f = big.to_f64().unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-12, "got {f}");
    }

    #[test]
    fn works_for_f64_too() {
        let x: f64 = ratio(1, 4);
        assert_eq!(x, 0.25);
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
    }
}
