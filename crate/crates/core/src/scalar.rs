//! Scalar abstraction shared by every solver in the crate.
//!
//! The engine, repair and baseline code are written once against [`Scalar`]
//! and instantiated for `f64` (the production type) and `f32`. Each type
//! carries its own tolerance constants because a threshold of `1e-12` is
//! meaningless in single precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Marginal equality tolerance.
    const FEAS_TOL: Self;
    /// Dual feasibility slack allowed on `alpha_i + beta_j - Q_ij`.
    const DUAL_TOL: Self;
    /// Smallest augmentation the max-flow routine will push.
    const FLOW_TOL: Self;
    /// Distance to the nearest integer below which a value counts as integral.
    const INTEGRAL_TOL: Self;
    /// Support threshold for the repair network.
    const SUPPORT_MIN: Self;

    #[inline]
    fn of_f64(x: f64) -> Self {
        Self::from_f64(x).expect("f64 representable in scalar type")
    }

    #[inline]
    fn of_u64(x: u64) -> Self {
        Self::from_u64(x).expect("u64 representable in scalar type")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn half() -> Self {
        Self::of_f64(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }
}

impl Scalar for f64 {
    const FEAS_TOL: Self = 1e-9;
    const DUAL_TOL: Self = 1e-12;
    const FLOW_TOL: Self = 1e-12;
    const INTEGRAL_TOL: Self = 1e-9;
    const SUPPORT_MIN: Self = 1e-300;
}

impl Scalar for f32 {
    const FEAS_TOL: Self = 1e-3;
    const DUAL_TOL: Self = 1e-4;
    const FLOW_TOL: Self = 1e-6;
    const INTEGRAL_TOL: Self = 1e-3;
    const SUPPORT_MIN: Self = 1e-37;
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
///
/// Dual potentials are stored in this form. At the final regularization the
/// exponent `eta * (alpha_i + beta_j - Q_ij)` multiplies the rounding error of
/// a plain sum by `eta`, which reaches `1e9` on high-accuracy runs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Compensated<T> {
    pub hi: T,
    pub lo: T,
}

/// Error-free transformation: `s + e == a + b` exactly.
#[inline]
pub fn two_sum<T: Scalar>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn fast_two_sum<T: Scalar>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

impl<T: Scalar> Compensated<T> {
    pub fn new(value: T) -> Self {
        Self {
            hi: value,
            lo: T::zero(),
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.hi + self.lo
    }

    #[inline]
    pub fn plus(self, x: T) -> Self {
        let (s, e) = two_sum(self.hi, x);
        let (hi, lo) = fast_two_sum(s, e + self.lo);
        Self { hi, lo }
    }

    #[inline]
    pub fn add_compensated(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let (hi, lo) = fast_two_sum(s, e + self.lo + other.lo);
        Self { hi, lo }
    }

    /// `self * x` to roughly twice working precision (no FMA required).
    #[inline]
    pub fn scale(self, x: T) -> Self {
        let (p, e) = two_prod(self.hi, x);
        let (hi, lo) = fast_two_sum(p, e + self.lo * x);
        Self { hi, lo }
    }
}

/// Dekker product split.
#[inline]
fn two_prod<T: Scalar>(a: T, b: T) -> (T, T) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

#[inline]
fn split<T: Scalar>(a: T) -> (T, T) {
    // 2^ceil(p/2) + 1 for the mantissa width p of T.
    let digits = T::epsilon().log2().abs().ceil().to_i32().unwrap_or(52);
    let factor = T::of_f64(2f64.powi((digits + 2) / 2)) + T::one();
    let c = factor * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

/// `alpha + beta - q` evaluated with one rounding.
#[inline]
pub fn slack<T: Scalar>(alpha: Compensated<T>, beta: Compensated<T>, q: T) -> T {
    let (s, e1) = two_sum(alpha.hi, beta.hi);
    let (t, e2) = two_sum(s, -q);
    t + (((e1 + e2) + alpha.lo) + beta.lo)
}

/// Compensated dot product `sum_i w_i * x_i`.
pub fn weighted_sum<T: Scalar>(weights: &[T], values: &[Compensated<T>]) -> T {
    weights
        .iter()
        .zip(values)
        .fold(Compensated::new(T::zero()), |acc, (&w, &v)| {
            acc.add_compensated(v.scale(w))
        })
        .value()
}

/// Round-to-nearest integer distance check.
#[inline]
pub fn is_integral<T: Scalar>(x: T) -> bool {
    (x - x.round()).abs() <= T::INTEGRAL_TOL
}
