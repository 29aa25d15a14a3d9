//! Scalar abstraction shared by every numerical module.
//!
//! All analytic code is written against [`Real`], which is implemented for
//! `f64` (fast, used for majorants and error estimates) and for [`MpFloat`],
//! an MPFR-backed float whose precision is a process-wide setting.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};
use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use rug::Float;

/// Default working precision in bits.
pub const DEFAULT_PRECISION_BITS: u32 = 300;

static WORKING_PRECISION: AtomicU32 = AtomicU32::new(DEFAULT_PRECISION_BITS);

/// Current working precision for [`MpFloat`] values.
pub fn working_precision() -> u32 {
    WORKING_PRECISION.load(AtomicOrdering::Relaxed)
}

/// Sets the working precision used by every subsequently created [`MpFloat`].
///
/// Intended to be called once at startup; values created before the call keep
/// their old precision.
pub fn set_working_precision(bits: u32) {
    WORKING_PRECISION.store(bits.max(64), AtomicOrdering::Relaxed);
}

/// Real scalar used by the analytic modules.
pub trait Real:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Num
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Sum
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
    + for<'a> DivAssign<&'a Self>
{
    fn int(n: i64) -> Self;
    fn from_f64_exact(x: f64) -> Self;
    fn from_ratio(num: &BigInt, den: &BigInt) -> Self;
    fn pi() -> Self;
    /// Unit roundoff of the type at its current precision.
    fn epsilon() -> Self;
    fn mantissa_bits() -> u32;

    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn sin_cos(&self) -> (Self, Self);
    fn atan2(&self, x: &Self) -> Self;
    fn sinh_cosh(&self) -> (Self, Self) {
        let e = self.exp();
        let inv = Self::one() / &e;
        let two = Self::int(2);
        ((e.clone() - &inv) / &two, (e + &inv) / &two)
    }

    fn to_f64_lossy(&self) -> f64;
    /// Decimal representation carrying every significant digit of the value.
    fn to_decimal_string(&self) -> String;
    fn parse_decimal(s: &str) -> Option<Self>;

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
    fn powi(&self, n: i32) -> Self {
        let mut base = if n < 0 { Self::one() / self } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= &base;
            }
            base = base.clone() * &base;
            e >>= 1;
        }
        acc
    }
}

impl Real for f64 {
    fn int(n: i64) -> Self {
        n as f64
    }
    fn from_f64_exact(x: f64) -> Self {
        x
    }
    fn from_ratio(num: &BigInt, den: &BigInt) -> Self {
        num_rational::BigRational::new(num.clone(), den.clone()).to_f64().unwrap_or(f64::NAN)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn epsilon() -> Self {
        f64::EPSILON
    }
    fn mantissa_bits() -> u32 {
        53
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn sin_cos(&self) -> (Self, Self) {
        f64::sin_cos(*self)
    }
    fn atan2(&self, x: &Self) -> Self {
        f64::atan2(*self, *x)
    }
    fn sinh_cosh(&self) -> (Self, Self) {
        (f64::sinh(*self), f64::cosh(*self))
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
    fn to_decimal_string(&self) -> String {
        format!("{:e}", self)
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

/// Arbitrary-precision float at the process-wide working precision.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct MpFloat(pub Float);

impl MpFloat {
    pub fn new(x: Float) -> Self {
        MpFloat(x)
    }

    fn with<T>(v: T) -> Self
    where
        Float: rug::Assign<T>,
    {
        MpFloat(Float::with_val(working_precision(), v))
    }

    pub fn into_inner(self) -> Float {
        self.0
    }
}

impl fmt::Display for MpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "{:.*e}", p, self.0.to_f64()),
            None => write!(f, "{}", self.0.to_f64()),
        }
    }
}

macro_rules! forward_binop {
    ($Trait:ident, $method:ident, $AssignTrait:ident, $assign:ident) => {
        impl $Trait for MpFloat {
            type Output = MpFloat;
            #[inline]
            fn $method(self, rhs: MpFloat) -> MpFloat {
                MpFloat($Trait::$method(self.0, &rhs.0))
            }
        }
        impl<'a> $Trait<&'a MpFloat> for MpFloat {
            type Output = MpFloat;
            #[inline]
            fn $method(self, rhs: &'a MpFloat) -> MpFloat {
                MpFloat($Trait::$method(self.0, &rhs.0))
            }
        }
        impl<'a, 'b> $Trait<&'b MpFloat> for &'a MpFloat {
            type Output = MpFloat;
            #[inline]
            fn $method(self, rhs: &'b MpFloat) -> MpFloat {
                MpFloat($Trait::$method(self.0.clone(), &rhs.0))
            }
        }
        impl $AssignTrait for MpFloat {
            #[inline]
            fn $assign(&mut self, rhs: MpFloat) {
                $AssignTrait::$assign(&mut self.0, &rhs.0)
            }
        }
        impl<'a> $AssignTrait<&'a MpFloat> for MpFloat {
            #[inline]
            fn $assign(&mut self, rhs: &'a MpFloat) {
                $AssignTrait::$assign(&mut self.0, &rhs.0)
            }
        }
    };
}

forward_binop!(Add, add, AddAssign, add_assign);
forward_binop!(Sub, sub, SubAssign, sub_assign);
forward_binop!(Mul, mul, MulAssign, mul_assign);
forward_binop!(Div, div, DivAssign, div_assign);

impl Rem for MpFloat {
    type Output = MpFloat;
    fn rem(self, rhs: MpFloat) -> MpFloat {
        MpFloat(self.0 % &rhs.0)
    }
}

impl Neg for MpFloat {
    type Output = MpFloat;
    fn neg(self) -> MpFloat {
        MpFloat(-self.0)
    }
}

impl Zero for MpFloat {
    fn zero() -> Self {
        MpFloat::with(0)
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for MpFloat {
    fn one() -> Self {
        MpFloat::with(1)
    }
}

impl Num for MpFloat {
    type FromStrRadixErr = rug::float::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        let parsed = Float::parse_radix(s, radix as i32)?;
        Ok(MpFloat::with(parsed))
    }
}

impl Signed for MpFloat {
    fn abs(&self) -> Self {
        MpFloat(self.0.clone().abs())
    }
    fn abs_sub(&self, other: &Self) -> Self {
        let d = self.clone() - other;
        if d.0.is_sign_negative() {
            Self::zero()
        } else {
            d
        }
    }
    fn signum(&self) -> Self {
        MpFloat(self.0.clone().signum())
    }
    fn is_positive(&self) -> bool {
        self.0.cmp0() == Some(Ordering::Greater)
    }
    fn is_negative(&self) -> bool {
        self.0.cmp0() == Some(Ordering::Less)
    }
}

impl FromPrimitive for MpFloat {
    fn from_i64(n: i64) -> Option<Self> {
        Some(MpFloat::with(n))
    }
    fn from_u64(n: u64) -> Option<Self> {
        Some(MpFloat::with(n))
    }
    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then(|| MpFloat::with(x))
    }
}

impl ToPrimitive for MpFloat {
    fn to_i64(&self) -> Option<i64> {
        self.0.to_integer().and_then(|i| i.to_i64())
    }
    fn to_u64(&self) -> Option<u64> {
        self.0.to_integer().and_then(|i| i.to_u64())
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.0.to_f64())
    }
}

impl Sum for MpFloat {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(MpFloat::zero(), |acc, x| acc + &x)
    }
}

impl Real for MpFloat {
    fn int(n: i64) -> Self {
        MpFloat::with(n)
    }
    fn from_f64_exact(x: f64) -> Self {
        MpFloat::with(x)
    }
    fn from_ratio(num: &BigInt, den: &BigInt) -> Self {
        let n = rug::Integer::from_str_radix(&num.to_str_radix(16), 16).expect("hex digits");
        let d = rug::Integer::from_str_radix(&den.to_str_radix(16), 16).expect("hex digits");
        MpFloat(Float::with_val(working_precision(), n) / Float::with_val(working_precision(), d))
    }
    fn pi() -> Self {
        MpFloat::with(rug::float::Constant::Pi)
    }
    fn epsilon() -> Self {
        let prec = working_precision();
        MpFloat(Float::with_val(prec, 1) >> (prec as i32 - 1))
    }
    fn mantissa_bits() -> u32 {
        working_precision()
    }
    fn exp(&self) -> Self {
        MpFloat(self.0.clone().exp())
    }
    fn ln(&self) -> Self {
        MpFloat(self.0.clone().ln())
    }
    fn sqrt(&self) -> Self {
        MpFloat(self.0.clone().sqrt())
    }
    fn sin_cos(&self) -> (Self, Self) {
        let (s, c) = self.0.clone().sin_cos(Float::new(self.0.prec()));
        (MpFloat(s), MpFloat(c))
    }
    fn atan2(&self, x: &Self) -> Self {
        MpFloat(self.0.clone().atan2(&x.0))
    }
    fn sinh_cosh(&self) -> (Self, Self) {
        let (s, c) = self.0.clone().sinh_cosh(Float::new(self.0.prec()));
        (MpFloat(s), MpFloat(c))
    }
    fn to_f64_lossy(&self) -> f64 {
        self.0.to_f64()
    }
    fn to_decimal_string(&self) -> String {
        // log10(2) * bits significant digits, plus a guard digit.
        let digits = (self.0.prec() as f64 * std::f64::consts::LOG10_2).ceil() as usize + 1;
        format!("{:.*e}", digits, self.0)
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        Float::parse(s.trim()).ok().map(MpFloat::with)
    }
}

/// Complex value over a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

/// Transcendental helpers for complex numbers over non-`Copy` reals.
pub trait ComplexExt<T: Real> {
    fn from_real(x: T) -> Self;
    fn abs_val(&self) -> T;
    fn norm2(&self) -> T;
    fn exp_c(&self) -> Self;
    fn ln_c(&self) -> Self;
    fn sin_c(&self) -> Self;
    fn rscale(&self, k: &T) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn div_ref(&self, other: &Self) -> Self;
    fn conj_c(&self) -> Self;
    fn to_c64(&self) -> Complex<f64>;
}

impl<T: Real> ComplexExt<T> for Complex<T> {
    fn from_real(x: T) -> Self {
        Complex::new(x, T::zero())
    }
    fn abs_val(&self) -> T {
        self.norm2().sqrt()
    }
    fn norm2(&self) -> T {
        self.re.clone() * &self.re + self.im.clone() * &self.im
    }
    fn exp_c(&self) -> Self {
        let r = self.re.exp();
        let (s, c) = self.im.sin_cos();
        Complex::new(c * &r, s * &r)
    }
    fn ln_c(&self) -> Self {
        Complex::new(self.norm2().ln() / T::int(2), self.im.atan2(&self.re))
    }
    fn sin_c(&self) -> Self {
        let (s, c) = self.re.sin_cos();
        let (sh, ch) = self.im.sinh_cosh();
        Complex::new(s * &ch, c * &sh)
    }
    fn rscale(&self, k: &T) -> Self {
        Complex::new(self.re.clone() * k, self.im.clone() * k)
    }
    fn mul_ref(&self, other: &Self) -> Self {
        let re = self.re.clone() * &other.re - self.im.clone() * &other.im;
        let im = self.re.clone() * &other.im + self.im.clone() * &other.re;
        Complex::new(re, im)
    }
    fn div_ref(&self, other: &Self) -> Self {
        let d = other.norm2();
        let re = self.re.clone() * &other.re + self.im.clone() * &other.im;
        let im = self.im.clone() * &other.re - self.re.clone() * &other.im;
        Complex::new(re / &d, im / &d)
    }
    fn conj_c(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }
    fn to_c64(&self) -> Complex<f64> {
        Complex::new(self.re.to_f64_lossy(), self.im.to_f64_lossy())
    }
}

/// Converts a scalar between two [`Real`] implementations via its decimal string.
pub fn convert<A: Real, B: Real>(x: &A) -> B {
    B::parse_decimal(&x.to_decimal_string()).expect("decimal round trip")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mp_basic_arithmetic() {
        let two = MpFloat::int(2);
        let r = two.sqrt();
        let back = r.clone() * &r;
        assert!((back - &two).abs() < MpFloat::epsilon() * MpFloat::int(8));
    }

    #[test]
    fn mp_pi_digits() {
        let s = MpFloat::pi().to_decimal_string();
        assert!(s.starts_with("3.14159265358979323846264338327950288419716939937510"));
    }

    #[test]
    fn complex_exp_ln_inverse() {
        let z = Complex::new(MpFloat::from_f64_exact(0.75), MpFloat::from_f64_exact(-2.5));
        let w = z.ln_c().exp_c();
        assert!((w - z).norm2() < MpFloat::epsilon());
    }

    #[test]
    fn decimal_round_trip() {
        let x = MpFloat::int(1) / MpFloat::int(3);
        let y = MpFloat::parse_decimal(&x.to_decimal_string()).unwrap();
        assert!((x - y).abs() < MpFloat::epsilon());
    }

    #[test]
    fn f64_and_mp_agree_on_transcendentals() {
        let x = MpFloat::from_f64_exact(1.25);
        let (s, c) = x.sin_cos();
        assert!((s.to_f64_lossy() - 1.25f64.sin()).abs() < 1e-15);
        assert!((c.to_f64_lossy() - 1.25f64.cos()).abs() < 1e-15);
        assert!((x.atan2(&MpFloat::one()).to_f64_lossy() - 1.25f64.atan()).abs() < 1e-15);
    }
}
