//! Functional-equation data shared by every module.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Root number of the functional equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_int(e: i64) -> Result<Self> {
        match e {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {e}"))),
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        s.value() as i8
    }
}

impl TryFrom<i8> for Sign {
    type Error = Error;
    fn try_from(v: i8) -> Result<Self> {
        Sign::from_int(v as i64)
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// `Lambda(s) = N^{s/2} Gamma_C(s + 1/2)^2 L(s) = epsilon Lambda(1 - s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalEquationParams<T> {
    pub level: u64,
    pub sign: Sign,
    /// `Q = sqrt(N) / (4 pi^2)`.
    pub q: T,
}

impl<T: Real> FunctionalEquationParams<T> {
    pub const DEGREE: u32 = 4;

    pub fn new(level: u64, sign: Sign) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidArgument("level must be positive".into()));
        }
        let pi = T::pi();
        let q = T::int(level as i64).sqrt() / (pi.clone() * &pi * T::int(4));
        Ok(FunctionalEquationParams { level, sign, q })
    }

    /// Shift `1/2` of each of the two `Gamma_C` factors.
    pub fn gamma_shift() -> BigRational {
        BigRational::new(BigInt::from(1), BigInt::from(2))
    }

    pub fn degree(&self) -> u32 {
        Self::DEGREE
    }

    /// `sqrt(N)`, the scale in the weight decay `exp(C sqrt(n / sqrt(N)))`.
    pub fn sqrt_level(&self) -> f64 {
        (self.level as f64).sqrt()
    }

    pub fn epsilon(&self) -> i64 {
        self.sign.value()
    }
}
