use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// Exact rational numbers backed by arbitrary-precision integers.
pub type Rational = BigRational;

/// Numeric engine used by every algorithm in the workspace.
///
/// Two implementations exist: [`Rational`] (exact) and `f64`.  Code that
/// needs a tolerance asks for [`Scalar::tol`], which is zero for the exact
/// engine.
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + Display + Send + Sync + 'static
{
    const EXACT: bool;
    const ENGINE: &'static str;

    fn from_rational(r: &Rational) -> Self;
    fn to_rational(&self) -> Rational;
    fn to_f64(&self) -> f64;
    /// For the exact engine this is the exact binary value of `x`.
    fn from_f64(x: f64) -> Self;

    fn ratio(n: i64, d: i64) -> Self {
        Self::from_rational(&Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    fn from_usize(n: usize) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(n)))
    }

    fn tol(x: f64) -> Self {
        if Self::EXACT {
            Self::zero()
        } else {
            Self::from_f64(x)
        }
    }

    /// Square root; exact for rational perfect squares, rounded through
    /// `f64` otherwise.
    fn sqrt(&self) -> Self;

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
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const ENGINE: &'static str = "float";

    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }

    fn to_rational(&self) -> Rational {
        Rational::from_float(*self).unwrap_or_else(Rational::zero)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn ratio(n: i64, d: i64) -> Self {
        n as f64 / d as f64
    }

    fn from_usize(n: usize) -> Self {
        n as f64
    }

    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    const ENGINE: &'static str = "rational";

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn from_f64(x: f64) -> Self {
        Rational::from_float(x).unwrap_or_else(Rational::zero)
    }

    fn sqrt(&self) -> Self {
        if self.is_negative() {
            return Rational::zero();
        }
        let n = self.numer().sqrt();
        let d = self.denom().sqrt();
        if &(&n * &n) == self.numer() && &(&d * &d) == self.denom() {
            return Rational::new(n, d);
        }
        Self::from_f64(rational_to_f64(self).sqrt())
    }
}

/// Correctly handles numerators and denominators beyond the `f64` range.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let bits_n = r.numer().bits() as i64;
    let bits_d = r.denom().bits() as i64;
    let shift = bits_n - bits_d - 60;
    let scaled = if shift > 0 {
        r / Rational::from_integer(BigInt::one() << shift as usize)
    } else {
        r * Rational::from_integer(BigInt::one() << (-shift) as usize)
    };
    let base = scaled.to_integer().to_f64().unwrap_or(0.0);
    base * 2f64.powi(shift as i32)
}

/// `|a - b| <= tol`, exact equality for the rational engine.
pub fn approx_eq<T: Scalar>(a: &T, b: &T, tol: f64) -> bool {
    if T::EXACT {
        a == b
    } else {
        (a.clone() - b.clone()).abs() <= T::from_f64(tol)
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn sum<T: Scalar>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |acc, x| acc + x.clone())
}

/// Tolerances used across the workspace for the float engine.
pub mod tol {
    /// Distribution sums.
    pub const DIST: f64 = 1e-12;
    /// Residual of iterative linear solves.
    pub const RESIDUAL: f64 = 1e-10;
    /// Geometric predicates (containment, pruning, vertex classification).
    pub const GEOM: f64 = 1e-9;
}
