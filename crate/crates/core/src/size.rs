//! Exact rational sizes and loads.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// An exact nonnegative rational, always kept in reduced form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Size(BigRational);

impl Size {
    pub fn zero() -> Self {
        Size(BigRational::zero())
    }

    pub fn one() -> Self {
        Size(BigRational::one())
    }

    pub fn from_integer(n: i64) -> Self {
        Size(BigRational::from_integer(BigInt::from(n)))
    }

    /// `num/den`; panics on a zero denominator.
    pub fn ratio(num: i64, den: i64) -> Self {
        Size(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_big(num: BigInt, den: BigInt) -> Self {
        Size(BigRational::new(num, den))
    }

    pub fn half() -> Self {
        Size::ratio(1, 2)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn recip(&self) -> Size {
        Size(self.0.recip())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// `Some(n)` when the value is the integer `n`.
    pub fn to_integer(&self) -> Option<i64> {
        if self.0.is_integer() {
            self.0.to_integer().to_i64()
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn min_of<'a>(a: &'a Size, b: &'a Size) -> &'a Size {
        if a <= b {
            a
        } else {
            b
        }
    }

    /// Parses an item size, which must lie in (0, 1].
    pub fn parse_item(text: &str) -> Result<Size, Error> {
        let s = parse_size(text)?;
        if !s.is_positive() || s > Size::one() {
            return Err(Error::SizeOutOfRange(text.trim().to_string()));
        }
        Ok(s)
    }
}

/// Parses `d+(.d+)?` or `d+/d+` into an exact rational.
pub fn parse_size(text: &str) -> Result<Size, Error> {
    let t = text.trim();
    let bad = || Error::MalformedSize(t.to_string());
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if let Some((num, den)) = t.split_once('/') {
        if !digits(num) || !digits(den) {
            return Err(bad());
        }
        let n = BigInt::from_str(num).map_err(|_| bad())?;
        let d = BigInt::from_str(den).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Size(BigRational::new(n, d)));
    }
    let (int_part, frac_part) = match t.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (t, None),
    };
    if !digits(int_part) {
        return Err(bad());
    }
    let mut num = BigInt::from_str(int_part).map_err(|_| bad())?;
    let mut den = BigInt::one();
    if let Some(f) = frac_part {
        if !digits(f) {
            return Err(bad());
        }
        let ten = BigInt::from(10);
        for b in f.bytes() {
            num = num * &ten + BigInt::from(b - b'0');
            den *= &ten;
        }
    }
    Ok(Size(BigRational::new(num, den)))
}

impl FromStr for Size {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_size(s)
    }
}

/// Always rendered as `p/q`.
impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr<Size> for Size {
            type Output = Size;
            fn $m(self, rhs: Size) -> Size {
                Size(self.0 $op rhs.0)
            }
        }
        impl<'a> $tr<&'a Size> for Size {
            type Output = Size;
            fn $m(self, rhs: &'a Size) -> Size {
                Size(self.0 $op &rhs.0)
            }
        }
        impl<'a> $tr<Size> for &'a Size {
            type Output = Size;
            fn $m(self, rhs: Size) -> Size {
                Size(&self.0 $op rhs.0)
            }
        }
        impl<'a, 'b> $tr<&'b Size> for &'a Size {
            type Output = Size;
            fn $m(self, rhs: &'b Size) -> Size {
                Size(&self.0 $op &rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for Size {
    type Output = Size;
    fn neg(self) -> Size {
        Size(-self.0)
    }
}

impl AddAssign<&Size> for Size {
    fn add_assign(&mut self, rhs: &Size) {
        self.0 += &rhs.0;
    }
}

impl AddAssign<Size> for Size {
    fn add_assign(&mut self, rhs: Size) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Size> for Size {
    fn sub_assign(&mut self, rhs: &Size) {
        self.0 -= &rhs.0;
    }
}

impl Sum for Size {
    fn sum<I: Iterator<Item = Size>>(iter: I) -> Size {
        iter.fold(Size::zero(), |a, b| a + b)
    }
}

impl<'a> Sum<&'a Size> for Size {
    fn sum<I: Iterator<Item = &'a Size>>(iter: I) -> Size {
        iter.fold(Size::zero(), |a, b| a + b)
    }
}

impl From<i64> for Size {
    fn from(n: i64) -> Self {
        Size::from_integer(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_exact_decimals_and_fractions() {
        assert_eq!(parse_size("0.5").unwrap(), Size::ratio(1, 2));
        assert_eq!(parse_size("1/12").unwrap(), Size::ratio(1, 12));
        assert_eq!(parse_size("0.3").unwrap(), Size::ratio(3, 10));
        assert_eq!(parse_size("0.1").unwrap(), Size::ratio(1, 10));
        assert_eq!(parse_size("2/4").unwrap(), Size::ratio(1, 2));
        assert_eq!(parse_size(" 1 ").unwrap(), Size::one());
    }

    #[test]
    fn rejects_malformed_text() {
        for t in ["", ".5", "1.", "a", "1/0", "-1", "1/-2", "1e3", "0.5.5", "/3"] {
            assert!(parse_size(t).is_err(), "{t:?} should fail");
        }
    }

    #[test]
    fn item_sizes_must_be_in_unit_interval() {
        assert!(Size::parse_item("0").is_err());
        assert!(Size::parse_item("3/2").is_err());
        assert!(Size::parse_item("1").is_ok());
    }

    #[test]
    fn display_is_reduced_fraction() {
        assert_eq!(Size::ratio(6, 8).to_string(), "3/4");
        assert_eq!(Size::zero().to_string(), "0/1");
        assert_eq!(parse_size(&Size::ratio(7, 3).to_string()).unwrap(), Size::ratio(7, 3));
    }
}
