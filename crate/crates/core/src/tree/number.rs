//! Canonical decimal representation of JSON numbers.
//!
//! A number is stored as `sign * digits * 10^exponent` where `digits` has no
//! leading or trailing zeros. Zero is the empty digit string with exponent 0
//! and no sign, so `0`, `-0`, `0.0` and `0e5` all canonicalize to the same
//! value. Two numbers are equal iff their canonical forms are equal, which is
//! numeric equality for every decimal that JSON can spell.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Number {
    negative: bool,
    digits: String,
    exponent: i64,
}

/// Exponents beyond this magnitude are rejected by the parser.
pub(crate) const MAX_EXPONENT: i64 = 1 << 40;

impl Number {
    pub fn zero() -> Self {
        Number {
            negative: false,
            digits: String::new(),
            exponent: 0,
        }
    }

    /// Builds a canonical number from raw integer and fraction digit runs.
    pub(crate) fn from_parts(
        negative: bool,
        int_digits: &str,
        frac_digits: &str,
        exponent: i64,
    ) -> Option<Self> {
        let mut digits = String::with_capacity(int_digits.len() + frac_digits.len());
        digits.push_str(int_digits);
        digits.push_str(frac_digits);
        let exponent = exponent.checked_sub(frac_digits.len() as i64)?;

        let trimmed = digits.trim_start_matches('0');
        if trimmed.is_empty() {
            return Some(Number::zero());
        }
        let without_trailing = trimmed.trim_end_matches('0');
        let shift = (trimmed.len() - without_trailing.len()) as i64;
        let exponent = exponent.checked_add(shift)?;
        if exponent.abs() > MAX_EXPONENT {
            return None;
        }
        Some(Number {
            negative,
            digits: without_trailing.to_string(),
            exponent,
        })
    }

    pub fn from_i64(value: i64) -> Self {
        let digits = value.unsigned_abs().to_string();
        Number::from_parts(value < 0, &digits, "", 0).expect("small exponent")
    }

    pub fn is_zero(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }
}

impl std::str::FromStr for Number {
    type Err = super::ParseError;

    /// Parses JSON number syntax.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = super::parse_document(s)?;
        match t.label(t.root()) {
            super::Label::Literal(super::Literal::Number(n)) if t.len() == 1 => Ok(n.clone()),
            _ => Err(super::ParseError {
                offset: 0,
                kind: super::ParseErrorKind::InvalidNumber,
            }),
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        if self.negative {
            f.write_str("-")?;
        }
        let len = self.digits.len() as i64;
        // position of the decimal point relative to the start of `digits`
        let point = len + self.exponent;
        if self.exponent >= 0 && point <= 21 {
            f.write_str(&self.digits)?;
            for _ in 0..self.exponent {
                f.write_str("0")?;
            }
            Ok(())
        } else if self.exponent < 0 && point > 0 {
            let (int, frac) = self.digits.split_at(point as usize);
            write!(f, "{int}.{frac}")
        } else if self.exponent < 0 && point > -6 {
            f.write_str("0.")?;
            for _ in 0..(-point) {
                f.write_str("0")?;
            }
            f.write_str(&self.digits)
        } else {
            let (first, rest) = self.digits.split_at(1);
            f.write_str(first)?;
            if !rest.is_empty() {
                write!(f, ".{rest}")?;
            }
            let exp = point - 1;
            if exp >= 0 {
                write!(f, "e+{exp}")
            } else {
                write!(f, "e{exp}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(neg: bool, i: &str, fr: &str, e: i64) -> Number {
        Number::from_parts(neg, i, fr, e).unwrap()
    }

    #[test]
    fn equal_spellings_canonicalize() {
        let one = num(false, "1", "", 0);
        assert_eq!(one, num(false, "1", "0", 0));
        assert_eq!(one, num(false, "1", "", 0));
        assert_eq!(one, num(false, "10", "", -1));
        assert_eq!(num(false, "1", "", 2), num(false, "100", "", 0));
        assert_eq!(num(false, "125", "", 0), num(false, "125", "0", 0));
        assert_eq!(num(true, "0", "", 0), Number::zero());
        assert_eq!(num(false, "0", "000", 7), Number::zero());
        assert_ne!(num(true, "1", "", 0), one);
    }

    #[test]
    fn display_forms() {
        assert_eq!(num(false, "1", "0", 0).to_string(), "1");
        assert_eq!(num(true, "12", "5", 0).to_string(), "-12.5");
        assert_eq!(num(false, "0", "0012", 0).to_string(), "0.0012");
        assert_eq!(num(false, "1", "", 30).to_string(), "1e+30");
        assert_eq!(num(false, "15", "", -20).to_string(), "1.5e-19");
        assert_eq!(num(false, "1", "", 21).to_string(), "1e+21");
        assert_eq!(num(false, "1", "", 20).to_string(), "100000000000000000000");
        assert_eq!(Number::from_i64(-42).to_string(), "-42");
    }

    #[test]
    fn display_reparses() {
        for text in ["0", "-12.5", "1e+30", "1.5e-19", "0.0012", "123456"] {
            let n: Number = text.parse().unwrap();
            assert_eq!(n.to_string(), text);
        }
        assert!("\"1\"".parse::<Number>().is_err());
    }

    #[test]
    fn huge_exponent_rejected() {
        assert!(Number::from_parts(false, "1", "", MAX_EXPONENT + 1).is_none());
        // trailing zeros are folded before the range check
        assert!(Number::from_parts(false, "0", "", i64::MAX / 2).is_some());
    }
}
