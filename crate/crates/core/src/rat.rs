//! Arbitrary-precision rational scalars and the conversions the rest of the
//! toolkit needs: text parsing and formatting, binomial coefficients, and
//! bridges between `num` types (used for series arithmetic) and `rug` types
//! (used for fast convolution and directed-rounding evaluation).

use num_bigint::{BigInt, Sign};
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type Int = BigInt;
pub type Rat = num_rational::BigRational;

/// Rational from a machine-integer pair. Panics on q = 0.
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(Int::from(p), Int::from(q))
}

/// Rational from a machine integer.
pub fn rat_int(p: i64) -> Rat {
    Rat::from_integer(Int::from(p))
}

/// Parses "p/q" or a bare integer, with optional sign. Rejects empty input,
/// junk, and zero denominators. Does not trim whitespace; callers that read
/// files trim first so error positions stay honest.
pub fn parse_rat(s: &str) -> Result<Rat> {
    if s.is_empty() {
        return Err(Error::Domain("empty rational literal".into()));
    }
    match s.split_once('/') {
        None => s
            .parse::<Int>()
            .map(Rat::from_integer)
            .map_err(|e| Error::Domain(format!("invalid integer literal {s:?}: {e}"))),
        Some((p, q)) => {
            let p: Int = p
                .parse()
                .map_err(|e| Error::Domain(format!("invalid numerator in {s:?}: {e}")))?;
            let q: Int = q
                .parse()
                .map_err(|e| Error::Domain(format!("invalid denominator in {s:?}: {e}")))?;
            if q.is_zero() {
                return Err(Error::Domain(format!("zero denominator in {s:?}")));
            }
            Ok(Rat::new(p, q))
        }
    }
}

/// Canonical text form "p/q": reduced, denominator positive, always with the
/// slash so readers never guess. Round-trips bit-exactly through `parse_rat`.
pub fn format_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Serde adapter writing a `Rat` field as its canonical "p/q" string, for
/// report structs that must serialize exact values without loss.
pub mod serde_rat {
    use serde::Serializer;

    use super::{format_rat, Rat};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(r))
    }
}

/// Serde adapter for `Option<Rat>` fields: `None` stays JSON null, `Some`
/// becomes the canonical "p/q" string.
pub mod serde_rat_opt {
    use serde::Serializer;

    use super::{format_rat, Rat};

    pub fn serialize<S: Serializer>(
        r: &Option<Rat>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(v) => s.serialize_some(&format_rat(v)),
            None => s.serialize_none(),
        }
    }
}

/// Exact binomial coefficient, 0 when k > n. Multiplies and divides in an
/// order that keeps every intermediate an integer.
pub fn binomial(n: u64, k: u64) -> Int {
    if k > n {
        return Int::zero();
    }
    let k = k.min(n - k);
    let mut acc = Int::one();
    for i in 1..=k {
        acc = acc * Int::from(n - k + i) / Int::from(i);
    }
    acc
}

/// Exact factorial.
pub fn factorial(n: u64) -> Int {
    let mut acc = Int::one();
    for i in 2..=n {
        acc *= Int::from(i);
    }
    acc
}

/// `num` integer to `rug` integer, preserving sign.
pub fn int_to_rug(i: &Int) -> rug::Integer {
    let (sign, bytes) = i.to_bytes_le();
    let mut out = rug::Integer::from_digits(&bytes, rug::integer::Order::Lsf);
    if sign == Sign::Minus {
        out = -out;
    }
    out
}

/// `rug` integer to `num` integer, preserving sign.
pub fn rug_to_int(i: &rug::Integer) -> Int {
    let bytes = i.to_digits::<u8>(rug::integer::Order::Lsf);
    let sign = match i.cmp0() {
        std::cmp::Ordering::Less => Sign::Minus,
        std::cmp::Ordering::Equal => Sign::NoSign,
        std::cmp::Ordering::Greater => Sign::Plus,
    };
    Int::from_bytes_le(sign, &bytes)
}

/// `num` rational to `rug` rational.
pub fn rat_to_rug(r: &Rat) -> rug::Rational {
    rug::Rational::from((int_to_rug(r.numer()), int_to_rug(r.denom())))
}

/// `rug` rational to `num` rational.
pub fn rug_to_rat(r: &rug::Rational) -> Rat {
    Rat::new(rug_to_int(r.numer()), rug_to_int(r.denom()))
}
