use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::{Error, Result};

/// An exponent in `[1, ∞]`, or the extended-real value of a derived exponent
/// such as κ. The infinite value is a distinct variant so that formulas take
/// their max-limit branch explicitly instead of pushing `f64::INFINITY`
/// through powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    /// Validates a Lebesgue exponent: finite values must be ≥ 1, and
    /// `f64::INFINITY` maps to [`Exponent::Infinite`].
    pub fn new(value: f64) -> Result<Self> {
        if value == f64::INFINITY {
            Ok(Exponent::Infinite)
        } else if value.is_finite() && value >= 1.0 {
            Ok(Exponent::Finite(value))
        } else {
            Err(Error::InvalidExponent(value))
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Exponent::Finite(v) => Some(v),
            Exponent::Infinite => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Exponent::Finite(v) => v,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    /// Reciprocal, with `1/∞ = 0`.
    pub fn recip(self) -> f64 {
        match self {
            Exponent::Finite(v) => 1.0 / v,
            Exponent::Infinite => 0.0,
        }
    }

    /// Hölder conjugate `r/(r−1)`, with `1 ↔ ∞`.
    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::Infinite => Exponent::Finite(1.0),
            Exponent::Finite(1.0) => Exponent::Infinite,
            Exponent::Finite(v) => Exponent::Finite(v / (v - 1.0)),
        }
    }

    /// The exponent `ab/(b−a)` for `a ≤ b` (∞ when `a = b`). This is the
    /// exponent `s` with `1/s = 1/a − 1/b`, so it is computed from
    /// reciprocals to cover `b = ∞` as well.
    pub fn gap(a: Exponent, b: Exponent) -> Exponent {
        let inv = a.recip() - b.recip();
        if a == b || inv <= 0.0 {
            Exponent::Infinite
        } else {
            Exponent::Finite(1.0 / inv)
        }
    }

    /// ℓ^r norm of a list of nonnegative magnitudes, evaluated with max-scaling
    /// so large exponents do not overflow.
    pub fn norm_of(self, magnitudes: &[f64]) -> f64 {
        let max = magnitudes.iter().copied().fold(0.0_f64, f64::max);
        match self {
            Exponent::Infinite => max,
            Exponent::Finite(r) => {
                if max == 0.0 {
                    return 0.0;
                }
                let sum: f64 = magnitudes.iter().map(|m| (m / max).powf(r)).sum();
                max * sum.powf(1.0 / r)
            }
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(v) => write!(f, "{v}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

/// Accepts `inf`, `infinity`, `∞`, or a number ≥ 1.
impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinite),
            other => other.parse::<f64>().map_err(|_| Error::InvalidExponent(f64::NAN)).and_then(Exponent::new),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(v) => serializer.serialize_f64(*v),
            Exponent::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ExpVisitor;

        impl Visitor<'_> for ExpVisitor {
            type Value = Exponent;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number ≥ 1 or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exponent, E> {
                Exponent::new(v).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
                self.visit_f64(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(ExpVisitor)
    }
}
