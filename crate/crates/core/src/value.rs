//! Nonnegative reals extended with a top element.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

/// An element of the nonnegative reals extended with infinity.
///
/// Stored as an `f64` that is never NaN and never negative; `-0.0` is
/// normalized to `0.0` so equal values are also bitwise equal. The min-max
/// product only ever selects existing entries, so comparisons on
/// `ExtValue` are exact.
#[derive(Clone, Copy, Default, PartialEq, PartialOrd)]
#[repr(transparent)]
pub struct ExtValue(f64);

impl ExtValue {
    pub const ZERO: ExtValue = ExtValue(0.0);
    pub const INFINITY: ExtValue = ExtValue(f64::INFINITY);

    /// Returns `None` for NaN and negative inputs.
    pub fn new(value: f64) -> Option<Self> {
        if value.is_nan() || value < 0.0 {
            return None;
        }
        // -0.0 < 0.0 is false, so it lands here; fold it onto +0.0.
        Some(ExtValue(if value == 0.0 { 0.0 } else { value }))
    }

    pub fn finite(value: f64) -> Option<Self> {
        if value.is_finite() {
            Self::new(value)
        } else {
            None
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        !self.is_infinite()
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    #[inline]
    pub fn max(self, other: Self) -> Self {
        if self.0 >= other.0 {
            self
        } else {
            other
        }
    }

    #[inline]
    pub fn min(self, other: Self) -> Self {
        if self.0 <= other.0 {
            self
        } else {
            other
        }
    }
}

impl Eq for ExtValue {}

impl Ord for ExtValue {
    fn cmp(&self, other: &Self) -> Ordering {
        // No NaN by construction.
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }
}

impl std::hash::Hash for ExtValue {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl From<u32> for ExtValue {
    fn from(v: u32) -> Self {
        ExtValue(f64::from(v))
    }
}

impl TryFrom<f64> for ExtValue {
    type Error = f64;

    fn try_from(v: f64) -> Result<Self, f64> {
        ExtValue::new(v).ok_or(v)
    }
}

/// Finite values print with the shortest representation that reads back
/// to the same `f64`; infinity prints as `inf`.
impl fmt::Display for ExtValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Debug for ExtValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseExtValueError(pub String);

impl fmt::Display for ParseExtValueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "not a nonnegative number or `inf`: {:?}", self.0)
    }
}

impl std::error::Error for ParseExtValueError {}

impl FromStr for ExtValue {
    type Err = ParseExtValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(ExtValue::INFINITY);
        }
        let v: f64 = t.parse().map_err(|_| ParseExtValueError(s.to_string()))?;
        if v.is_infinite() {
            // Only the `inf` spelling is accepted for infinity.
            return Err(ParseExtValueError(s.to_string()));
        }
        ExtValue::new(v).ok_or_else(|| ParseExtValueError(s.to_string()))
    }
}

impl Serialize for ExtValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}
