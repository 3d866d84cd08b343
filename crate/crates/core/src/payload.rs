//! Payload domains carried by `Send`/`Recv` steps.
//!
//! Every value that crosses a session is lowered to a [`PayloadValue`], a
//! closed set of representations that the codecs know how to move over the
//! wire. A [`PayloadDescriptor`] names a domain (the tag that shows up in
//! shape renderings and traces) together with the representation it uses,
//! so application types such as a mining block can reuse `bytes` while
//! still being distinguished in protocols.

use std::fmt;
use std::str::FromStr;

/// Wire representation of a payload domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Repr {
    Unit,
    Int,
    UInt,
    IntTriple,
    Bytes,
    OptBytes,
    Str,
    Decimal,
    Vector2,
}

/// Identifies a serializable value domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PayloadDescriptor {
    tag: &'static str,
    repr: Repr,
}

impl PayloadDescriptor {
    pub const UNIT: Self = Self::custom("unit", Repr::Unit);
    pub const INT: Self = Self::custom("int", Repr::Int);
    pub const UINT: Self = Self::custom("uint", Repr::UInt);
    pub const INT_TRIPLE: Self = Self::custom("int3", Repr::IntTriple);
    pub const BYTES: Self = Self::custom("bytes", Repr::Bytes);
    pub const OPT_BYTES: Self = Self::custom("bytes?", Repr::OptBytes);
    pub const STRING: Self = Self::custom("string", Repr::Str);
    pub const DECIMAL: Self = Self::custom("decimal", Repr::Decimal);
    pub const VECTOR2: Self = Self::custom("vec2", Repr::Vector2);

    /// The built-in domains, in a fixed order.
    pub const BUILTIN: [Self; 9] = [
        Self::UNIT,
        Self::INT,
        Self::UINT,
        Self::INT_TRIPLE,
        Self::BYTES,
        Self::OPT_BYTES,
        Self::STRING,
        Self::DECIMAL,
        Self::VECTOR2,
    ];

    /// Declares an application domain. `tag` must consist of lowercase ASCII
    /// letters, digits, `-` or `?` so it survives shape rendering.
    pub const fn custom(tag: &'static str, repr: Repr) -> Self {
        Self { tag, repr }
    }

    pub fn tag(&self) -> &'static str {
        self.tag
    }

    pub fn repr(&self) -> Repr {
        self.repr
    }

    pub(crate) fn valid_tag_char(c: char) -> bool {
        c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '?'
    }
}

impl fmt::Display for PayloadDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag)
    }
}

/// Fixed-point decimal kept in its textual form so amounts never drift.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decimal(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid decimal literal {0:?}")]
pub struct InvalidDecimal(pub String);

impl Decimal {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for Decimal {
    type Err = InvalidDecimal;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix('-').unwrap_or(s);
        let (int, frac) = match digits.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (digits, None),
        };
        let all_digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
        if all_digits(int) && frac.is_none_or(all_digits) {
            Ok(Decimal(s.to_string()))
        } else {
            Err(InvalidDecimal(s.to_string()))
        }
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A point or direction in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vector2 {
    pub x: f64,
    pub y: f64,
}

impl Vector2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn cross(self, other: Vector2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn bits(self) -> (u64, u64) {
        (self.x.to_bits(), self.y.to_bits())
    }
}

impl std::ops::Sub for Vector2 {
    type Output = Vector2;

    fn sub(self, other: Vector2) -> Vector2 {
        Vector2::new(self.x - other.x, self.y - other.y)
    }
}

impl fmt::Display for Vector2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A payload in one of the wire representations.
#[derive(Debug, Clone, PartialEq)]
pub enum PayloadValue {
    Unit,
    Int(i64),
    UInt(u32),
    IntTriple(i64, i64, i64),
    Bytes(Vec<u8>),
    OptBytes(Option<Vec<u8>>),
    Str(String),
    Decimal(Decimal),
    Vector2(Vector2),
}

impl PayloadValue {
    pub fn repr(&self) -> Repr {
        match self {
            PayloadValue::Unit => Repr::Unit,
            PayloadValue::Int(_) => Repr::Int,
            PayloadValue::UInt(_) => Repr::UInt,
            PayloadValue::IntTriple(..) => Repr::IntTriple,
            PayloadValue::Bytes(_) => Repr::Bytes,
            PayloadValue::OptBytes(_) => Repr::OptBytes,
            PayloadValue::Str(_) => Repr::Str,
            PayloadValue::Decimal(_) => Repr::Decimal,
            PayloadValue::Vector2(_) => Repr::Vector2,
        }
    }

    /// Structural equality that compares floats bit for bit.
    pub fn same_bits(&self, other: &PayloadValue) -> bool {
        match (self, other) {
            (PayloadValue::Vector2(a), PayloadValue::Vector2(b)) => a.bits() == b.bits(),
            _ => self == other,
        }
    }
}

/// A Rust type usable as a session payload.
pub trait Payload: Sized + std::marker::Send + 'static {
    fn descriptor() -> PayloadDescriptor;
    fn into_value(self) -> PayloadValue;
    fn from_value(value: PayloadValue) -> Option<Self>;
}

macro_rules! builtin_payload {
    ($ty:ty, $desc:expr, $variant:ident) => {
        impl Payload for $ty {
            fn descriptor() -> PayloadDescriptor {
                $desc
            }
            fn into_value(self) -> PayloadValue {
                PayloadValue::$variant(self)
            }
            fn from_value(value: PayloadValue) -> Option<Self> {
                match value {
                    PayloadValue::$variant(v) => Some(v),
                    _ => None,
                }
            }
        }
    };
}

builtin_payload!(i64, PayloadDescriptor::INT, Int);
builtin_payload!(u32, PayloadDescriptor::UINT, UInt);
builtin_payload!(Vec<u8>, PayloadDescriptor::BYTES, Bytes);
builtin_payload!(Option<Vec<u8>>, PayloadDescriptor::OPT_BYTES, OptBytes);
builtin_payload!(String, PayloadDescriptor::STRING, Str);
builtin_payload!(Decimal, PayloadDescriptor::DECIMAL, Decimal);
builtin_payload!(Vector2, PayloadDescriptor::VECTOR2, Vector2);

impl Payload for () {
    fn descriptor() -> PayloadDescriptor {
        PayloadDescriptor::UNIT
    }
    fn into_value(self) -> PayloadValue {
        PayloadValue::Unit
    }
    fn from_value(value: PayloadValue) -> Option<Self> {
        matches!(value, PayloadValue::Unit).then_some(())
    }
}

impl Payload for (i64, i64, i64) {
    fn descriptor() -> PayloadDescriptor {
        PayloadDescriptor::INT_TRIPLE
    }
    fn into_value(self) -> PayloadValue {
        PayloadValue::IntTriple(self.0, self.1, self.2)
    }
    fn from_value(value: PayloadValue) -> Option<Self> {
        match value {
            PayloadValue::IntTriple(a, b, c) => Some((a, b, c)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_literals() {
        assert!("90.00".parse::<Decimal>().is_ok());
        assert!("-3".parse::<Decimal>().is_ok());
        assert!("1.".parse::<Decimal>().is_err());
        assert!(".5".parse::<Decimal>().is_err());
        assert!("1e3".parse::<Decimal>().is_err());
    }

    #[test]
    fn builtin_tags_are_renderable() {
        for d in PayloadDescriptor::BUILTIN {
            assert!(d.tag().chars().all(PayloadDescriptor::valid_tag_char), "{d}");
        }
    }

    #[test]
    fn payload_conversion_rejects_other_repr() {
        assert_eq!(i64::from_value(PayloadValue::UInt(3)), None);
        assert_eq!(<()>::from_value(PayloadValue::Unit), Some(()));
        assert_eq!(
            <(i64, i64, i64)>::from_value((16, 3, 2).into_value()),
            Some((16, 3, 2))
        );
    }
}
