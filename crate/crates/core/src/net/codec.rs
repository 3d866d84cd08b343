//! Payload encodings for the framed transport.
//!
//! The default [`JsonCodec`] maps each representation to one JSON value:
//!
//! | representation | JSON                                   |
//! |----------------|----------------------------------------|
//! | unit           | `null`                                 |
//! | int, uint      | number                                 |
//! | int3           | `[a, b, c]`                            |
//! | bytes          | base64 string (standard alphabet)      |
//! | bytes?         | `null` or base64 string                |
//! | string         | string                                 |
//! | decimal        | string holding the decimal literal     |
//! | vec2           | `[x, y]`, shortest round-trip floats   |

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde_json::{json, Value};

use crate::payload::{PayloadDescriptor, PayloadValue, Repr, Vector2};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("payload does not fit domain {expected}")]
    Domain { expected: String },
    #[error("value cannot be encoded: {0}")]
    Unencodable(String),
}

/// Converts payload values to bytes and back. `decode` is told which domain
/// to expect, since the wire carries no type information.
pub trait Codec: Send + Sync {
    fn encode(&self, value: &PayloadValue) -> Result<Vec<u8>, CodecError>;
    fn decode(&self, bytes: &[u8], expected: PayloadDescriptor) -> Result<PayloadValue, CodecError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct JsonCodec;

fn b64(bytes: &[u8]) -> Value {
    Value::String(STANDARD.encode(bytes))
}

impl Codec for JsonCodec {
    fn encode(&self, value: &PayloadValue) -> Result<Vec<u8>, CodecError> {
        let json = match value {
            PayloadValue::Unit => Value::Null,
            PayloadValue::Int(n) => json!(n),
            PayloadValue::UInt(n) => json!(n),
            PayloadValue::IntTriple(a, b, c) => json!([a, b, c]),
            PayloadValue::Bytes(b) => b64(b),
            PayloadValue::OptBytes(None) => Value::Null,
            PayloadValue::OptBytes(Some(b)) => b64(b),
            PayloadValue::Str(s) => json!(s),
            PayloadValue::Decimal(d) => json!(d.as_str()),
            PayloadValue::Vector2(v) => {
                if !(v.x.is_finite() && v.y.is_finite()) {
                    return Err(CodecError::Unencodable(format!("non-finite vector {v}")));
                }
                json!([v.x, v.y])
            }
        };
        serde_json::to_vec(&json).map_err(|e| CodecError::Unencodable(e.to_string()))
    }

    fn decode(&self, bytes: &[u8], expected: PayloadDescriptor) -> Result<PayloadValue, CodecError> {
        let json: Value =
            serde_json::from_slice(bytes).map_err(|e| CodecError::Malformed(e.to_string()))?;
        let domain = || CodecError::Domain {
            expected: expected.to_string(),
        };
        let bytes_of = |v: &Value| -> Result<Vec<u8>, CodecError> {
            let s = v.as_str().ok_or_else(domain)?;
            STANDARD
                .decode(s)
                .map_err(|e| CodecError::Malformed(e.to_string()))
        };
        let int = |v: &Value| v.as_i64().ok_or_else(domain);
        let float = |v: &Value| v.as_f64().ok_or_else(domain);
        Ok(match expected.repr() {
            Repr::Unit if json.is_null() => PayloadValue::Unit,
            Repr::Unit => return Err(domain()),
            Repr::Int => PayloadValue::Int(int(&json)?),
            Repr::UInt => {
                let n = json.as_u64().ok_or_else(domain)?;
                PayloadValue::UInt(u32::try_from(n).map_err(|_| domain())?)
            }
            Repr::IntTriple => match json.as_array().map(Vec::as_slice) {
                Some([a, b, c]) => PayloadValue::IntTriple(int(a)?, int(b)?, int(c)?),
                _ => return Err(domain()),
            },
            Repr::Bytes => PayloadValue::Bytes(bytes_of(&json)?),
            Repr::OptBytes if json.is_null() => PayloadValue::OptBytes(None),
            Repr::OptBytes => PayloadValue::OptBytes(Some(bytes_of(&json)?)),
            Repr::Str => PayloadValue::Str(json.as_str().ok_or_else(domain)?.to_string()),
            Repr::Decimal => {
                let s = json.as_str().ok_or_else(domain)?;
                PayloadValue::Decimal(s.parse().map_err(|_| domain())?)
            }
            Repr::Vector2 => match json.as_array().map(Vec::as_slice) {
                Some([x, y]) => PayloadValue::Vector2(Vector2::new(float(x)?, float(y)?)),
                _ => return Err(domain()),
            },
        })
    }
}
