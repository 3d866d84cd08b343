use std::fmt;

use crate::witness::ShapeError;

/// Opaque identity of one endpoint step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EndpointId(pub(crate) u64);

impl fmt::Display for EndpointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ep#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinearityKind {
    Reuse,
    Leak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, thiserror::Error)]
#[error("linearity violation ({kind:?}) on {endpoint}")]
pub struct LinearityError {
    pub kind: LinearityKind,
    pub endpoint: EndpointId,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Linearity(#[from] LinearityError),
    #[error("session cancelled")]
    Cancelled,
    #[error("peer disconnected")]
    Disconnected,
    #[error("operation `{op}` does not apply to shape {shape}")]
    WrongStep { op: &'static str, shape: String },
    #[error("expected {expected}, received {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("unexpected message: expected {expected}, got {found}")]
    UnexpectedMessage {
        expected: &'static str,
        found: &'static str,
    },
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("channel transfer is not supported over this transport")]
    UnsupportedTransfer,
    #[error("could not spawn session activity: {0}")]
    Spawn(String),
    #[error("codec error: {0}")]
    Codec(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("could not bind {addr}: {reason}")]
    Bind { addr: String, reason: String },
    #[error("could not connect to {addr}: {reason}")]
    Connect { addr: String, reason: String },
    #[error("handshake mismatch: expected {expected}, peer offered {offered}")]
    HandshakeMismatch { expected: String, offered: String },
    #[error("canceller already disposed")]
    CancellerDisposed,
}

impl SessionError {
    pub fn is_cancelled(&self) -> bool {
        matches!(self, SessionError::Cancelled)
    }

    pub fn is_reuse(&self) -> bool {
        matches!(
            self,
            SessionError::Linearity(LinearityError {
                kind: LinearityKind::Reuse,
                ..
            })
        )
    }
}

impl From<std::io::Error> for SessionError {
    fn from(e: std::io::Error) -> Self {
        SessionError::Io(e.to_string())
    }
}

pub type Result<T, E = SessionError> = std::result::Result<T, E>;
