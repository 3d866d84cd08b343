//! Binary session-typed channels.
//!
//! A protocol is described once with the combinators in [`types`]; the
//! resulting [`Dual`] witness guarantees that the two ends follow dual
//! shapes. Sessions run between threads ([`Dual::fork_thread`]) or over TCP
//! ([`Dual::listen`] / [`Dual::connect`]), and every operation consumes the
//! endpoint and returns the endpoint for the next step.
//!
//! Besides plain sends, receives and binary choices the library supports
//! delegation (passing a session over a session), bound output
//! ([`Session::deleg_new`]), recursion through goto jumps into a session
//! environment, and delayed input ([`Session::receive_async`]), which is
//! what makes it possible to cancel a running session from outside.
//!
//! The value level ([`ProtocolShape`], [`DualWitness`], [`Endpoint`]) is
//! available as well and checks linearity dynamically.

pub mod endpoint;
pub mod error;
pub mod leak;
pub mod net;
pub mod payload;
pub mod session;
pub mod shape;
pub mod token;
pub mod trace;
mod transport;
pub mod types;
pub mod witness;

pub use endpoint::{fork_thread, fork_thread_env, Branch, Endpoint, PendingBranch};
pub use error::{EndpointId, LinearityError, LinearityKind, Result, SessionError};
pub use leak::LeakTracker;
pub use net::{Listener, SessionCanceller};
pub use payload::{Decimal, Payload, PayloadDescriptor, PayloadValue, Repr, Vector2};
pub use session::{PendingOffer, Session};
pub use shape::{dual_of, ProtocolShape};
pub use token::{pending_tokens, when_any, Completion, CompletionToken};
pub use trace::{check_trace, Acceptance, TraceEvent, TraceLog};
pub use transport::Choice;
pub use types::{arrange, Dual, DualEnv};
pub use witness::{DualWitness, EnvDualWitness, ShapeError};
