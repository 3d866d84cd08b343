//! TCP transport: framing, payload codecs, the connection handshake and
//! group cancellation.
//!
//! Only single-slot sessions can be served over TCP, and delegation is not
//! available on TCP endpoints (it fails with `UnsupportedTransfer`).

pub mod canceller;
pub mod codec;
pub mod frame;
pub mod tcp;

use std::sync::Arc;

pub use canceller::SessionCanceller;
pub use codec::{Codec, CodecError, JsonCodec};
pub use frame::{Frame, FrameError};
pub use tcp::{connect_endpoint, listen_endpoint, Listener};

use crate::error::Result;
use crate::session::Session;
use crate::types::{Dual, Protocol};

/// Environment variable holding the default listen address.
pub const BIND_ENV: &str = "SESSIO_BIND";
/// Environment variable holding the default peer address.
pub const PEER_ENV: &str = "SESSIO_PEER";

/// `flag`, else the `SESSIO_BIND` variable, else `default`.
pub fn bind_address(flag: Option<&str>, default: &str) -> String {
    resolve(flag, BIND_ENV, default)
}

/// `flag`, else the `SESSIO_PEER` variable, else `default`.
pub fn peer_address(flag: Option<&str>, default: &str) -> String {
    resolve(flag, PEER_ENV, default)
}

fn resolve(flag: Option<&str>, var: &str, default: &str) -> String {
    flag.map(str::to_string)
        .or_else(|| std::env::var(var).ok().filter(|v| !v.is_empty()))
        .unwrap_or_else(|| default.to_string())
}

impl<S: Protocol, T: Protocol> Dual<S, T> {
    /// Serves the peer side of this protocol on `addr`.
    pub fn listen(
        &self,
        addr: &str,
        body: impl Fn(Session<T, T>) + std::marker::Send + Sync + 'static,
    ) -> Result<Listener> {
        self.listen_with(addr, Arc::new(JsonCodec), body)
    }

    pub fn listen_with(
        &self,
        addr: &str,
        codec: Arc<dyn Codec>,
        body: impl Fn(Session<T, T>) + std::marker::Send + Sync + 'static,
    ) -> Result<Listener> {
        listen_endpoint(self.witness(), addr, codec, move |ep| body(Session::wrap(ep)))
    }

    /// Connects to a listener serving the peer side of this protocol.
    pub fn connect(&self, addr: &str) -> Result<Session<S, S>> {
        self.connect_with(addr, Arc::new(JsonCodec))
    }

    pub fn connect_with(&self, addr: &str, codec: Arc<dyn Codec>) -> Result<Session<S, S>> {
        connect_endpoint(self.witness(), addr, codec).map(Session::wrap)
    }
}
