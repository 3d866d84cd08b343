use std::sync::Mutex;

use crate::endpoint::Endpoint;
use crate::error::{Result, SessionError};
use crate::session::Session;
use crate::transport::Transport;

/// Tears down a group of sessions together.
///
/// Sessions are registered while they run; [`dispose`](Self::dispose) (also
/// run on drop) cancels every one that has not been closed yet, so all of
/// their pending and later operations fail with `SessionError::Cancelled`,
/// on both sides.
#[derive(Default)]
pub struct SessionCanceller {
    registered: Mutex<Option<Vec<Transport>>>,
}

impl SessionCanceller {
    pub fn new() -> Self {
        SessionCanceller {
            registered: Mutex::new(Some(Vec::new())),
        }
    }

    /// Registers the session `s` belongs to. Not a session step: `s` stays
    /// usable. Registering a session this side already closed does nothing.
    pub fn register<S, E>(&self, s: &Session<S, E>) -> Result<()> {
        self.register_endpoint(s.endpoint())
    }

    pub fn register_endpoint(&self, ep: &Endpoint) -> Result<()> {
        let mut reg = self.registered.lock().unwrap();
        let list = reg.as_mut().ok_or(SessionError::CancellerDisposed)?;
        let t = ep.transport();
        if !t.is_closed() && !list.iter().any(|r| r.id() == t.id()) {
            list.push(t.clone());
        }
        Ok(())
    }

    pub fn is_disposed(&self) -> bool {
        self.registered.lock().unwrap().is_none()
    }

    /// Cancels every registered session still open. Idempotent.
    pub fn dispose(&self) {
        let Some(list) = self.registered.lock().unwrap().take() else {
            return;
        };
        for t in list {
            if !t.is_closed() {
                log::debug!("cancelling session transport {}", t.id());
                t.cancel();
            }
        }
    }
}

impl Drop for SessionCanceller {
    fn drop(&mut self) {
        self.dispose();
    }
}
