//! One side of a duplex, ordered message pipe.
//!
//! Each side owns an [`Inbox`]. Sending pushes into the peer's inbox (in
//! memory) or writes a frame (TCP, see `net`). Delayed receptions register a
//! waiter in the inbox; arriving messages are handed to waiters in
//! registration order before anything is queued, so a blocking receive that
//! follows a delayed one can never overtake it.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};

use crate::error::{Result, SessionError};
use crate::leak::LeakTracker;
use crate::net::codec::Codec;
use crate::payload::{PayloadDescriptor, PayloadValue};
use crate::shape::ProtocolShape;
use crate::trace::{TraceEvent, TraceLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    Left,
    Right,
}

impl Choice {
    pub fn as_str(self) -> &'static str {
        match self {
            Choice::Left => "left",
            Choice::Right => "right",
        }
    }
}

pub(crate) enum Wire {
    Decoded(PayloadValue),
    Encoded(Vec<u8>),
}

pub(crate) struct Transfer {
    pub transport: Transport,
    pub shape: ProtocolShape,
    pub env: Arc<[ProtocolShape]>,
}

pub(crate) enum Message {
    Value(Wire),
    Label(Choice),
    Transfer(Box<Transfer>),
    Close,
    Cancel,
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Value(_) => "value",
            Message::Label(_) => "label",
            Message::Transfer(_) => "channel",
            Message::Close => "close",
            Message::Cancel => "cancel",
        }
    }
}

pub(crate) type Waiter = Box<dyn FnOnce(Result<Message>) + Send>;

#[derive(Default)]
struct InboxState {
    queue: VecDeque<Message>,
    waiters: VecDeque<Waiter>,
    cancelled: bool,
    peer_gone: bool,
}

#[derive(Default)]
pub(crate) struct Inbox {
    state: Mutex<InboxState>,
    ready: Condvar,
}

impl Inbox {
    pub fn push(&self, msg: Message) {
        let mut st = self.state.lock().unwrap();
        if st.cancelled {
            return;
        }
        match msg {
            Message::Cancel => {
                st.cancelled = true;
                st.queue.clear();
                let waiters = std::mem::take(&mut st.waiters);
                drop(st);
                self.ready.notify_all();
                for w in waiters {
                    w(Err(SessionError::Cancelled));
                }
            }
            Message::Close => {
                st.peer_gone = true;
                let waiters = std::mem::take(&mut st.waiters);
                drop(st);
                self.ready.notify_all();
                for w in waiters {
                    w(Err(SessionError::Disconnected));
                }
            }
            msg => {
                if let Some(w) = st.waiters.pop_front() {
                    drop(st);
                    w(Ok(msg));
                } else {
                    st.queue.push_back(msg);
                    drop(st);
                    self.ready.notify_all();
                }
            }
        }
    }

    pub fn pop(&self) -> Result<Message> {
        let mut st = self.state.lock().unwrap();
        loop {
            if st.cancelled {
                return Err(SessionError::Cancelled);
            }
            if let Some(m) = st.queue.pop_front() {
                return Ok(m);
            }
            if st.peer_gone {
                return Err(SessionError::Disconnected);
            }
            st = self.ready.wait(st).unwrap();
        }
    }

    pub fn register(&self, waiter: Waiter) {
        let mut st = self.state.lock().unwrap();
        if st.cancelled {
            drop(st);
            waiter(Err(SessionError::Cancelled));
        } else if let Some(m) = st.queue.pop_front() {
            drop(st);
            waiter(Ok(m));
        } else if st.peer_gone {
            drop(st);
            waiter(Err(SessionError::Disconnected));
        } else {
            st.waiters.push_back(waiter);
        }
    }

    pub fn is_cancelled(&self) -> bool {
        self.state.lock().unwrap().cancelled
    }
}

/// Outgoing half of a remote (framed) link.
pub(crate) trait RemoteOutlet: std::marker::Send + Sync {
    fn send(&self, msg: &Message) -> Result<()>;
    /// Stop sending; the incoming half stays open.
    fn finish(&self);
    /// Tear the link down in both directions.
    fn abort(&self);
}

pub(crate) enum Outlet {
    Local(Arc<Inbox>),
    Remote(Arc<dyn RemoteOutlet>),
}

static NEXT_TRANSPORT: AtomicU64 = AtomicU64::new(1);

pub(crate) struct TransportInner {
    id: u64,
    inbox: Arc<Inbox>,
    outlet: Outlet,
    codec: Option<Arc<dyn Codec>>,
    closed: AtomicBool,
    leaks: Arc<LeakTracker>,
    trace: Mutex<Option<TraceLog>>,
}

/// A handle to one side of a session's transport, shared by all of the
/// endpoint steps of that side.
#[derive(Clone)]
pub(crate) struct Transport {
    inner: Arc<TransportInner>,
}

impl Transport {
    pub fn pair(leaks: Arc<LeakTracker>) -> (Transport, Transport) {
        let a = Arc::new(Inbox::default());
        let b = Arc::new(Inbox::default());
        let mk = |inbox: Arc<Inbox>, peer: Arc<Inbox>| Transport {
            inner: Arc::new(TransportInner {
                id: NEXT_TRANSPORT.fetch_add(1, Ordering::Relaxed),
                inbox,
                outlet: Outlet::Local(peer),
                codec: None,
                closed: AtomicBool::new(false),
                leaks: leaks.clone(),
                trace: Mutex::new(None),
            }),
        };
        (mk(a.clone(), b.clone()), mk(b, a))
    }

    pub fn remote(
        inbox: Arc<Inbox>,
        outlet: Arc<dyn RemoteOutlet>,
        codec: Arc<dyn Codec>,
        leaks: Arc<LeakTracker>,
    ) -> Transport {
        Transport {
            inner: Arc::new(TransportInner {
                id: NEXT_TRANSPORT.fetch_add(1, Ordering::Relaxed),
                inbox,
                outlet: Outlet::Remote(outlet),
                codec: Some(codec),
                closed: AtomicBool::new(false),
                leaks,
                trace: Mutex::new(None),
            }),
        }
    }

    pub fn id(&self) -> u64 {
        self.inner.id
    }

    pub fn is_remote(&self) -> bool {
        matches!(self.inner.outlet, Outlet::Remote(_))
    }

    pub fn is_closed(&self) -> bool {
        self.inner.closed.load(Ordering::SeqCst)
    }

    pub fn is_cancelled(&self) -> bool {
        self.inner.inbox.is_cancelled()
    }

    pub fn leaks(&self) -> &Arc<LeakTracker> {
        &self.inner.leaks
    }

    pub fn send(&self, msg: Message) -> Result<()> {
        if self.inner.inbox.is_cancelled() {
            return Err(SessionError::Cancelled);
        }
        match &self.inner.outlet {
            Outlet::Local(peer) => {
                peer.push(msg);
                Ok(())
            }
            Outlet::Remote(link) => link.send(&msg),
        }
    }

    pub fn recv(&self) -> Result<Message> {
        self.inner.inbox.pop()
    }

    pub fn register(&self, waiter: Waiter) {
        self.inner.inbox.register(waiter)
    }

    pub fn decode(&self, wire: Wire, expected: PayloadDescriptor) -> Result<PayloadValue> {
        let value = match wire {
            Wire::Decoded(v) => v,
            Wire::Encoded(bytes) => match &self.inner.codec {
                Some(codec) => codec
                    .decode(&bytes, expected)
                    .map_err(|e| SessionError::Codec(e.to_string()))?,
                None => return Err(SessionError::Codec("no codec on local transport".into())),
            },
        };
        if value.repr() != expected.repr() {
            return Err(SessionError::ShapeMismatch {
                expected: expected.to_string(),
                found: format!("{:?}", value.repr()),
            });
        }
        Ok(value)
    }

    /// Ends this side of the session. Pending delayed receptions stay
    /// registered and complete when their values arrive.
    pub fn close(&self) {
        if self.inner.closed.swap(true, Ordering::SeqCst) {
            return;
        }
        match &self.inner.outlet {
            Outlet::Local(peer) => peer.push(Message::Close),
            Outlet::Remote(link) => {
                let _ = link.send(&Message::Close);
                link.finish();
            }
        }
    }

    /// Tears the session down on both sides.
    pub fn cancel(&self) {
        self.inner.closed.store(true, Ordering::SeqCst);
        // Local side first, so that tearing down the link cannot surface as
        // a plain disconnect here.
        self.inner.inbox.push(Message::Cancel);
        match &self.inner.outlet {
            Outlet::Local(peer) => peer.push(Message::Cancel),
            Outlet::Remote(link) => {
                let _ = link.send(&Message::Cancel);
                link.abort();
            }
        }
    }

    pub fn set_trace(&self, log: Option<TraceLog>) {
        *self.inner.trace.lock().unwrap() = log;
    }

    pub fn record(&self, event: impl FnOnce() -> TraceEvent) {
        if let Some(log) = self.inner.trace.lock().unwrap().as_ref() {
            log.push(event());
        }
    }
}
