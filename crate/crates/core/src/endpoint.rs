//! Dynamically checked endpoints.
//!
//! An [`Endpoint`] is one step of one side of a session: it knows its
//! current shape, the session environment, and the transport it talks over.
//! Operations borrow the endpoint, mark it used, and hand back a fresh
//! endpoint for the continuation. Using the same step twice fails with a
//! reuse error; dropping a step that was never used is reported to the
//! session's [`LeakTracker`].
//!
//! The statically typed [`Session`](crate::Session) wraps an `Endpoint` and
//! consumes itself on every call, so a well-typed program never hits these
//! checks.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{EndpointId, LinearityError, LinearityKind, Result, SessionError};
use crate::leak::LeakTracker;
use crate::payload::{Payload, PayloadValue};
use crate::shape::ProtocolShape;
use crate::token::{Cell, Completion, CompletionToken};
use crate::trace::{Direction, TraceEvent, TraceLog, Variant};
use crate::transport::{Choice, Message, Transfer, Transport, Wire};
use crate::witness::{DualWitness, EnvDualWitness};

/// Outcome of an external choice.
#[derive(Debug)]
pub enum Branch<L, R> {
    Left(L),
    Right(R),
}

static NEXT_ENDPOINT: AtomicU64 = AtomicU64::new(1);

pub struct Endpoint {
    id: EndpointId,
    current: ProtocolShape,
    env: Arc<[ProtocolShape]>,
    transport: Transport,
    used: AtomicBool,
}

/// Looks up the slot a jump lands on: `goto0` in a single-slot environment,
/// `goto i` (from 1) in an arrangement. Chains of jumps are followed.
pub(crate) fn resolve_goto(index: usize, env: &[ProtocolShape]) -> Result<ProtocolShape> {
    let dangling = |index| {
        SessionError::Shape(crate::witness::ShapeError::DanglingGoto {
            index,
            arity: env.len(),
        })
    };
    let mut index = index;
    for _ in 0..=env.len() {
        let slot = if index == 0 && env.len() == 1 {
            0
        } else if (1..=env.len()).contains(&index) {
            index - 1
        } else {
            return Err(dangling(index));
        };
        match &env[slot] {
            ProtocolShape::Goto(next) => index = *next,
            shape => return Ok(shape.clone()),
        }
    }
    Err(dangling(index))
}

impl Endpoint {
    pub(crate) fn new(transport: Transport, current: ProtocolShape, env: Arc<[ProtocolShape]>) -> Self {
        Endpoint {
            id: EndpointId(NEXT_ENDPOINT.fetch_add(1, Ordering::Relaxed)),
            current,
            env,
            transport,
            used: AtomicBool::new(false),
        }
    }

    /// Both ends of a fresh in-memory session over `env`, starting at slot 1
    /// on each side.
    pub fn pair(env: &EnvDualWitness) -> (Endpoint, Endpoint) {
        let (a, b) = Transport::pair(LeakTracker::current());
        let mine: Arc<[ProtocolShape]> = env.mine().into();
        let theirs: Arc<[ProtocolShape]> = env.theirs().into();
        (
            Endpoint::new(a, mine[0].clone(), mine),
            Endpoint::new(b, theirs[0].clone(), theirs),
        )
    }

    pub fn id(&self) -> EndpointId {
        self.id
    }

    pub fn shape(&self) -> &ProtocolShape {
        &self.current
    }

    pub fn env(&self) -> &[ProtocolShape] {
        &self.env
    }

    pub fn is_used(&self) -> bool {
        self.used.load(Ordering::SeqCst)
    }

    /// Whether the session was torn down by a cancellation.
    pub fn is_cancelled(&self) -> bool {
        self.transport.is_cancelled()
    }

    pub fn is_remote(&self) -> bool {
        self.transport.is_remote()
    }

    /// Records every later event on this side of the session into `log`.
    pub fn record_into(&self, log: &TraceLog) {
        self.transport.set_trace(Some(log.clone()));
    }

    pub(crate) fn transport(&self) -> &Transport {
        &self.transport
    }

    /// Marks the step used. A torn-down session fails every operation.
    fn claim(&self) -> Result<()> {
        if self.used.swap(true, Ordering::SeqCst) {
            Err(LinearityError {
                kind: LinearityKind::Reuse,
                endpoint: self.id,
            }
            .into())
        } else if self.transport.is_cancelled() {
            Err(SessionError::Cancelled)
        } else {
            Ok(())
        }
    }

    fn release(&self) {
        self.used.store(false, Ordering::SeqCst);
    }

    fn wrong_step(&self, op: &'static str) -> SessionError {
        self.release();
        SessionError::WrongStep {
            op,
            shape: self.current.to_string(),
        }
    }

    fn next(&self, current: ProtocolShape) -> Endpoint {
        Endpoint::new(self.transport.clone(), current, self.env.clone())
    }

    fn record(&self, dir: Direction, variant: Variant, domain: &str) {
        self.transport
            .record(|| TraceEvent::new(dir, variant, domain));
    }

    pub fn send(&self, value: PayloadValue) -> Result<Endpoint> {
        self.claim()?;
        let ProtocolShape::Send(desc, k) = &self.current else {
            return Err(self.wrong_step("send"));
        };
        if value.repr() != desc.repr() {
            self.release();
            return Err(SessionError::ShapeMismatch {
                expected: desc.to_string(),
                found: format!("{:?}", value.repr()),
            });
        }
        self.transport.send(Message::Value(Wire::Decoded(value)))?;
        self.record(Direction::Out, Variant::Value, desc.tag());
        Ok(self.next((**k).clone()))
    }

    pub fn receive(&self) -> Result<(PayloadValue, Endpoint)> {
        self.claim()?;
        let ProtocolShape::Recv(desc, k) = &self.current else {
            return Err(self.wrong_step("receive"));
        };
        let value = match self.transport.recv()? {
            Message::Value(w) => self.transport.decode(w, *desc)?,
            other => {
                return Err(SessionError::UnexpectedMessage {
                    expected: "value",
                    found: other.kind(),
                })
            }
        };
        self.record(Direction::In, Variant::Value, desc.tag());
        Ok((value, self.next((**k).clone())))
    }

    /// Schedules the reception and returns at once. Later blocking
    /// operations on the continuation only see messages after this one.
    pub fn receive_async(&self) -> Result<(CompletionToken<PayloadValue>, Endpoint)> {
        self.claim()?;
        let ProtocolShape::Recv(desc, k) = &self.current else {
            return Err(self.wrong_step("receive_async"));
        };
        let cell = Cell::new();
        let slot = cell.clone();
        let desc = *desc;
        let transport = self.transport.clone();
        self.transport.register(Box::new(move |msg| {
            let value = msg.and_then(|m| match m {
                Message::Value(w) => transport.decode(w, desc),
                other => Err(SessionError::UnexpectedMessage {
                    expected: "value",
                    found: other.kind(),
                }),
            });
            slot.complete(value);
        }));
        self.record(Direction::In, Variant::Value, desc.tag());
        Ok((CompletionToken::new(cell), self.next((**k).clone())))
    }

    pub fn select(&self, choice: Choice) -> Result<Endpoint> {
        self.claim()?;
        let ProtocolShape::Select(l, r) = &self.current else {
            return Err(self.wrong_step("select"));
        };
        self.transport.send(Message::Label(choice))?;
        self.record(Direction::Out, Variant::Label, choice.as_str());
        let next = match choice {
            Choice::Left => l,
            Choice::Right => r,
        };
        Ok(self.next((**next).clone()))
    }

    pub fn select_left(&self) -> Result<Endpoint> {
        self.select(Choice::Left)
    }

    pub fn select_right(&self) -> Result<Endpoint> {
        self.select(Choice::Right)
    }

    /// Waits for the peer's label and returns the chosen continuation.
    pub fn branch(&self) -> Result<Branch<Endpoint, Endpoint>> {
        self.claim()?;
        let ProtocolShape::Offer(l, r) = &self.current else {
            return Err(self.wrong_step("offer"));
        };
        let choice = match self.transport.recv()? {
            Message::Label(c) => c,
            other => {
                return Err(SessionError::UnexpectedMessage {
                    expected: "label",
                    found: other.kind(),
                })
            }
        };
        self.record(Direction::In, Variant::Label, choice.as_str());
        Ok(match choice {
            Choice::Left => Branch::Left(self.next((**l).clone())),
            Choice::Right => Branch::Right(self.next((**r).clone())),
        })
    }

    /// Runs exactly one handler with the continuation the peer selected.
    pub fn offer<R>(
        &self,
        left: impl FnOnce(Endpoint) -> Result<R>,
        right: impl FnOnce(Endpoint) -> Result<R>,
    ) -> Result<R> {
        match self.branch()? {
            Branch::Left(ep) => left(ep),
            Branch::Right(ep) => right(ep),
        }
    }

    /// Delayed form of [`branch`](Self::branch).
    pub fn offer_async(&self) -> Result<PendingBranch> {
        self.claim()?;
        let ProtocolShape::Offer(l, r) = &self.current else {
            return Err(self.wrong_step("offer_async"));
        };
        let cell = Cell::new();
        let slot = cell.clone();
        self.transport.register(Box::new(move |msg| {
            slot.complete(msg.and_then(|m| match m {
                Message::Label(c) => Ok(c),
                other => Err(SessionError::UnexpectedMessage {
                    expected: "label",
                    found: other.kind(),
                }),
            }))
        }));
        Ok(PendingBranch {
            cell,
            left: (**l).clone(),
            right: (**r).clone(),
            env: self.env.clone(),
            transport: Some(self.transport.clone()),
            origin: self.id,
        })
    }

    pub fn close(&self) -> Result<()> {
        self.claim()?;
        if self.current != ProtocolShape::Eps {
            return Err(self.wrong_step("close"));
        }
        self.record(Direction::Out, Variant::Close, "-");
        self.transport.close();
        Ok(())
    }

    pub fn goto(&self) -> Result<Endpoint> {
        self.claim()?;
        let ProtocolShape::Goto(i) = &self.current else {
            return Err(self.wrong_step("goto"));
        };
        match resolve_goto(*i, &self.env) {
            Ok(target) => Ok(self.next(target)),
            Err(e) => {
                self.release();
                Err(e)
            }
        }
    }

    /// Sends `carried` (which may be in the middle of its own session) to
    /// the peer. Both endpoints are used up.
    pub fn deleg(&self, carried: &Endpoint) -> Result<Endpoint> {
        self.claim()?;
        let ProtocolShape::Deleg {
            carried: expected,
            cont,
            ..
        } = &self.current
        else {
            return Err(self.wrong_step("deleg"));
        };
        if self.transport.is_remote() || carried.transport.is_remote() {
            self.release();
            return Err(SessionError::UnsupportedTransfer);
        }
        if let Err(e) = carried.claim() {
            self.release();
            return Err(e);
        }
        if carried.current != **expected {
            self.release();
            carried.release();
            return Err(SessionError::ShapeMismatch {
                expected: expected.to_string(),
                found: carried.current.to_string(),
            });
        }
        self.transport.send(Message::Transfer(Box::new(Transfer {
            transport: carried.transport.clone(),
            shape: carried.current.clone(),
            env: carried.env.clone(),
        })))?;
        self.record(Direction::Out, Variant::Deleg, "session");
        Ok(self.next((**cont).clone()))
    }

    /// Bound output: creates a fresh session, sends one end and keeps the
    /// dual end. Returns `(continuation, kept end)`.
    pub fn deleg_new(&self) -> Result<(Endpoint, Endpoint)> {
        self.deleg_new_in(None)
    }

    /// Like [`deleg_new`](Self::deleg_new) for a carried session that lives
    /// inside a larger environment; `envs` is `(sent env, kept env)`.
    pub fn deleg_new_in(
        &self,
        envs: Option<(Vec<ProtocolShape>, Vec<ProtocolShape>)>,
    ) -> Result<(Endpoint, Endpoint)> {
        self.claim()?;
        let ProtocolShape::Deleg {
            carried,
            carried_dual,
            cont,
        } = &self.current
        else {
            return Err(self.wrong_step("deleg_new"));
        };
        if self.transport.is_remote() {
            self.release();
            return Err(SessionError::UnsupportedTransfer);
        }
        let (sent_env, kept_env): (Arc<[ProtocolShape]>, Arc<[ProtocolShape]>) = match envs {
            Some((s, k)) => (s.into(), k.into()),
            None => (
                vec![(**carried).clone()].into(),
                vec![(**carried_dual).clone()].into(),
            ),
        };
        let (sent, kept) = Transport::pair(self.transport.leaks().clone());
        self.transport.send(Message::Transfer(Box::new(Transfer {
            transport: sent,
            shape: (**carried).clone(),
            env: sent_env,
        })))?;
        self.record(Direction::Out, Variant::Deleg, "session");
        Ok((
            self.next((**cont).clone()),
            Endpoint::new(kept, (**carried_dual).clone(), kept_env),
        ))
    }

    /// Accepts a delegated session. Returns `(carried, continuation)`.
    pub fn deleg_recv(&self) -> Result<(Endpoint, Endpoint)> {
        self.claim()?;
        let ProtocolShape::DelegRecv { carried, cont } = &self.current else {
            return Err(self.wrong_step("deleg_recv"));
        };
        let transfer = match self.transport.recv()? {
            Message::Transfer(t) => t,
            other => {
                return Err(SessionError::UnexpectedMessage {
                    expected: "channel",
                    found: other.kind(),
                })
            }
        };
        if transfer.shape != **carried {
            return Err(SessionError::ShapeMismatch {
                expected: carried.to_string(),
                found: transfer.shape.to_string(),
            });
        }
        self.record(Direction::In, Variant::Deleg, "session");
        let Transfer {
            transport,
            shape,
            env,
        } = *transfer;
        Ok((Endpoint::new(transport, shape, env), self.next((**cont).clone())))
    }

    /// Marks the step as used without communicating.
    #[cfg(test)]
    pub(crate) fn hand_over(&self) -> Result<()> {
        self.claim()
    }
}

impl Drop for Endpoint {
    fn drop(&mut self) {
        // a cancelled session may be abandoned mid-protocol
        if !*self.used.get_mut() && !self.transport.is_cancelled() {
            self.transport.leaks().report(self.id, &self.current.to_string());
            self.transport.close();
        }
    }
}

impl std::fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Endpoint")
            .field("id", &self.id)
            .field("current", &self.current.to_string())
            .field("used", &self.is_used())
            .finish()
    }
}

/// An external choice whose label has not necessarily arrived yet.
pub struct PendingBranch {
    cell: Arc<Cell<Choice>>,
    left: ProtocolShape,
    right: ProtocolShape,
    env: Arc<[ProtocolShape]>,
    transport: Option<Transport>,
    origin: EndpointId,
}

impl PendingBranch {
    pub fn is_completed(&self) -> bool {
        self.cell.is_completed()
    }

    pub fn wait(mut self) -> Result<Branch<Endpoint, Endpoint>> {
        let transport = self.transport.take().expect("pending offer resolved twice");
        let choice = self.cell.take()?;
        transport.record(|| TraceEvent::new(Direction::In, Variant::Label, choice.as_str()));
        let env = self.env.clone();
        Ok(match choice {
            Choice::Left => Branch::Left(Endpoint::new(transport, self.left.clone(), env)),
            Choice::Right => Branch::Right(Endpoint::new(transport, self.right.clone(), env)),
        })
    }
}

impl Completion for PendingBranch {
    fn is_completed(&self) -> bool {
        self.cell.is_completed()
    }

    fn on_complete(&self, callback: Box<dyn FnOnce() + Send>) {
        self.cell.on_complete(callback)
    }
}

impl Drop for PendingBranch {
    fn drop(&mut self) {
        if let Some(t) = self.transport.take() {
            t.leaks().report(self.origin, "pending offer");
        }
    }
}

fn spawn_session(
    name: &str,
    server: Endpoint,
    body: impl FnOnce(Endpoint) + std::marker::Send + 'static,
) -> Result<()> {
    let leaks = LeakTracker::current();
    std::thread::Builder::new()
        .name(name.to_string())
        .spawn(move || leaks.scope(|| body(server)))
        .map(|_| ())
        .map_err(|e| SessionError::Spawn(e.to_string()))
}

/// Runs `body` on a new thread with the peer's end (at `w.theirs()`) and
/// returns this end (at `w.mine()`).
pub fn fork_thread(
    w: &DualWitness,
    body: impl FnOnce(Endpoint) + std::marker::Send + 'static,
) -> Result<Endpoint> {
    fork_thread_env(&EnvDualWitness::unary(w)?, body)
}

/// [`fork_thread`] over an arranged environment; both ends start at slot 1.
pub fn fork_thread_env(
    env: &EnvDualWitness,
    body: impl FnOnce(Endpoint) + std::marker::Send + 'static,
) -> Result<Endpoint> {
    let (client, server) = Endpoint::pair(env);
    spawn_session("sessio-fork", server, body)?;
    Ok(client)
}

/// Typed view of a value taken off a dynamic token.
pub fn typed_token<V: Payload>(token: CompletionToken<PayloadValue>) -> CompletionToken<V> {
    token.retag()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payload::PayloadDescriptor as D;
    use crate::witness::DualWitness as W;

    fn unary(w: W) -> (Endpoint, Endpoint) {
        Endpoint::pair(&EnvDualWitness::unary(&w).unwrap())
    }

    #[test]
    fn send_receive_and_reuse() {
        let (a, b) = unary(W::send(D::INT, W::end()));
        let a2 = a.send(PayloadValue::Int(0)).unwrap();
        assert!(a.send(PayloadValue::Int(1)).unwrap_err().is_reuse());
        let (v, b2) = b.receive().unwrap();
        assert_eq!(v, PayloadValue::Int(0));
        a2.close().unwrap();
        b2.close().unwrap();
    }

    #[test]
    fn wrong_step_keeps_endpoint_usable() {
        let (a, b) = unary(W::send(D::INT, W::end()));
        assert!(matches!(a.close(), Err(SessionError::WrongStep { .. })));
        assert!(matches!(
            a.send(PayloadValue::Str("x".into())),
            Err(SessionError::ShapeMismatch { .. })
        ));
        a.send(PayloadValue::Int(3)).unwrap().close().unwrap();
        b.receive().unwrap().1.close().unwrap();
    }

    #[test]
    fn goto_emits_nothing() {
        let (a, b) = unary(W::send(D::INT, W::goto0()));
        let a = a.send(PayloadValue::Int(1)).unwrap().goto().unwrap();
        assert_eq!(a.shape(), &ProtocolShape::send(D::INT, ProtocolShape::Goto(0)));
        let (_, b) = b.receive().unwrap();
        let b = b.goto().unwrap();
        // nothing is queued beyond the single value
        let (tok, b) = b.receive_async().unwrap();
        assert!(!tok.is_completed());
        a.send(PayloadValue::Int(2)).unwrap().hand_over().unwrap();
        assert_eq!(tok.wait_value(), Ok(PayloadValue::Int(2)));
        b.hand_over().unwrap();
    }

    #[test]
    fn leak_reported_on_drop() {
        let tracker = LeakTracker::new();
        tracker.scope(|| {
            let (a, b) = unary(W::end());
            a.close().unwrap();
            drop(b);
        });
        assert_eq!(tracker.count(), 1);
        assert_eq!(tracker.reports()[0].kind, LinearityKind::Leak);
    }

    #[test]
    fn deleg_rejects_wrong_carried_shape() {
        let (a, b) = unary(W::deleg(W::recv(D::UNIT, W::end()), W::end()));
        let (c, d) = unary(W::send(D::UNIT, W::end()));
        assert!(matches!(a.deleg(&c), Err(SessionError::ShapeMismatch { .. })));
        // both still usable after the failed attempt
        let (e, f) = unary(W::recv(D::UNIT, W::end()));
        let a2 = a.deleg(&e).unwrap();
        a2.close().unwrap();
        let (carried, b2) = b.deleg_recv().unwrap();
        b2.close().unwrap();
        c.send(PayloadValue::Unit).unwrap().close().unwrap();
        d.receive().unwrap().1.close().unwrap();
        f.send(PayloadValue::Unit).unwrap().close().unwrap();
        carried.receive().unwrap().1.close().unwrap();
    }
}
