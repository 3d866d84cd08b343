//! Statically typed endpoints.
//!
//! `Session<S, E>` is an endpoint whose current protocol is `S` inside the
//! environment `E`. Every operation takes `self` and returns the endpoint for
//! the continuation, so the compiler rejects using a step twice.

use std::marker::PhantomData;

use crate::endpoint::{self, Branch, Endpoint, PendingBranch};
use crate::error::{Result, SessionError};
use crate::payload::{Payload, PayloadValue};
use crate::shape::ProtocolShape;
use crate::token::{Completion, CompletionToken};
use crate::trace::TraceLog;
use crate::types::{
    Carried, Deleg, DelegRecv, Dual, DualEnv, Env, Eps, Goto, Lookup, Offer, Protocol, Recv,
    Select, Send,
};

pub struct Session<S, E> {
    ep: Endpoint,
    _types: PhantomData<fn() -> (S, E)>,
}

impl<S, E> Session<S, E> {
    pub(crate) fn wrap(ep: Endpoint) -> Self {
        Session {
            ep,
            _types: PhantomData,
        }
    }

    /// The underlying dynamically checked endpoint.
    pub fn into_endpoint(self) -> Endpoint {
        self.ep
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.ep
    }

    pub fn shape(&self) -> &ProtocolShape {
        self.ep.shape()
    }

    /// Records every later event on this side into `log`.
    pub fn record_into(&self, log: &TraceLog) {
        self.ep.record_into(log)
    }
}

impl<S: Protocol, E: Env> Session<S, E> {
    /// Adopts a dynamic endpoint whose state matches `S` in `E`.
    pub fn from_endpoint(ep: Endpoint) -> Result<Self> {
        let expected = S::shape();
        if *ep.shape() != expected || ep.env() != E::shapes().as_slice() {
            return Err(SessionError::ShapeMismatch {
                expected: expected.to_string(),
                found: ep.shape().to_string(),
            });
        }
        Ok(Session::wrap(ep))
    }
}

impl<S, E> std::fmt::Debug for Session<S, E> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("Session").field(&self.ep).finish()
    }
}

fn typed<V: Payload>(value: PayloadValue) -> Result<V> {
    V::from_value(value).ok_or_else(|| SessionError::Codec("payload domain mismatch".into()))
}

impl<V: Payload, S, E> Session<Send<V, S>, E> {
    pub fn send(self, value: V) -> Result<Session<S, E>> {
        self.ep.send(value.into_value()).map(Session::wrap)
    }
}

impl<V: Payload, S, E> Session<Recv<V, S>, E> {
    pub fn receive(self) -> Result<(V, Session<S, E>)> {
        let (v, ep) = self.ep.receive()?;
        Ok((typed(v)?, Session::wrap(ep)))
    }

    /// Delayed input: returns at once with a token for the value.
    pub fn receive_async(self) -> Result<(CompletionToken<V>, Session<S, E>)> {
        let (token, ep) = self.ep.receive_async()?;
        Ok((endpoint::typed_token(token), Session::wrap(ep)))
    }
}

impl<L, R, E> Session<Select<L, R>, E> {
    pub fn select_left(self) -> Result<Session<L, E>> {
        self.ep.select_left().map(Session::wrap)
    }

    pub fn select_right(self) -> Result<Session<R, E>> {
        self.ep.select_right().map(Session::wrap)
    }
}

fn wrap_branch<L, R, E>(b: Branch<Endpoint, Endpoint>) -> Branch<Session<L, E>, Session<R, E>> {
    match b {
        Branch::Left(ep) => Branch::Left(Session::wrap(ep)),
        Branch::Right(ep) => Branch::Right(Session::wrap(ep)),
    }
}

impl<L, R, E> Session<Offer<L, R>, E> {
    pub fn branch(self) -> Result<Branch<Session<L, E>, Session<R, E>>> {
        self.ep.branch().map(wrap_branch)
    }

    /// Waits for the peer's choice and runs the matching handler.
    pub fn offer<T>(
        self,
        left: impl FnOnce(Session<L, E>) -> Result<T>,
        right: impl FnOnce(Session<R, E>) -> Result<T>,
    ) -> Result<T> {
        match self.branch()? {
            Branch::Left(s) => left(s),
            Branch::Right(s) => right(s),
        }
    }

    /// Delayed form of [`branch`](Self::branch).
    pub fn offer_async(self) -> Result<PendingOffer<L, R, E>> {
        Ok(PendingOffer {
            inner: self.ep.offer_async()?,
            _types: PhantomData,
        })
    }
}

impl<E> Session<Eps, E> {
    pub fn close(self) -> Result<()> {
        self.ep.close()
    }
}

impl<const N: usize, E: Lookup<N>> Session<Goto<N>, E> {
    /// Jumps to slot `N` of the environment; nothing is communicated.
    pub fn goto(self) -> Result<Session<E::Slot, E>> {
        self.ep.goto().map(Session::wrap)
    }
}

impl<S0: Carried, T0: Carried, S, E> Session<Deleg<S0, T0, S>, E> {
    /// Hands `chan` over to the peer.
    pub fn deleg(self, chan: Session<S0::Cur, S0::Env>) -> Result<Session<S, E>> {
        self.ep.deleg(&chan.ep).map(Session::wrap)
    }

    /// Creates a fresh session, sends one end and returns
    /// `(continuation, kept end)`.
    pub fn deleg_new(self) -> Result<(Session<S, E>, Session<T0::Cur, T0::Env>)> {
        let (cont, kept) = self.ep.deleg_new_in(Some((S0::env(), T0::env())))?;
        Ok((Session::wrap(cont), Session::wrap(kept)))
    }
}

impl<S0: Carried, S, E> Session<DelegRecv<S0, S>, E> {
    /// Accepts a delegated session; returns `(carried, continuation)`.
    pub fn deleg_recv(self) -> Result<(Session<S0::Cur, S0::Env>, Session<S, E>)> {
        let (carried, cont) = self.ep.deleg_recv()?;
        if carried.env() != S0::env().as_slice() {
            let found = carried.env().iter().map(|s| s.to_string()).collect::<Vec<_>>();
            return Err(SessionError::ShapeMismatch {
                expected: format!("{:?}", S0::env().iter().map(|s| s.to_string()).collect::<Vec<_>>()),
                found: format!("{found:?}"),
            });
        }
        Ok((Session::wrap(carried), Session::wrap(cont)))
    }
}

/// A typed external choice whose label may still be in flight.
pub struct PendingOffer<L, R, E> {
    inner: PendingBranch,
    _types: PhantomData<fn() -> (L, R, E)>,
}

impl<L, R, E> PendingOffer<L, R, E> {
    pub fn is_completed(&self) -> bool {
        self.inner.is_completed()
    }

    pub fn wait(self) -> Result<Branch<Session<L, E>, Session<R, E>>> {
        self.inner.wait().map(wrap_branch)
    }
}

impl<L, R, E> Completion for PendingOffer<L, R, E> {
    fn is_completed(&self) -> bool {
        self.inner.is_completed()
    }

    fn on_complete(&self, callback: Box<dyn FnOnce() + std::marker::Send>) {
        self.inner.on_complete(callback)
    }
}

impl<S: Protocol, T: Protocol> Dual<S, T> {
    /// Both ends of a fresh in-memory session.
    pub fn pair(&self) -> Result<(Session<S, S>, Session<T, T>)> {
        let (a, b) = Endpoint::pair(&self.unary_env()?);
        Ok((Session::wrap(a), Session::wrap(b)))
    }

    /// Runs `body` on a new thread with the peer's end and returns this end.
    pub fn fork_thread(
        &self,
        body: impl FnOnce(Session<T, T>) + std::marker::Send + 'static,
    ) -> Result<Session<S, S>> {
        endpoint::fork_thread_env(&self.unary_env()?, move |ep| body(Session::wrap(ep)))
            .map(Session::wrap)
    }
}

impl<E: Lookup<1>, F: Lookup<1>> DualEnv<E, F> {
    pub fn pair(&self) -> (Session<E::Slot, E>, Session<F::Slot, F>) {
        let (a, b) = Endpoint::pair(self.witness());
        (Session::wrap(a), Session::wrap(b))
    }

    /// [`Dual::fork_thread`] for an arranged environment; both ends start
    /// at slot 1.
    pub fn fork_thread(
        &self,
        body: impl FnOnce(Session<F::Slot, F>) + std::marker::Send + 'static,
    ) -> Result<Session<E::Slot, E>> {
        endpoint::fork_thread_env(self.witness(), move |ep| body(Session::wrap(ep)))
            .map(Session::wrap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::*;

    #[test]
    fn typed_round_trip() {
        let p = send(val::<i64>(), recv(val::<String>(), end()));
        let client = p
            .fork_thread(|s| {
                let (n, s) = s.receive().unwrap();
                s.send(format!("got {n}")).unwrap().close().unwrap();
            })
            .unwrap();
        let (reply, c) = client.send(7).unwrap().receive().unwrap();
        assert_eq!(reply, "got 7");
        c.close().unwrap();
    }

    #[test]
    fn from_endpoint_checks_state() {
        let p = send(val::<i64>(), end());
        let (a, b) = p.pair().unwrap();
        let ep = a.into_endpoint();
        assert!(Session::<Recv<i64, Eps>, Recv<i64, Eps>>::from_endpoint(ep).is_err());
        b.into_endpoint().hand_over().unwrap();
    }
}
