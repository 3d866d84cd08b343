//! Type-level protocols and the combinators that build their witnesses.
//!
//! A protocol is written once, from the client's point of view:
//!
//! ```
//! use sessio::types::*;
//!
//! // !(int,int,int). deleg(?unit.end). &{ ?int.end , end }
//! let tak = send(
//!     val::<(i64, i64, i64)>(),
//!     deleg(recv(val::<()>(), end()), offer(recv(val::<i64>(), end()), end())),
//! );
//! assert_eq!(
//!     tak.witness().mine().render(),
//!     "!int3.deleg(?unit.end).&{L:?int.end,R:end}"
//! );
//! ```
//!
//! The combinators return `Dual<S, T>` where `T` is the peer's protocol; no
//! other way of building a `Dual` exists, so the two halves always agree.

use std::marker::PhantomData;

use crate::error::Result;
use crate::payload::Payload;
use crate::shape::ProtocolShape;
use crate::witness::{self, DualWitness, EnvDualWitness, ShapeError};

mod sealed {
    pub trait Sealed {}
}

/// A session type.
pub trait Protocol: sealed::Sealed + 'static {
    fn shape() -> ProtocolShape;
}

pub struct Send<V, S>(PhantomData<fn() -> (V, S)>);
pub struct Recv<V, S>(PhantomData<fn() -> (V, S)>);
pub struct Select<L, R>(PhantomData<fn() -> (L, R)>);
pub struct Offer<L, R>(PhantomData<fn() -> (L, R)>);
pub struct Eps;
pub struct Goto<const N: usize>;
/// Sends a session of type `S0` (peer side `T0`), then continues as `S`.
pub struct Deleg<S0, T0, S>(PhantomData<fn() -> (S0, T0, S)>);
/// Accepts a session of type `S0`, then continues as `S`.
pub struct DelegRecv<S0, S>(PhantomData<fn() -> (S0, S)>);

pub type Goto0 = Goto<0>;
pub type Goto1 = Goto<1>;
pub type Goto2 = Goto<2>;
pub type Goto3 = Goto<3>;

impl<V, S> sealed::Sealed for Send<V, S> {}
impl<V, S> sealed::Sealed for Recv<V, S> {}
impl<L, R> sealed::Sealed for Select<L, R> {}
impl<L, R> sealed::Sealed for Offer<L, R> {}
impl sealed::Sealed for Eps {}
impl<const N: usize> sealed::Sealed for Goto<N> {}
impl<S0, T0, S> sealed::Sealed for Deleg<S0, T0, S> {}
impl<S0, S> sealed::Sealed for DelegRecv<S0, S> {}

impl<V: Payload, S: Protocol> Protocol for Send<V, S> {
    fn shape() -> ProtocolShape {
        ProtocolShape::send(V::descriptor(), S::shape())
    }
}

impl<V: Payload, S: Protocol> Protocol for Recv<V, S> {
    fn shape() -> ProtocolShape {
        ProtocolShape::recv(V::descriptor(), S::shape())
    }
}

impl<L: Protocol, R: Protocol> Protocol for Select<L, R> {
    fn shape() -> ProtocolShape {
        ProtocolShape::select(L::shape(), R::shape())
    }
}

impl<L: Protocol, R: Protocol> Protocol for Offer<L, R> {
    fn shape() -> ProtocolShape {
        ProtocolShape::offer(L::shape(), R::shape())
    }
}

impl Protocol for Eps {
    fn shape() -> ProtocolShape {
        ProtocolShape::Eps
    }
}

impl<const N: usize> Protocol for Goto<N> {
    fn shape() -> ProtocolShape {
        ProtocolShape::Goto(N)
    }
}

impl<S0: Carried, T0: Carried, S: Protocol> Protocol for Deleg<S0, T0, S> {
    fn shape() -> ProtocolShape {
        ProtocolShape::deleg(S0::current(), S::shape())
    }
}

impl<S0: Carried, S: Protocol> Protocol for DelegRecv<S0, S> {
    fn shape() -> ProtocolShape {
        ProtocolShape::deleg_recv(S0::current(), S::shape())
    }
}

/// A session environment: one protocol, or a tuple of up to eight.
pub trait Env: 'static {
    fn shapes() -> Vec<ProtocolShape>;
}

impl<P: Protocol> Env for P {
    fn shapes() -> Vec<ProtocolShape> {
        vec![P::shape()]
    }
}

/// Slot `N` of an environment, as seen by `Goto<N>`.
pub trait Lookup<const N: usize>: Env {
    type Slot: Protocol;
}

impl<P: Protocol> Lookup<0> for P {
    type Slot = P;
}

macro_rules! env_tuple {
    (@head ($($T:ident),+)) => {
        impl<$($T: Protocol),+> Env for ($($T,)+) {
            fn shapes() -> Vec<ProtocolShape> {
                vec![$($T::shape()),+]
            }
        }
        impl<$($T: Protocol),+> Carried for ($($T,)+) {
            type Cur = <Self as Lookup<1>>::Slot;
            type Env = Self;
        }
    };
    (@slot ($($T:ident),+) $n:literal $S:ident) => {
        impl<$($T: Protocol),+> Lookup<$n> for ($($T,)+) {
            type Slot = $S;
        }
    };
    ($tys:tt $($n:literal => $S:ident),+) => {
        env_tuple!(@head $tys);
        $(env_tuple!(@slot $tys $n $S);)+
    };
}

env_tuple!((A) 1 => A);
env_tuple!((A, B) 1 => A, 2 => B);
env_tuple!((A, B, C) 1 => A, 2 => B, 3 => C);
env_tuple!((A, B, C, D) 1 => A, 2 => B, 3 => C, 4 => D);
env_tuple!((A, B, C, D, E) 1 => A, 2 => B, 3 => C, 4 => D, 5 => E);
env_tuple!((A, B, C, D, E, F) 1 => A, 2 => B, 3 => C, 4 => D, 5 => E, 6 => F);
env_tuple!((A, B, C, D, E, F, G) 1 => A, 2 => B, 3 => C, 4 => D, 5 => E, 6 => F, 7 => G);
env_tuple!((A, B, C, D, E, F, G, H) 1 => A, 2 => B, 3 => C, 4 => D, 5 => E, 6 => F, 7 => G, 8 => H);

/// A session in the middle of its environment `E`, currently at `S`.
pub struct Mid<S, E>(PhantomData<fn() -> (S, E)>);

/// What a delegation carries: a whole session (a protocol, or an arranged
/// tuple starting at its first slot) or one caught mid-way ([`Mid`]).
pub trait Carried: 'static {
    type Cur: Protocol;
    type Env: Env;

    fn current() -> ProtocolShape {
        Self::Cur::shape()
    }

    fn env() -> Vec<ProtocolShape> {
        Self::Env::shapes()
    }
}

impl<P: Protocol> Carried for P {
    type Cur = P;
    type Env = P;
}

impl<S: Protocol, E: Env> Carried for Mid<S, E> {
    type Cur = S;
    type Env = E;
}

/// Payload marker used in protocol specifications, e.g. `val::<i64>()`.
pub struct Val<V>(PhantomData<fn() -> V>);

pub fn val<V: Payload>() -> Val<V> {
    Val(PhantomData)
}

/// Witness that `T` is the dual of `S`.
pub struct Dual<S, T> {
    w: DualWitness,
    _types: PhantomData<fn() -> (S, T)>,
}

impl<S, T> Dual<S, T> {
    fn from(w: DualWitness) -> Self {
        Dual {
            w,
            _types: PhantomData,
        }
    }

    pub fn witness(&self) -> &DualWitness {
        &self.w
    }

    pub fn flip(&self) -> Dual<T, S> {
        Dual::from(self.w.flip())
    }
}

impl<S, T> Clone for Dual<S, T> {
    fn clone(&self) -> Self {
        Dual::from(self.w.clone())
    }
}

impl<S, T> std::fmt::Debug for Dual<S, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Dual({} ~ {})", self.w.mine(), self.w.theirs())
    }
}

pub fn end() -> Dual<Eps, Eps> {
    Dual::from(DualWitness::end())
}

pub fn goto0() -> Dual<Goto0, Goto0> {
    Dual::from(DualWitness::goto0())
}

/// Jump to arrangement slot `N` (from 1); only meaningful under [`arrange`].
pub fn goto<const N: usize>() -> Dual<Goto<N>, Goto<N>> {
    Dual::from(DualWitness::goto(N))
}

pub fn send<V: Payload, S, T>(_: Val<V>, cont: Dual<S, T>) -> Dual<Send<V, S>, Recv<V, T>> {
    Dual::from(DualWitness::send(V::descriptor(), cont.w))
}

pub fn recv<V: Payload, S, T>(_: Val<V>, cont: Dual<S, T>) -> Dual<Recv<V, S>, Send<V, T>> {
    Dual::from(DualWitness::recv(V::descriptor(), cont.w))
}

pub fn select<SL, SR, TL, TR>(
    left: Dual<SL, TL>,
    right: Dual<SR, TR>,
) -> Dual<Select<SL, SR>, Offer<TL, TR>> {
    Dual::from(DualWitness::select(left.w, right.w))
}

pub fn offer<SL, SR, TL, TR>(
    left: Dual<SL, TL>,
    right: Dual<SR, TR>,
) -> Dual<Offer<SL, SR>, Select<TL, TR>> {
    Dual::from(DualWitness::offer(left.w, right.w))
}

pub fn deleg<S0, T0, S, T>(
    chan: Dual<S0, T0>,
    cont: Dual<S, T>,
) -> Dual<Deleg<S0, T0, S>, DelegRecv<S0, T>> {
    Dual::from(DualWitness::deleg(chan.w, cont.w))
}

pub fn deleg_recv<S0, T0, S, T>(
    chan: Dual<S0, T0>,
    cont: Dual<S, T>,
) -> Dual<DelegRecv<S0, S>, Deleg<S0, T0, T>> {
    Dual::from(DualWitness::deleg_recv(chan.w, cont.w))
}

/// Witness that the environments `E` and `F` are pointwise dual.
pub struct DualEnv<E, F> {
    w: EnvDualWitness,
    _types: PhantomData<fn() -> (E, F)>,
}

impl<E, F> DualEnv<E, F> {
    pub fn witness(&self) -> &EnvDualWitness {
        &self.w
    }
}

impl<E, F> Clone for DualEnv<E, F> {
    fn clone(&self) -> Self {
        DualEnv {
            w: self.w.clone(),
            _types: PhantomData,
        }
    }
}

/// Tuples of witnesses accepted by [`arrange`].
pub trait Arrangement {
    type Mine;
    type Theirs;
    fn witnesses(self) -> Vec<DualWitness>;
}

macro_rules! arrangement {
    ($($S:ident $T:ident $i:tt),+) => {
        impl<$($S, $T),+> Arrangement for ($(Dual<$S, $T>,)+) {
            type Mine = ($($S,)+);
            type Theirs = ($($T,)+);
            fn witnesses(self) -> Vec<DualWitness> {
                vec![$(self.$i.w),+]
            }
        }
    };
}

arrangement!(S1 T1 0);
arrangement!(S1 T1 0, S2 T2 1);
arrangement!(S1 T1 0, S2 T2 1, S3 T3 2);
arrangement!(S1 T1 0, S2 T2 1, S3 T3 2, S4 T4 3);
arrangement!(S1 T1 0, S2 T2 1, S3 T3 2, S4 T4 3, S5 T5 4);
arrangement!(S1 T1 0, S2 T2 1, S3 T3 2, S4 T4 3, S5 T5 4, S6 T6 5);
arrangement!(S1 T1 0, S2 T2 1, S3 T3 2, S4 T4 3, S5 T5 4, S6 T6 5, S7 T7 6);
arrangement!(S1 T1 0, S2 T2 1, S3 T3 2, S4 T4 3, S5 T5 4, S6 T6 5, S7 T7 6, S8 T8 7);

/// Groups mutually recursive protocols into one environment; slot `i`
/// (from 1) is entered with `goto::<i>()`.
pub fn arrange<A: Arrangement>(slots: A) -> Result<DualEnv<A::Mine, A::Theirs>, ShapeError> {
    Ok(DualEnv {
        w: witness::arrange(&slots.witnesses())?,
        _types: PhantomData,
    })
}

/// Names the state `at` inside the environment of `root`, for delegating a
/// session part-way through. Fails if `at` is not a state of `root`.
pub fn mid<S, T, E, F>(root: &DualEnv<E, F>, at: Dual<S, T>) -> Result<Dual<Mid<S, E>, Mid<T, F>>, ShapeError> {
    let reachable = ProtocolShape::reachable_states(root.w.mine());
    if !reachable.contains(at.w.mine()) {
        return Err(ShapeError::Unreachable {
            state: at.w.mine().to_string(),
        });
    }
    Ok(Dual::from(at.w))
}

/// [`mid`] for a single-slot session.
pub fn mid_unary<S, T, U, W>(root: &Dual<U, W>, at: Dual<S, T>) -> Result<Dual<Mid<S, U>, Mid<T, W>>, ShapeError> {
    let env = EnvDualWitness::unary(&root.w)?;
    let reachable = ProtocolShape::reachable_states(env.mine());
    if !reachable.contains(at.w.mine()) {
        return Err(ShapeError::Unreachable {
            state: at.w.mine().to_string(),
        });
    }
    Ok(Dual::from(at.w))
}

impl<S, T> Dual<S, T> {
    pub(crate) fn unary_env(&self) -> Result<EnvDualWitness> {
        Ok(EnvDualWitness::unary(&self.w)?)
    }
}
