//! Duality witnesses.
//!
//! A [`DualWitness`] pairs a shape with the shape of its peer. The fields are
//! private and the only constructors are the combinators below, each of which
//! builds both halves in lock step, so `theirs == dual_of(mine)` holds for
//! every witness that exists.

use crate::payload::PayloadDescriptor;
use crate::shape::ProtocolShape;

/// Largest session environment an arrangement may hold.
pub const MAX_ARITY: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ShapeError {
    #[error("arrangement arity {0} outside 1..={MAX_ARITY}")]
    Arity(usize),
    #[error("goto{index} has no slot in an environment of arity {arity}")]
    DanglingGoto { index: usize, arity: usize },
    #[error("shape {state} is not reachable from its environment")]
    Unreachable { state: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DualWitness {
    mine: ProtocolShape,
    theirs: ProtocolShape,
}

impl DualWitness {
    pub fn mine(&self) -> &ProtocolShape {
        &self.mine
    }

    pub fn theirs(&self) -> &ProtocolShape {
        &self.theirs
    }

    /// The same session seen from the other side.
    pub fn flip(&self) -> DualWitness {
        DualWitness {
            mine: self.theirs.clone(),
            theirs: self.mine.clone(),
        }
    }

    pub fn end() -> Self {
        DualWitness {
            mine: ProtocolShape::Eps,
            theirs: ProtocolShape::Eps,
        }
    }

    /// Jump back to the start of a single-cycle session.
    pub fn goto0() -> Self {
        Self::goto(0)
    }

    /// Jump to slot `index`. Indices from 1 address the slots of an
    /// arrangement and are checked by [`arrange`].
    pub fn goto(index: usize) -> Self {
        DualWitness {
            mine: ProtocolShape::Goto(index),
            theirs: ProtocolShape::Goto(index),
        }
    }

    pub fn send(payload: PayloadDescriptor, cont: DualWitness) -> Self {
        DualWitness {
            mine: ProtocolShape::send(payload, cont.mine),
            theirs: ProtocolShape::recv(payload, cont.theirs),
        }
    }

    pub fn recv(payload: PayloadDescriptor, cont: DualWitness) -> Self {
        DualWitness {
            mine: ProtocolShape::recv(payload, cont.mine),
            theirs: ProtocolShape::send(payload, cont.theirs),
        }
    }

    pub fn select(left: DualWitness, right: DualWitness) -> Self {
        DualWitness {
            mine: ProtocolShape::select(left.mine, right.mine),
            theirs: ProtocolShape::offer(left.theirs, right.theirs),
        }
    }

    pub fn offer(left: DualWitness, right: DualWitness) -> Self {
        DualWitness {
            mine: ProtocolShape::offer(left.mine, right.mine),
            theirs: ProtocolShape::select(left.theirs, right.theirs),
        }
    }

    pub fn deleg(chan: DualWitness, cont: DualWitness) -> Self {
        use std::sync::Arc;
        let carried = Arc::new(chan.mine);
        DualWitness {
            mine: ProtocolShape::Deleg {
                carried: carried.clone(),
                carried_dual: Arc::new(chan.theirs),
                cont: Arc::new(cont.mine),
            },
            theirs: ProtocolShape::DelegRecv {
                carried,
                cont: Arc::new(cont.theirs),
            },
        }
    }

    pub fn deleg_recv(chan: DualWitness, cont: DualWitness) -> Self {
        use std::sync::Arc;
        let carried = Arc::new(chan.mine);
        DualWitness {
            mine: ProtocolShape::DelegRecv {
                carried: carried.clone(),
                cont: Arc::new(cont.mine),
            },
            theirs: ProtocolShape::Deleg {
                carried,
                carried_dual: Arc::new(chan.theirs),
                cont: Arc::new(cont.theirs),
            },
        }
    }

    /// Rejects jumps that a single-slot environment cannot resolve.
    pub fn check_unary(&self) -> Result<(), ShapeError> {
        match self.mine.goto_indices().into_iter().find(|&i| i != 0) {
            Some(index) => Err(ShapeError::DanglingGoto { index, arity: 1 }),
            None => Ok(()),
        }
    }
}

/// Pointwise duality between two session environments.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnvDualWitness {
    mine: Vec<ProtocolShape>,
    theirs: Vec<ProtocolShape>,
}

impl EnvDualWitness {
    pub fn mine(&self) -> &[ProtocolShape] {
        &self.mine
    }

    pub fn theirs(&self) -> &[ProtocolShape] {
        &self.theirs
    }

    pub fn arity(&self) -> usize {
        self.mine.len()
    }

    /// Single-slot environment of a plain witness, addressed with `goto0`.
    pub fn unary(w: &DualWitness) -> Result<Self, ShapeError> {
        w.check_unary()?;
        Ok(EnvDualWitness {
            mine: vec![w.mine.clone()],
            theirs: vec![w.theirs.clone()],
        })
    }
}

/// Groups mutually recursive witnesses into one environment. Slot `i`
/// (counting from 1) is reached with `goto(i)`; `goto0` is not allowed here.
pub fn arrange(witnesses: &[DualWitness]) -> Result<EnvDualWitness, ShapeError> {
    let arity = witnesses.len();
    if !(1..=MAX_ARITY).contains(&arity) {
        return Err(ShapeError::Arity(arity));
    }
    for w in witnesses {
        if let Some(index) = w
            .mine
            .goto_indices()
            .into_iter()
            .find(|&i| i == 0 || i > arity)
        {
            return Err(ShapeError::DanglingGoto { index, arity });
        }
    }
    Ok(EnvDualWitness {
        mine: witnesses.iter().map(|w| w.mine.clone()).collect(),
        theirs: witnesses.iter().map(|w| w.theirs.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payload::PayloadDescriptor as D;
    use crate::shape::{dual_of, ProtocolShape as P};

    type W = DualWitness;

    #[test]
    fn end_is_self_dual() {
        let w = W::end();
        assert_eq!((w.mine(), w.theirs()), (&P::Eps, &P::Eps));
    }

    #[test]
    fn tak_protocol_pair() {
        let w = W::send(
            D::INT_TRIPLE,
            W::deleg(
                W::recv(D::UNIT, W::end()),
                W::offer(W::recv(D::INT, W::end()), W::end()),
            ),
        );
        assert_eq!(
            w.mine().render(),
            "!int3.deleg(?unit.end).&{L:?int.end,R:end}"
        );
        assert_eq!(
            w.theirs().render(),
            "?int3.accept(?unit.end).+{L:!int.end,R:end}"
        );
        assert_eq!(&dual_of(w.mine()), w.theirs());
    }

    #[test]
    fn offer_pair() {
        let w = W::offer(W::recv(D::INT, W::end()), W::end());
        assert_eq!(w.mine(), &P::offer(P::recv(D::INT, P::Eps), P::Eps));
        assert_eq!(w.theirs(), &P::select(P::send(D::INT, P::Eps), P::Eps));
    }

    #[test]
    fn deleg_recv_pair_carries_dual() {
        let w = W::deleg_recv(W::send(D::UNIT, W::end()), W::end());
        match w.theirs() {
            P::Deleg {
                carried,
                carried_dual,
                ..
            } => {
                assert_eq!(**carried, P::send(D::UNIT, P::Eps));
                assert_eq!(**carried_dual, P::recv(D::UNIT, P::Eps));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn arrange_alternating() {
        let env = arrange(&[
            W::send(D::INT, W::goto(2)),
            W::recv(D::INT, W::goto(1)),
        ])
        .unwrap();
        assert_eq!(
            env.mine(),
            &[P::send(D::INT, P::Goto(2)), P::recv(D::INT, P::Goto(1))]
        );
        assert_eq!(
            env.theirs(),
            &[P::recv(D::INT, P::Goto(2)), P::send(D::INT, P::Goto(1))]
        );
    }

    #[test]
    fn arrange_single_end() {
        let env = arrange(&[W::end()]).unwrap();
        assert_eq!(env.mine(), &[P::Eps]);
        assert_eq!(env.theirs(), &[P::Eps]);
    }

    #[test]
    fn arrange_arity_bounds() {
        let nine = vec![W::end(); 9];
        assert_eq!(arrange(&nine), Err(ShapeError::Arity(9)));
        assert_eq!(arrange(&[]), Err(ShapeError::Arity(0)));
        assert!(arrange(&nine[..8]).is_ok());
    }

    #[test]
    fn arrange_rejects_dangling_and_goto0() {
        assert_eq!(
            arrange(&[W::send(D::INT, W::goto(3)), W::end()]),
            Err(ShapeError::DanglingGoto { index: 3, arity: 2 })
        );
        assert_eq!(
            arrange(&[W::send(D::INT, W::goto0())]),
            Err(ShapeError::DanglingGoto { index: 0, arity: 1 })
        );
    }

    #[test]
    fn unary_rejects_slot_gotos() {
        assert!(W::send(D::INT, W::goto(1)).check_unary().is_err());
        assert!(EnvDualWitness::unary(&W::send(D::INT, W::goto0())).is_ok());
    }
}
