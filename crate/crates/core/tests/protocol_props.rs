use proptest::prelude::*;
use sessio::shape::{dual_of, ProtocolShape as P};
use sessio::witness::{arrange, DualWitness as W, ShapeError};
use sessio::PayloadDescriptor as D;

fn arb_desc() -> impl Strategy<Value = D> {
    prop::sample::select(D::BUILTIN.to_vec())
}

/// Well-formed shapes of bounded depth over every variant.
fn arb_shape(depth: u32) -> impl Strategy<Value = P> {
    let leaf = prop_oneof![Just(P::Eps), (0usize..4).prop_map(P::Goto)];
    leaf.prop_recursive(depth, 64, 2, |inner| {
        prop_oneof![
            (arb_desc(), inner.clone()).prop_map(|(d, k)| P::send(d, k)),
            (arb_desc(), inner.clone()).prop_map(|(d, k)| P::recv(d, k)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| P::select(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| P::offer(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(c, k)| P::deleg(c, k)),
            (inner.clone(), inner).prop_map(|(c, k)| P::deleg_recv(c, k)),
        ]
    })
}

/// Combinator trees, built only through the public witness constructors.
fn arb_witness(depth: u32) -> impl Strategy<Value = W> {
    let leaf = prop_oneof![Just(W::end()), Just(W::goto0())];
    leaf.prop_recursive(depth, 64, 2, |inner| {
        prop_oneof![
            (arb_desc(), inner.clone()).prop_map(|(d, k)| W::send(d, k)),
            (arb_desc(), inner.clone()).prop_map(|(d, k)| W::recv(d, k)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| W::select(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| W::offer(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(c, k)| W::deleg(c, k)),
            (inner.clone(), inner).prop_map(|(c, k)| W::deleg_recv(c, k)),
        ]
    })
}

fn all_gotos(s: &P, out: &mut Vec<usize>) {
    match s {
        P::Eps => {}
        P::Goto(i) => out.push(*i),
        P::Send(_, k) | P::Recv(_, k) => all_gotos(k, out),
        P::Select(l, r) | P::Offer(l, r) => {
            all_gotos(l, out);
            all_gotos(r, out);
        }
        P::Deleg {
            carried,
            carried_dual,
            cont,
        } => {
            all_gotos(carried, out);
            all_gotos(carried_dual, out);
            all_gotos(cont, out);
        }
        P::DelegRecv { carried, cont } => {
            all_gotos(carried, out);
            all_gotos(cont, out);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dual_is_an_involution(s in arb_shape(6)) {
        prop_assert!(s.depth() <= 7);
        prop_assert_eq!(dual_of(&dual_of(&s)), s);
    }

    #[test]
    fn witnesses_pair_duals(w in arb_witness(6)) {
        prop_assert_eq!(&dual_of(w.mine()), w.theirs());
        prop_assert_eq!(&dual_of(w.theirs()), w.mine());
    }

    #[test]
    fn carried_duals_are_coherent(w in arb_witness(6)) {
        prop_assert!(w.mine().is_coherent());
        prop_assert!(w.theirs().is_coherent());
    }

    #[test]
    fn combinators_only_use_goto0(w in arb_witness(6)) {
        let mut gotos = Vec::new();
        all_gotos(w.mine(), &mut gotos);
        all_gotos(w.theirs(), &mut gotos);
        prop_assert!(gotos.iter().all(|&i| i == 0));
    }

    #[test]
    fn rendering_round_trips(s in arb_shape(6)) {
        let text = s.render();
        prop_assert_eq!(P::parse(&text).unwrap(), s);
    }

    #[test]
    fn arrange_keeps_pointwise_duality(n in 1usize..=8, seeds in prop::collection::vec(arb_desc(), 8)) {
        let ws: Vec<W> = (0..n).map(|i| W::send(seeds[i], W::goto(i % n + 1))).collect();
        let env = arrange(&ws).unwrap();
        prop_assert_eq!(env.arity(), n);
        for (m, t) in env.mine().iter().zip(env.theirs()) {
            prop_assert_eq!(&dual_of(m), t);
        }
    }
}

#[test]
fn arrange_bounds() {
    assert_eq!(arrange(&[]), Err(ShapeError::Arity(0)));
    assert_eq!(arrange(&vec![W::end(); 9]), Err(ShapeError::Arity(9)));
    assert!(arrange(&vec![W::end(); 8]).is_ok());
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
fn alternating_arrangement() {
    let env = arrange(&[W::send(D::INT, W::goto(2)), W::recv(D::INT, W::goto(1))]).unwrap();
    assert_eq!(
        env.mine(),
        [P::send(D::INT, P::Goto(2)), P::recv(D::INT, P::Goto(1))]
    );
    assert_eq!(
        env.theirs(),
        [P::recv(D::INT, P::Goto(2)), P::send(D::INT, P::Goto(1))]
    );
}

#[test]
fn offer_combinator_example() {
    let w = W::offer(W::recv(D::INT, W::end()), W::end());
    assert_eq!(w.mine(), &P::offer(P::recv(D::INT, P::Eps), P::Eps));
    assert_eq!(w.theirs(), &P::select(P::send(D::INT, P::Eps), P::Eps));
}

#[test]
fn tak_protocol_pair() {
    let w = W::send(
        D::INT_TRIPLE,
        W::deleg(W::recv(D::UNIT, W::end()), W::offer(W::recv(D::INT, W::end()), W::end())),
    );
    assert_eq!(w.mine().render(), "!int3.deleg(?unit.end).&{L:?int.end,R:end}");
    assert_eq!(w.theirs().render(), "?int3.accept(?unit.end).+{L:!int.end,R:end}");
}
