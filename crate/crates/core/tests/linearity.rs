use std::sync::Arc;

use sessio::witness::DualWitness as W;
use sessio::{Endpoint, EnvDualWitness, LeakTracker, PayloadDescriptor as D, PayloadValue, SessionError};

fn pair(w: W) -> (Endpoint, Endpoint) {
    Endpoint::pair(&EnvDualWitness::unary(&w).unwrap())
}

fn is_reuse<T>(r: Result<T, SessionError>) -> bool {
    matches!(r, Err(e) if e.is_reuse())
}

#[test]
fn every_operation_rejects_reuse() {
    let tracker = LeakTracker::new();
    tracker.scope(|| {
        let (a, b) = pair(W::send(D::INT, W::end()));
        let _k = a.send(PayloadValue::Int(1)).unwrap();
        assert!(is_reuse(a.send(PayloadValue::Int(1))));

        let (_k, _) = b.receive().unwrap();
        assert!(is_reuse(b.receive()));

        let (a, _b) = pair(W::recv(D::INT, W::end()));
        let _t = a.receive_async().unwrap();
        assert!(is_reuse(a.receive_async()));

        let (a, b) = pair(W::select(W::end(), W::end()));
        let _k = a.select_left().unwrap();
        assert!(is_reuse(a.select_right()));
        assert!(is_reuse(a.select_left()));

        let _k = b.branch().unwrap();
        assert!(is_reuse(b.offer(|_| Ok(()), |_| Ok(()))));

        let (a, _b) = pair(W::offer(W::end(), W::end()));
        let _p = a.offer_async().unwrap();
        assert!(is_reuse(a.offer_async()));

        let (a, b) = pair(W::end());
        a.close().unwrap();
        b.close().unwrap();
        assert!(is_reuse(a.close()));

        let (a, _b) = pair(W::send(D::INT, W::goto0()));
        let k = a.send(PayloadValue::Int(0)).unwrap();
        let _g = k.goto().unwrap();
        assert!(is_reuse(k.goto()));

        let carried_w = W::recv(D::UNIT, W::end());
        let (a, b) = pair(W::deleg(carried_w.clone(), W::end()));
        let (c1, _c1) = pair(carried_w.clone());
        let (c2, _c2) = pair(carried_w.clone());
        let _k = a.deleg(&c1).unwrap();
        assert!(is_reuse(a.deleg(&c2)));
        // the carried argument is used up as well
        let (a2, _b2) = pair(W::deleg(carried_w.clone(), W::end()));
        assert!(is_reuse(a2.deleg(&c1)));

        let _r = b.deleg_recv().unwrap();
        assert!(is_reuse(b.deleg_recv()));

        let (a, _b) = pair(W::deleg(carried_w, W::end()));
        let _n = a.deleg_new().unwrap();
        assert!(is_reuse(a.deleg_new()));
    });
}

#[test]
fn concurrent_reuse_lets_exactly_one_through() {
    for _ in 0..100 {
        let (a, _b) = pair(W::send(D::INT, W::end()));
        let a = Arc::new(a);
        let handles: Vec<_> = (0..4)
            .map(|i| {
                let a = a.clone();
                std::thread::spawn(move || a.send(PayloadValue::Int(i)).map(std::mem::forget).is_ok())
            })
            .collect();
        let ok = handles.into_iter().map(|h| h.join().unwrap()).filter(|&x| x).count();
        assert_eq!(ok, 1);
    }
}

#[test]
fn wrong_operation_is_not_a_reuse() {
    let (a, b) = pair(W::recv(D::INT, W::end()));
    assert!(matches!(a.close(), Err(SessionError::WrongStep { .. })));
    b.send(PayloadValue::Int(4)).unwrap().close().unwrap();
    let (v, k) = a.receive().unwrap();
    assert_eq!(v, PayloadValue::Int(4));
    k.close().unwrap();
}
