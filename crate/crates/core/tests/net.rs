use std::sync::mpsc;
use std::time::{Duration, Instant};

use sessio::types::*;
use sessio::{SessionCanceller, SessionError};

const ANY: &str = "127.0.0.1:0";

#[test]
fn loopback_round_trips_a_value() {
    let p = send(val::<i64>(), recv(val::<i64>(), end()));
    let listener = p
        .listen(ANY, |s| {
            let (n, s) = s.receive().unwrap();
            s.send(n * 2).unwrap().close().unwrap();
        })
        .unwrap();
    let addr = listener.local_addr().to_string();
    let (v, c) = p.connect(&addr).unwrap().send(21).unwrap().receive().unwrap();
    assert_eq!(v, 42);
    c.close().unwrap();
    assert!(listener.wait_served(1, Some(Duration::from_secs(5))));
}

#[test]
fn serves_sequential_clients() {
    let p = recv(val::<String>(), end());
    let listener = p
        .listen(ANY, |s| s.send("hi".into()).unwrap().close().unwrap())
        .unwrap();
    let addr = listener.local_addr().to_string();
    for _ in 0..2 {
        let (v, c) = p.connect(&addr).unwrap().receive().unwrap();
        assert_eq!(v, "hi");
        c.close().unwrap();
    }
    assert!(listener.wait_served(2, Some(Duration::from_secs(5))));
}

#[test]
fn all_payload_domains_cross_the_wire() {
    use sessio::{Decimal, Vector2};
    let p = send(
        val::<(i64, i64, i64)>(),
        send(
            val::<Option<Vec<u8>>>(),
            send(val::<Decimal>(), send(val::<Vector2>(), send(val::<u32>(), end()))),
        ),
    );
    let (tx, rx) = mpsc::channel();
    let listener = p
        .listen(ANY, move |s| {
            let (a, s) = s.receive().unwrap();
            let (b, s) = s.receive().unwrap();
            let (c, s) = s.receive().unwrap();
            let (d, s) = s.receive().unwrap();
            let (e, s) = s.receive().unwrap();
            s.close().unwrap();
            tx.send((a, b, c, d, e)).unwrap();
        })
        .unwrap();
    let c = p.connect(&listener.local_addr().to_string()).unwrap();
    let v = Vector2::new(0.1, -3.5e-300);
    c.send((1, -2, i64::MAX))
        .unwrap()
        .send(None)
        .unwrap()
        .send("90.00".parse().unwrap())
        .unwrap()
        .send(v)
        .unwrap()
        .send(u32::MAX)
        .unwrap()
        .close()
        .unwrap();
    let (a, b, c, d, e) = rx.recv_timeout(Duration::from_secs(5)).unwrap();
    assert_eq!(a, (1, -2, i64::MAX));
    assert_eq!(b, None);
    assert_eq!(c.as_str(), "90.00");
    assert_eq!(d.bits(), v.bits());
    assert_eq!(e, u32::MAX);
}

#[test]
fn mismatched_hello_is_refused() {
    let served = send(val::<i64>(), end());
    let listener = served.listen(ANY, drop).unwrap();
    let addr = listener.local_addr().to_string();
    let other = send(val::<String>(), end());
    let err = other.connect(&addr).unwrap_err();
    assert!(matches!(err, SessionError::HandshakeMismatch { .. }), "{err:?}");
    // the listener keeps serving after a refusal
    let c = served.connect(&addr).unwrap();
    c.send(1).unwrap().close().unwrap();
    assert!(listener.wait_served(1, Some(Duration::from_secs(5))));
    assert_eq!(listener.rejected(), 1);
}

#[test]
fn connect_to_closed_port_fails() {
    let port = {
        let l = std::net::TcpListener::bind(ANY).unwrap();
        l.local_addr().unwrap().port()
    };
    let err = end().connect(&format!("127.0.0.1:{port}")).unwrap_err();
    assert!(matches!(err, SessionError::Connect { .. }));
}

#[test]
fn bind_conflict_reported() {
    let holder = std::net::TcpListener::bind(ANY).unwrap();
    let addr = holder.local_addr().unwrap().to_string();
    assert!(matches!(end().listen(&addr, drop), Err(SessionError::Bind { .. })));
}

#[test]
fn delegation_is_not_available_over_tcp() {
    let p = deleg(end(), end());
    let listener = p.listen(ANY, drop).unwrap();
    let c = p.connect(&listener.local_addr().to_string()).unwrap();
    let (a, _b) = end().pair().unwrap();
    assert_eq!(c.deleg(a).unwrap_err(), SessionError::UnsupportedTransfer);
}

#[test]
fn dispose_cancels_registered_sessions_on_both_sides() {
    let p = send(val::<i64>(), recv(val::<i64>(), end()));
    let (go_tx, go_rx) = mpsc::channel::<()>();
    let go_rx = std::sync::Mutex::new(go_rx);
    let (tx, rx) = mpsc::channel();
    let listener = p
        .listen(ANY, move |s| {
            let (_, s) = s.receive().unwrap();
            go_rx.lock().unwrap().recv().unwrap();
            // give the CANCEL frame time to arrive
            let deadline = Instant::now() + Duration::from_secs(5);
            while !s.endpoint().is_cancelled() && Instant::now() < deadline {
                std::thread::sleep(Duration::from_millis(5));
            }
            let _ = tx.send(s.send(0).map(|_| ()));
        })
        .unwrap();
    let c = p.connect(&listener.local_addr().to_string()).unwrap();
    let canceller = SessionCanceller::new();
    canceller.register(&c).unwrap();
    let c = c.send(1).unwrap();
    let t0 = Instant::now();
    let blocked = std::thread::spawn(move || c.receive().map(|_| ()));
    std::thread::sleep(Duration::from_millis(50));
    canceller.dispose();
    canceller.dispose();
    go_tx.send(()).unwrap();
    assert_eq!(blocked.join().unwrap(), Err(SessionError::Cancelled));
    let peer = rx.recv_timeout(Duration::from_secs(6)).unwrap();
    assert_eq!(peer, Err(SessionError::Cancelled));
    assert!(t0.elapsed() < Duration::from_secs(5));
    assert!(matches!(
        canceller.register(&end().pair().unwrap().0),
        Err(SessionError::CancellerDisposed)
    ));
}

#[test]
fn dispose_ignores_closed_sessions() {
    let (a, b) = end().pair().unwrap();
    let canceller = SessionCanceller::new();
    canceller.register(&b).unwrap();
    let ep_a = a.into_endpoint();
    ep_a.close().unwrap();
    let k = b;
    k.close().unwrap();
    drop(canceller);
}

#[test]
fn operations_after_dispose_are_cancelled() {
    let p = send(val::<i64>(), recv(val::<i64>(), end()));
    let (a, b) = p.pair().unwrap();
    let c = SessionCanceller::new();
    c.register(&a).unwrap();
    c.dispose();
    assert_eq!(a.send(1).unwrap_err(), SessionError::Cancelled);
    assert_eq!(b.receive().unwrap_err(), SessionError::Cancelled);
}

#[test]
fn address_resolution_prefers_flag() {
    assert_eq!(sessio::net::bind_address(Some("1.2.3.4:5"), "x"), "1.2.3.4:5");
    assert_eq!(sessio::net::peer_address(Some("h:1"), "x"), "h:1");
}
