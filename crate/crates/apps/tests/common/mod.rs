//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;

use proptest::prelude::*;
use sessio::shape::ProtocolShape;
use sessio::trace::Direction;
use sessio::{check_trace, Acceptance, TraceLog, Vector2};
use sha2::{Digest, Sha256};

pub fn tak_closed_form(x: i64, y: i64, z: i64) -> i64 {
    if x <= y {
        y
    } else if y <= z {
        z
    } else {
        x
    }
}

/// Recomputes the proof-of-work predicate from scratch.
pub fn nonce_verifies(header: &[u8], nonce: u32, difficulty: u32) -> bool {
    let digest = Sha256::digest([header, &nonce.to_le_bytes()[..]].concat());
    let mut bits = 0;
    for b in digest.iter() {
        bits += b.leading_zeros();
        if *b != 0 {
            break;
        }
    }
    bits >= difficulty
}

/// Textbook sequential Sutherland–Hodgman, same arithmetic as the stages.
pub fn clip_sequential(subject: &[Vector2], clipper: &[Vector2]) -> Vec<Vector2> {
    let mut clip = clipper.to_vec();
    let area: f64 = (0..clip.len())
        .map(|i| {
            let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
            a.x * b.y - a.y * b.x
        })
        .sum();
    if area < 0.0 {
        clip.reverse();
    }
    let mut poly = subject.to_vec();
    for i in 0..clip.len() {
        let (e0, e1) = (clip[i], clip[(i + 1) % clip.len()]);
        let side = |p: Vector2| (e1.x - e0.x) * (p.y - e0.y) - (e1.y - e0.y) * (p.x - e0.x);
        let mut out = Vec::new();
        let n = poly.len();
        for j in 0..n {
            let (a, b) = (poly[j], poly[(j + 1) % n]);
            let (ca, cb) = (side(a), side(b));
            let cross = || {
                let t = ca / (ca - cb);
                Vector2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
            };
            match (ca >= 0.0, cb >= 0.0) {
                (true, true) => out.push(b),
                (true, false) => out.push(cross()),
                (false, true) => {
                    out.push(cross());
                    out.push(b);
                }
                (false, false) => {}
            }
        }
        poly = out;
    }
    poly
}

pub fn bitwise_eq(a: &[Vector2], b: &[Vector2]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(p, q)| p.bits() == q.bits())
}

pub fn square_and_triangle() -> (Vec<Vector2>, Vec<Vector2>) {
    let v = Vector2::new;
    (
        vec![v(2.0, 2.0), v(2.0, 6.0), v(6.0, 6.0), v(6.0, 2.0)],
        vec![v(1.0, 3.0), v(3.0, 6.0), v(7.0, 1.0)],
    )
}

/// A convex polygon (points on a circle, sorted by angle) and an arbitrary
/// subject polygon.
pub fn arb_clip_instance() -> impl Strategy<Value = (Vec<Vector2>, Vec<Vector2>)> {
    let clipper = (
        -5.0..5.0f64,
        -5.0..5.0f64,
        0.5..10.0f64,
        prop::collection::btree_set(0u32..3600, 3..9),
        any::<bool>(),
    )
        .prop_map(|(cx, cy, r, angles, cw)| {
            let mut pts: Vec<Vector2> = angles
                .into_iter()
                .map(|a| {
                    let t = f64::from(a) / 3600.0 * std::f64::consts::TAU;
                    Vector2::new(cx + r * t.cos(), cy + r * t.sin())
                })
                .collect();
            if cw {
                pts.reverse();
            }
            pts
        });
    let subject = prop::collection::vec((-12.0..12.0f64, -12.0..12.0f64), 0..12)
        .prop_map(|ps| ps.into_iter().map(|(x, y)| Vector2::new(x, y)).collect());
    (subject, clipper)
}

/// Checks a closed trace against the unary protocol `start`.
pub fn closed_under(start: &ProtocolShape, log: &TraceLog) -> Result<(), String> {
    match check_trace(start, std::slice::from_ref(start), &log.events()) {
        Ok(Acceptance::Closed) => Ok(()),
        Ok(open) => Err(format!("trace not closed: {open:?}\n{}", log.to_csv())),
        Err(e) => Err(format!("{e}\n{}", log.to_csv())),
    }
}

/// Label events of one direction in a trace, as `left`/`right`.
pub fn labels(log: &TraceLog, dir: Direction) -> Vec<String> {
    log.events()
        .into_iter()
        .filter(|e| e.dir == dir && e.variant == sessio::trace::Variant::Label)
        .map(|e| e.domain)
        .collect()
}

/// A minimal HTTP/1.1 server: `/ok/<text>` answers 200 with `<text>`,
/// anything else 404. Serves until the process exits.
pub fn stub_http_server() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request = String::new();
                if reader.read_line(&mut request).is_err() {
                    return;
                }
                let mut line = String::new();
                while reader.read_line(&mut line).is_ok_and(|n| n > 2) {
                    line.clear();
                }
                let path = request.split_whitespace().nth(1).unwrap_or("/");
                let (status, body) = match path.strip_prefix("/ok/") {
                    Some(text) => ("200 OK", text.to_string()),
                    None => ("404 Not Found", String::new()),
                };
                let mut stream = stream;
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
            });
        }
    });
    format!("http://{addr}")
}
