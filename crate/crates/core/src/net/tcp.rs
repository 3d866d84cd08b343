//! Sessions over TCP.
//!
//! A connection starts with a HELLO exchange: the client sends the rendering
//! of the shape it expects the server to follow, the server compares it with
//! its own shape and either answers with the shape it expects back or sends
//! CANCEL and hangs up. After that each side runs one reader thread that
//! feeds incoming frames into the endpoint's inbox; writes go straight to
//! the socket under a lock.

use std::io::{self, BufReader};
use std::net::{IpAddr, Ipv4Addr, Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use super::codec::Codec;
use super::frame::{read_frame, write_frame, Frame};
use crate::endpoint::Endpoint;
use crate::error::{Result, SessionError};
use crate::leak::LeakTracker;
use crate::shape::ProtocolShape;
use crate::transport::{Choice, Inbox, Message, RemoteOutlet, Transport, Wire};
use crate::witness::DualWitness;

/// How long either side waits for the peer's HELLO.
pub const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(5);

struct TcpLink {
    stream: TcpStream,
    write_lock: Mutex<()>,
    codec: Arc<dyn Codec>,
}

fn io_error(e: io::Error) -> SessionError {
    match e.kind() {
        io::ErrorKind::BrokenPipe
        | io::ErrorKind::ConnectionReset
        | io::ErrorKind::ConnectionAborted
        | io::ErrorKind::NotConnected => SessionError::Disconnected,
        _ => SessionError::Io(e.to_string()),
    }
}

impl RemoteOutlet for TcpLink {
    fn send(&self, msg: &Message) -> Result<()> {
        let frame = match msg {
            Message::Value(Wire::Decoded(v)) => Frame::Value(
                self.codec
                    .encode(v)
                    .map_err(|e| SessionError::Codec(e.to_string()))?,
            ),
            Message::Value(Wire::Encoded(b)) => Frame::Value(b.clone()),
            Message::Label(Choice::Left) => Frame::LabelLeft,
            Message::Label(Choice::Right) => Frame::LabelRight,
            Message::Close => Frame::Close,
            Message::Cancel => Frame::Cancel,
            Message::Transfer(_) => return Err(SessionError::UnsupportedTransfer),
        };
        let _guard = self.write_lock.lock().unwrap();
        write_frame(&mut &self.stream, &frame).map_err(|e| match e {
            super::frame::FrameError::Io(e) => io_error(e),
            other => SessionError::Codec(other.to_string()),
        })
    }

    fn finish(&self) {
        let _ = self.stream.shutdown(Shutdown::Write);
    }

    fn abort(&self) {
        let _ = self.stream.shutdown(Shutdown::Both);
    }
}

fn spawn_reader(stream: TcpStream, inbox: Arc<Inbox>) -> Result<()> {
    std::thread::Builder::new()
        .name("sessio-net-reader".into())
        .spawn(move || {
            let mut r = BufReader::new(stream);
            loop {
                let msg = match read_frame(&mut r) {
                    Ok(Some(Frame::Value(b))) => Message::Value(Wire::Encoded(b)),
                    Ok(Some(Frame::LabelLeft)) => Message::Label(Choice::Left),
                    Ok(Some(Frame::LabelRight)) => Message::Label(Choice::Right),
                    Ok(Some(Frame::Close)) => Message::Close,
                    Ok(Some(Frame::Cancel)) => {
                        inbox.push(Message::Cancel);
                        return;
                    }
                    Ok(Some(Frame::Hello(_))) => {
                        log::warn!("unexpected HELLO inside a session; cancelling");
                        inbox.push(Message::Cancel);
                        return;
                    }
                    Ok(None) => {
                        inbox.push(Message::Close);
                        return;
                    }
                    Err(e) => {
                        log::debug!("connection lost: {e}");
                        inbox.push(Message::Close);
                        return;
                    }
                };
                inbox.push(msg);
            }
        })
        .map(|_| ())
        .map_err(|e| SessionError::Spawn(e.to_string()))
}

/// Wraps an established, handshaken connection into an endpoint at `shape`.
fn endpoint_over(
    stream: TcpStream,
    shape: ProtocolShape,
    codec: Arc<dyn Codec>,
    leaks: Arc<LeakTracker>,
) -> Result<Endpoint> {
    stream.set_read_timeout(None)?;
    let inbox = Arc::new(Inbox::default());
    spawn_reader(stream.try_clone()?, inbox.clone())?;
    let link = Arc::new(TcpLink {
        stream,
        write_lock: Mutex::new(()),
        codec: codec.clone(),
    });
    let transport = Transport::remote(inbox, link, codec, leaks);
    Ok(Endpoint::new(transport, shape.clone(), vec![shape].into()))
}

fn read_hello(stream: &mut TcpStream) -> std::result::Result<Option<Frame>, String> {
    stream
        .set_read_timeout(Some(HANDSHAKE_TIMEOUT))
        .map_err(|e| e.to_string())?;
    read_frame(stream).map_err(|e| e.to_string())
}

/// Connects to a listener serving the peer side of `w`; returns the
/// endpoint at `w.mine()`.
pub fn connect_endpoint(w: &DualWitness, addr: &str, codec: Arc<dyn Codec>) -> Result<Endpoint> {
    w.check_unary()?;
    let conn_err = |reason: String| SessionError::Connect {
        addr: addr.to_string(),
        reason,
    };
    let mut stream = TcpStream::connect(addr).map_err(|e| conn_err(e.to_string()))?;
    let _ = stream.set_nodelay(true);
    let offered = w.theirs().render();
    write_frame(&mut stream, &Frame::Hello(offered.clone())).map_err(|e| conn_err(e.to_string()))?;
    let expected = w.mine().render();
    match read_hello(&mut stream).map_err(conn_err)? {
        Some(Frame::Hello(back)) if back == expected => {}
        Some(Frame::Hello(back)) => {
            let _ = write_frame(&mut stream, &Frame::Cancel);
            return Err(SessionError::HandshakeMismatch {
                expected,
                offered: back,
            });
        }
        _ => {
            return Err(SessionError::HandshakeMismatch {
                expected: offered,
                offered: "(refused by peer)".into(),
            })
        }
    }
    endpoint_over(stream, w.mine().clone(), codec, LeakTracker::current())
}

#[derive(Default)]
struct Counters {
    served: usize,
    rejected: usize,
}

/// A running accept loop. Dropping it stops accepting new connections;
/// sessions already running are not affected.
pub struct Listener {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    counters: Arc<(Mutex<Counters>, Condvar)>,
    accept: Option<JoinHandle<()>>,
}

impl Listener {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Number of sessions whose body has returned.
    pub fn served(&self) -> usize {
        self.counters.0.lock().unwrap().served
    }

    /// Number of connections turned away at the handshake.
    pub fn rejected(&self) -> usize {
        self.counters.0.lock().unwrap().rejected
    }

    /// Blocks until `n` sessions have been served; `None` waits forever.
    /// Returns whether the count was reached.
    pub fn wait_served(&self, n: usize, timeout: Option<Duration>) -> bool {
        let (lock, cv) = &*self.counters;
        let deadline = timeout.map(|t| Instant::now() + t);
        let mut c = lock.lock().unwrap();
        while c.served < n {
            match deadline {
                None => c = cv.wait(c).unwrap(),
                Some(d) => {
                    let now = Instant::now();
                    if now >= d {
                        return false;
                    }
                    c = cv.wait_timeout(c, d - now).unwrap().0;
                }
            }
        }
        true
    }

    pub fn shutdown(&mut self) {
        if self.stop.swap(true, Ordering::SeqCst) {
            return;
        }
        let mut wake = self.addr;
        if wake.ip().is_unspecified() {
            wake.set_ip(IpAddr::V4(Ipv4Addr::LOCALHOST));
        }
        let _ = TcpStream::connect_timeout(&wake, Duration::from_secs(1));
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for Listener {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn serve_connection(
    mut stream: TcpStream,
    shape: &ProtocolShape,
    codec: Arc<dyn Codec>,
    leaks: Arc<LeakTracker>,
) -> std::result::Result<Endpoint, String> {
    let _ = stream.set_nodelay(true);
    let mine = shape.render();
    match read_hello(&mut stream)? {
        Some(Frame::Hello(offered)) if offered == mine => {}
        other => {
            let _ = write_frame(&mut stream, &Frame::Cancel);
            let _ = stream.shutdown(Shutdown::Both);
            return Err(match other {
                Some(Frame::Hello(offered)) => {
                    format!("peer expects {offered}, this side follows {mine}")
                }
                _ => "no HELLO received".to_string(),
            });
        }
    }
    let back = crate::shape::dual_of(shape).render();
    write_frame(&mut stream, &Frame::Hello(back)).map_err(|e| e.to_string())?;
    endpoint_over(stream, shape.clone(), codec, leaks).map_err(|e| e.to_string())
}

/// Accepts connections on `addr`, running `body` on its own thread with the
/// endpoint at `w.theirs()` for every client that passes the handshake.
pub fn listen_endpoint(
    w: &DualWitness,
    addr: &str,
    codec: Arc<dyn Codec>,
    body: impl Fn(Endpoint) + std::marker::Send + Sync + 'static,
) -> Result<Listener> {
    w.check_unary()?;
    let bind_err = |reason: String| SessionError::Bind {
        addr: addr.to_string(),
        reason,
    };
    let sock_addr = addr
        .to_socket_addrs()
        .map_err(|e| bind_err(e.to_string()))?
        .next()
        .ok_or_else(|| bind_err("address did not resolve".into()))?;
    let listener = TcpListener::bind(sock_addr).map_err(|e| bind_err(e.to_string()))?;
    let local = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let counters: Arc<(Mutex<Counters>, Condvar)> = Arc::default();
    let shape = w.theirs().clone();
    let body = Arc::new(body);
    let leaks = LeakTracker::current();

    let accept = {
        let stop = stop.clone();
        let counters = counters.clone();
        std::thread::Builder::new()
            .name("sessio-accept".into())
            .spawn(move || {
                for conn in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let stream = match conn {
                        Ok(s) => s,
                        Err(e) => {
                            log::warn!("accept failed: {e}");
                            continue;
                        }
                    };
                    let (shape, codec, body, counters, leaks) = (
                        shape.clone(),
                        codec.clone(),
                        body.clone(),
                        counters.clone(),
                        leaks.clone(),
                    );
                    let spawned = std::thread::Builder::new()
                        .name("sessio-conn".into())
                        .spawn(move || {
                            leaks.clone().scope(|| {
                                match serve_connection(stream, &shape, codec, leaks) {
                                    Ok(ep) => {
                                        body(ep);
                                        counters.0.lock().unwrap().served += 1;
                                    }
                                    Err(reason) => {
                                        log::warn!("handshake rejected: {reason}");
                                        counters.0.lock().unwrap().rejected += 1;
                                    }
                                }
                                counters.1.notify_all();
                            })
                        });
                    if let Err(e) = spawned {
                        log::warn!("could not spawn connection handler: {e}");
                    }
                }
            })
            .map_err(|e| SessionError::Spawn(e.to_string()))?
    };

    Ok(Listener {
        addr: local,
        stop,
        counters,
        accept: Some(accept),
    })
}
