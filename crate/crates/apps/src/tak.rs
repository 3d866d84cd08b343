//! The Takeuchi function served over a session with a delegated
//! cancellation channel: the client sends the arguments, hands the server a
//! fresh channel on which a timer may later send "stop", and then waits for
//! either the value or a cancellation notice.

use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, info};
use sessio::types::{deleg, end, offer, recv, send, val, Deleg, DelegRecv, Dual, Eps, Offer, Recv, Select, Send};
use sessio::{Branch, Result, Session, SessionError, TraceLog};

/// Client view: `!int3. deleg(?unit.end). &{ ?int.end, end }`.
pub type TakClient = Send<(i64, i64, i64), Deleg<Recv<(), Eps>, Send<(), Eps>, Offer<Recv<i64, Eps>, Eps>>>;
pub type TakServer = Recv<(i64, i64, i64), DelegRecv<Recv<(), Eps>, Select<Send<i64, Eps>, Eps>>>;

pub fn protocol() -> Dual<TakClient, TakServer> {
    send(
        val::<(i64, i64, i64)>(),
        deleg(recv(val::<()>(), end()), offer(recv(val::<i64>(), end()), end())),
    )
}

/// Naive Takeuchi recursion.
pub fn tarai(a: i64, b: i64, c: i64) -> i64 {
    if a <= b {
        b
    } else {
        tarai(tarai(a - 1, b, c), tarai(b - 1, c, a), tarai(c - 1, a, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("computation cancelled")]
pub struct Cancelled;

/// [`tarai`] that gives up as soon as `stop()` reports true; the flag is
/// polled once per call.
pub fn tarai_cancellable(a: i64, b: i64, c: i64, stop: &impl Fn() -> bool) -> Result<i64, Cancelled> {
    if stop() {
        return Err(Cancelled);
    }
    if a <= b {
        Ok(b)
    } else {
        let x = tarai_cancellable(a - 1, b, c, stop)?;
        let y = tarai_cancellable(b - 1, c, a, stop)?;
        let z = tarai_cancellable(c - 1, a, b, stop)?;
        tarai_cancellable(x, y, z, stop)
    }
}

/// What the server did with one request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerReport {
    pub result: Option<i64>,
    /// The stop message arrived (possibly after the result) without error.
    pub stop_consumed: bool,
}

/// Serves one request. Waits up to `linger` for the stop message after
/// answering, so callers can observe that a late cancel is absorbed.
pub fn serve(s: Session<TakServer, TakServer>, linger: Duration) -> Result<ServerReport> {
    let ((x, y, z), s) = s.receive()?;
    let (cancel, s) = s.deleg_recv()?;
    let (stop, cancel) = cancel.receive_async()?;
    cancel.close()?;
    let stop_requested = || stop.is_completed();
    let result = match tarai_cancellable(x, y, z, &stop_requested) {
        Ok(v) => {
            s.select_left()?.send(v)?.close()?;
            Some(v)
        }
        Err(Cancelled) => {
            s.select_right()?.close()?;
            None
        }
    };
    let stop_consumed = stop.wait_timeout(linger) && stop.wait().is_ok();
    Ok(ServerReport { result, stop_consumed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TakOutcome {
    Value(i64),
    Cancelled,
}

#[derive(Debug)]
pub struct TakReport {
    pub outcome: TakOutcome,
    pub elapsed: Duration,
    pub server: ServerReport,
    pub client_trace: TraceLog,
    pub server_trace: TraceLog,
}

/// Runs one request against a server thread, cancelling it after
/// `timeout`. When the value wins the race the timer still sends its stop
/// message, which the server absorbs.
pub fn run_tak(x: i64, y: i64, z: i64, timeout: Duration) -> Result<TakReport> {
    let started = Instant::now();
    let (client_trace, server_trace) = (TraceLog::new(), TraceLog::new());
    let (report_tx, report_rx) = mpsc::channel();
    let st = server_trace.clone();
    let client = protocol().fork_thread(move |s| {
        s.record_into(&st);
        let _ = report_tx.send(serve(s, Duration::from_secs(5)));
    })?;
    client.record_into(&client_trace);

    let (k, cancel) = client.send((x, y, z))?.deleg_new()?;
    let (done_tx, done_rx) = mpsc::channel::<()>();
    let timer = thread::Builder::new()
        .name("tak-timer".into())
        .spawn(move || -> Result<()> {
            match done_rx.recv_timeout(timeout) {
                Err(mpsc::RecvTimeoutError::Timeout) => debug!("timeout after {timeout:?}, cancelling"),
                _ => debug!("result arrived first; sending the stop anyway"),
            }
            cancel.send(())?.close()
        })
        .map_err(|e| SessionError::Spawn(e.to_string()))?;

    let outcome = match k.branch()? {
        Branch::Left(k) => {
            let (v, k) = k.receive()?;
            k.close()?;
            TakOutcome::Value(v)
        }
        Branch::Right(k) => {
            k.close()?;
            TakOutcome::Cancelled
        }
    };
    let _ = done_tx.send(());
    timer
        .join()
        .map_err(|_| SessionError::Spawn("timer panicked".into()))??;
    let server = report_rx.recv().map_err(|_| SessionError::Disconnected)??;
    let elapsed = started.elapsed();
    info!("tak({x},{y},{z}) -> {outcome:?} in {elapsed:?}");
    Ok(TakReport {
        outcome,
        elapsed,
        server,
        client_trace,
        server_trace,
    })
}
