//! Session-per-thread helpers.

use std::sync::Arc;

use sessio::types::{Dual, Protocol};
use sessio::{LeakTracker, Result, Session, SessionError};

/// Starts one thread per parameter, each with its own session of protocol
/// `w`; returns this side of every session, in parameter order.
pub fn parallel<S, T, P>(
    w: &Dual<S, T>,
    params: impl IntoIterator<Item = P>,
    body: impl Fn(Session<T, T>, P) + Send + Sync + 'static,
) -> Result<Vec<Session<S, S>>>
where
    S: Protocol,
    T: Protocol,
    P: Send + 'static,
{
    let body = Arc::new(body);
    params
        .into_iter()
        .map(|p| {
            let body = body.clone();
            w.fork_thread(move |s| body(s, p))
        })
        .collect()
}

/// Chains one thread per stage: stage `i` reads from the session shared
/// with stage `i - 1` and writes to the one shared with stage `i + 1`.
/// Returns `(input, output)`: the sending end into the first stage and the
/// receiving end out of the last.
pub fn pipeline<S, T, P>(
    w: &Dual<S, T>,
    stages: impl IntoIterator<Item = P>,
    body: impl Fn(Session<T, T>, Session<S, S>, P) + Send + Sync + 'static,
) -> Result<(Session<S, S>, Session<T, T>)>
where
    S: Protocol,
    T: Protocol,
    P: Send + 'static,
{
    let body = Arc::new(body);
    let (input, mut prev) = w.pair()?;
    for (i, p) in stages.into_iter().enumerate() {
        let (next, after) = w.pair()?;
        let body = body.clone();
        let leaks = LeakTracker::current();
        std::thread::Builder::new()
            .name(format!("sessio-stage-{i}"))
            .spawn(move || leaks.scope(|| body(prev, next, p)))
            .map_err(|e| SessionError::Spawn(e.to_string()))?;
        prev = after;
    }
    Ok((input, prev))
}
