//! Parallel downloader: workers loop on `&{ ?string. !bytes?. goto0, end }`
//! and the dispatcher hands each next URL to whichever worker answers
//! first.

use std::sync::{mpsc, Arc};
use std::time::Duration;

use log::{debug, warn};
use sessio::types::{end, goto0, recv, select, send, val, Dual, Eps, Goto0, Offer, Recv, Select, Send};
use sessio::{when_any, Branch, Completion, CompletionToken, Result, Session, SessionError, TraceLog};

use crate::parallel::parallel;

/// Fetches a URL; any failure is reported as `None`.
pub trait Fetcher: std::marker::Send + Sync {
    fn fetch(&self, url: &str) -> Option<Vec<u8>>;
}

impl<F> Fetcher for F
where
    F: Fn(&str) -> Option<Vec<u8>> + std::marker::Send + Sync,
{
    fn fetch(&self, url: &str) -> Option<Vec<u8>> {
        self(url)
    }
}

/// Plain HTTP(S) GET.
#[derive(Debug)]
pub struct HttpFetcher {
    agent: ureq::Agent,
}

impl HttpFetcher {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpFetcher { agent }
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, url: &str) -> Option<Vec<u8>> {
        let fetched = self
            .agent
            .get(url)
            .call()
            .and_then(|mut r| r.body_mut().read_to_vec());
        match fetched {
            Ok(body) => Some(body),
            Err(e) => {
                warn!("{url}: {e}");
                None
            }
        }
    }
}

pub type DownloadClient = Select<Send<String, Recv<Option<Vec<u8>>, Goto0>>, Eps>;
pub type DownloadServer = Offer<Recv<String, Send<Option<Vec<u8>>, Goto0>>, Eps>;

pub fn protocol() -> Dual<DownloadClient, DownloadServer> {
    select(send(val::<String>(), recv(val::<Option<Vec<u8>>>(), goto0())), end())
}

/// Serves URLs until told to stop; returns how many it fetched.
pub fn worker(mut s: Session<DownloadServer, DownloadServer>, fetcher: &dyn Fetcher) -> Result<usize> {
    let mut served = 0;
    loop {
        match s.branch()? {
            Branch::Left(k) => {
                let (url, k) = k.receive()?;
                debug!("fetching {url}");
                s = k.send(fetcher.fetch(&url))?.goto()?;
                served += 1;
            }
            Branch::Right(k) => {
                k.close()?;
                return Ok(served);
            }
        }
    }
}

#[derive(Debug)]
pub struct DownloadReport {
    /// One entry per input URL, in input order.
    pub results: Vec<(String, Option<Vec<u8>>)>,
    /// URLs fetched by each worker.
    pub served: Vec<usize>,
    pub client_traces: Vec<TraceLog>,
    pub server_traces: Vec<TraceLog>,
}

impl DownloadReport {
    /// Workers that were dismissed without a URL.
    pub fn idle_workers(&self) -> usize {
        self.served.iter().filter(|&&n| n == 0).count()
    }
}

type Working = (usize, usize, CompletionToken<Option<Vec<u8>>>, Session<Goto0, DownloadClient>);

fn dispatch(
    c: Session<DownloadClient, DownloadClient>,
    worker: usize,
    index: usize,
    url: &str,
) -> Result<Working> {
    let (token, k) = c.select_left()?.send(url.to_string())?.receive_async()?;
    Ok((worker, index, token, k))
}

pub fn run_downloader(urls: &[String], workers: usize, fetcher: Arc<dyn Fetcher>) -> Result<DownloadReport> {
    assert!(workers >= 1, "need at least one worker");
    let server_traces: Vec<TraceLog> = (0..workers).map(|_| TraceLog::new()).collect();
    let (done_tx, done_rx) = mpsc::channel();
    let params: Vec<_> = server_traces.iter().cloned().enumerate().collect();
    let chans = parallel(&protocol(), params, move |s, (id, log)| {
        s.record_into(&log);
        let _ = done_tx.send((id, worker(s, fetcher.as_ref())));
    })?;
    let client_traces: Vec<TraceLog> = (0..workers).map(|_| TraceLog::new()).collect();
    for (c, log) in chans.iter().zip(&client_traces) {
        c.record_into(log);
    }

    let mut results: Vec<Option<Option<Vec<u8>>>> = vec![None; urls.len()];
    let mut working = Vec::new();
    let mut queue = urls.iter().enumerate();
    for (w, c) in chans.into_iter().enumerate() {
        match queue.next() {
            Some((i, url)) => working.push(dispatch(c, w, i, url)?),
            None => c.select_right()?.close()?,
        }
    }
    while !working.is_empty() {
        let refs: Vec<&dyn Completion> = working.iter().map(|(_, _, t, _)| t as &dyn Completion).collect();
        let ready = when_any(&refs).expect("non-empty");
        let (w, i, token, k) = working.swap_remove(ready);
        results[i] = Some(token.wait()?);
        let c = k.goto()?;
        match queue.next() {
            Some((j, url)) => working.push(dispatch(c, w, j, url)?),
            None => c.select_right()?.close()?,
        }
    }

    let mut served = vec![0; workers];
    for _ in 0..workers {
        let (id, r) = done_rx
            .recv_timeout(Duration::from_secs(30))
            .map_err(|_| SessionError::Disconnected)?;
        served[id] = r?;
    }
    let results = urls
        .iter()
        .cloned()
        .zip(results.into_iter().map(|r| r.expect("every url dispatched")))
        .collect();
    Ok(DownloadReport {
        results,
        served,
        client_traces,
        server_traces,
    })
}
