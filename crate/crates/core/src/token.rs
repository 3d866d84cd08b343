//! Completion handles for delayed input.

use std::marker::PhantomData;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Condvar, Mutex};
use std::time::Duration;

use crate::error::{Result, SessionError};
use crate::payload::{Payload, PayloadValue};

type Callback = Box<dyn FnOnce() + Send>;

static PENDING: AtomicUsize = AtomicUsize::new(0);

/// Number of delayed receptions, process wide, whose value has not arrived.
pub fn pending_tokens() -> usize {
    PENDING.load(Ordering::SeqCst)
}

enum CellState<T> {
    Pending(Vec<Callback>),
    Done(Result<T>),
    Taken,
}

/// A write-once slot with blocking waits and completion callbacks.
pub(crate) struct Cell<T> {
    state: Mutex<CellState<T>>,
    done: Condvar,
}

impl<T> Cell<T> {
    pub fn new() -> Arc<Self> {
        PENDING.fetch_add(1, Ordering::SeqCst);
        Arc::new(Cell {
            state: Mutex::new(CellState::Pending(Vec::new())),
            done: Condvar::new(),
        })
    }

    pub fn complete(&self, value: Result<T>) {
        let mut st = self.state.lock().unwrap();
        let callbacks = match &mut *st {
            CellState::Pending(cbs) => std::mem::take(cbs),
            _ => return,
        };
        *st = CellState::Done(value);
        PENDING.fetch_sub(1, Ordering::SeqCst);
        drop(st);
        self.done.notify_all();
        for cb in callbacks {
            cb();
        }
    }

    pub fn is_completed(&self) -> bool {
        !matches!(*self.state.lock().unwrap(), CellState::Pending(_))
    }

    pub fn wait_timeout(&self, timeout: Duration) -> bool {
        let st = self.state.lock().unwrap();
        let (st, _) = self
            .done
            .wait_timeout_while(st, timeout, |s| matches!(s, CellState::Pending(_)))
            .unwrap();
        !matches!(*st, CellState::Pending(_))
    }

    pub fn take(&self) -> Result<T> {
        let mut st = self.state.lock().unwrap();
        loop {
            match std::mem::replace(&mut *st, CellState::Taken) {
                CellState::Pending(cbs) => {
                    *st = CellState::Pending(cbs);
                    st = self.done.wait(st).unwrap();
                }
                CellState::Done(v) => return v,
                CellState::Taken => panic!("completion value taken twice"),
            }
        }
    }

    pub fn on_complete(&self, cb: Callback) {
        let mut st = self.state.lock().unwrap();
        match &mut *st {
            CellState::Pending(cbs) => cbs.push(cb),
            _ => {
                drop(st);
                cb();
            }
        }
    }
}

impl<T> Drop for Cell<T> {
    fn drop(&mut self) {
        if let Ok(st) = self.state.get_mut() {
            if matches!(st, CellState::Pending(_)) {
                PENDING.fetch_sub(1, Ordering::SeqCst);
            }
        }
    }
}

/// Something that finishes at most once and can announce it.
pub trait Completion {
    fn is_completed(&self) -> bool;
    fn on_complete(&self, callback: Box<dyn FnOnce() + Send>);
}

/// Blocks until one of `items` completes and returns its index, or `None`
/// when `items` is empty.
pub fn when_any(items: &[&dyn Completion]) -> Option<usize> {
    if items.is_empty() {
        return None;
    }
    if let Some(i) = items.iter().position(|c| c.is_completed()) {
        return Some(i);
    }
    let (tx, rx) = mpsc::channel();
    for (i, item) in items.iter().enumerate() {
        let tx = tx.clone();
        item.on_complete(Box::new(move || {
            let _ = tx.send(i);
        }));
    }
    rx.recv().ok()
}

/// The pending result of a delayed reception.
///
/// Completes exactly once, either with the delivered value or with the error
/// that tore the session down. Polling is non-blocking; [`wait`] blocks.
///
/// [`wait`]: CompletionToken::wait
pub struct CompletionToken<V> {
    cell: Arc<Cell<PayloadValue>>,
    _value: PhantomData<fn() -> V>,
}

impl<V> CompletionToken<V> {
    pub(crate) fn new(cell: Arc<Cell<PayloadValue>>) -> Self {
        CompletionToken {
            cell,
            _value: PhantomData,
        }
    }

    pub fn is_completed(&self) -> bool {
        self.cell.is_completed()
    }

    /// Waits up to `timeout`; returns whether the token has completed.
    pub fn wait_timeout(&self, timeout: Duration) -> bool {
        self.cell.wait_timeout(timeout)
    }

    pub(crate) fn retag<W>(self) -> CompletionToken<W> {
        CompletionToken::new(self.cell)
    }
}

impl<V: Payload> CompletionToken<V> {
    /// Blocks until the value arrives (or the session fails).
    pub fn wait(self) -> Result<V> {
        let value = self.cell.take()?;
        V::from_value(value).ok_or_else(|| SessionError::Codec("payload domain mismatch".into()))
    }
}

impl CompletionToken<PayloadValue> {
    /// Blocks until the value arrives (or the session fails).
    pub fn wait_value(self) -> Result<PayloadValue> {
        self.cell.take()
    }
}

impl<V> Completion for CompletionToken<V> {
    fn is_completed(&self) -> bool {
        self.cell.is_completed()
    }

    fn on_complete(&self, callback: Box<dyn FnOnce() + Send>) {
        self.cell.on_complete(callback)
    }
}

impl<V> std::fmt::Debug for CompletionToken<V> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompletionToken")
            .field("completed", &self.cell.is_completed())
            .finish()
    }
}
