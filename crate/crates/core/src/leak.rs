//! Disposal-time diagnostics for endpoints dropped without being used.
//!
//! Every endpoint remembers the tracker that was current when its session
//! was created. Trackers are scoped per thread with [`LeakTracker::scope`];
//! outside any scope the process-wide tracker is used.

use std::cell::RefCell;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{EndpointId, LinearityError, LinearityKind};

#[derive(Debug, Default)]
pub struct LeakTracker {
    count: AtomicUsize,
    reports: Mutex<Vec<LinearityError>>,
}

thread_local! {
    static CURRENT: RefCell<Option<Arc<LeakTracker>>> = const { RefCell::new(None) };
}

impl LeakTracker {
    pub fn new() -> Arc<LeakTracker> {
        Arc::new(LeakTracker::default())
    }

    pub fn global() -> Arc<LeakTracker> {
        static GLOBAL: OnceLock<Arc<LeakTracker>> = OnceLock::new();
        GLOBAL.get_or_init(LeakTracker::new).clone()
    }

    /// The tracker new sessions on this thread report to.
    pub fn current() -> Arc<LeakTracker> {
        CURRENT
            .with(|c| c.borrow().clone())
            .unwrap_or_else(LeakTracker::global)
    }

    /// Runs `f` with `self` as the current tracker of this thread.
    pub fn scope<R>(self: &Arc<Self>, f: impl FnOnce() -> R) -> R {
        struct Restore(Option<Arc<LeakTracker>>);
        impl Drop for Restore {
            fn drop(&mut self) {
                let prev = self.0.take();
                CURRENT.with(|c| *c.borrow_mut() = prev);
            }
        }
        let prev = CURRENT.with(|c| c.borrow_mut().replace(self.clone()));
        let _restore = Restore(prev);
        f()
    }

    pub fn count(&self) -> usize {
        self.count.load(Ordering::SeqCst)
    }

    pub fn reports(&self) -> Vec<LinearityError> {
        self.reports.lock().unwrap().clone()
    }

    pub(crate) fn report(&self, endpoint: EndpointId, shape: &str) {
        log::warn!("endpoint {endpoint} dropped without being used (at {shape})");
        self.count.fetch_add(1, Ordering::SeqCst);
        self.reports.lock().unwrap().push(LinearityError {
            kind: LinearityKind::Leak,
            endpoint,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scope_restores_previous() {
        let outer = LeakTracker::new();
        let inner = LeakTracker::new();
        outer.scope(|| {
            inner.scope(|| assert!(Arc::ptr_eq(&LeakTracker::current(), &inner)));
            assert!(Arc::ptr_eq(&LeakTracker::current(), &outer));
        });
        assert!(Arc::ptr_eq(&LeakTracker::current(), &LeakTracker::global()));
    }
}
