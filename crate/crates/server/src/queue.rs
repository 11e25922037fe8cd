//! Bounded job queue drained by a fixed pool of worker threads.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use crossbeam_channel::{bounded, Sender};
use parking_lot::Mutex;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SubmitError {
    #[error("queue is full")]
    Full,
    #[error("queue is shut down")]
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QueueStats {
    pub capacity: usize,
    pub workers: usize,
    /// Queued plus running.
    pub outstanding: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub completed: usize,
}

#[derive(Default)]
struct Counters {
    outstanding: AtomicUsize,
    accepted: AtomicUsize,
    rejected: AtomicUsize,
    completed: AtomicUsize,
}

/// Capacity bounds queued and running jobs together, so a full pool with an
/// empty backlog still counts against it.
pub struct WorkQueue<J: Send + 'static> {
    capacity: usize,
    workers: usize,
    tx: Mutex<Option<Sender<J>>>,
    handles: Mutex<Vec<JoinHandle<()>>>,
    counters: Arc<Counters>,
}

impl<J: Send + 'static> WorkQueue<J> {
    pub fn start<F>(capacity: usize, workers: usize, handler: F) -> Self
    where
        F: Fn(J) + Send + Sync + 'static,
    {
        assert!(
            capacity > 0 && workers > 0,
            "queue needs capacity and workers"
        );
        let (tx, rx) = bounded::<J>(capacity);
        let handler = Arc::new(handler);
        let counters = Arc::new(Counters::default());
        let handles = (0..workers)
            .map(|i| {
                let rx = rx.clone();
                let handler = handler.clone();
                let counters = counters.clone();
                std::thread::Builder::new()
                    .name(format!("chat-worker-{i}"))
                    .spawn(move || {
                        for job in rx.iter() {
                            if catch_unwind(AssertUnwindSafe(|| handler(job))).is_err() {
                                tracing::error!("chat job panicked");
                            }
                            counters.completed.fetch_add(1, Ordering::SeqCst);
                            counters.outstanding.fetch_sub(1, Ordering::SeqCst);
                        }
                    })
                    .expect("spawn worker thread")
            })
            .collect();
        WorkQueue {
            capacity,
            workers,
            tx: Mutex::new(Some(tx)),
            handles: Mutex::new(handles),
            counters,
        }
    }

    /// Enqueue without blocking.
    pub fn try_submit(&self, job: J) -> Result<(), SubmitError> {
        let guard = self.tx.lock();
        let Some(tx) = guard.as_ref() else {
            return Err(SubmitError::Closed);
        };
        let reserved =
            self.counters
                .outstanding
                .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| {
                    (n < self.capacity).then_some(n + 1)
                });
        if reserved.is_err() {
            self.counters.rejected.fetch_add(1, Ordering::SeqCst);
            return Err(SubmitError::Full);
        }
        if tx.try_send(job).is_err() {
            self.counters.outstanding.fetch_sub(1, Ordering::SeqCst);
            return Err(SubmitError::Closed);
        }
        self.counters.accepted.fetch_add(1, Ordering::SeqCst);
        Ok(())
    }

    pub fn stats(&self) -> QueueStats {
        let c = &self.counters;
        QueueStats {
            capacity: self.capacity,
            workers: self.workers,
            outstanding: c.outstanding.load(Ordering::SeqCst),
            accepted: c.accepted.load(Ordering::SeqCst),
            rejected: c.rejected.load(Ordering::SeqCst),
            completed: c.completed.load(Ordering::SeqCst),
        }
    }

    /// Stop accepting jobs, let the workers drain the backlog, and join them.
    pub fn shutdown(&self) {
        self.tx.lock().take();
        for h in self.handles.lock().drain(..) {
            let _ = h.join();
        }
    }
}

impl<J: Send + 'static> Drop for WorkQueue<J> {
    fn drop(&mut self) {
        self.shutdown();
    }
}
