//! Logical memory accounting.
//!
//! Every trainable parameter and every retained activation registers its bytes
//! with a [`MemoryTracker`] and releases them on drop. The counts are
//! deterministic and machine independent, unlike process RSS.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::{BgnnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryKind {
    Parameter,
    Activation,
}

#[derive(Debug, Default)]
struct Inner {
    params: AtomicUsize,
    activations: AtomicUsize,
    peak_params: AtomicUsize,
    peak_total: AtomicUsize,
    budget: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct MemoryTracker {
    inner: Arc<Inner>,
}

impl MemoryTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// A tracker that refuses reservations pushing the live total past `budget` bytes.
    pub fn with_budget(budget: usize) -> Self {
        Self {
            inner: Arc::new(Inner {
                budget: Some(budget),
                ..Inner::default()
            }),
        }
    }

    pub fn budget(&self) -> Option<usize> {
        self.inner.budget
    }

    pub fn reserve(&self, kind: MemoryKind, bytes: usize) -> Result<MemoryGuard> {
        let live = self.live_total_bytes();
        if let Some(budget) = self.inner.budget {
            if live + bytes > budget {
                return Err(BgnnError::BudgetExceeded {
                    requested: bytes,
                    live,
                    budget,
                });
            }
        }
        let counter = match kind {
            MemoryKind::Parameter => &self.inner.params,
            MemoryKind::Activation => &self.inner.activations,
        };
        counter.fetch_add(bytes, Ordering::SeqCst);
        if kind == MemoryKind::Parameter {
            self.inner
                .peak_params
                .fetch_max(self.live_param_bytes(), Ordering::SeqCst);
        }
        self.inner
            .peak_total
            .fetch_max(self.live_total_bytes(), Ordering::SeqCst);
        Ok(MemoryGuard {
            tracker: self.clone(),
            kind,
            bytes,
        })
    }

    /// Bytes of resident trainable parameters (values, gradients, Adam moments).
    pub fn live_param_bytes(&self) -> usize {
        self.inner.params.load(Ordering::SeqCst)
    }

    pub fn live_activation_bytes(&self) -> usize {
        self.inner.activations.load(Ordering::SeqCst)
    }

    pub fn live_total_bytes(&self) -> usize {
        self.live_param_bytes() + self.live_activation_bytes()
    }

    pub fn peak_param_bytes(&self) -> usize {
        self.inner.peak_params.load(Ordering::SeqCst)
    }

    pub fn peak_total_bytes(&self) -> usize {
        self.inner.peak_total.load(Ordering::SeqCst)
    }

    fn release(&self, kind: MemoryKind, bytes: usize) {
        let counter = match kind {
            MemoryKind::Parameter => &self.inner.params,
            MemoryKind::Activation => &self.inner.activations,
        };
        counter.fetch_sub(bytes, Ordering::SeqCst);
    }
}

/// Releases its reservation when dropped.
#[derive(Debug)]
pub struct MemoryGuard {
    tracker: MemoryTracker,
    kind: MemoryKind,
    bytes: usize,
}

impl MemoryGuard {
    pub fn bytes(&self) -> usize {
        self.bytes
    }
}

impl Drop for MemoryGuard {
    fn drop(&mut self) {
        self.tracker.release(self.kind, self.bytes);
    }
}
