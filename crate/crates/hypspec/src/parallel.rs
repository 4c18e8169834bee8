//! Thread-pool backed enumeration and a small ordered parallel map.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use hypspec_core::scalar::Scalar;
use hypspec_core::spectrum::{Enumerator, SubtreeOutcome, SubtreeRunner};

/// Runs first-letter subtrees on `workers` scoped threads. Outcomes are
/// returned in `firsts` order, so the merged spectrum does not depend on the
/// worker count or on scheduling.
#[derive(Debug, Clone, Copy)]
pub struct ThreadedRunner {
    workers: usize,
}

impl ThreadedRunner {
    pub fn new(workers: usize) -> Self {
        Self { workers: workers.max(1) }
    }

    /// One worker per available core.
    pub fn available() -> Self {
        Self::new(thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

impl SubtreeRunner for ThreadedRunner {
    fn run<S: Scalar>(&self, enumerator: &Enumerator<S>, firsts: &[i32]) -> Vec<SubtreeOutcome> {
        par_map(firsts, self.workers, |&x| enumerator.run_subtree(x))
    }
}

/// Apply `f` to every item on up to `workers` threads, keeping input order.
pub fn par_map<T, U, F>(items: &[T], workers: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<U>>> = items.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let out = f(&items[i]);
                *slots[i].lock().expect("slot lock") = Some(out);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every slot filled")).collect()
}
