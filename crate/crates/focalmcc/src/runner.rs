use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use focalmcc_core::harness::Runner;

/// Runs jobs on up to `jobs` scoped threads. Results keep job order, so
/// output does not depend on scheduling.
#[derive(Debug, Clone, Copy)]
pub struct ThreadRunner {
    jobs: usize,
}

impl ThreadRunner {
    pub fn new(jobs: usize) -> Self {
        Self { jobs: jobs.max(1) }
    }

    /// One worker per available core.
    pub fn available() -> Self {
        Self::new(std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }
}

impl Runner for ThreadRunner {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        let workers = self.jobs.min(n);
        if workers <= 1 {
            return (0..n).map(f).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let out = f(i);
                    *slots[i].lock().expect("result slot") = Some(out);
                });
            }
        });
        slots
            .into_iter()
            .map(|m| m.into_inner().expect("result slot").expect("every job ran"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_job_order() {
        let r = ThreadRunner::new(4).map(100, |i| i * i);
        assert_eq!(r, (0..100).map(|i| i * i).collect::<Vec<_>>());
        assert_eq!(ThreadRunner::new(0).jobs(), 1);
    }
}
