//! Deterministic fan-out of independent jobs over a fixed worker count.
//! Each job is a pure function of its index, and results are gathered by
//! index, so output is identical for any worker count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Resolve the worker count: explicit flag, then the MULTIGGM_WORKERS
/// environment variable, then the machine's parallelism.
pub fn resolve_workers(flag: Option<usize>) -> usize {
    if let Some(w) = flag {
        return w.max(1);
    }
    if let Ok(v) = std::env::var("MULTIGGM_WORKERS") {
        if let Ok(w) = v.parse::<usize>() {
            return w.max(1);
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Run `jobs` invocations of `f` on up to `workers` threads and return the
/// results ordered by job index.
pub fn run_jobs<T, F>(workers: usize, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = workers.max(1).min(jobs.max(1));
    if workers <= 1 || jobs <= 1 {
        return (0..jobs).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..jobs).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= jobs {
                    break;
                }
                let result = f(idx);
                slots.lock().unwrap()[idx] = Some(result);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|s| s.unwrap()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_ordered_by_index() {
        for workers in [1, 2, 8] {
            let out = run_jobs(workers, 37, |i| i * i);
            assert_eq!(out, (0..37).map(|i| i * i).collect::<Vec<_>>());
        }
    }
}
