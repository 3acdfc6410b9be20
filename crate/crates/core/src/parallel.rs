//! Deterministic fan-out over a fixed job list.

use std::thread;

/// Worker count to use when the caller passes 0.
pub fn default_threads() -> usize {
    thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Evaluates `f(0..jobs)` on `threads` scoped workers. Job `i` goes to worker
/// `i mod threads` and results come back in job order, so the output does
/// not depend on the worker count.
pub fn par_map<T, F>(jobs: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = if threads == 0 { default_threads() } else { threads }.clamp(1, jobs.max(1));
    if threads == 1 {
        return (0..jobs).map(&f).collect();
    }
    let f = &f;
    let parts: Vec<Vec<T>> = thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|w| s.spawn(move || (w..jobs).step_by(threads).map(f).collect::<Vec<T>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)))
            .collect()
    });
    let mut iters: Vec<_> = parts.into_iter().map(|p| p.into_iter()).collect();
    (0..jobs)
        .map(|i| iters[i % threads].next().expect("worker produced every assigned job"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_independent_of_threads() {
        let one = par_map(37, 1, |i| i * i);
        for t in [2, 3, 8, 64] {
            assert_eq!(par_map(37, t, |i| i * i), one);
        }
        assert!(par_map(0, 4, |i| i).is_empty());
    }
}
