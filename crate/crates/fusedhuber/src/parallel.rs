//! Order-preserving parallel map over scoped threads, and the parallel grid search built on it.

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use fusedhuber_core::tune::{grid_search_with, TuneGrid, TuneOutcome};
use fusedhuber_core::{ProblemData, SolverConfig};

/// Number of workers to use when the caller passes 0.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, NonZeroUsize::get)
}

/// Applies `f` to every item on up to `workers` threads. Output order matches
/// input order regardless of scheduling; `workers <= 1` runs inline.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("worker panicked").into_iter().map(|r| r.expect("every slot filled")).collect()
}

/// [`fusedhuber_core::tune::grid_search`] with cells spread over `workers` threads.
/// The selection is identical to the sequential search.
pub fn parallel_grid_search(
    train: &ProblemData,
    validation: &ProblemData,
    grid: &TuneGrid,
    base: &SolverConfig,
    beta_star: Option<&[f64]>,
    workers: usize,
) -> fusedhuber_core::Result<TuneOutcome> {
    grid_search_with(train, validation, grid, base, beta_star, |cells, eval| parallel_map(cells, workers, |&c| eval(c)))
}
