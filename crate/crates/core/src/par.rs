//! Data-parallel map facade.
//!
//! The heavy inner loops (facet-push LP batches, sampling feasibility
//! checks, per-period bound LPs) are embarrassingly parallel. With the
//! `parallel` feature they run on rayon; without it, or when a caller asks
//! for sequential execution explicitly, they run in order. Results are
//! collected in input order either way, so outputs are identical across
//! modes and thread counts. Thread count follows `RAYON_NUM_THREADS`.

/// Execution mode for data-parallel batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    /// Rayon work-stealing pool (the default when the `parallel` feature
    /// is enabled; coerced to `Sequential` otherwise).
    #[default]
    Rayon,
    Sequential,
}

#[cfg(feature = "parallel")]
pub fn map_indexed<R, F>(mode: Parallelism, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match mode {
        Parallelism::Rayon => (0..n).into_par_iter().map(f).collect(),
        Parallelism::Sequential => (0..n).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<R, F>(_mode: Parallelism, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    (0..n).map(f).collect()
}

/// Map over a slice, preserving order.
pub fn map_slice<T, R, F>(mode: Parallelism, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_indexed(mode, items.len(), |i| f(&items[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved_in_both_modes() {
        let squares_par = map_indexed(Parallelism::Rayon, 100, |i| i * i);
        let squares_seq = map_indexed(Parallelism::Sequential, 100, |i| i * i);
        assert_eq!(squares_par, squares_seq);
        assert_eq!(squares_par[7], 49);
    }
}
