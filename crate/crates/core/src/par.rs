//! Data-parallel loops with a sequential fallback.
//!
//! With the `parallel` feature the helpers dispatch to rayon when asked to;
//! without it they always run sequentially. Results never depend on the
//! choice: work is split into independent items and collected in order.

/// Execution policy for the data-parallel kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Whether this policy actually fans out in the current build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Applies `f(chunk_index, chunk)` to consecutive chunks of `data`.
pub fn for_each_chunk<T, F>(exec: Execution, data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Evaluates `f(0..n)` and returns the results in index order.
pub fn map_indices<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_policies_agree() {
        let seq = map_indices(Execution::Sequential, 100, |i| (i as f64).sqrt());
        let par = map_indices(Execution::Parallel, 100, |i| (i as f64).sqrt());
        assert_eq!(seq, par);

        let mut a = vec![1u64; 37];
        let mut b = a.clone();
        for_each_chunk(Execution::Sequential, &mut a, 5, |k, c| {
            c.iter_mut().for_each(|x| *x += k as u64)
        });
        for_each_chunk(Execution::Parallel, &mut b, 5, |k, c| {
            c.iter_mut().for_each(|x| *x += k as u64)
        });
        assert_eq!(a, b);
    }
}
