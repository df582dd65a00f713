//! Execution policy for the data-parallel kernels.
//!
//! Every parallel kernel in the crate produces bitwise-identical results to
//! its sequential counterpart: reductions are split into fixed-size chunks
//! whose partial sums are combined in index order, so the thread count never
//! changes the floating-point evaluation order.

use serde::{Deserialize, Serialize};

/// Chunk length used by deterministic reductions.
pub const REDUCTION_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled, otherwise
    /// falls back to the sequential path.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map_collect<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Fills `out[i] = f(i)` for every index.
pub fn fill_indexed<F>(exec: Execution, out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && out.len() >= REDUCTION_CHUNK {
        use rayon::prelude::*;
        out.par_chunks_mut(REDUCTION_CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * REDUCTION_CHUNK;
            for (k, slot) in chunk.iter_mut().enumerate() {
                *slot = f(base + k);
            }
        });
        return;
    }
    let _ = exec;
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}

/// Sum of `f(i)` for `i in 0..len`, evaluated chunk-wise in a fixed order.
pub fn sum_indexed<F>(exec: Execution, len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunk_sum = |c: usize| {
        let lo = c * REDUCTION_CHUNK;
        let hi = (lo + REDUCTION_CHUNK).min(len);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        acc
    };
    let chunks = len.div_ceil(REDUCTION_CHUNK);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && chunks > 1 {
        use rayon::prelude::*;
        let partial: Vec<f64> = (0..chunks).into_par_iter().map(chunk_sum).collect();
        return partial.iter().sum();
    }
    let _ = exec;
    let mut total = 0.0;
    for c in 0..chunks {
        total += chunk_sum(c);
    }
    total
}

pub fn dot(exec: Execution, a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum_indexed(exec, a.len(), |i| a[i] * b[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_reductions_are_bitwise_equal() {
        let a: Vec<f64> = (0..20_011).map(|i| ((i * 7919) % 1000) as f64 * 1e-3 + 0.1).collect();
        let b: Vec<f64> = (0..20_011).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let s = dot(Execution::Sequential, &a, &b);
        let p = dot(Execution::Parallel, &a, &b);
        assert_eq!(s.to_bits(), p.to_bits());
    }

    #[test]
    fn map_collect_preserves_order() {
        let v: Vec<usize> = (0..100).collect();
        let out = map_collect(Execution::Parallel, &v, |x| x * 2);
        assert_eq!(out, (0..100).map(|x| x * 2).collect::<Vec<_>>());
    }
}
