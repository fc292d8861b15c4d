//! Execution-mode switch: data-parallel (rayon) or sequential.
//!
//! The compute kernels (integrand rows within a fixed-point pass, the α grid
//! of a translation scan, the base/perturbed trajectory pair of a stability
//! run) are expressed through these helpers so one binary can run either
//! mode. With the `parallel` feature disabled the parallel mode silently
//! degrades to the sequential implementation. Work is partitioned by index,
//! so results are bit-identical across modes and thread counts.

use serde::{Deserialize, Serialize};

/// Which engine executes the data-parallel kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

/// Fill disjoint consecutive rows of `buf` (each `row_len` long) by calling
/// `fill(row_index, row)`.
pub fn fill_rows<F>(mode: ExecMode, buf: &mut [f64], row_len: usize, fill: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    debug_assert_eq!(buf.len() % row_len, 0);
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        use rayon::prelude::*;
        buf.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(j, row)| fill(j, row));
        return;
    }
    let _ = mode;
    for (j, row) in buf.chunks_mut(row_len).enumerate() {
        fill(j, row);
    }
}

/// Map `0..count` through `f`, preserving index order in the output.
pub fn map_indexed<T, F>(mode: ExecMode, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        use rayon::prelude::*;
        return (0..count).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..count).map(f).collect()
}

/// Run two closures, potentially in parallel, returning both results.
pub fn join<A, B, RA, RB>(mode: ExecMode, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        return rayon::join(a, b);
    }
    let _ = mode;
    (a(), b())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_bitwise() {
        let work = |j: usize, row: &mut [f64]| {
            for (c, v) in row.iter_mut().enumerate() {
                *v = ((j * 31 + c) as f64).sin() * 0.25 + (j as f64).sqrt();
            }
        };
        let mut seq = vec![0.0; 8 * 5];
        let mut par = vec![0.0; 8 * 5];
        fill_rows(ExecMode::Sequential, &mut seq, 5, work);
        fill_rows(ExecMode::Parallel, &mut par, 5, work);
        assert_eq!(seq, par);

        let f = |i: usize| (i as f64 * 0.7).cos();
        assert_eq!(
            map_indexed(ExecMode::Sequential, 100, f),
            map_indexed(ExecMode::Parallel, 100, f)
        );

        let pair_seq = join(ExecMode::Sequential, || 1 + 1, || "x");
        let pair_par = join(ExecMode::Parallel, || 1 + 1, || "x");
        assert_eq!(pair_seq, pair_par);
    }
}
