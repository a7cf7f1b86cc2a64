//! Deterministic data-parallel primitives.
//!
//! Every reduction in the crate goes through this module. Sums are
//! computed per fixed-size chunk (sequentially within a chunk, chunks
//! combined in index order), so the floating-point result is *bit
//! identical* regardless of how many worker threads execute the chunks —
//! and identical between the parallel and sequential builds.
//!
//! The `parallel` cargo feature selects whether rayon is compiled in at
//! all; [`set_sequential`] additionally allows forcing the sequential
//! path at run time (used by the benchmarks to compare both paths within
//! a single build).

use num_complex::Complex64;
use std::sync::atomic::{AtomicBool, Ordering};

/// Fixed reduction chunk length. Must not depend on the thread count,
/// otherwise determinism across `--threads` settings is lost.
pub const CHUNK: usize = 8192;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force (or unforce) the sequential execution path at run time.
///
/// Results are unaffected — reductions are bit-deterministic either way —
/// only the wall time changes.
pub fn set_sequential(force: bool) {
    FORCE_SEQUENTIAL.store(force, Ordering::Relaxed);
}

/// `true` when the parallel path is compiled in and not overridden.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::Relaxed)
}

#[inline]
fn chunk_count(n: usize) -> usize {
    n.div_ceil(CHUNK)
}

#[inline]
fn chunk_bounds(c: usize, n: usize) -> (usize, usize) {
    let lo = c * CHUNK;
    (lo, usize::min(lo + CHUNK, n))
}

/// Deterministic sum of `f(0) + f(1) + … + f(n-1)`.
pub fn sum_f64<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partial = |c: usize| -> f64 {
        let (lo, hi) = chunk_bounds(c, n);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        acc
    };
    let partials = run_chunks(chunk_count(n), partial);
    partials.into_iter().sum()
}

/// Deterministic sum of complex values.
pub fn sum_c64<F>(n: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    let partial = |c: usize| -> Complex64 {
        let (lo, hi) = chunk_bounds(c, n);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in lo..hi {
            acc += f(i);
        }
        acc
    };
    let partials = run_chunks(chunk_count(n), partial);
    partials.into_iter().sum()
}

/// Deterministic maximum of `f(i)` over `i < n` (`-inf` for `n = 0`).
/// `max` is associative, so this is deterministic under any partition;
/// chunking it anyway keeps the execution shape uniform.
pub fn max_f64<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partial = |c: usize| -> f64 {
        let (lo, hi) = chunk_bounds(c, n);
        let mut acc = f64::NEG_INFINITY;
        for i in lo..hi {
            acc = acc.max(f(i));
        }
        acc
    };
    let partials = run_chunks(chunk_count(n), partial);
    partials.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Fill `out[i] = f(i)` for all `i`, in parallel when enabled.
pub fn fill_c64<F>(out: &mut [Complex64], f: F)
where
    F: Fn(usize) -> Complex64 + Sync,
{
    fill_impl(out, f);
}

/// Fill `out[i] = f(i)` for all `i`, in parallel when enabled.
pub fn fill_f64<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync,
{
    fill_impl(out, f);
}

fn fill_impl<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let lo = c * CHUNK;
            for (k, slot) in chunk.iter_mut().enumerate() {
                *slot = f(lo + k);
            }
        });
        return;
    }
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}

/// Visit every element with its index: `work(i, &mut out[i])`. Element
/// writes are disjoint, so the result is partition-deterministic.
pub fn for_each_index<T, F>(out: &mut [T], work: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let lo = c * CHUNK;
            for (k, slot) in chunk.iter_mut().enumerate() {
                work(lo + k, slot);
            }
        });
        return;
    }
    for (i, slot) in out.iter_mut().enumerate() {
        work(i, slot);
    }
}

/// Run `work(c)` for every chunk index `c < chunks`, returning results in
/// chunk order. The parallel path uses an indexed collect, so the output
/// order (and therefore the later sequential fold) never depends on the
/// scheduler.
fn run_chunks<T, F>(chunks: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..chunks).into_par_iter().map(work).collect();
    }
    (0..chunks).map(work).collect()
}

/// Process disjoint equal-size blocks of `data` in parallel:
/// `work(b, block)` receives block index `b` and the mutable block.
/// Blocks are independent, so the result is partition-deterministic.
pub fn for_each_block<T, F>(data: &mut [T], block_len: usize, work: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    assert!(block_len > 0 && data.len() % block_len == 0);
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(block_len)
            .enumerate()
            .for_each(|(b, block)| work(b, block));
        return;
    }
    for (b, block) in data.chunks_mut(block_len).enumerate() {
        work(b, block);
    }
}
