//! Data-parallel helpers with thread-count independent results.
//!
//! Reductions are split into fixed-size chunks whose partial sums are
//! combined in order, so the result is bit-identical for any pool size.

use rayon::prelude::*;

const CHUNK: usize = 4096;

/// Below this many entries everything runs on the calling thread.
pub(crate) const PAR_THRESHOLD: usize = 1 << 15;

/// Caps the global pool at `PACDYN_THREADS` when set. Safe to call more
/// than once; only the first call has an effect.
pub fn init_thread_pool_from_env() {
    if let Some(n) = std::env::var("PACDYN_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn reduce(partials: impl Iterator<Item = f64>) -> f64 {
    partials.fold(0.0, |a, b| a + b)
}

pub fn sum(x: &[f64]) -> f64 {
    if x.len() < PAR_THRESHOLD {
        reduce(x.chunks(CHUNK).map(|c| c.iter().sum::<f64>()))
    } else {
        let partials: Vec<f64> = x.par_chunks(CHUNK).map(|c| c.iter().sum::<f64>()).collect();
        reduce(partials.into_iter())
    }
}

/// `sum_k w_k x_k y_k`.
pub fn weighted_dot(w: &[f64], x: &[f64], y: &[f64]) -> f64 {
    debug_assert!(w.len() == x.len() && x.len() == y.len());
    let chunk = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(x.len());
        (lo..hi).map(|k| w[k] * x[k] * y[k]).sum::<f64>()
    };
    let chunks = x.len().div_ceil(CHUNK);
    if x.len() < PAR_THRESHOLD {
        reduce((0..chunks).map(chunk))
    } else {
        let partials: Vec<f64> = (0..chunks).into_par_iter().map(chunk).collect();
        reduce(partials.into_iter())
    }
}

pub fn sum_indexed(x: &[f64], idx: &[usize]) -> f64 {
    reduce(idx.chunks(CHUNK).map(|c| c.iter().map(|&k| x[k]).sum::<f64>()))
}
