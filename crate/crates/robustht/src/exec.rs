//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper materialises per-index results in index order before
//! reducing, so outputs are bit-identical whether the `parallel` feature is
//! on or off and regardless of the worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n` and collect results in index order.
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_collect_seq(n, f)
    }
}

/// Sequential variant, always available (used by the benches as the
/// baseline).
pub fn map_collect_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Sum `f(i)` over `0..n` deterministically: terms are materialised in index
/// order and reduced with compensated summation.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    kahan_sum(map_collect(n, f).into_iter())
}

/// Sequential variant of [`sum_indexed`].
pub fn sum_indexed_seq<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    kahan_sum((0..n).map(f))
}

/// Neumaier compensated summation.
pub fn kahan_sum<I: Iterator<Item = f64>>(iter: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in iter {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Configure the global worker pool. Returns the effective thread count.
/// Calling it twice is harmless; the first call wins.
pub fn configure_jobs(jobs: Option<usize>) -> usize {
    #[cfg(feature = "parallel")]
    {
        if let Some(j) = jobs {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build_global();
        }
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_matches_sequential() {
        let f = |i: usize| ((i as f64) * 0.7).sin() / (i as f64 + 1.0);
        let a = sum_indexed(10_000, f);
        let b = sum_indexed_seq(10_000, f);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn kahan_handles_cancellation() {
        let xs = vec![1e16, 1.0, -1e16];
        assert_eq!(kahan_sum(xs.into_iter()), 1.0);
    }
}
