//! Batch-means standard errors and the deterministic parallel Monte-Carlo
//! driver.
//!
//! Every stochastic routine splits its sample budget into `BATCHES` batches,
//! gives each batch its own counter-seeded RNG stream, and reduces batch
//! results in index order. Results are therefore reproducible for a fixed
//! seed regardless of worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Number of batches used for batch-means error bars.
pub const BATCHES: usize = 100;

/// RNG stream for batch `index` of a run seeded with `seed`.
pub fn batch_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Split `total` samples into `BATCHES` near-equal batch sizes.
pub fn batch_sizes(total: usize) -> Vec<usize> {
    let base = total / BATCHES;
    let extra = total % BATCHES;
    (0..BATCHES)
        .map(|i| base + usize::from(i < extra))
        .collect()
}

/// Run one closure per batch in parallel, collecting results in batch order.
pub fn run_batches<T, F>(total: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, ChaCha12Rng, usize) -> T + Sync,
{
    let sizes = batch_sizes(total);
    sizes
        .par_iter()
        .enumerate()
        .map(|(i, &size)| f(i, batch_rng(seed, i as u64), size))
        .collect()
}

/// Mean and batch-means standard error from per-batch means.
pub fn mean_and_stderr(batch_means: &[f64]) -> (f64, f64) {
    let b = batch_means.len() as f64;
    let mean = batch_means.iter().sum::<f64>() / b;
    if batch_means.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = batch_means
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (b - 1.0);
    (mean, (var / b).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn batch_sizes_sum_to_total() {
        for total in [1000usize, 1003, 99, 100_000] {
            assert_eq!(batch_sizes(total).iter().sum::<usize>(), total);
        }
    }

    #[test]
    fn stderr_scales_like_inverse_sqrt_n() {
        let run = |n: usize| {
            let means: Vec<f64> = run_batches(n, 5, |_, mut rng, size| {
                (0..size).map(|_| rng.gen::<f64>()).sum::<f64>() / size as f64
            });
            mean_and_stderr(&means)
        };
        let (m1, s1) = run(10_000);
        let (m2, s2) = run(160_000);
        assert!((m1 - 0.5).abs() < 5.0 * s1);
        assert!((m2 - 0.5).abs() < 5.0 * s2);
        // 16x the samples should shrink the error bar by about 4x
        let ratio = s1 / s2;
        assert!(ratio > 2.0 && ratio < 8.0, "ratio {ratio}");
    }

    #[test]
    fn reduction_is_deterministic_across_thread_counts() {
        let f = |_: usize, mut rng: rand_chacha::ChaCha12Rng, size: usize| {
            (0..size).map(|_| rng.gen::<f64>()).sum::<f64>()
        };
        let a: Vec<f64> = run_batches(50_000, 9, f);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b: Vec<f64> = pool.install(|| run_batches(50_000, 9, f));
        assert_eq!(a, b);
    }
}
