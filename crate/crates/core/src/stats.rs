//! Sample statistics and the deterministic block-parallel sampling driver.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Mean and standard error of a Monte-Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

impl McEstimate {
    pub fn exact(value: f64) -> Self {
        McEstimate { mean: value, std_error: 0.0, n_samples: 1 }
    }

    /// Deviation from `target` in units of the standard error.
    pub fn sigmas_from(&self, target: f64) -> f64 {
        if self.std_error == 0.0 {
            if self.mean == target { 0.0 } else { f64::INFINITY }
        } else {
            (self.mean - target) / self.std_error
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        McEstimate { mean: self.mean * k, std_error: self.std_error * k.abs(), ..*self }
    }

    /// Ratio of two independent estimates with first-order error propagation.
    pub fn ratio(&self, den: &McEstimate) -> Self {
        let r = self.mean / den.mean;
        let rel = (self.std_error / self.mean).powi(2) + (den.std_error / den.mean).powi(2);
        McEstimate {
            mean: r,
            std_error: r.abs() * rel.sqrt(),
            n_samples: self.n_samples.min(den.n_samples),
        }
    }

    /// Sum of two independent estimates.
    pub fn add(&self, other: &McEstimate) -> Self {
        McEstimate {
            mean: self.mean + other.mean,
            std_error: self.std_error.hypot(other.std_error),
            n_samples: self.n_samples.min(other.n_samples),
        }
    }
}

/// Running sums of several per-sample observables.
#[derive(Clone, Debug, PartialEq)]
pub struct Accumulator {
    pub n: u64,
    pub sum: Vec<f64>,
    pub sumsq: Vec<f64>,
    /// Row-major sums of pairwise products, used for correlated ratios.
    pub sumprod: Vec<f64>,
}

impl Accumulator {
    pub fn new(width: usize) -> Self {
        Accumulator { n: 0, sum: vec![0.0; width], sumsq: vec![0.0; width], sumprod: vec![0.0; width * width] }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let w = self.sum.len();
        for (i, &v) in x.iter().enumerate() {
            self.sum[i] += v;
            self.sumsq[i] += v * v;
            for (j, &u) in x.iter().enumerate().skip(i + 1) {
                self.sumprod[i * w + j] += v * u;
            }
        }
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.n += other.n;
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sumsq[i] += other.sumsq[i];
        }
        for (a, b) in self.sumprod.iter_mut().zip(&other.sumprod) {
            *a += b;
        }
    }

    /// Sample covariance of the means of observables `i` and `j`.
    pub fn covariance_of_means(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.estimate(i).std_error.powi(2);
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let n = self.n as f64;
        if self.n < 2 {
            return 0.0;
        }
        let w = self.sum.len();
        let (mi, mj) = (self.sum[i] / n, self.sum[j] / n);
        (self.sumprod[i * w + j] / n - mi * mj) / (n - 1.0)
    }

    /// Linear combination `Σ c_k x_k` of observables with its standard error.
    pub fn combination(&self, coeffs: &[(usize, f64)]) -> McEstimate {
        let n = self.n.max(1) as f64;
        let mean = coeffs.iter().map(|&(i, c)| c * self.sum[i] / n).sum();
        let mut var = 0.0;
        for &(i, ci) in coeffs {
            for &(j, cj) in coeffs {
                var += ci * cj * self.covariance_of_means(i, j);
            }
        }
        McEstimate { mean, std_error: var.max(0.0).sqrt(), n_samples: self.n }
    }

    /// Ratio of the means of two observables of the same samples, with
    /// first-order error propagation including their correlation.
    pub fn ratio(&self, num: usize, den: usize) -> McEstimate {
        let a = self.estimate(num);
        let b = self.estimate(den);
        let r = a.mean / b.mean;
        let var = (a.std_error.powi(2) - 2.0 * r * self.covariance_of_means(num, den) + r * r * b.std_error.powi(2))
            / (b.mean * b.mean);
        McEstimate { mean: r, std_error: var.max(0.0).sqrt(), n_samples: self.n }
    }

    pub fn estimate(&self, i: usize) -> McEstimate {
        let n = self.n.max(1) as f64;
        let mean = self.sum[i] / n;
        let var = if self.n > 1 {
            ((self.sumsq[i] / n - mean * mean) * n / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        McEstimate { mean, std_error: (var / n).sqrt(), n_samples: self.n }
    }

    pub fn estimates(&self) -> Vec<McEstimate> {
        (0..self.sum.len()).map(|i| self.estimate(i)).collect()
    }
}

pub const BLOCK_SIZE: u64 = 1024;

/// Random stream for block `block` of a run seeded with `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Draws `n_samples` samples of `width` observables. Samples are grouped in
/// fixed blocks with their own random streams and merged in block order, so
/// the result does not depend on the number of worker threads.
pub fn run_samples<F>(n_samples: u64, seed: u64, width: usize, sample: F) -> Accumulator
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let n_blocks = n_samples.div_ceil(BLOCK_SIZE);
    let partial: Vec<Accumulator> = (0..n_blocks)
        .into_par_iter()
        .map(|blk| {
            let mut rng = block_rng(seed, blk);
            let mut acc = Accumulator::new(width);
            let mut out = vec![0.0; width];
            let count = BLOCK_SIZE.min(n_samples - blk * BLOCK_SIZE);
            for _ in 0..count {
                out.iter_mut().for_each(|v| *v = 0.0);
                sample(&mut rng, &mut out);
                acc.push(&out);
            }
            acc
        })
        .collect();
    let mut total = Accumulator::new(width);
    for p in &partial {
        total.merge(p);
    }
    total
}

/// Runs `f` on a pool with `workers` threads, or on the global pool when `None`.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map(|pool| pool.install(f))
            .unwrap_or_else(|e| panic!("failed to build thread pool: {e}")),
        None => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn estimate_of_uniform() {
        let acc = run_samples(100_000, 7, 1, |rng, out| out[0] = rng.random::<f64>());
        let e = acc.estimate(0);
        assert!(e.sigmas_from(0.5).abs() < 4.0);
        assert!((e.std_error - (1.0 / 12.0f64 / 1e5).sqrt()).abs() < 1e-5);
    }

    #[test]
    fn correlated_ratio_error() {
        // x and 2x + noise: the ratio is nearly deterministic
        let acc = run_samples(20_000, 11, 2, |rng, out| {
            let x = 1.0 + rng.random::<f64>();
            out[0] = 2.0 * x + 1e-3 * rng.random::<f64>();
            out[1] = x;
        });
        let r = acc.ratio(0, 1);
        assert!((r.mean - 2.0).abs() < 1e-3);
        assert!(r.std_error < 1e-4);
        let c = acc.combination(&[(0, 1.0), (1, -2.0)]);
        assert!(c.std_error < 1e-5);
    }

    #[test]
    fn independent_of_worker_count() {
        let f = |rng: &mut ChaCha8Rng, out: &mut [f64]| {
            out[0] = rng.random::<f64>().ln();
            out[1] = rng.random::<f64>();
        };
        let a = with_workers(Some(1), || run_samples(5000, 3, 2, f));
        let b = with_workers(Some(3), || run_samples(5000, 3, 2, f));
        assert_eq!(a, b);
    }
}
