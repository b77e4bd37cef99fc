//! Counter-based random streams.
//!
//! Every Monte Carlo sample is drawn from its own ChaCha8 stream addressed by
//! `(seed, purpose, index)`. The key is derived from the seed and a purpose tag
//! and the 64-bit stream id is the sample index, so sample `i` is a pure
//! function of its address. Reductions are performed over fixed-size chunks in
//! index order, which makes every estimate independent of the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Samples per reduction chunk. Fixed so that summation order never depends on
/// how chunks are scheduled.
pub const CHUNK: u64 = 4096;

/// Monte Carlo budget and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McOptions {
    pub samples: u64,
    pub seed: u64,
}

impl McOptions {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self { samples, seed }
    }

    /// Same budget, independent stream family.
    pub fn reseeded(self, salt: u64) -> Self {
        Self {
            samples: self.samples,
            seed: splitmix64(self.seed ^ splitmix64(salt)),
        }
    }
}

/// Purpose tags keep streams used for different jobs disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Sphere = 1,
    LevelSet = 2,
    Exhaustion = 3,
    ExhaustionCheck = 4,
    AuxiliaryH = 5,
    Search = 6,
    Test = 7,
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The generator for sample `index` of the family `(seed, purpose, tag)`.
///
/// `tag` distinguishes sub-families of one purpose (for example the index of
/// an exhaustion set, or a restart number).
pub fn stream(seed: u64, purpose: Purpose, tag: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&tag.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform point on `S^{n-1}` from a normalised Gaussian vector, written into `out`.
pub fn unit_sphere_point(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for v in out.iter_mut() {
            *v = standard_normal(rng);
            norm2 += *v * *v;
        }
        if norm2 > 1e-300 {
            let inv = 1.0 / norm2.sqrt();
            out.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}

/// Uniform point in the unit ball of `R^n`.
pub fn unit_ball_point(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    use rand::Rng;
    unit_sphere_point(rng, out);
    let u: f64 = rng.random();
    let radius = u.powf(1.0 / out.len() as f64);
    out.iter_mut().for_each(|v| *v *= radius);
}

/// First and second raw moments of a sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, y: f64) {
        self.count += 1;
        self.sum += y;
        self.sum_sq += y * y;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn standard_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Relative floor for [`within_se`]; zero-variance estimators are exact only up
/// to rounding.
pub const ROUNDOFF: f64 = 1e-12;

/// `|value - target| ≤ k·SE`, plus a relative rounding floor.
pub fn within_se(value: f64, target: f64, standard_error: f64, k: f64) -> bool {
    (value - target).abs() <= k * standard_error + ROUNDOFF * value.abs().max(target.abs())
}

/// Moments of `f(i)` over `i in 0..samples`, reduced chunk by chunk in index order.
pub fn chunked_moments<F>(samples: u64, f: F) -> Moments
where
    F: Fn(u64) -> f64 + Sync,
{
    chunked_moments_multi::<1, _>(samples, |i| [f(i)])[0]
}

/// Joint version of [`chunked_moments`] for estimators that need several
/// statistics of the same sample.
pub fn chunked_moments_multi<const K: usize, F>(samples: u64, f: F) -> [Moments; K]
where
    F: Fn(u64) -> [f64; K] + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<[Moments; K]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = [Moments::default(); K];
            let end = ((c + 1) * CHUNK).min(samples);
            for i in c * CHUNK..end {
                let ys = f(i);
                for (mk, y) in m.iter_mut().zip(ys) {
                    mk.push(y);
                }
            }
            m
        })
        .collect();
    let mut total = [Moments::default(); K];
    for m in &partial {
        for (t, p) in total.iter_mut().zip(m) {
            t.merge(p);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_pure_functions_of_their_address() {
        let a: u64 = stream(7, Purpose::Test, 0, 42).random();
        let b: u64 = stream(7, Purpose::Test, 0, 42).random();
        let c: u64 = stream(7, Purpose::Test, 0, 43).random();
        let d: u64 = stream(7, Purpose::Sphere, 0, 42).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn chunked_reduction_is_independent_of_pool_size() {
        let f = |i: u64| {
            let u: f64 = stream(3, Purpose::Test, 0, i).random();
            u
        };
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| chunked_moments(50_000, f));
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| chunked_moments(50_000, f));
        assert_eq!(one, four);
        assert!((one.mean() - 0.5).abs() < 4.0 * one.standard_error());
    }

    #[test]
    fn sphere_points_are_unit() {
        let mut rng = stream(1, Purpose::Test, 0, 0);
        let mut p = [0.0; 6];
        for _ in 0..100 {
            unit_sphere_point(&mut rng, &mut p);
            let r: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ball_points_stay_inside() {
        let mut rng = stream(1, Purpose::Test, 1, 0);
        let mut p = [0.0; 3];
        for _ in 0..1000 {
            unit_ball_point(&mut rng, &mut p);
            assert!(p.iter().map(|v| v * v).sum::<f64>() <= 1.0);
        }
    }
}
