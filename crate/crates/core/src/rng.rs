//! Counter-based random streams.
//!
//! A [`Stream`] is a 64-bit key. Named substreams are derived by hashing a
//! label into the key, and every Monte-Carlo path `i` draws from its own
//! ChaCha8 generator selected by `(key, i)`. Results therefore depend only
//! on `(seed, label, path index)`, never on how paths are scheduled over
//! threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub type PathRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Stream {
    key: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            key: splitmix(seed),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Independent child stream identified by a label.
    pub fn substream(&self, label: &str) -> Self {
        // FNV-1a over the label, then mixed with the parent key.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        Self {
            key: splitmix(self.key ^ splitmix(h)),
        }
    }

    /// Child stream identified by an integer (e.g. a grid point index).
    pub fn child(&self, index: u64) -> Self {
        Self {
            key: splitmix(self.key ^ splitmix(index.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }

    /// Generator for path `index`.
    pub fn path(&self, index: u64) -> PathRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(index);
        rng
    }

    /// Evaluate `f(path_index, rng)` for `n` paths in parallel and return the
    /// results in path order.
    pub fn map_paths<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &mut PathRng) -> T + Sync + Send,
    {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = self.path(i as u64);
                f(i, &mut rng)
            })
            .collect()
    }
}

/// Pairwise (tree) summation; order is fixed by the slice layout.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(v) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn substreams_differ_and_are_stable() {
        let s = Stream::new(7);
        assert_ne!(s.substream("a").key(), s.substream("b").key());
        assert_eq!(s.substream("a").key(), Stream::new(7).substream("a").key());
        let mut r1 = s.path(3);
        let mut r2 = s.path(3);
        let mut r3 = s.path(4);
        let a: u64 = r1.random();
        assert_eq!(a, r2.random::<u64>());
        assert_ne!(a, r3.random::<u64>());
    }

    #[test]
    fn map_paths_is_ordered() {
        let s = Stream::new(1);
        let v = s.map_paths(100, |i, rng| (i, rng.random::<u32>()));
        for (k, (i, _)) in v.iter().enumerate() {
            assert_eq!(k, *i);
        }
        let w = s.map_paths(100, |_, rng| rng.random::<u32>());
        assert!(v.iter().zip(&w).all(|(a, b)| a.1 == *b));
    }

    #[test]
    fn mean_stderr_basic() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
