//! Counter-based random streams.
//!
//! A [`StreamKey`] names a stream by a root seed plus a path of task
//! indices. Child keys are derived by appending an index, so parallel
//! tasks can each own a stream without any sequential splitting, and the
//! numbers a task sees never depend on scheduling.

use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Name of a deterministic random stream: a root seed and a task path.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    root: u64,
    path: Vec<u64>,
}

impl StreamKey {
    pub fn new(root: u64) -> Self {
        Self { root, path: Vec::new() }
    }

    pub fn with_path(root: u64, path: Vec<u64>) -> Self {
        Self { root, path }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Child key with `index` appended to the path.
    pub fn derive(&self, index: u64) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(index);
        Self { root: self.root, path }
    }

    /// 64-bit digest of (root, path). Distinct paths (including paths that
    /// differ only in length) hash to unrelated values.
    pub fn digest(&self) -> u64 {
        let mut h = splitmix64(self.root ^ 0x6A09_E667_F3BC_C908);
        for (depth, &index) in self.path.iter().enumerate() {
            let salted = index.wrapping_add((depth as u64 + 1).wrapping_mul(GOLDEN));
            h = splitmix64(h ^ splitmix64(salted));
        }
        splitmix64(h ^ (self.path.len() as u64))
    }

    /// Opens the stream named by this key.
    pub fn stream(&self) -> Stream {
        let mut state = self.digest();
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        Stream {
            rng: ChaCha8Rng::from_seed(seed),
            spare_normal: None,
        }
    }
}

impl fmt::Display for StreamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)?;
        for index in &self.path {
            write!(f, "/{index}")?;
        }
        Ok(())
    }
}

/// Appends `index` to the parent's path.
pub fn derive_stream(parent: &StreamKey, index: u64) -> StreamKey {
    parent.derive(index)
}

/// A random number generator opened from a [`StreamKey`].
pub struct Stream {
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Stream {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard exponential by inversion.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -self.uniform().ln()
    }

    /// Fair random sign.
    #[inline]
    pub fn sign(&mut self) -> f64 {
        if self.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Standard normal via the trigonometric Box-Muller transform
    /// (no rejection step; the second variate of each pair is cached).
    #[inline]
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let radius = (-2.0 * self.uniform().ln()).sqrt();
        let angle = std::f64::consts::TAU * self.uniform();
        let (s, c) = angle.sin_cos();
        self.spare_normal = Some(radius * s);
        radius * c
    }

    /// Chi-square variate with `dof` degrees of freedom.
    pub fn chi_square(&mut self, dof: f64) -> f64 {
        ChiSquared::new(dof)
            .expect("degrees of freedom must be positive")
            .sample(&mut self.rng)
    }

    pub fn fill_normal<T: Scalar>(&mut self, out: &mut [T]) {
        for x in out {
            *x = T::of(self.normal());
        }
    }
}

/// `count` i.i.d. standard normal draws from the stream named by `key`.
pub fn standard_normal<T: Scalar>(key: &StreamKey, count: usize) -> Vec<T> {
    let mut stream = key.stream();
    let mut out = vec![T::zero(); count];
    stream.fill_normal(&mut out);
    out
}
