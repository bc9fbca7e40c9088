//! Seeded instance generators.
//!
//! All randomness comes from a `ChaCha8Rng` seeded with a single `u64`, so
//! a `(generator, d, k, m, seed)` tuple always yields the same instance.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::relax::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    /// i.i.d. standard normal entries.
    Gaussian,
    /// `m / d` copies of each standard basis vector (at least one copy).
    BasisCopies,
    /// Vectors scattered tightly around `d` random centers.
    Clustered,
}

impl Generator {
    pub const ALL: [Generator; 3] = [
        Generator::Gaussian,
        Generator::BasisCopies,
        Generator::Clustered,
    ];

    pub fn generate(self, d: usize, k: usize, m: usize, seed: u64) -> Result<Instance> {
        match self {
            Generator::Gaussian => gaussian(d, k, m, seed),
            Generator::BasisCopies => basis_copies(d, k, (m / d.max(1)).max(1)),
            Generator::Clustered => clustered(d, k, m, seed),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generator::Gaussian => "gaussian",
            Generator::BasisCopies => "basis-copies",
            Generator::Clustered => "clustered",
        })
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Generator::Gaussian),
            "basis-copies" | "basis_copies" => Ok(Generator::BasisCopies),
            "clustered" => Ok(Generator::Clustered),
            _ => Err(Error::InvalidInstance(format!("unknown generator '{s}'"))),
        }
    }
}

fn normal_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn gaussian(d: usize, k: usize, m: usize, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = (0..m).map(|_| normal_vector(&mut rng, d)).collect();
    Instance::new(d, k, vectors)
}

/// `e_1, …, e_d` repeated `copies` times, in round-robin order.
pub fn basis_copies(d: usize, k: usize, copies: usize) -> Result<Instance> {
    let vectors = (0..d * copies)
        .map(|i| (0..d).map(|j| if j == i % d { 1.0 } else { 0.0 }).collect())
        .collect();
    Instance::new(d, k, vectors)
}

pub fn clustered(d: usize, k: usize, m: usize, seed: u64) -> Result<Instance> {
    const SPREAD: f64 = 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..d).map(|_| normal_vector(&mut rng, d)).collect();
    let vectors = (0..m)
        .map(|i| {
            let noise = normal_vector(&mut rng, d);
            centers[i % d]
                .iter()
                .zip(noise)
                .map(|(c, z)| c + SPREAD * z)
                .collect()
        })
        .collect();
    Instance::new(d, k, vectors)
}
