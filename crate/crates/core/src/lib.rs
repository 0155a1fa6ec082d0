//! Hard-clustering complete-data maximum likelihood estimation (CMLE) for
//! mixtures of spherical Gaussians.
//!
//! The crate is `no_std` and only needs `alloc`. It contains the cost
//! model, the Classification-EM baseline, the superset-sampling and
//! sample-and-prune candidate generators, the parameter grids, the
//! end-to-end approximation pipelines and a brute-force oracle for small
//! instances. File formats and the command-line front end live in the
//! `cmle-cli` crate.
//!
//! All logarithms are natural logarithms; costs are in nats.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod abs;
pub mod cem;
mod error;
pub mod grids;
mod math;
pub mod model;
pub mod oracle;
pub mod partitions;
pub mod sampling;
mod score;
pub mod solvers;

pub use error::{Error, Result};
pub use model::{
    BalanceProfile, CostReport, HardPartition, Objective, PointSet, SphericalComponent,
    SphericalMixture,
};

/// Seeded generator used for every stochastic stage.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the crate's generator from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
