#![allow(dead_code)]

pub mod ap_oracle;
pub mod fixtures;
pub mod jacobi;
pub mod kernels;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
