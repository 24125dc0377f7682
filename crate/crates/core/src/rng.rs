//! Seed splitting. Every random consumer gets its own ChaCha stream keyed by
//! `(seed, run, purpose)`, so adding a consumer never shifts another one's
//! draws and runs executed in parallel see the same numbers as serial ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Noise = 1,
    OutputSelection = 2,
    Probe = 3,
}

pub fn stream(seed: u64, run: u64, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((run << 8) | purpose as u64);
    rng
}
