//! Seeded, splittable random streams.
//!
//! Every frame trial draws from its own ChaCha8 stream: the key comes from the
//! job seed and the stream id is the trial index, so results do not depend on
//! how trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type FrameRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of job `job` under `master_seed`.
pub fn job_seed(master_seed: u64, job: u64) -> u64 {
    mix64(master_seed ^ mix64(job.wrapping_add(0x5EED)))
}

/// Stream for trial `trial` of a run seeded with `seed`.
pub fn frame_rng(seed: u64, trial: u64) -> FrameRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
