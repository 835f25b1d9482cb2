//! Counter-keyed random draws.
//!
//! Every noise sample is addressed by `(seed, stream, counter)` so the value
//! never depends on the order in which samples are requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Independent noise sources inside one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Trajectory = 1,
    Range = 2,
    Actuation = 3,
    HeadCommand = 4,
    ImuGyro = 5,
    ImuAccel = 6,
    ImuTurnOn = 7,
}

/// A generator positioned at `counter` within `stream`.
pub fn keyed_rng(seed: u64, stream: Stream, counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    // 64 words per counter leaves ample room for ziggurat rejections.
    rng.set_word_pos(u128::from(counter) << 6);
    rng
}

pub fn keyed_normal(seed: u64, stream: Stream, counter: u64) -> f64 {
    StandardNormal.sample(&mut keyed_rng(seed, stream, counter))
}

pub fn keyed_normal3(seed: u64, stream: Stream, counter: u64) -> [f64; 3] {
    let mut rng = keyed_rng(seed, stream, counter);
    [
        StandardNormal.sample(&mut rng),
        StandardNormal.sample(&mut rng),
        StandardNormal.sample(&mut rng),
    ]
}
