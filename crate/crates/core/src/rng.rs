use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Counter-derived RNG: one master seed, one stream id per independent unit
/// of work (codebook, trial, restart). The stream id keeps parallel loops
/// deterministic regardless of scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
