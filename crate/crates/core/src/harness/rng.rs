use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random stream for one trial.
///
/// The generator is ChaCha8 keyed by `master_seed` (expanded with PCG32 as in
/// `SeedableRng::seed_from_u64`) and positioned on stream number `trial_index`.
/// Streams never overlap, so a trial's draws depend only on the pair and not on
/// execution order or thread count.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// Master seed for a sub-experiment `group` of a suite.
pub fn group_seed(master_seed: u64, group: u64) -> u64 {
    master_seed.wrapping_add(group.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}
