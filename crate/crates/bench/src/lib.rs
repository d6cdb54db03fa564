//! Seeded fixtures shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqrtnuc::completion::{sample_design, synthesize};
use sqrtnuc::{CompletionDataset, GroundTruth, NoiseLaw, NoiseSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rank-`rank` completion instance with Gaussian noise of level 1.
pub fn completion_instance(m: usize, n: usize, rank: usize, seed: u64) -> (GroundTruth, CompletionDataset) {
    let mut rng = rng(seed);
    let truth = GroundTruth::generate(m, m, rank, 1.0, &mut rng).expect("valid dimensions");
    let noise = NoiseSpec::new(1.0, NoiseLaw::Gaussian).expect("valid noise");
    let design = sample_design(m, m, n, &mut rng);
    let data = synthesize(&truth, &noise, &design, &mut rng).expect("matching grid");
    (truth, data)
}

/// Decreasing spectrum of length `p`.
pub fn spectrum(p: usize, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = rng(seed);
    let mut s: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..10.0)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}
