//! Reproducible randomness.
//!
//! Every random decision in a run is drawn from a ChaCha8 substream derived
//! from `(run seed, purpose tag, index)`. The derivation rule is fixed and
//! platform-independent:
//!
//! ```text
//! state = mix64(mix64(seed ^ purpose_tag) ^ index)
//! rng   = ChaCha8Rng::seed_from_u64(state)
//! ```
//!
//! where `mix64` is the SplitMix64 finalizer. Distinct purposes therefore
//! never share a stream, and permutation sampling for different epochs (or
//! clients) is independent yet fully determined by the run seed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Purpose tags keeping the substreams of one run seed disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    /// Epoch permutations (reshuffling methods and federated clients).
    Permutation,
    /// With-replacement index draws for proximal SGD.
    SgdIndex,
    /// Synthetic data generation.
    Data,
    /// Dataset partitioning across simulated clients.
    Partition,
    /// Monte-Carlo estimation in the diagnostics.
    MonteCarlo,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::Permutation => 0x5045_524d_5554_4531,
            StreamPurpose::SgdIndex => 0x5347_4449_4e44_4558,
            StreamPurpose::Data => 0x4441_5441_4745_4e31,
            StreamPurpose::Partition => 0x5041_5254_4954_4f4e,
            StreamPurpose::MonteCarlo => 0x4d4f_4e54_4543_4c4f,
        }
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the generator for substream `(seed, purpose, index)`.
pub fn substream(seed: u64, purpose: StreamPurpose, index: u64) -> ChaCha8Rng {
    let state = mix64(mix64(seed ^ purpose.tag()) ^ index);
    ChaCha8Rng::seed_from_u64(state)
}

/// Uniform index in `[0, bound)` by 128-bit multiply.
///
/// The residual bias is at most `bound / 2^64`, far below anything the
/// statistical tests in this crate can resolve, and the mapping is identical
/// on every platform.
pub fn uniform_index(rng: &mut impl RngCore, bound: usize) -> usize {
    debug_assert!(bound > 0);
    (((rng.next_u64() as u128) * (bound as u128)) >> 64) as usize
}

/// Fisher-Yates shuffle of `0..n` driven by `rng`.
pub fn random_permutation(rng: &mut impl RngCore, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = uniform_index(rng, i + 1);
        perm.swap(i, j);
    }
    perm
}

/// Whether a new permutation is sampled every epoch or only once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermutationMode {
    /// Fresh uniform permutation at each epoch (random reshuffling).
    Reshuffle,
    /// The epoch-0 permutation is reused for every epoch (shuffle-once).
    ShuffleOnce,
}

/// Seeded, reproducible source of permutations of `{0, .., n-1}`.
///
/// The permutation for epoch `t` is a pure function of
/// `(seed, n, mode, index_base + t)`; streams for distinct clients use
/// disjoint index ranges via [`PermutationStream::for_client`].
#[derive(Debug, Clone)]
pub struct PermutationStream {
    seed: u64,
    n: usize,
    mode: PermutationMode,
    index_base: u64,
}

impl PermutationStream {
    pub fn new(seed: u64, n: usize, mode: PermutationMode) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("permutation stream needs n >= 1"));
        }
        Ok(PermutationStream { seed, n, mode, index_base: 0 })
    }

    /// Stream for simulated client `client`; epochs must stay below 2^32.
    pub fn for_client(seed: u64, n: usize, mode: PermutationMode, client: u32) -> Result<Self> {
        let mut stream = Self::new(seed, n, mode)?;
        stream.index_base = (client as u64) << 32;
        Ok(stream)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> PermutationMode {
        self.mode
    }

    /// Permutation for the given epoch.
    pub fn permutation(&self, epoch: usize) -> Vec<usize> {
        let effective = match self.mode {
            PermutationMode::Reshuffle => epoch as u64,
            PermutationMode::ShuffleOnce => 0,
        };
        let mut rng = substream(self.seed, StreamPurpose::Permutation, self.index_base + effective);
        random_permutation(&mut rng, self.n)
    }
}
