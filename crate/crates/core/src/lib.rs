//! Unsupervised part-of-speech induction from parallel text.
//!
//! Three Bayesian tagging models share one Gibbs sampling core: a
//! monolingual trigram HMM, a bilingual model with merged nodes for aligned
//! word pairs, and a multilingual model where aligned words share a latent
//! superlingual value drawn from a Chinese restaurant process.

pub mod alignments;
pub mod chain;
pub mod checkpoint;
pub mod corpus;
pub mod counts;
pub mod error;
pub mod eval;
pub mod hyper;
pub mod lexicon;
pub mod latent;
pub mod merged;
pub mod mono;
pub mod par;
pub mod pipeline;
pub mod params;
pub mod synthetic;
pub mod tags;
pub mod viterbi;

pub use error::{Error, Result};

/// Random number generator used by every sampler.
pub type SamplerRng = rand_chacha::ChaCha8Rng;

/// Independent generator for one named stream of a run. Each language's
/// tag updates draw from their own stream, so a language's trajectory does
/// not depend on how many other languages share the run.
pub fn stream_rng(seed: u64, stream: &str) -> SamplerRng {
    use rand::SeedableRng;
    let mut rng = SamplerRng::seed_from_u64(seed);
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stream.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    rng.set_stream(h);
    rng
}
