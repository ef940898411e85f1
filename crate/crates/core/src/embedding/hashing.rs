//! Feature-hashing embedder.
//!
//! Lowercased alphanumeric tokens and adjacent token bigrams are hashed with
//! seeded XXH3-64. The hash picks the bucket (`hash mod dimension`) and its
//! top bit picks the sign. The accumulated counts are L2-normalized.

use xxhash_rust::xxh3::xxh3_64_with_seed;

use super::{
    EmbedError, EmbeddingProvider, EmbeddingVector, ProviderDescriptor, DEFAULT_MAX_BATCH,
};

pub const DEFAULT_HASH_DIMENSION: usize = 256;
pub const DEFAULT_HASH_SEED: u64 = 0x1f2e_3d4c_5b6a_7988;

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn hash_embed(text: &str, dimension: usize, seed: u64) -> EmbeddingVector {
    let dimension = dimension.max(1);
    let tokens = tokens(text);
    let mut values = vec![0.0f64; dimension];
    let mut add = |feature: &str| {
        let h = xxh3_64_with_seed(feature.as_bytes(), seed);
        let index = (h % dimension as u64) as usize;
        values[index] += if h >> 63 == 1 { -1.0 } else { 1.0 };
    };
    for token in &tokens {
        add(token);
    }
    // Tokens never contain a space, so bigram features cannot collide with
    // unigram features.
    for pair in tokens.windows(2) {
        add(&format!("{} {}", pair[0], pair[1]));
    }
    EmbeddingVector::normalized(values).expect("hash counts are finite")
}

/// Offline provider backed by [`hash_embed`]. The seed and dimension are
/// part of the provider id, so the id fully determines every vector.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    descriptor: ProviderDescriptor,
    seed: u64,
    max_batch: usize,
}

impl HashEmbedder {
    pub fn new(dimension: usize, seed: u64) -> Result<Self, EmbedError> {
        let descriptor =
            ProviderDescriptor::new(format!("hash-xxh3-uni-bi:d{dimension}:s{seed}"), dimension)?;
        Ok(HashEmbedder {
            descriptor,
            seed,
            max_batch: DEFAULT_MAX_BATCH,
        })
    }

    pub fn with_max_batch(mut self, max_batch: usize) -> Self {
        self.max_batch = max_batch.max(1);
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder::new(DEFAULT_HASH_DIMENSION, DEFAULT_HASH_SEED)
            .expect("default dimension is nonzero")
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn descriptor(&self) -> &ProviderDescriptor {
        &self.descriptor
    }

    fn max_batch(&self) -> usize {
        self.max_batch
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(texts
            .iter()
            .map(|t| hash_embed(t, self.descriptor.dimension, self.seed))
            .collect())
    }
}
