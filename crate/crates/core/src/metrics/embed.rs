use super::bleu::Sentence;
use crate::error::{invalid, Result};

/// Seed folded into every token hash.
pub const EMBED_SEED: u64 = 0x5EC0_4D7E_2024_0001;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over the little-endian seed bytes followed by the token's
/// UTF-8 bytes. Stable across runs and platforms.
pub fn hash_token(token: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for byte in EMBED_SEED.to_le_bytes().iter().chain(token.as_bytes()) {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Bag-of-words count vector with each token hashed into one of `dim`
/// buckets.
pub fn hash_embed(sentence: &Sentence, dim: usize) -> Result<Vec<f64>> {
    if dim == 0 {
        return invalid("embedding dimension must be at least 1");
    }
    let mut v = vec![0.0; dim];
    for t in sentence.tokens() {
        v[(hash_token(t) % dim as u64) as usize] += 1.0;
    }
    Ok(v)
}

/// `u . v / (|u| |v|)`, clamped to [-1, 1].
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.is_empty() || u.len() != v.len() {
        return invalid(format!(
            "vectors must be nonempty and equal length ({} vs {})",
            u.len(),
            v.len()
        ));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>();
    let nv = v.iter().map(|b| b * b).sum::<f64>();
    if nu == 0.0 || nv == 0.0 {
        return invalid("cosine similarity of a zero vector");
    }
    // one square root of the product keeps cos(u, u) at exactly 1
    Ok((dot / (nu * nv).sqrt()).clamp(-1.0, 1.0))
}

/// Cosine similarity of the hash embeddings of two sentences.
pub fn sentence_similarity(a: &Sentence, b: &Sentence, dim: usize) -> Result<f64> {
    cosine_similarity(&hash_embed(a, dim)?, &hash_embed(b, dim)?)
}
