//! Text-transmission quality scores and the score-vs-dimension curves that
//! turn a device's bit budget into semantic performance.

mod bleu;
mod curve;
mod embed;

pub use bleu::{bleu, BleuConfig, BrevityMode, Sentence};
pub use curve::{bundled, ScoreCurve, DEFAULT_BITS_PER_FEATURE};
pub use embed::{cosine_similarity, hash_embed, hash_token, sentence_similarity, EMBED_SEED};
