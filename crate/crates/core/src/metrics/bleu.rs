use std::collections::HashMap;

use crate::error::{invalid, Result};

/// Lowercased, whitespace-tokenized sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence {
    tokens: Vec<String>,
}

impl Sentence {
    pub fn parse(text: &str) -> Self {
        Self {
            tokens: text.split_whitespace().map(str::to_lowercase).collect(),
        }
    }

    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrevityMode {
    /// `exp(1 - ref_len / cand_len)` when the candidate is shorter, else 1.
    Standard,
    /// `exp(min(1 - cand_len / ref_len, 0))`: penalizes long candidates and
    /// leaves short ones alone.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BleuConfig {
    weights: Vec<f64>,
    pub brevity: BrevityMode,
}

impl BleuConfig {
    /// `weights[i]` is the weight of `(i+1)`-grams.
    pub fn new(weights: Vec<f64>, brevity: BrevityMode) -> Result<Self> {
        if weights.is_empty() {
            return invalid("BLEU needs at least one n-gram order");
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return invalid("BLEU weights must be nonnegative");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("BLEU weights must sum to 1, got {total}"));
        }
        Ok(Self { weights, brevity })
    }

    /// Uniform weights over orders `1..=max_order`.
    pub fn uniform(max_order: usize, brevity: BrevityMode) -> Result<Self> {
        if max_order == 0 {
            return invalid("max order must be at least 1");
        }
        Self::new(vec![1.0 / max_order as f64; max_order], brevity)
    }

    pub fn unigram(brevity: BrevityMode) -> Self {
        Self {
            weights: vec![1.0],
            brevity,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn max_order(&self) -> usize {
        self.weights.len()
    }
}

impl Default for BleuConfig {
    fn default() -> Self {
        Self::unigram(BrevityMode::Standard)
    }
}

fn ngram_counts(tokens: &[String], order: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= order {
        for gram in tokens.windows(order) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped i-gram precision: candidate counts clipped by reference counts,
/// over the total number of candidate i-grams.
fn modified_precision(reference: &[String], candidate: &[String], order: usize) -> f64 {
    let total = candidate.len().saturating_sub(order - 1);
    if total == 0 {
        return 0.0;
    }
    let ref_counts = ngram_counts(reference, order);
    let clipped: usize = ngram_counts(candidate, order)
        .iter()
        .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    clipped as f64 / total as f64
}

/// Sentence BLEU of `candidate` against `reference`.
pub fn bleu(reference: &Sentence, candidate: &Sentence, cfg: &BleuConfig) -> Result<f64> {
    if reference.is_empty() || candidate.is_empty() {
        return invalid("BLEU needs nonempty reference and candidate");
    }
    let ref_len = reference.len() as f64;
    let cand_len = candidate.len() as f64;
    let log_bp = match cfg.brevity {
        BrevityMode::Standard if cand_len < ref_len => 1.0 - ref_len / cand_len,
        BrevityMode::Standard => 0.0,
        BrevityMode::Literal => (1.0 - cand_len / ref_len).min(0.0),
    };
    let mut log_precision = 0.0;
    for (i, &w) in cfg.weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let p = modified_precision(reference.tokens(), candidate.tokens(), i + 1);
        if p == 0.0 {
            return Ok(0.0);
        }
        log_precision += w * p.ln();
    }
    Ok((log_bp + log_precision).exp().clamp(0.0, 1.0))
}
