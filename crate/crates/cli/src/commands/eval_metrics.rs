use std::path::Path;

use semtrade_core::metrics::{bleu, sentence_similarity, BleuConfig, BrevityMode, Sentence};

use super::RunSummary;
use crate::config::MetricsConfig;
use crate::error::{CliError, CliResult};
use crate::output::{OutDir, Table};
use crate::row;

#[derive(Debug, Clone, PartialEq)]
pub struct LineScores {
    /// 1-based, as an editor shows it.
    pub line: usize,
    pub ref_tokens: usize,
    pub cand_tokens: usize,
    pub bleu_standard: f64,
    pub bleu_literal: f64,
    pub similarity: f64,
}

fn sentences(text: &str, which: &str) -> CliResult<Vec<Sentence>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let s = Sentence::parse(line);
            if s.is_empty() {
                Err(CliError::Input(format!("{which} line {} is empty", i + 1)))
            } else {
                Ok(s)
            }
        })
        .collect()
}

pub fn evaluate(reference: &str, candidate: &str, cfg: &MetricsConfig) -> CliResult<Vec<LineScores>> {
    let refs = sentences(reference, "reference")?;
    let cands = sentences(candidate, "candidate")?;
    if refs.len() != cands.len() {
        return Err(CliError::Input(format!(
            "reference has {} lines but candidate has {}",
            refs.len(),
            cands.len()
        )));
    }
    let standard = BleuConfig::uniform(cfg.max_order, BrevityMode::Standard)?;
    let literal = BleuConfig::uniform(cfg.max_order, BrevityMode::Literal)?;
    refs.iter()
        .zip(&cands)
        .enumerate()
        .map(|(i, (r, c))| {
            Ok(LineScores {
                line: i + 1,
                ref_tokens: r.len(),
                cand_tokens: c.len(),
                bleu_standard: bleu(r, c, &standard)?,
                bleu_literal: bleu(r, c, &literal)?,
                similarity: sentence_similarity(r, c, cfg.embed_dim)?,
            })
        })
        .collect()
}

pub fn lines_table(scores: &[LineScores]) -> Table {
    let mut t = Table::new(
        "metrics/v1",
        &["line", "ref_tokens", "cand_tokens", "bleu_standard", "bleu_literal", "similarity"],
    );
    for s in scores {
        t.push(row![s.line, s.ref_tokens, s.cand_tokens, s.bleu_standard, s.bleu_literal, s.similarity]);
    }
    t
}

pub fn summary_table(scores: &[LineScores]) -> Table {
    let mut t = Table::new("metrics-summary/v1", &["metric", "corpus_mean", "lines"]);
    let n = scores.len();
    let mean = |f: fn(&LineScores) -> f64| scores.iter().map(f).sum::<f64>() / n as f64;
    t.push(row!["bleu_standard", mean(|s| s.bleu_standard), n]);
    t.push(row!["bleu_literal", mean(|s| s.bleu_literal), n]);
    t.push(row!["similarity", mean(|s| s.similarity), n]);
    t
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn run(cfg: &MetricsConfig, reference: &Path, candidate: &Path, out: &mut OutDir) -> CliResult<RunSummary> {
    let scores = evaluate(&read(reference)?, &read(candidate)?, cfg)?;
    out.write_table("metrics.csv", &lines_table(&scores))?;
    let summary = summary_table(&scores);
    out.write_table("metrics_summary.csv", &summary)?;
    for r in &summary.rows {
        println!("{:<14} {}", r[0], r[1]);
    }
    Ok(RunSummary::ok(vec![
        ("reference".into(), reference.display().to_string()),
        ("candidate".into(), candidate.display().to_string()),
        ("lines".into(), scores.len().to_string()),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_text_scores_one() {
        let text = "the cat sat\non the mat\n";
        let s = evaluate(text, text, &MetricsConfig::default()).unwrap();
        assert_eq!(s.len(), 2);
        for l in &s {
            assert_eq!((l.bleu_standard, l.bleu_literal), (1.0, 1.0));
            assert!((l.similarity - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_or_empty_lines_rejected() {
        let cfg = MetricsConfig::default();
        assert!(matches!(evaluate("a\nb\n", "a\n", &cfg), Err(CliError::Input(_))));
        let err = evaluate("a\nb\n", "a\n  \n", &cfg).unwrap_err();
        assert!(err.to_string().contains("candidate line 2 is empty"));
        assert_eq!(err.exit_code(), 2);
    }
}
