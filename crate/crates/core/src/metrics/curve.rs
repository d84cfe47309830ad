use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::market::SemanticScores;

/// Bits per transmitted feature when the curve file does not say otherwise
/// (single-precision floats).
pub const DEFAULT_BITS_PER_FEATURE: u32 = 32;

/// Similarity and BLEU achieved when only the first `d` of `D` encoder
/// output dimensions are transmitted, for `d = 1..=D`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreCurve {
    sim: Vec<f64>,
    bleu: Vec<f64>,
    bits_per_feature: u32,
}

fn cerr<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Curve(msg.into()))
}

impl ScoreCurve {
    pub fn new(sim: Vec<f64>, bleu: Vec<f64>, bits_per_feature: u32) -> Result<Self> {
        if sim.is_empty() || sim.len() != bleu.len() {
            return cerr(format!(
                "tables must be nonempty and equal length ({} vs {})",
                sim.len(),
                bleu.len()
            ));
        }
        if bits_per_feature == 0 {
            return cerr("bits per feature must be positive");
        }
        for (name, table) in [("sim", &sim), ("bleu", &bleu)] {
            if let Some(v) = table.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return cerr(format!("{name} value {v} outside [0, 1]"));
            }
            if let Some(d) = table.windows(2).position(|w| w[1] < w[0]) {
                return cerr(format!("{name} decreases between dim {} and {}", d + 1, d + 2));
            }
        }
        Ok(Self {
            sim,
            bleu,
            bits_per_feature,
        })
    }

    pub fn max_dim(&self) -> usize {
        self.sim.len()
    }

    pub fn bits_per_feature(&self) -> u32 {
        self.bits_per_feature
    }

    /// Scores at output dimension `dim` (1-based).
    pub fn scores_at(&self, dim: usize) -> Result<SemanticScores> {
        if dim == 0 || dim > self.max_dim() {
            return Err(Error::InvalidInput(format!(
                "dimension {dim} outside 1..={}",
                self.max_dim()
            )));
        }
        SemanticScores::new(self.sim[dim - 1], self.bleu[dim - 1])
    }

    /// Largest dimension a budget of `bits` can carry for `sentences`
    /// sentences of `length` tokens, capped at the curve's maximum.
    pub fn dim_from_bits(&self, bits: u64, sentences: u64, length: u64) -> Result<usize> {
        if sentences == 0 || length == 0 {
            return Err(Error::InvalidInput(
                "sentence count and length must be at least 1".into(),
            ));
        }
        let per_dim = sentences
            .checked_mul(length)
            .and_then(|x| x.checked_mul(u64::from(self.bits_per_feature)))
            .ok_or_else(|| Error::InvalidInput("bit requirement overflows".into()))?;
        if bits < per_dim {
            return Err(Error::BudgetTooSmall {
                budget: bits,
                required: per_dim,
            });
        }
        Ok(((bits / per_dim) as usize).min(self.max_dim()))
    }

    /// Parses a `dim,sim,bleu` table. Comment lines start with `#`; one of
    /// them may carry `bits_per_feature = N`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut bits = None;
        let mut header_seen = false;
        let mut rows: Vec<Option<(f64, f64)>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((k, v)) = comment.split_once('=') {
                    if k.trim() == "bits_per_feature" {
                        if bits.is_some() {
                            return cerr("bits_per_feature given twice");
                        }
                        bits = Some(v.trim().parse::<u32>().map_err(|_| {
                            Error::Curve(format!("bad bits_per_feature `{}`", v.trim()))
                        })?);
                    }
                }
                continue;
            }
            if !header_seen {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols != ["dim", "sim", "bleu"] {
                    return cerr(format!("expected header `dim,sim,bleu`, found `{line}`"));
                }
                header_seen = true;
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != 3 {
                return cerr(format!("line {}: expected 3 columns", lineno + 1));
            }
            let dim: usize = cells[0]
                .parse()
                .map_err(|_| Error::Curve(format!("line {}: bad dim `{}`", lineno + 1, cells[0])))?;
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Curve(format!("line {}: bad number `{s}`", lineno + 1)))
            };
            let (sim, bleu) = (num(cells[1])?, num(cells[2])?);
            if dim == 0 {
                return cerr(format!("line {}: dimensions start at 1", lineno + 1));
            }
            if rows.len() < dim {
                rows.resize(dim, None);
            }
            if rows[dim - 1].replace((sim, bleu)).is_some() {
                return cerr(format!("duplicate dimension {dim}"));
            }
        }
        if !header_seen {
            return cerr("missing `dim,sim,bleu` header");
        }
        if let Some(missing) = rows.iter().position(Option::is_none) {
            return cerr(format!("missing dimension {}", missing + 1));
        }
        let (sim, bleu): (Vec<f64>, Vec<f64>) = rows.into_iter().flatten().unzip();
        Self::new(sim, bleu, bits.unwrap_or(DEFAULT_BITS_PER_FEATURE))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# score-curve v1\n");
        let _ = writeln!(out, "# bits_per_feature = {}", self.bits_per_feature);
        out.push_str("dim,sim,bleu\n");
        for d in 0..self.max_dim() {
            let _ = writeln!(out, "{},{},{}", d + 1, self.sim[d], self.bleu[d]);
        }
        out
    }
}

/// Curves shipped with the crate. Both are reconstructions: straight-line
/// interpolation through reported anchor scores, not digitized plots.
pub mod bundled {
    use super::ScoreCurve;

    pub const CONTROLLED_DROPOUT: &str = include_str!("../../data/curve_controlled_dropout.csv");
    pub const BASELINE: &str = include_str!("../../data/curve_baseline.csv");

    /// Model trained with controlled dropout: degrades gently with fewer
    /// dimensions.
    pub fn controlled_dropout() -> ScoreCurve {
        ScoreCurve::parse(CONTROLLED_DROPOUT).expect("bundled curve is valid")
    }

    /// Model trained without controlled dropout.
    pub fn baseline() -> ScoreCurve {
        ScoreCurve::parse(BASELINE).expect("bundled curve is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bundled_anchor_points() {
        let cd = bundled::controlled_dropout();
        let base = bundled::baseline();
        assert_eq!(cd.max_dim(), 16);
        assert_abs_diff_eq!(cd.scores_at(12).unwrap().sim(), 0.80, epsilon = 1e-12);
        assert_abs_diff_eq!(base.scores_at(12).unwrap().sim(), 0.60, epsilon = 1e-12);
        let top = cd.scores_at(16).unwrap();
        assert_eq!((top.sim(), top.bleu()), (0.91, 0.89));
        let top = base.scores_at(16).unwrap();
        assert_eq!((top.sim(), top.bleu()), (0.94, 0.94));
    }

    #[test]
    fn bundled_sim_dominates_below_full_dimension() {
        let cd = bundled::controlled_dropout();
        let base = bundled::baseline();
        for d in 1..16 {
            assert!(cd.scores_at(d).unwrap().sim() > base.scores_at(d).unwrap().sim());
        }
    }

    #[test]
    fn dim_from_bits_examples() {
        let cd = bundled::controlled_dropout();
        assert_eq!(cd.dim_from_bits(10_000, 1, 19).unwrap(), 16);
        assert_eq!(cd.dim_from_bits(19 * 32 * 16, 1, 19).unwrap(), 16);
        // 4.7 dimensions worth of bits
        assert_eq!(cd.dim_from_bits(1504, 1, 10).unwrap(), 4);
        assert_eq!(
            cd.dim_from_bits(100, 1, 10),
            Err(Error::BudgetTooSmall {
                budget: 100,
                required: 320
            })
        );
        assert!(cd.dim_from_bits(10_000, 0, 10).is_err());
    }

    #[test]
    fn dim_from_bits_is_monotone() {
        let cd = bundled::controlled_dropout();
        let mut last = 0;
        for bits in (320..20_000).step_by(37) {
            let d = cd.dim_from_bits(bits, 1, 10).unwrap();
            assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn scores_nondecreasing_and_range_checked() {
        let cd = bundled::controlled_dropout();
        for d in 2..=16 {
            let (a, b) = (cd.scores_at(d - 1).unwrap(), cd.scores_at(d).unwrap());
            assert!(b.sim() >= a.sim() && b.bleu() >= a.bleu());
        }
        assert!(cd.scores_at(0).is_err());
        assert!(cd.scores_at(17).is_err());
    }

    #[test]
    fn parse_rejects_bad_tables() {
        let dup = "dim,sim,bleu\n1,0.1,0.1\n1,0.2,0.2\n";
        assert!(ScoreCurve::parse(dup).unwrap_err().to_string().contains("duplicate"));
        let gap = "dim,sim,bleu\n1,0.1,0.1\n3,0.2,0.2\n";
        assert!(ScoreCurve::parse(gap).unwrap_err().to_string().contains("missing"));
        let dec = "dim,sim,bleu\n1,0.3,0.1\n2,0.2,0.2\n";
        assert!(ScoreCurve::parse(dec).is_err());
        assert!(ScoreCurve::parse("1,0.1,0.1\n").is_err());
        assert!(ScoreCurve::parse("dim,sim,bleu\n1,1.5,0.1\n").is_err());
    }

    #[test]
    fn parse_reads_bits_and_round_trips() {
        let text = "# bits_per_feature = 16\ndim,sim,bleu\n2,0.5,0.4\n1,0.2,0.1\n";
        let c = ScoreCurve::parse(text).unwrap();
        assert_eq!(c.bits_per_feature(), 16);
        assert_eq!(c.scores_at(1).unwrap().sim(), 0.2);
        assert_eq!(ScoreCurve::parse(&c.to_text()).unwrap(), c);
    }
}
