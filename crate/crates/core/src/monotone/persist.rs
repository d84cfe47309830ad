use std::fmt::Write as _;

use super::net::MonotoneNetParams;
use crate::error::{Error, Result};

const MAGIC: &str = "# monotone-net v1";

/// Serializes parameters as text. Floats use the shortest exponent form that
/// parses back to the same bits.
pub fn save_params(params: &MonotoneNetParams) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "bidders = {}", params.bidders());
    let _ = writeln!(out, "groups = {}", params.groups());
    let _ = writeln!(out, "units = {}", params.units());
    let _ = writeln!(out, "temperature = {:e}", params.temperature());
    for (name, values) in [("log_weights", params.log_weights()), ("biases", params.biases())] {
        let _ = writeln!(out, "{name}");
        for row in values.chunks(params.units()) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
    }
    out
}

fn perr<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Params(msg.into()))
}

/// Parses the format written by [`save_params`].
///
/// A `weights` section holding realized (not log) weights is also accepted;
/// any nonpositive weight there is rejected since it would break
/// monotonicity.
pub fn load_params(text: &str) -> Result<MonotoneNetParams> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .peekable();
    match lines.next() {
        Some(l) if l == MAGIC => {}
        other => return perr(format!("missing header line, found {other:?}")),
    }
    let mut header = |key: &str| -> Result<String> {
        let line = lines
            .next()
            .ok_or_else(|| Error::Params(format!("missing `{key}`")))?;
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Params(format!("malformed header line `{line}`")))?;
        if k.trim() != key {
            return perr(format!("expected `{key}`, found `{}`", k.trim()));
        }
        Ok(v.trim().to_string())
    };
    let parse_usize = |s: String, key: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Params(format!("`{key}` is not an integer: {s}")))
    };
    let bidders = parse_usize(header("bidders")?, "bidders")?;
    let groups = parse_usize(header("groups")?, "groups")?;
    let units = parse_usize(header("units")?, "units")?;
    let temp_s = header("temperature")?;
    let temperature: f64 = temp_s
        .parse()
        .map_err(|_| Error::Params(format!("bad temperature {temp_s}")))?;
    let rows = bidders
        .checked_mul(groups)
        .ok_or_else(|| Error::Params("dimensions overflow".into()))?;

    let mut log_weights = None;
    let mut biases = None;
    while let Some(section) = lines.next() {
        let mut values = Vec::with_capacity(rows * units);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::Params(format!("`{section}` ends after {r} rows")))?;
            let before = values.len();
            for cell in line.split_whitespace() {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::Params(format!("bad number `{cell}` in `{section}`")))?;
                values.push(v);
            }
            if values.len() - before != units {
                return perr(format!(
                    "`{section}` row {r} has {} values, expected {units}",
                    values.len() - before
                ));
            }
        }
        match section {
            "log_weights" if log_weights.is_none() => log_weights = Some(values),
            "weights" if log_weights.is_none() => {
                if let Some(w) = values.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
                    return perr(format!("weights must be strictly positive, found {w}"));
                }
                log_weights = Some(values.iter().map(|w| w.ln()).collect());
            }
            "biases" if biases.is_none() => biases = Some(values),
            other => return perr(format!("unexpected or repeated section `{other}`")),
        }
    }
    let log_weights = log_weights.ok_or_else(|| Error::Params("missing weights".into()))?;
    let biases = biases.ok_or_else(|| Error::Params("missing biases".into()))?;
    MonotoneNetParams::new(bidders, groups, units, log_weights, biases, temperature)
        .map_err(|e| Error::Params(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = MonotoneNetParams::random(&mut rng, 3, 4, 5, 12.5, 1.3, 0.7, false).unwrap();
        let back = load_params(&save_params(&p)).unwrap();
        assert_eq!(p, back);
        for (a, b) in p.log_weights().iter().zip(back.log_weights()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_negated_realized_weights() {
        let text = "# monotone-net v1\nbidders = 1\ngroups = 1\nunits = 2\ntemperature = 1e1\nweights\n1.0 -2.0\nbiases\n0 0\n";
        let err = load_params(text).unwrap_err();
        assert!(err.to_string().contains("strictly positive"), "{err}");
    }

    #[test]
    fn accepts_positive_realized_weights() {
        let text = "# monotone-net v1\nbidders = 1\ngroups = 1\nunits = 2\ntemperature = 1e1\nweights\n1.0 2.0\nbiases\n0 0.5\n";
        let p = load_params(text).unwrap();
        assert_eq!(p.weight(0, 0, 1), 2.0);
    }

    #[test]
    fn rejects_truncated_file() {
        let p = MonotoneNetParams::identity(2, 10.0).unwrap();
        let text = save_params(&p);
        let cut: String = text.lines().take(7).collect::<Vec<_>>().join("\n");
        assert!(load_params(&cut).is_err());
        assert!(load_params("nonsense").is_err());
    }

    #[test]
    fn rejects_nonpositive_temperature() {
        let text = "# monotone-net v1\nbidders = 1\ngroups = 1\nunits = 1\ntemperature = -1\nlog_weights\n0\nbiases\n0\n";
        assert!(load_params(text).is_err());
    }
}
