//! One module per subcommand. Each exposes a `run` that writes its CSVs
//! into an [`OutDir`](crate::output::OutDir) and a pure function the tests
//! call directly.

pub mod eval_metrics;
pub mod market_sweep;
pub mod train_dla;
pub mod truthfulness;
pub mod verify;

/// What a finished command hands back for the manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub extras: Vec<(String, String)>,
    /// Set when a property check failed after all outputs were written.
    pub failure: Option<String>,
}

impl RunSummary {
    pub fn ok(extras: Vec<(String, String)>) -> Self {
        Self { extras, failure: None }
    }

    pub fn checked(extras: Vec<(String, String)>, failures: Vec<String>) -> Self {
        Self {
            extras,
            failure: (!failures.is_empty()).then(|| failures.join("; ")),
        }
    }
}
