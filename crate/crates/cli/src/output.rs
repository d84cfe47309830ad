//! CSV tables and the run manifest.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{CliError, CliResult};

/// A rectangular table whose first line names its schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: &'static str, header: &[&'static str]) -> Self {
        Self {
            schema,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "ragged row in {}", self.schema);
        self.rows.push(row);
    }

    /// Cells containing commas or quotes are quoted.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8");
        format!("# schema: {}\n{body}", self.schema)
    }
}

/// Formats a row of mixed cells.
#[macro_export]
macro_rules! row {
    ($($cell:expr),* $(,)?) => {
        vec![$($crate::output::cell(&$cell)),*]
    };
}

pub fn cell<T: Display>(v: &T) -> String {
    v.to_string()
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Output directory plus the list of files written to it.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> CliResult<()> {
        self.write_text(name, &table.to_csv())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        write_file(&self.root.join(name), text)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.txt`. The timestamp lives here and nowhere else.
    pub fn finish(mut self, command: &str, config_hash: &str, seed: u64, extra: &[(String, String)]) -> CliResult<()> {
        let ts = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut text = format!(
            "# semtrade run manifest\ncommand = {command}\nversion = {}\nconfig_sha256 = {config_hash}\nmaster_seed = {seed}\nseed_derivation = splitmix64(master, stream, index)\ntimestamp_unix = {ts}\n",
            env!("CARGO_PKG_VERSION")
        );
        for (k, v) in extra {
            text.push_str(&format!("{k} = {v}\n"));
        }
        for f in &self.written {
            text.push_str(&format!("output = {f}\n"));
        }
        self.written.clear();
        write_file(&self.root.join("manifest.txt"), &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new("demo/v1", &["a", "b"]);
        t.push(crate::row![1, 0.5]);
        assert_eq!(t.to_csv(), "# schema: demo/v1\na,b\n1,0.5\n");
    }

    #[test]
    #[should_panic(expected = "ragged")]
    fn ragged_rows_rejected() {
        let mut t = Table::new("demo/v1", &["a", "b"]);
        t.push(vec!["1".into()]);
    }
}
