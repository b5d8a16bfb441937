use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::CliError;

/// `{"value": x, "unit": u}`; non-finite values serialize as `null`.
pub fn q(value: f64, unit: &str) -> Value {
    json!({ "value": value, "unit": unit })
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 9.007_199_254_740_992e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:e}")
    }
}

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::io(&format!("creating {}", root.display()), e))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_json(&self, name: &str, value: &Value) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
        text.push('\n');
        fs::write(&path, text)
            .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
        Ok(path)
    }

    /// CSV with `# `-prefixed metadata lines ahead of the header row.
    pub fn write_csv(
        &self,
        name: &str,
        metadata: &[String],
        header: &[String],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let err = |e: std::io::Error| CliError::io(&format!("writing {}", path.display()), e);
        let file = File::create(&path).map_err(err)?;
        let mut out = BufWriter::new(file);
        for line in metadata {
            writeln!(out, "# {line}").map_err(err)?;
        }
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| CliError::Runtime(format!("writing {}: {e}", path.display()));
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(err)?;
        Ok(path)
    }
}

pub fn provenance(command: &str, config_hash: &str, seed: Option<u64>) -> Value {
    json!({
        "command": command,
        "config_sha256": config_hash,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
    })
}
