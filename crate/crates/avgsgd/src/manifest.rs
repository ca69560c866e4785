//! Run manifests: a `key = value` record of exactly what a harness run was
//! given and what it produced, with SHA-256 checksums of every artifact so
//! reruns can be verified byte for byte.

use std::io::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// An ordered `key = value` manifest. Artifacts append paired
/// `artifact` / `sha256` lines in emission order.
#[derive(Clone, Debug, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    /// Start a manifest for one subcommand run.
    pub fn new(subcommand: &str, experiment: &str) -> Self {
        let mut m = Manifest::default();
        m.set("subcommand", subcommand);
        m.set("experiment", experiment);
        m
    }

    /// Append one `key = value` line.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Record an artifact by name and contents (stores its checksum).
    pub fn artifact(&mut self, name: &str, contents: &[u8]) {
        self.set("artifact", name);
        self.set("sha256", sha256_hex(contents));
    }

    /// Serialize to text (LF line endings, stable order).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.entries {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(value);
            out.push('\n');
        }
        out
    }

    /// Write the manifest to a file.
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_text().as_bytes())
    }
}
