//! Deterministic report writers: TSV with a self-describing `#` header and
//! JSON summaries. No timestamps anywhere; identical inputs give identical
//! bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Accumulates one output document and writes it in a single shot, so a failed
/// run never leaves a partial file behind.
pub struct Report {
    buf: String,
}

impl Report {
    pub fn tsv(command: &str, provenance: &[(String, String)], columns: &[&str]) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, "# mink {command} v{VERSION}");
        for (key, value) in provenance {
            let _ = writeln!(buf, "# {key} {value}");
        }
        let _ = writeln!(buf, "# columns: {}", columns.join("\t"));
        Report { buf }
    }

    pub fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.buf, "{}", cells.join("\t"));
    }

    pub fn json(value: &serde_json::Value) -> Self {
        let mut buf = serde_json::to_string_pretty(value).expect("serializable report");
        buf.push('\n');
        Report { buf }
    }

    /// Writes to the path, or to stdout when no path is given.
    pub fn emit(self, out: Option<&Path>) -> Result<(), CliError> {
        match out {
            Some(path) => std::fs::write(path, self.buf)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
            None => {
                print!("{}", self.buf);
                Ok(())
            }
        }
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Cache provenance lines shared by every cache-consuming command.
pub fn cache_provenance(
    cache_path: &Path,
    meta: &mink_core::fixpoint::CacheMeta,
) -> Result<Vec<(String, String)>, CliError> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(cache_path)
        .map_err(|e| CliError::Io(format!("cannot reread cache {}: {e}", cache_path.display())))?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        let _ = write!(hex, "{b:02x}");
    }
    Ok(vec![
        ("cache-sha256".into(), hex),
        ("cache-n".into(), meta.n.to_string()),
        ("cache-iterations".into(), meta.iterations.to_string()),
        ("cache-eps".into(), format!("{:e}", meta.eps)),
    ])
}

/// Resolves the cache file location: explicit flag, else
/// `$MINK_CACHE_DIR/jacobi.tsv`, else `./.mink-cache/jacobi.tsv`.
pub fn cache_location(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    let dir = std::env::var_os("MINK_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".mink-cache"));
    dir.join("jacobi.tsv")
}
