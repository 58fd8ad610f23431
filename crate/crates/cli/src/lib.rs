//! Command-line front end for `urnlab`: configuration, the verification
//! registry, run reports and atomic output.

pub mod config;
pub mod report;
pub mod run;
pub mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};

pub use config::{Cli, Command, ExperimentConfig, UsageError};
pub use report::RunReport;
pub use run::{run, Outcome};

/// Write `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// `out.csv` with suffix `local_times` becomes `out.local_times.csv`.
pub fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}.{suffix}.{ext}"))
}

/// Write every output of `outcome`; returns the rendered primary output when
/// no output path is configured.
pub fn emit(config: &ExperimentConfig, outcome: &Outcome) -> std::io::Result<Option<String>> {
    let primary = outcome.primary(config.format);
    let Some(out) = &config.out else {
        return Ok(Some(primary));
    };
    write_atomic(out, &primary)?;
    if config.format == config::Format::Csv {
        for a in &outcome.csv {
            if let Some(suffix) = a.suffix {
                write_atomic(&sibling_path(out, suffix), &a.contents)?;
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_names() {
        assert_eq!(
            sibling_path(Path::new("a/walk.csv"), "local_times"),
            Path::new("a/walk.local_times.csv")
        );
        assert_eq!(
            sibling_path(Path::new("walk"), "local_times"),
            Path::new("walk.local_times.csv")
        );
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
    }
}
