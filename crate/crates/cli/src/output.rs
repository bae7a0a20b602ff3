//! Atomic output files, run manifests and exit codes.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hyperloom::Error;
use tempfile::NamedTempFile;

/// Writes `path` through a temporary file in the same directory, renamed
/// into place once `fill` succeeds.
pub fn write_atomic(
    path: &Path,
    fill: impl FnOnce(&mut BufWriter<&mut NamedTempFile>) -> hyperloom::Result<()>,
) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = NamedTempFile::new_in(&dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(&mut tmp);
        fill(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
    }
    tmp.persist(path)
        .with_context(|| format!("moving output into {}", path.display()))?;
    Ok(())
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

/// Reads a file with a core parser, naming the file in any error.
pub fn load<T>(
    path: &Path,
    parse: impl FnOnce(BufReader<File>) -> hyperloom::Result<T>,
) -> Result<T> {
    parse(open(path)?).with_context(|| format!("reading {}", path.display()))
}

/// Resolved settings of one run, written next to its outputs.
pub struct Manifest {
    command: String,
    entries: Vec<(String, String)>,
    started: std::time::Instant,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            entries: Vec::new(),
            started: std::time::Instant::now(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let wall = self.started.elapsed().as_secs_f64();
        write_atomic(path, |w| {
            writeln!(w, "command = {}", self.command)?;
            writeln!(w, "version = {}", env!("CARGO_PKG_VERSION"))?;
            for (k, v) in &self.entries {
                writeln!(w, "{k} = {v}")?;
            }
            writeln!(w, "wall_seconds = {wall:.3}")?;
            Ok(())
        })
    }
}

/// `<path>.manifest`.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

/// 1 for usage and configuration problems, 2 for unreadable or malformed
/// data, 3 for numeric or capacity failures.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Config(_) | Error::Unsupported(_) => 1,
                Error::Parse { .. } | Error::Io(_) | Error::Dimension { .. } | Error::Degenerate(_) => 2,
                Error::Domain(_)
                | Error::Capacity(_)
                | Error::InfiniteLoss(_)
                | Error::Signature { .. }
                | Error::Progress(_) => 3,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
        if cause.downcast_ref::<UsageError>().is_some() {
            return 1;
        }
    }
    2
}

/// A bad combination of otherwise valid flags.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}
