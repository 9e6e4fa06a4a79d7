use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use spectral_core::container::ActivationContainer;

use crate::error::{CliError, CliResult};

fn is_std(path: &Path) -> bool {
    path.as_os_str() == "-"
}

pub fn open_in(path: &Path) -> CliResult<Box<dyn Read + Send>> {
    if is_std(path) {
        return Ok(Box::new(io::stdin()));
    }
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(Box::new(BufReader::new(f)))
}

pub fn open_out(path: &Path) -> CliResult<Box<dyn Write>> {
    if is_std(path) {
        return Ok(Box::new(BufWriter::new(io::stdout())));
    }
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(Box::new(BufWriter::new(f)))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_container(path: &Path) -> CliResult<ActivationContainer> {
    let mut bytes = Vec::new();
    open_in(path)?
        .read_to_end(&mut bytes)
        .map_err(|e| CliError::io(path, e))?;
    ActivationContainer::from_bytes(&bytes).map_err(|e| CliError::at(path, e))
}

/// `.spac` files of a directory in name order.
pub fn container_paths(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| CliError::io(dir, e))?.path();
        if p.extension().is_some_and(|x| x == "spac") {
            paths.push(p);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Data(format!("{}: no .spac files", dir.display())));
    }
    Ok(paths)
}

/// One NDJSON line.
pub fn emit<W: Write + ?Sized, T: Serialize>(w: &mut W, path: &Path, record: &T) -> CliResult<()> {
    let line = serde_json::to_string(record).map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(w, "{line}").map_err(|e| CliError::io(path, e))
}

pub fn finish<W: Write + ?Sized>(w: &mut W, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}
