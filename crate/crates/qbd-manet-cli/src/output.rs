//! Small helpers for the JSON/CSV artifacts every command writes.

use std::fs;
use std::fs::File;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(&format!("cannot create {}", dir.display()), e))
}

/// Pretty JSON, both to a file and mirrored on stdout.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::config(format!("serialization failed: {e}")))?;
    fs::write(path, format!("{text}\n"))
        .map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))?;
    println!("{text}");
    Ok(())
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    let file =
        File::create(path).map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn csv_row(w: &mut csv::Writer<File>, fields: &[String]) -> Result<(), CliError> {
    w.write_record(fields)
        .map_err(|e| CliError::config(format!("csv write failed: {e}")))
}

pub fn csv_finish(mut w: csv::Writer<File>) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::config(format!("csv flush failed: {e}")))
}
