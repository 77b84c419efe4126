//! Shared CSV conventions: every file starts with a schema comment line.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;

pub const PACKAGE: &str = "cvq-kernel";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn schema_line(schema: &str) -> String {
    format!("# {PACKAGE} v{VERSION} schema={schema}")
}

pub fn write_schema_line<W: Write>(out: &mut W, schema: &str) -> Result<()> {
    writeln!(out, "{}", schema_line(schema))?;
    Ok(())
}

/// Renders into memory first so a failure never leaves a partial file.
pub fn write_file<F>(path: &Path, render: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    let mut buf = Vec::new();
    render(&mut buf)?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, buf)?;
    Ok(())
}
