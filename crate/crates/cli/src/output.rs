use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use trike_core::numfmt::sig9;

use crate::CliError;

/// Writes `name` under `dir` through a temporary file and a rename, so
/// readers never observe a partial file.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let target = dir.join(name);
    write_atomic_to(&target, bytes)?;
    Ok(target)
}

pub fn write_atomic_to(target: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::io(format!("{}: {e}", target.display()));
    let dir = match target.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(fail)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(target).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Summary output goes to stdout; a closed pipe is not an error worth a panic.
fn line(key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(std::io::stdout(), "{key}={value}");
}

/// `key=value` summary line at 9 significant digits.
pub fn kv(key: &str, value: f64) {
    line(key, sig9(value));
}

pub fn kv_list(key: &str, values: &[f64]) {
    line(key, values.iter().map(|&v| sig9(v)).collect::<Vec<_>>().join(","));
}

pub fn kv_roots(key: &str, roots: &[Complex64]) {
    let text: Vec<String> = roots
        .iter()
        .map(|r| {
            if r.im == 0.0 {
                sig9(r.re)
            } else {
                let sign = if r.im < 0.0 { '-' } else { '+' };
                format!("{}{sign}{}i", sig9(r.re), sig9(r.im.abs()))
            }
        })
        .collect();
    line(key, text.join(","));
}

pub fn kv_str(key: &str, value: impl std::fmt::Display) {
    line(key, value);
}
