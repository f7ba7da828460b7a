//! Library side of the `spiralwave` command-line tool: configuration,
//! branch-file persistence, rendering and the subcommands themselves.

use std::io::Write;
use std::path::Path;

pub mod branch_file;
pub mod commands;
pub mod config;
pub mod error;
pub mod render;

pub use error::CliError;

/// Writes `bytes` to a temporary sibling of `path`, then renames it over
/// `path`, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        CliError::Io {
            context: format!("writing {}", path.display()),
            source: e,
        }
    })
}
