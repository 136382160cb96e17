//! `key=value` config files, merged under the command-line flags.

use std::ffi::OsString;
use std::path::Path;

use crate::error::CliError;

/// Flags read from a config file. Blank lines and `#` comments are skipped;
/// `key = true` becomes a bare flag, `key = false` is dropped, and a value
/// with spaces supplies several values (as for `markov = 0.1 0.3`).
pub fn file_flags(path: &Path) -> Result<Vec<OsString>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
    parse_flags(&text).map_err(|line| CliError::Usage(format!("{}: cannot read line {line:?}", path.display())))
}

fn parse_flags(text: &str) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| line.to_string())?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(line.to_string());
        }
        match value.trim() {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            value => {
                out.push(format!("--{key}").into());
                out.extend(value.split_whitespace().map(OsString::from));
            }
        }
    }
    Ok(out)
}

/// Path given to `--config`, if any.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// `args` with the file flags inserted right after the subcommand, so any
/// flag repeated on the command line wins.
pub fn merge(args: Vec<OsString>, file: Vec<OsString>, subcommands: &[String]) -> Vec<OsString> {
    let at = args
        .iter()
        .position(|a| subcommands.iter().any(|s| a.to_string_lossy() == s.as_str()))
        .map_or(args.len(), |i| i + 1);
    let mut out = args[..at].to_vec();
    out.extend(file);
    out.extend_from_slice(&args[at..]);
    out
}
