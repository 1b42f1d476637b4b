//! `--config FILE`: flat `key=value` lines turned into `--key value` flags.
//!
//! The file's flags are inserted right after the subcommand so anything
//! given on the command line comes later and overrides them.

use std::ffi::OsString;
use std::fs;

pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        if arg == "--config" {
            path = Some(
                iter.next()
                    .ok_or_else(|| "--config needs a file path".to_string())?,
            );
        } else if let Some(p) = arg.to_str().and_then(|s| s.strip_prefix("--config=")) {
            path = Some(OsString::from(p));
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let flags = parse(&text)?;
    // binary, subcommand, then the file's flags, then the rest
    let at = rest.len().min(2);
    let mut out: Vec<OsString> = rest[..at].to_vec();
    out.extend(flags.into_iter().map(OsString::from));
    out.extend(rest[at..].iter().cloned());
    Ok(out)
}

fn parse(text: &str) -> Result<Vec<String>, String> {
    let mut flags = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        flags.push(format!("--{key}"));
        flags.push(value.trim().to_string());
    }
    Ok(flags)
}
