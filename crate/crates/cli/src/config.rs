//! Flat `key=value` config files, merged into the argument list before
//! parsing so every key is validated exactly like the matching flag.

use std::path::Path;

use clap::{ArgAction, Command};

use crate::error::{CliError, CliResult};

/// `(line number, key, value)` entries; blank lines and `#` comments skipped.
pub fn parse_config(text: &str) -> CliResult<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("line {}: expected key=value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::config(format!("line {}: empty key", i + 1)));
        }
        out.push((i + 1, key, v.trim().to_string()));
    }
    Ok(out)
}

fn flag_present(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    args.iter()
        .any(|a| *a == long || a.strip_prefix(&long).is_some_and(|r| r.starts_with('=')))
}

/// Pulls `--config` out of `args` and appends the file's entries as flags
/// for the selected subcommand, skipping any flag given on the command line.
pub fn merge_config(mut args: Vec<String>, command: &Command) -> CliResult<Vec<String>> {
    let mut path = None;
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err(CliError::config("--config needs a path"));
            }
            path = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let Some(sub_pos) = args.iter().skip(1).position(|a| !a.starts_with('-')) else {
        return Ok(args);
    };
    let sub_name = args[sub_pos + 1].clone();
    let Some(sub) = command.find_subcommand(&sub_name) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::config(format!("{}: {e}", Path::new(&path).display())))?;
    let mut extra = Vec::new();
    for (line, key, value) in parse_config(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::config(format!("{path}: {m}")),
        other => other,
    })? {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| {
                CliError::config(format!(
                    "{path}:{line}: unknown key `{key}` for `{sub_name}`"
                ))
            })?;
        if flag_present(&args, &key) {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" | "1" | "yes" => extra.push(format!("--{key}")),
                "false" | "0" | "no" => {}
                _ => {
                    return Err(CliError::config(format!(
                        "{path}:{line}: `{key}` expects true or false, got `{value}`"
                    )))
                }
            }
        } else {
            extra.push(format!("--{key}={value}"));
        }
    }
    args.extend(extra);
    Ok(args)
}
