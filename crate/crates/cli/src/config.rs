//! Flat `key = value` config files.

use std::fs;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Command};

/// Reads a config file into `(key, value)` pairs. Blank lines and lines
/// starting with `#` are skipped.
pub fn read(path: &str) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {path}"))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{path}:{}: expected 'key = value'", i + 1);
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Removes `--config <file>` from `argv` and inserts the file's entries as
/// flags right after the subcommand name, so later command-line flags win.
pub fn expand(cmd: &Command, argv: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().context("--config needs a file")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let Some(pos) = rest
        .iter()
        .position(|a| cmd.find_subcommand(a).is_some())
    else {
        bail!("--config needs a subcommand");
    };
    let sub = cmd.find_subcommand(&rest[pos]).expect("found above");
    let mut injected = Vec::new();
    for (key, value) in read(&path)? {
        let Some(arg) = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
        else {
            bail!("{path}: unknown key '{key}' for '{}'", sub.get_name());
        };
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" => injected.push(format!("--{key}")),
                "false" => {}
                _ => bail!("{path}: '{key}' expects true or false"),
            }
        } else {
            injected.push(format!("--{key}"));
            injected.push(value);
        }
    }
    rest.splice(pos + 1..pos + 1, injected);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::{Arg, ArgAction};

    fn cmd() -> Command {
        Command::new("t").subcommand(
            Command::new("run")
                .args_override_self(true)
                .arg(Arg::new("seed").long("seed"))
                .arg(Arg::new("fast").long("fast").action(ArgAction::SetTrue)),
        )
    }

    #[test]
    fn injects_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        fs::write(&path, "# comment\nseed = 4\nfast = true\n").unwrap();
        let argv: Vec<String> = ["t", "run", "--config", path.to_str().unwrap(), "--seed", "9"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let out = expand(&cmd(), argv).unwrap();
        assert_eq!(out, ["t", "run", "--seed", "4", "--fast", "--seed", "9"]);
        let m = cmd().try_get_matches_from(out).unwrap();
        let (_, sub) = m.subcommand().unwrap();
        assert_eq!(sub.get_one::<String>("seed").unwrap(), "9");
    }

    #[test]
    fn rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        fs::write(&path, "colour = red\n").unwrap();
        let argv = vec!["t".into(), "run".into(), "--config".into(), path.to_str().unwrap().into()];
        assert!(expand(&cmd(), argv).is_err());
    }
}
