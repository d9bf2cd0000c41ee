//! JSON config files.
//!
//! A config file is a flat object whose keys are the long flag names of the
//! chosen subcommand, in either `snake_case` or `kebab-case`:
//!
//! ```json
//! { "trace": ["traces/chipseq.tsv"], "region": "DE", "windows": [6, 24] }
//! ```
//!
//! Values are turned back into flags and appended after the ones given on the
//! command line, skipping any flag the user already set there. Relative paths
//! are resolved against the config file's directory.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory, FromArgMatches};
use serde_json::Value;

use crate::args::Cli;

const PATH_KEYS: &[&str] = &["trace", "catalog", "ci_dir", "out_dir"];

/// Parses `argv`, folding in the values of `--config` when present.
pub fn parse(argv: Vec<OsString>) -> Result<Cli, clap::Error> {
    let matches = Cli::command().try_get_matches_from(&argv)?;
    let cli = Cli::from_arg_matches(&matches)?;
    let Some(path) = cli.config.clone() else {
        return Ok(cli);
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let extra = match config_args(&path, name, sub) {
        Ok(extra) => extra,
        Err(e) => {
            return Err(Cli::command().error(clap::error::ErrorKind::ValueValidation, format!("{e:#}")));
        }
    };
    let mut full = argv;
    full.extend(extra);
    let matches = Cli::command().try_get_matches_from(&full)?;
    Cli::from_arg_matches(&matches)
}

fn config_args(path: &Path, subcommand: &str, given: &ArgMatches) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let Value::Object(map) = value else {
        bail!("config {} must be a JSON object", path.display());
    };
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let cmd = Cli::command();
    let sub = cmd.find_subcommand(subcommand).expect("known subcommand");

    let mut out = Vec::new();
    for (raw_key, v) in &map {
        let key = raw_key.replace('-', "_");
        if key == "config" {
            bail!("config files cannot include other config files");
        }
        let Some(arg) = sub.get_arguments().find(|a| a.get_id().as_str() == key) else {
            bail!("config key `{raw_key}` is not an option of `{subcommand}`");
        };
        if given.value_source(&key) == Some(ValueSource::CommandLine) {
            continue;
        }
        let flag = format!("--{}", arg.get_long().expect("options are long flags"));
        let resolve = |s: String| -> String {
            if !PATH_KEYS.contains(&key.as_str()) || s == "builtin" {
                return s;
            }
            let p = PathBuf::from(&s);
            if p.is_absolute() {
                s
            } else {
                base.join(p).to_string_lossy().into_owned()
            }
        };
        let scalar = |v: &Value| -> Result<String> {
            Ok(match v {
                Value::String(s) => resolve(s.clone()),
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => b.to_string(),
                _ => bail!("config key `{raw_key}` has an unsupported value {v}"),
            })
        };
        match v {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                for item in items {
                    out.push(flag.clone().into());
                    out.push(scalar(item)?.into());
                }
            }
            other => {
                out.push(flag.into());
                out.push(scalar(other)?.into());
            }
        }
    }
    Ok(out)
}
