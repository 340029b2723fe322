//! `--config` run files and the effective configuration stored in the ledger.
//!
//! A run file is a JSON object keyed by long flag names (`"k": 10`,
//! `"embeddings": ["a", "b"]`, `"adapt-input": true`). Its flags are spliced
//! into the argument list ahead of the ones typed by the user, so with every
//! argument overriding itself the command line wins. The ledger stores the
//! same shape, so a ledger's `config` can be fed back through `--config`.

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, ArgMatches, Command};
use serde_json::{Map, Value};

/// Flags of the root command that the run file may set.
const GLOBAL_KEYS: [&str; 2] = ["seed", "out-dir"];

/// Keys that describe the run rather than set a flag.
const IGNORED_KEYS: [&str; 2] = ["command", "config"];

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn takes_value(root: &Command, cmd: &Command, token: &str) -> bool {
    let Some(long) = token.strip_prefix("--") else {
        return false;
    };
    if long.contains('=') {
        return false;
    }
    cmd.get_arguments()
        .chain(root.get_arguments())
        .find(|a| a.get_long() == Some(long))
        .is_some_and(|a| a.get_action().takes_values())
}

/// Index just past the subcommand names, e.g. after `train base`.
fn leaf_position(root: &Command, argv: &[OsString]) -> usize {
    let mut cmd = root;
    let mut pos = 1;
    let mut i = 1;
    while i < argv.len() {
        let tok = argv[i].to_string_lossy();
        if tok.starts_with('-') {
            i += if takes_value(root, cmd, &tok) { 2 } else { 1 };
            continue;
        }
        match cmd.find_subcommand(tok.as_ref()) {
            Some(sub) => {
                cmd = sub;
                pos = i + 1;
                i += 1;
                if !cmd.has_subcommands() {
                    break;
                }
            }
            None => break,
        }
    }
    pos
}

fn value_tokens(key: &str, value: &Value) -> Result<Vec<OsString>> {
    let flag = OsString::from(format!("--{}", key.replace('_', "-")));
    let scalar = |v: &Value| -> Result<OsString> {
        match v {
            Value::String(s) => Ok(s.into()),
            Value::Number(n) => Ok(n.to_string().into()),
            Value::Bool(b) => Ok(b.to_string().into()),
            other => bail!("config key {key:?}: unsupported value {other}"),
        }
    };
    Ok(match value {
        Value::Null | Value::Bool(false) => vec![],
        Value::Bool(true) => vec![flag],
        Value::Array(items) if items.is_empty() => vec![],
        Value::Array(items) => {
            let mut out = vec![flag];
            for v in items {
                out.push(scalar(v)?);
            }
            out
        }
        v => vec![flag, scalar(v)?],
    })
}

/// Splices the flags of the `--config` file, if any, into `argv`.
pub fn expand_argv(root: &Command, argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let Value::Object(mut map) = value else {
        bail!("config {} must hold a JSON object", path.display());
    };
    // a run ledger record carries its flags under "config"
    if map.contains_key("verb") {
        match map.remove("config") {
            Some(Value::Object(inner)) => map = inner,
            _ => bail!("run record {} has no config object", path.display()),
        }
    }
    let mut globals = Vec::new();
    let mut locals = Vec::new();
    for (key, v) in &map {
        let norm = key.replace('_', "-");
        if IGNORED_KEYS.contains(&norm.as_str()) {
            continue;
        }
        let tokens = value_tokens(&norm, v)?;
        if GLOBAL_KEYS.contains(&norm.as_str()) {
            globals.extend(tokens);
        } else {
            locals.extend(tokens);
        }
    }
    let pos = leaf_position(root, &argv);
    let mut out = Vec::with_capacity(argv.len() + globals.len() + locals.len());
    out.push(argv[0].clone());
    out.extend(globals);
    out.extend(argv[1..pos].iter().cloned());
    if pos == 1 {
        // no verb typed: take it from the file
        if let Some(Value::Array(names)) = map.get("command") {
            for n in names {
                out.push(n.as_str().context("\"command\" must list verb names")?.into());
            }
        }
    }
    out.extend(locals);
    out.extend(argv[pos..].iter().cloned());
    Ok(out)
}

fn arg_values(cmd: &Command, matches: &ArgMatches, into: &mut Map<String, Value>, skip: &[&str]) {
    for arg in cmd.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        if skip.contains(&long) || matches!(arg.get_action(), ArgAction::Help | ArgAction::Version) {
            continue;
        }
        let Ok(Some(raw)) = matches.try_get_raw(arg.get_id().as_str()) else {
            continue;
        };
        let values: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
        let value = match arg.get_action() {
            ArgAction::SetTrue | ArgAction::SetFalse => Value::Bool(values.first().is_some_and(|v| v == "true")),
            ArgAction::Count => continue,
            _ if arg.get_num_args().is_some_and(|r| r.max_values() > 1) => {
                Value::Array(values.into_iter().map(Value::String).collect())
            }
            _ => match values.into_iter().next() {
                Some(v) => Value::String(v),
                None => continue,
            },
        };
        into.insert(long.to_string(), value);
    }
}

/// The verb (`"train base"`) and every flag value in effect, defaults included.
pub fn effective_config(root: &Command, matches: &ArgMatches) -> (String, Value) {
    let mut map = Map::new();
    arg_values(root, matches, &mut map, &["config"]);
    let mut names = Vec::new();
    let mut cmd = root;
    let mut m = matches;
    while let Some((name, sub_m)) = m.subcommand() {
        names.push(name.to_string());
        let Some(sub) = cmd.find_subcommand(name) else { break };
        cmd = sub;
        m = sub_m;
    }
    arg_values(cmd, m, &mut map, &[]);
    let verb = names.join(" ");
    map.insert("command".into(), Value::Array(names.into_iter().map(Value::String).collect()));
    (verb, Value::Object(map))
}
