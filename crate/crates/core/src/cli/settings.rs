use std::collections::BTreeMap;

use super::{CliError, SystemArgs};
use crate::config::{minimal_file_count, parse_mu, PlacementMode, SystemConfig};
use crate::error::Error;

const KEYS: &[&str] = &[
    "users",
    "files",
    "mu",
    "value_bits",
    "file_bits",
    "input_bits",
    "output_bits",
    "seed",
    "mode",
    "downlink",
    "baseline",
    "retry_limit",
];

const DECENTRALIZED_DEFAULT_FILES: usize = 1000;

/// Parses `key = value` lines; `#` starts a comment, dashes in keys are
/// accepted as underscores.
pub fn apply_config_file(text: &str) -> Result<BTreeMap<String, String>, Error> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key=value", i + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Parse(format!("config line {}: unknown key `{}`", i + 1, k.trim())));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::config(format!("`{key}` expects a non-negative integer, got `{v}`")))
}

/// Config file, then flags, then defaults. A missing file count becomes the
/// smallest valid one for centralized placement.
pub fn resolve_config(args: &SystemArgs) -> Result<SystemConfig, CliError> {
    let mut kv = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
            apply_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    let flags: [(&str, Option<String>); 8] = [
        ("users", args.users.map(|v| v.to_string())),
        ("files", args.files.map(|v| v.to_string())),
        ("mu", args.mu.clone()),
        ("value_bits", args.value_bits.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("mode", args.mode.clone()),
        ("downlink", args.downlink.clone()),
        ("baseline", args.baseline.clone()),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            kv.insert(k.to_string(), v);
        }
    }

    let mut cfg = SystemConfig::default();
    if let Some(v) = kv.get("users") {
        cfg.users = number("users", v)?;
    }
    if let Some(v) = kv.get("mu") {
        cfg.mu = parse_mu(v, cfg.users)?;
    }
    for (key, slot) in [
        ("value_bits", &mut cfg.value_bits),
        ("file_bits", &mut cfg.file_bits),
        ("input_bits", &mut cfg.input_bits),
        ("output_bits", &mut cfg.output_bits),
    ] {
        if let Some(v) = kv.get(key) {
            *slot = number(key, v)?;
        }
    }
    if let Some(v) = kv.get("seed") {
        cfg.seed = number("seed", v)?;
    }
    if let Some(v) = kv.get("retry_limit") {
        cfg.retry_limit = number("retry_limit", v)?;
    }
    if let Some(v) = kv.get("mode") {
        cfg.placement = v.parse()?;
    }
    if let Some(v) = kv.get("downlink") {
        cfg.downlink = v.parse()?;
    }
    if let Some(v) = kv.get("baseline") {
        cfg.baseline = v.parse()?;
    }
    cfg.files = match kv.get("files") {
        Some(v) => number("files", v)?,
        None => match cfg.placement {
            PlacementMode::Centralized => minimal_file_count(cfg.users, cfg.mu).filter(|&n| n > 0).unwrap_or(cfg.files),
            PlacementMode::Decentralized => DECENTRALIZED_DEFAULT_FILES,
        },
    };
    Ok(cfg)
}
