//! Flat key=value election config files.
//!
//! ```text
//! # demo election
//! group = tiny
//! alphabet_size = 3
//! ballot_length = 1
//! allow_revote = false
//! confirmation_codes = false
//! signed_confirmations = true
//! ```

use anyhow::{bail, Context, Result};
use castaudit_core::protocol::ElectionConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum GroupArg {
    Tiny,
    Production,
}

impl GroupArg {
    pub fn as_str(&self) -> &'static str {
        match self {
            GroupArg::Tiny => "tiny",
            GroupArg::Production => "production",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tiny" => Ok(GroupArg::Tiny),
            "production" => Ok(GroupArg::Production),
            other => bail!("unknown group {other:?} (expected tiny or production)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FileConfig {
    pub group: GroupArg,
    pub election: ElectionConfig,
}

impl Default for FileConfig {
    fn default() -> Self {
        Self { group: GroupArg::Tiny, election: ElectionConfig::default() }
    }
}

pub fn parse_config(text: &str) -> Result<FileConfig> {
    let mut config = FileConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {}: expected key = value", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let parse_bool = || -> Result<bool> {
            match value {
                "true" | "on" | "yes" => Ok(true),
                "false" | "off" | "no" => Ok(false),
                other => bail!("line {}: {key} expects a boolean, got {other:?}", lineno + 1),
            }
        };
        match key {
            "group" => config.group = GroupArg::parse(value)?,
            "alphabet_size" => {
                config.election.alphabet_size =
                    value.parse().with_context(|| format!("line {}: bad alphabet_size", lineno + 1))?
            }
            "ballot_length" => {
                config.election.ballot_length =
                    value.parse().with_context(|| format!("line {}: bad ballot_length", lineno + 1))?
            }
            "allow_revote" => config.election.allow_revote = parse_bool()?,
            "confirmation_codes" => config.election.confirmation_codes = parse_bool()?,
            "signed_confirmations" => config.election.signed_confirmations = parse_bool()?,
            other => bail!("line {}: unknown key {other:?}", lineno + 1),
        }
    }
    Ok(config)
}
