//! `key = value` config files with `[section]` headers. Keys before the
//! first header, or under `[global]`, apply to every subcommand; a
//! subcommand's section applies to it alone. Keys are long flag names.

use clap::{ArgAction, Command};
use std::collections::BTreeMap;
use std::ffi::OsString;

pub const GLOBAL: &str = "global";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = Self::default();
        let mut section = GLOBAL.to_string();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .map(str::trim)
                    .filter(|n| !n.is_empty())
                    .ok_or_else(|| format!("config line {}: malformed section header", i + 1))?;
                section = name.to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(format!("config line {}: empty key", i + 1));
            }
            let entries = cfg.sections.entry(section.clone()).or_default();
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(format!("config line {}: duplicate key '{k}'", i + 1));
            }
        }
        Ok(cfg)
    }

    #[cfg(test)]
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut write = |name: &str, entries: &BTreeMap<String, String>| {
            out.push_str(&format!("[{name}]\n"));
            for (k, v) in entries {
                out.push_str(&format!("{k} = {v}\n"));
            }
        };
        if let Some(g) = self.sections.get(GLOBAL) {
            write(GLOBAL, g);
        }
        for (name, entries) in self.sections.iter().filter(|(n, _)| n.as_str() != GLOBAL) {
            write(name, entries);
        }
        out
    }

    /// Flags for the global section and for `sub`, after checking every
    /// section and key against `root`'s definitions.
    pub fn to_args(
        &self,
        root: &Command,
        sub: &str,
    ) -> Result<(Vec<OsString>, Vec<OsString>), String> {
        let mut global = Vec::new();
        let mut local = Vec::new();
        for (name, entries) in &self.sections {
            let cmd = if name == GLOBAL {
                root
            } else {
                root.get_subcommands()
                    .find(|c| c.get_name() == name)
                    .ok_or_else(|| format!("config: unknown section [{name}]"))?
            };
            for (key, value) in entries {
                let args = flag_args(cmd, name, key, value)?;
                if name == GLOBAL {
                    global.extend(args);
                } else if name == sub {
                    local.extend(args);
                }
            }
        }
        Ok((global, local))
    }
}

fn flag_args(
    cmd: &Command,
    section: &str,
    key: &str,
    value: &str,
) -> Result<Vec<OsString>, String> {
    let arg = cmd
        .get_arguments()
        .find(|a| {
            a.get_long() == Some(key)
                && key != "config"
                && !a.is_global_set() == (section != GLOBAL)
        })
        .ok_or_else(|| format!("config: unknown key '{key}' in [{section}]"))?;
    let flag = OsString::from(format!("--{key}"));
    match arg.get_action() {
        ArgAction::SetTrue => match value {
            "true" => Ok(vec![flag]),
            "false" => Ok(vec![]),
            _ => Err(format!(
                "config: '{key}' takes true or false, got '{value}'"
            )),
        },
        _ => Ok(vec![OsString::from(format!("--{key}={value}"))]),
    }
}
