//! Run configuration: a JSON file with one block per subcommand, overridden
//! by command-line flags.
//!
//! ```json
//! { "jobs": 4, "synth": { "backgrounds": "bg", "out": "run1", "n_samples": 50 } }
//! ```
//!
//! Path keys of a block are resolved against the file's directory; every
//! other key goes to the subcommand's option struct. A dataset manifest
//! written by this tool is also a valid config file: its `run` record
//! replays the command that produced it.

use std::path::{Path, PathBuf};

use segsynth_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// Parsed config file.
#[derive(Debug, Default)]
pub struct RunConfig {
    pub jobs: Option<usize>,
    pub verbose: Option<u8>,
    blocks: Map<String, Value>,
    base: Option<PathBuf>,
}

const COMMANDS: [&str; 6] = ["synth", "rotaug", "glmask", "eval", "pseudo", "convert"];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = std::path::absolute(path)
            .map_err(|e| Error::io(path, e))?
            .parent()
            .map(Path::to_path_buf);
        Self::from_value(value, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_value(value: Value, base: Option<PathBuf>) -> Result<Self> {
        let Value::Object(mut map) = value else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        if map.contains_key("format_version") {
            // a manifest; replay its run record
            map = match map.remove("run") {
                Some(Value::Object(run)) => run,
                _ => return Err(Error::Config("manifest has no run record to replay".into())),
            };
        }
        let mut cfg = RunConfig {
            base,
            ..Default::default()
        };
        for (key, value) in map {
            match key.as_str() {
                "jobs" => cfg.jobs = Some(from_value(value, "jobs")?),
                "verbose" => cfg.verbose = Some(from_value(value, "verbose")?),
                k if COMMANDS.contains(&k) => {
                    if !value.is_object() {
                        return Err(Error::Config(format!("block {k} must be an object")));
                    }
                    cfg.blocks.insert(key, value);
                }
                k => return Err(Error::Config(format!("unknown key {k:?}"))),
            }
        }
        Ok(cfg)
    }

    /// The block of `command`, empty when absent.
    pub fn block(&self, command: &str) -> Block {
        let map = match self.blocks.get(command) {
            Some(Value::Object(m)) => m.clone(),
            _ => Map::new(),
        };
        Block {
            command: command.to_string(),
            map,
            base: self.base.clone(),
        }
    }
}

fn from_value<T: DeserializeOwned>(value: Value, what: &str) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::Config(format!("{what}: {e}")))
}

/// One subcommand's settings while flags are layered on top.
#[derive(Debug, Clone)]
pub struct Block {
    command: String,
    map: Map<String, Value>,
    base: Option<PathBuf>,
}

impl Block {
    /// Removes `key` and returns it as a path: the flag value if given,
    /// else the block's value resolved against the config directory.
    pub fn path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<Option<PathBuf>> {
        let from_file = match self.map.remove(key) {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(match &self.base {
                Some(b) => b.join(s),
                None => PathBuf::from(s),
            }),
            Some(_) => return Err(Error::Config(format!("{}.{key} must be a path string", self.command))),
        };
        Ok(flag.or(from_file))
    }

    /// Like [`Block::path`] but missing is a config error.
    pub fn required_path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf> {
        self.path(key, flag)?
            .ok_or_else(|| Error::Config(format!("{} needs --{} (or {key} in the config file)", self.command, key.replace('_', "-"))))
    }

    /// Removes `key` and returns its string value, with the flag winning.
    pub fn string(&mut self, key: &str, flag: Option<String>) -> Result<Option<String>> {
        let from_file = match self.map.remove(key) {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s),
            Some(_) => return Err(Error::Config(format!("{}.{key} must be a string", self.command))),
        };
        Ok(flag.or(from_file))
    }

    /// Overrides `key` (a dotted path into nested objects) when the flag is set.
    pub fn set<T: Serialize>(&mut self, key: &str, flag: Option<T>) {
        let Some(v) = flag else { return };
        let v = serde_json::to_value(v).expect("flag values serialize");
        let mut parts: Vec<&str> = key.split('.').collect();
        let last = parts.pop().expect("non-empty key");
        let mut map = &mut self.map;
        for p in parts {
            let slot = map.entry(p).or_insert_with(|| Value::Object(Map::new()));
            if !slot.is_object() {
                *slot = Value::Object(Map::new());
            }
            map = slot.as_object_mut().expect("just made an object");
        }
        map.insert(last.to_string(), v);
    }

    /// Deserializes the remaining keys over `base`; unknown keys are errors.
    pub fn build<T: DeserializeOwned + Serialize>(self, base: &T) -> Result<T> {
        let Value::Object(mut merged) = serde_json::to_value(base).expect("options serialize") else {
            unreachable!("option structs serialize to objects")
        };
        merged.extend(self.map);
        from_value(Value::Object(merged), &self.command)
    }
}

/// Absolute form of `p`, so recorded runs replay from any directory.
pub fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(|e| Error::io(p, e))
}

/// Errors unless `p` is an existing directory.
pub fn require_dir(p: &Path) -> Result<()> {
    if p.is_dir() {
        Ok(())
    } else {
        Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "directory not found")))
    }
}

/// Errors unless `p` exists.
pub fn require_exists(p: &Path) -> Result<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "not found")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use segsynth_core::synthesis::SynthesisConfig;
    use serde_json::json;

    #[test]
    fn flags_win_and_paths_resolve_against_the_file() {
        let v = json!({"jobs": 3, "synth": {"backgrounds": "bg", "n_samples": 5, "master_seed": 1}});
        let cfg = RunConfig::from_value(v, Some("/cfg".into())).unwrap();
        assert_eq!(cfg.jobs, Some(3));
        let mut b = cfg.block("synth");
        assert_eq!(b.path("backgrounds", None).unwrap(), Some(PathBuf::from("/cfg/bg")));
        b.set("master_seed", Some(7u64));
        b.set("outputs.instance_maps", Some(false));
        let c = b.build(&SynthesisConfig::default()).unwrap();
        assert_eq!((c.n_samples, c.master_seed), (5, 7));
        assert!(c.outputs.semantic_masks && !c.outputs.instance_maps);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let top = RunConfig::from_value(json!({"synht": {}}), None);
        assert!(matches!(top, Err(Error::Config(_))));
        let cfg = RunConfig::from_value(json!({"synth": {"n_sample": 5}}), None).unwrap();
        let r = cfg.block("synth").build(&SynthesisConfig::default());
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn manifest_replays_its_run_record() {
        let m = json!({"format_version": 1, "samples": [], "run": {"rotaug": {"pairs": "/p"}}});
        let cfg = RunConfig::from_value(m, None).unwrap();
        assert_eq!(cfg.block("rotaug").path("pairs", None).unwrap(), Some(PathBuf::from("/p")));
        let bare = RunConfig::from_value(json!({"format_version": 1}), None);
        assert!(matches!(bare, Err(Error::Config(_))));
    }
}
