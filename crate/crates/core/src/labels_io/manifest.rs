use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{read_text, write_bytes};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u64 = 1;

/// File name of a dataset manifest inside its output directory.
pub const MANIFEST_FILE: &str = "manifest.json";

/// Intended use of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    Train,
    Valid,
    Test,
    Qa,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Train, Role::Valid, Role::Test, Role::Qa];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Valid => "valid",
            Role::Test => "test",
            Role::Qa => "qa",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown role {s:?} (expected train, valid, test or qa)")))
    }
}

/// One sample; paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleEntry {
    pub id: String,
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semantic_mask: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_map: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default)]
    pub instances: usize,
    /// Set for samples that carry no instances on purpose.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub negative: bool,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl SampleEntry {
    pub fn paths(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.image.as_str())
            .chain(self.label.as_deref())
            .chain(self.semantic_mask.as_deref())
            .chain(self.instance_map.as_deref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u64,
    pub name: String,
    pub role: Role,
    /// Command or function that produced the dataset.
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub parameters: Value,
    pub samples: Vec<SampleEntry>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl DatasetManifest {
    pub fn new(name: impl Into<String>, role: Role, generator: impl Into<String>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            name: name.into(),
            role,
            generator: generator.into(),
            master_seed: None,
            parameters: Value::Null,
            samples: Vec::new(),
            extra: BTreeMap::new(),
        }
    }

    /// Canonical JSON: sorted keys, two-space indent, trailing newline.
    pub fn to_canonical_json(&self) -> Result<String> {
        // serde_json's Map is ordered by key, so a Value round trip sorts everything.
        let value = serde_json::to_value(self).map_err(|e| Error::parse(e.to_string()))?;
        let mut s = serde_json::to_string_pretty(&value).map_err(|e| Error::parse(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::parse(e.to_string()))?;
        let version = value
            .get("format_version")
            .ok_or_else(|| Error::parse("format_version: missing field"))?
            .as_u64()
            .ok_or_else(|| Error::parse("format_version: expected an unsigned integer"))?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        serde_path_to_error::deserialize(value).map_err(|e| Error::parse(format!("{}: {}", e.path(), e.inner())))
    }

    /// Checks unique sample ids and that every referenced file exists
    /// relative to `base`.
    pub fn validate(&self, base: impl AsRef<Path>) -> Result<()> {
        let base = base.as_ref();
        let mut problems = Vec::new();
        let mut seen = HashSet::new();
        for s in &self.samples {
            if !seen.insert(s.id.as_str()) {
                problems.push(format!("duplicate sample id {}", s.id));
            }
            for p in s.paths() {
                if !base.join(p).is_file() {
                    problems.push(format!("missing file {}", base.join(p).display()));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn instance_total(&self) -> usize {
        self.samples.iter().map(|s| s.instances).sum()
    }
}

pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), manifest.to_canonical_json()?.as_bytes())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    DatasetManifest::from_json(&read_text(path)?).map_err(|e| e.with_path(path))
}
