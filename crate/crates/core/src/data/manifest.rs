//! JSON dataset manifest.
//!
//! ```json
//! {
//!   "topology": "kit21",
//!   "entries": [
//!     {
//!       "motion_id": "00017",
//!       "path": "motions/00017.motr",
//!       "split": "train",
//!       "captions": [
//!         { "caption_id": "00017-0", "motion_id": "00017", "text": "a person walks forward" }
//!       ]
//!     }
//!   ]
//! }
//! ```
//!
//! `topology` is a preset name (`kit21`, `smpl22`) or an explicit
//! `{"part_map": ["torso", "left-arm", ...]}` with one entry per joint.
//! Motion paths are resolved relative to the manifest's directory.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codec::{read_file, write_file};
use crate::data::motion::{load_motion_as, SkeletonSequence};
use crate::data::topology::{BodyPart, SkeletonTopology};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub caption_id: String,
    pub motion_id: String,
    pub text: String,
}

impl CaptionRecord {
    pub fn new(
        caption_id: impl Into<String>,
        motion_id: impl Into<String>,
        text: impl Into<String>,
    ) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::Invalid("caption text is empty".into()));
        }
        Ok(CaptionRecord {
            caption_id: caption_id.into(),
            motion_id: motion_id.into(),
            text,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Invalid(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TopologySpec {
    Preset(String),
    Explicit { part_map: Vec<BodyPart> },
}

impl TopologySpec {
    pub fn resolve(&self) -> Result<SkeletonTopology> {
        match self {
            TopologySpec::Preset(name) => SkeletonTopology::preset(name),
            TopologySpec::Explicit { part_map } => SkeletonTopology::new(part_map.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub motion_id: String,
    pub path: PathBuf,
    pub split: Split,
    pub captions: Vec<CaptionRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub topology: TopologySpec,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Checks id uniqueness, caption ownership and caption text.
    pub fn validate(&self) -> Result<()> {
        self.topology.resolve()?;
        let mut motions = HashSet::new();
        let mut captions = HashSet::new();
        for e in &self.entries {
            if !motions.insert(e.motion_id.as_str()) {
                return Err(Error::DuplicateId(e.motion_id.clone()));
            }
            for c in &e.captions {
                if c.motion_id != e.motion_id {
                    return Err(Error::Invalid(format!(
                        "caption `{}` references motion `{}` but is listed under `{}`",
                        c.caption_id, c.motion_id, e.motion_id
                    )));
                }
                if c.text.trim().is_empty() {
                    return Err(Error::Invalid(format!("caption `{}` is empty", c.caption_id)));
                }
                if !captions.insert(c.caption_id.as_str()) {
                    return Err(Error::DuplicateId(c.caption_id.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let m: DatasetManifest = serde_json::from_slice(bytes)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_file(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_json()?)
    }

    pub fn captions(&self) -> impl Iterator<Item = &CaptionRecord> {
        self.entries.iter().flat_map(|e| e.captions.iter())
    }

    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }
}

/// A manifest with every motion loaded into memory.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub topology: SkeletonTopology,
    pub motions: BTreeMap<String, SkeletonSequence>,
}

impl Dataset {
    pub fn new(manifest: DatasetManifest, motions: Vec<SkeletonSequence>) -> Result<Self> {
        manifest.validate()?;
        let topology = manifest.topology.resolve()?;
        let mut by_id = BTreeMap::new();
        for m in motions {
            if m.joint_count() != topology.joint_count() {
                return Err(Error::Shape(format!(
                    "motion `{}` has {} joints, topology has {}",
                    m.motion_id,
                    m.joint_count(),
                    topology.joint_count()
                )));
            }
            let id = m.motion_id.clone();
            if by_id.insert(id.clone(), m).is_some() {
                return Err(Error::DuplicateId(id));
            }
        }
        for e in &manifest.entries {
            if !by_id.contains_key(&e.motion_id) {
                return Err(Error::UnknownId(e.motion_id.clone()));
            }
        }
        Ok(Dataset {
            manifest,
            topology,
            motions: by_id,
        })
    }

    /// Loads the manifest and every motion it references.
    pub fn load(manifest_path: &Path) -> Result<Self> {
        let manifest = DatasetManifest::load(manifest_path)?;
        let root = manifest_path.parent().unwrap_or(Path::new("."));
        let topology = manifest.topology.resolve()?;
        let motions = manifest
            .entries
            .iter()
            .map(|e| load_motion_as(&root.join(&e.path), e.motion_id.clone(), &topology))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(manifest, motions)
    }

    /// Writes the manifest and one `MOTR` file per motion under `dir`.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        for e in &self.manifest.entries {
            let path = dir.join(&e.path);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|err| Error::io(parent, err))?;
            }
            crate::data::motion::save_motion(&self.motions[&e.motion_id], &path)?;
        }
        let mpath = dir.join("manifest.json");
        self.manifest.save(&mpath)?;
        Ok(mpath)
    }

    pub fn captions(&self) -> Vec<CaptionRecord> {
        self.manifest.captions().cloned().collect()
    }

    /// Motion ids and captions restricted to one split.
    pub fn split(&self, split: Split) -> (Vec<String>, Vec<CaptionRecord>) {
        let entries: Vec<_> = self.manifest.in_split(split).collect();
        (
            entries.iter().map(|e| e.motion_id.clone()).collect(),
            entries.iter().flat_map(|e| e.captions.iter().cloned()).collect(),
        )
    }
}
