use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Mode, Session, SynthTarget, TrainParams};
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::models::{MlpModel, RegressionSet};

pub const MAPPING_FORMAT: &str = "gesmap-mapping";
pub const MAPPING_FORMAT_VERSION: u32 = 1;

/// Where a mapping came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub mode: Mode,
    /// Hash of the agent state at save time (AIML only).
    pub agent_state: Option<String>,
    /// Proposal the model was trained on (AIML only).
    pub proposal: Option<u64>,
    pub loaded_from: Option<String>,
}

/// A saved mapping: everything needed to run it again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingRecord {
    pub format: String,
    pub version: u32,
    pub id: String,
    pub session_id: String,
    pub created_at: u64,
    pub features: FeatureConfig,
    pub input_names: Vec<String>,
    pub target: SynthTarget,
    pub corpus: Option<PathBuf>,
    pub presets: Vec<Vec<f64>>,
    pub train: TrainParams,
    pub model: MlpModel,
    pub examples: Option<RegressionSet>,
    pub provenance: Provenance,
}

impl MappingRecord {
    pub fn check_version(&self) -> Result<()> {
        if self.format != MAPPING_FORMAT {
            return Err(Error::UnsupportedFormat(format!(
                "`{}` is not a mapping record",
                self.format
            )));
        }
        if self.version != MAPPING_FORMAT_VERSION {
            return Err(Error::Version {
                found: self.version,
                expected: MAPPING_FORMAT_VERSION,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mapping records serialize")
    }

    /// Parses a record, checking the format tag and version before the body.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("format").and_then(|f| f.as_str()) != Some(MAPPING_FORMAT) {
            return Err(Error::UnsupportedFormat("not a mapping record".into()));
        }
        let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != MAPPING_FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: MAPPING_FORMAT_VERSION,
            });
        }
        Ok(serde_json::from_value(value)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub session_id: String,
    pub created_at: u64,
    pub mode: Mode,
}

/// Flat-file persistence: `mappings/<id>.json` with an `index.json`
/// listing them, and `sessions/<id>.json` for live session snapshots.
#[derive(Debug, Clone)]
pub struct MappingStore {
    root: PathBuf,
}

fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::param(format!(
            "`{id}` is not a valid identifier (letters, digits, - _ .)"
        )))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

impl MappingStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(root.join("mappings"))?;
        std::fs::create_dir_all(root.join("sessions"))?;
        Ok(MappingStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.json")
    }

    pub fn list(&self) -> Result<Vec<IndexEntry>> {
        match std::fs::read_to_string(self.index_path()) {
            Ok(text) => Ok(serde_json::from_str(&text)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes the record and updates the index, replacing any record with
    /// the same id.
    pub fn put(&self, record: &MappingRecord) -> Result<PathBuf> {
        check_id(&record.id)?;
        let path = self
            .root
            .join("mappings")
            .join(format!("{}.json", record.id));
        write_atomic(&path, record.to_json().as_bytes())?;
        let mut index = self.list()?;
        index.retain(|e| e.id != record.id);
        index.push(IndexEntry {
            id: record.id.clone(),
            session_id: record.session_id.clone(),
            created_at: record.created_at,
            mode: record.provenance.mode,
        });
        index.sort_by(|a, b| a.id.cmp(&b.id));
        write_atomic(
            &self.index_path(),
            serde_json::to_string_pretty(&index)?.as_bytes(),
        )?;
        Ok(path)
    }

    pub fn get(&self, id: &str) -> Result<MappingRecord> {
        check_id(id)?;
        let path = self.root.join("mappings").join(format!("{id}.json"));
        match std::fs::read_to_string(&path) {
            Ok(text) => MappingRecord::from_json(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Err(Error::Registry(format!("no mapping `{id}`")))
            }
            Err(e) => Err(e.into()),
        }
    }

    pub fn save_session(&self, session: &Session) -> Result<PathBuf> {
        check_id(session.id())?;
        let path = self
            .root
            .join("sessions")
            .join(format!("{}.json", session.id()));
        write_atomic(&path, serde_json::to_string(session)?.as_bytes())?;
        Ok(path)
    }

    /// Every persisted session, in id order. Corpora are reloaded from
    /// their configured paths.
    pub fn load_sessions(&self) -> Result<Vec<Session>> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(self.root.join("sessions"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut out = Vec::with_capacity(paths.len());
        for p in paths {
            let mut s: Session = serde_json::from_str(&std::fs::read_to_string(&p)?)?;
            if let Some(c) = s.config.corpus.clone() {
                s.attach_corpus(std::sync::Arc::new(crate::corpus::Corpus::load(&c)?));
            }
            out.push(s);
        }
        Ok(out)
    }
}
