//! File-backed persistence. Layout under the state directory:
//! `designs/<id>.json`, `jobs/<id>.json` and `results/<content id>.json`.

use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stacksim::design::DesignDocument;

use crate::output::RunOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Simulate,
    Sweep,
}

impl JobKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JobKind::Simulate => "simulate",
            JobKind::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_finished(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub id: String,
    pub revision: u64,
    /// Unix seconds.
    pub created: u64,
    pub modified: u64,
    pub document: DesignDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub design_id: String,
    /// Design revision the job was submitted against.
    pub design_revision: u64,
    pub kind: JobKind,
    pub state: JobState,
    /// Fraction in `[0, 1]`, never decreasing.
    pub progress: f64,
    pub result_id: Option<String>,
    pub error: Option<String>,
    pub created: u64,
    pub updated: u64,
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Hex SHA-256 over the job kind and the canonical JSON of the document.
pub fn content_id(kind: JobKind, document: &DesignDocument) -> String {
    let mut h = Sha256::new();
    h.update(kind.as_str().as_bytes());
    h.update([0]);
    h.update(serde_json::to_vec(document).expect("documents serialize"));
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

fn is_safe_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}

impl Store {
    /// Creates the layout if needed and checks that it is writable.
    pub fn open(root: &Path) -> io::Result<Store> {
        for sub in ["designs", "jobs", "results"] {
            std::fs::create_dir_all(root.join(sub))?;
        }
        let probe = root.join(".write-probe");
        std::fs::write(&probe, b"")?;
        std::fs::remove_file(probe)?;
        Ok(Store { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, dir: &str, id: &str) -> Option<PathBuf> {
        is_safe_id(id).then(|| self.root.join(dir).join(format!("{id}.json")))
    }

    fn write<T: Serialize>(&self, dir: &str, id: &str, value: &T) -> io::Result<()> {
        let path = self.path(dir, id).ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "bad id"))?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(value).map_err(io::Error::other)?)?;
        std::fs::rename(tmp, path)
    }

    fn read<T: DeserializeOwned>(&self, dir: &str, id: &str) -> io::Result<Option<T>> {
        let Some(path) = self.path(dir, id) else { return Ok(None) };
        match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map(Some).map_err(io::Error::other),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn read_all<T: DeserializeOwned>(&self, dir: &str) -> io::Result<Vec<T>> {
        let mut out = Vec::new();
        for entry in std::fs::read_dir(self.root.join(dir))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                out.push(serde_json::from_slice(&std::fs::read(&path)?).map_err(io::Error::other)?);
            }
        }
        Ok(out)
    }

    pub fn save_design(&self, rec: &DesignRecord) -> io::Result<()> {
        self.write("designs", &rec.id, rec)
    }

    pub fn design(&self, id: &str) -> io::Result<Option<DesignRecord>> {
        self.read("designs", id)
    }

    pub fn save_job(&self, rec: &JobRecord) -> io::Result<()> {
        self.write("jobs", &rec.id, rec)
    }

    pub fn job(&self, id: &str) -> io::Result<Option<JobRecord>> {
        self.read("jobs", id)
    }

    pub fn jobs(&self) -> io::Result<Vec<JobRecord>> {
        self.read_all("jobs")
    }

    pub fn save_result(&self, content_id: &str, out: &RunOutput) -> io::Result<()> {
        self.write("results", content_id, out)
    }

    pub fn result(&self, content_id: &str) -> io::Result<Option<RunOutput>> {
        self.read("results", content_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_id_depends_on_kind_and_document() {
        let a = DesignDocument { stack: "x".into(), ..Default::default() };
        let b = DesignDocument { stack: "y".into(), ..Default::default() };
        assert_eq!(content_id(JobKind::Simulate, &a), content_id(JobKind::Simulate, &a.clone()));
        assert_ne!(content_id(JobKind::Simulate, &a), content_id(JobKind::Sweep, &a));
        assert_ne!(content_id(JobKind::Simulate, &a), content_id(JobKind::Simulate, &b));
        assert_eq!(content_id(JobKind::Sweep, &a).len(), 64);
    }

    #[test]
    fn records_round_trip_and_reject_path_ids() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let rec = DesignRecord { id: "abc-1".into(), revision: 1, created: 5, modified: 5, document: Default::default() };
        store.save_design(&rec).unwrap();
        assert_eq!(store.design("abc-1").unwrap(), Some(rec));
        assert_eq!(store.design("missing").unwrap(), None);
        assert_eq!(store.design("../designs/abc-1").unwrap(), None);
    }
}
