//! Directory-backed profile store: one checksummed JSON document per account.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::BehavioralProfile;

pub const PROFILE_FORMAT_VERSION: u32 = 1;

const PROFILE_DIR: &str = "profiles";
const APPLICATIONS_FILE: &str = "applications.json";

#[derive(Serialize, Deserialize)]
struct ProfileDocument {
    format_version: u32,
    checksum: String,
    profile: BehavioralProfile,
}

#[derive(Debug, Clone)]
pub struct ProfileStore {
    root: PathBuf,
}

fn checksum(profile: &BehavioralProfile) -> Result<String> {
    let bytes = serde_json::to_vec(profile)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl ProfileStore {
    /// Opens (and creates if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let dir = root.join(PROFILE_DIR);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(ProfileStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Where the application registry is persisted.
    pub fn applications_path(&self) -> PathBuf {
        self.root.join(APPLICATIONS_FILE)
    }

    fn path_for(&self, account_id: &str) -> PathBuf {
        self.root
            .join(PROFILE_DIR)
            .join(format!("{}.json", hex::encode(account_id.as_bytes())))
    }

    /// Writes the profile; a concurrent save for the same account wins or
    /// loses as a whole (write-then-rename).
    pub fn save(&self, profile: &BehavioralProfile) -> Result<PathBuf> {
        let doc = ProfileDocument {
            format_version: PROFILE_FORMAT_VERSION,
            checksum: checksum(profile)?,
            profile: profile.clone(),
        };
        let path = self.path_for(&profile.account_id);
        write_atomic(&path, &serde_json::to_vec_pretty(&doc)?)?;
        Ok(path)
    }

    pub fn load(&self, account_id: &str) -> Result<BehavioralProfile> {
        let path = self.path_for(account_id);
        let raw = match fs::read(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == ErrorKind::NotFound => {
                return Err(Error::NotFound(account_id.to_string()))
            }
            Err(e) => return Err(Error::io(&path, e)),
        };
        let corrupt = |reason: String| Error::CorruptProfile {
            path: path.clone(),
            reason,
        };
        let doc: ProfileDocument =
            serde_json::from_slice(&raw).map_err(|e| corrupt(e.to_string()))?;
        if doc.format_version != PROFILE_FORMAT_VERSION {
            return Err(corrupt(format!(
                "unsupported format version {}",
                doc.format_version
            )));
        }
        if checksum(&doc.profile)? != doc.checksum {
            return Err(corrupt("checksum mismatch".into()));
        }
        if doc.profile.account_id != account_id {
            return Err(corrupt(format!(
                "document belongs to {}",
                doc.profile.account_id
            )));
        }
        Ok(doc.profile)
    }

    /// Account ids with a stored profile, sorted.
    pub fn accounts(&self) -> Result<Vec<String>> {
        let dir = self.root.join(PROFILE_DIR);
        let mut ids = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let path = entry.map_err(|e| Error::io(&dir, e))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let decoded = path
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| hex::decode(s).ok())
                .and_then(|b| String::from_utf8(b).ok());
            if let Some(id) = decoded {
                ids.push(id);
            }
        }
        ids.sort();
        Ok(ids)
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let tmp = path.with_extension(format!(
        "tmp.{}.{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
