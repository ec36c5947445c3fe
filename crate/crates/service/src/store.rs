use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use gamesys_core::design::{load_design, GameDesign};
use serde::{Deserialize, Serialize};

/// A design at rest. Only valid designs are ever stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredDesign {
    pub id: String,
    pub name: String,
    /// 1 on creation, bumped by every update.
    pub revision: u64,
    pub design: GameDesign,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("no design with id `{0}`")]
    NotFound(String),
    #[error("design `{id}` is at revision {current}, not {expected}")]
    RevisionConflict { id: String, expected: u64, current: u64 },
    #[error("design store i/o failed: {0}")]
    Io(#[from] io::Error),
}

/// Designs kept in memory and written through to one JSON file each.
///
/// All mutations go through one lock, so updates to a design are
/// serialized and a stale revision is always detected.
pub struct DesignStore {
    dir: PathBuf,
    designs: Mutex<BTreeMap<String, StoredDesign>>,
}

impl DesignStore {
    /// Opens `dir`, creating it if needed and loading every stored design.
    /// Files that no longer parse as valid designs are skipped.
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut designs = BTreeMap::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                if let Some(stored) = read_stored(&path) {
                    designs.insert(stored.id.clone(), stored);
                }
            }
        }
        Ok(DesignStore { dir, designs: Mutex::new(designs) })
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    fn persist(&self, stored: &StoredDesign) -> io::Result<()> {
        let text = serde_json::to_string_pretty(stored).expect("stored designs serialize");
        let tmp = self.dir.join(format!(".{}.tmp", stored.id));
        fs::write(&tmp, text)?;
        fs::rename(tmp, self.path(&stored.id))
    }

    pub fn list(&self) -> Vec<StoredDesign> {
        self.designs.lock().unwrap().values().cloned().collect()
    }

    pub fn get(&self, id: &str) -> Option<StoredDesign> {
        self.designs.lock().unwrap().get(id).cloned()
    }

    pub fn create(&self, design: GameDesign) -> Result<StoredDesign, StoreError> {
        let stored = StoredDesign {
            id: uuid::Uuid::new_v4().simple().to_string(),
            name: design.name.clone(),
            revision: 1,
            design,
        };
        let mut designs = self.designs.lock().unwrap();
        self.persist(&stored)?;
        designs.insert(stored.id.clone(), stored.clone());
        Ok(stored)
    }

    /// Replaces the design. With `expected` set, fails unless the stored
    /// revision still matches it.
    pub fn update(
        &self,
        id: &str,
        design: GameDesign,
        expected: Option<u64>,
    ) -> Result<StoredDesign, StoreError> {
        let mut designs = self.designs.lock().unwrap();
        let current = designs.get(id).ok_or_else(|| StoreError::NotFound(id.to_string()))?;
        if let Some(expected) = expected {
            if expected != current.revision {
                return Err(StoreError::RevisionConflict {
                    id: id.to_string(),
                    expected,
                    current: current.revision,
                });
            }
        }
        let stored = StoredDesign {
            id: id.to_string(),
            name: design.name.clone(),
            revision: current.revision + 1,
            design,
        };
        self.persist(&stored)?;
        designs.insert(id.to_string(), stored.clone());
        Ok(stored)
    }

    /// Removes the design if present. Deleting twice is not an error.
    pub fn delete(&self, id: &str) -> Result<(), StoreError> {
        let mut designs = self.designs.lock().unwrap();
        if designs.remove(id).is_some() {
            match fs::remove_file(self.path(id)) {
                Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e.into()),
                _ => {}
            }
        }
        Ok(())
    }
}

fn read_stored(path: &Path) -> Option<StoredDesign> {
    let text = fs::read_to_string(path).ok()?;
    let stored: StoredDesign = serde_json::from_str(&text).ok()?;
    // Re-validate through the file format so nothing invalid is served.
    let design_text = serde_json::to_string(&stored.design).ok()?;
    load_design(&design_text).ok()?;
    Some(stored)
}
