use std::collections::HashMap;
use std::io;
use std::path::Path;
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tradeoff_core::{Dataset, ScoredExample, ThresholdCurve};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHandle {
    pub id: String,
    pub name: String,
    pub n_total: usize,
    pub n_damaging: usize,
    pub created_at: DateTime<Utc>,
}

/// A stored dataset and its eagerly built curve. Never mutated.
#[derive(Debug)]
pub struct StoredDataset {
    pub handle: DatasetHandle,
    pub curve: ThresholdCurve,
}

/// In-memory dataset store: concurrent readers, exclusive inserts.
#[derive(Debug, Clone, Default)]
pub struct Store {
    inner: Arc<RwLock<HashMap<String, Arc<StoredDataset>>>>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotEntry {
    handle: DatasetHandle,
    examples: Vec<ScoredExample>,
}

impl Store {
    pub fn insert(&self, name: String, dataset: Dataset) -> tradeoff_core::Result<DatasetHandle> {
        let handle = DatasetHandle {
            id: uuid::Uuid::new_v4().simple().to_string(),
            name,
            n_total: dataset.n_total(),
            n_damaging: dataset.n_damaging(),
            created_at: Utc::now(),
        };
        self.insert_with_handle(handle.clone(), dataset)?;
        Ok(handle)
    }

    fn insert_with_handle(
        &self,
        handle: DatasetHandle,
        dataset: Dataset,
    ) -> tradeoff_core::Result<()> {
        let curve = ThresholdCurve::new(dataset)?;
        let stored = Arc::new(StoredDataset {
            handle: handle.clone(),
            curve,
        });
        self.inner
            .write()
            .expect("store lock poisoned")
            .insert(handle.id, stored);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<Arc<StoredDataset>> {
        self.inner
            .read()
            .expect("store lock poisoned")
            .get(id)
            .cloned()
    }

    /// Handles ordered by creation time.
    pub fn list(&self) -> Vec<DatasetHandle> {
        let mut v: Vec<DatasetHandle> = self
            .inner
            .read()
            .expect("store lock poisoned")
            .values()
            .map(|s| s.handle.clone())
            .collect();
        v.sort_by(|a, b| {
            a.created_at
                .cmp(&b.created_at)
                .then_with(|| a.id.cmp(&b.id))
        });
        v
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("store lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn save_snapshot(&self, path: &Path) -> io::Result<()> {
        let entries: Vec<SnapshotEntry> = self
            .list()
            .into_iter()
            .filter_map(|h| self.get(&h.id))
            .map(|s| SnapshotEntry {
                handle: s.handle.clone(),
                examples: s.curve.dataset().examples().to_vec(),
            })
            .collect();
        let json = serde_json::to_vec(&entries)?;
        std::fs::write(path, json)
    }

    /// Load a snapshot written by [`Store::save_snapshot`]; returns how many
    /// datasets were restored.
    pub fn load_snapshot(&self, path: &Path) -> io::Result<usize> {
        let bytes = std::fs::read(path)?;
        let entries: Vec<SnapshotEntry> = serde_json::from_slice(&bytes)?;
        let n = entries.len();
        for e in entries {
            let dataset = Dataset::new(e.examples)
                .map_err(|err| io::Error::new(io::ErrorKind::InvalidData, err.to_string()))?;
            self.insert_with_handle(e.handle, dataset)
                .map_err(|err| io::Error::new(io::ErrorKind::InvalidData, err.to_string()))?;
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tradeoff_core::Label;

    #[test]
    fn snapshot_round_trip() {
        let store = Store::default();
        let d = Dataset::from_pairs([(0.9, Label::Damaging), (0.2, Label::Good)]).unwrap();
        let h = store.insert("d".into(), d.clone()).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.json");
        store.save_snapshot(&path).unwrap();

        let restored = Store::default();
        assert_eq!(restored.load_snapshot(&path).unwrap(), 1);
        let s = restored.get(&h.id).unwrap();
        assert_eq!(s.handle, h);
        assert_eq!(s.curve.dataset(), &d);
    }

    #[test]
    fn ids_are_unique() {
        let store = Store::default();
        let d = Dataset::from_pairs([(0.5, Label::Good)]).unwrap();
        let a = store.insert("a".into(), d.clone()).unwrap();
        let b = store.insert("a".into(), d).unwrap();
        assert_ne!(a.id, b.id);
        assert_eq!(store.len(), 2);
    }
}
