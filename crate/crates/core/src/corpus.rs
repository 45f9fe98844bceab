//! Document stores loaded from JSON Lines files or directories.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::index::TreeId;
use crate::tree::{parse_document, JsonTree};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path} holds more documents than tree ids can address")]
    TooManyDocuments { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestFailure {
    pub id: TreeId,
    /// 1-based line number, or 0 for directory inputs.
    pub line: usize,
    pub file: Option<PathBuf>,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct Document {
    pub id: TreeId,
    pub text: String,
    pub tree: JsonTree,
}

#[derive(Debug, Clone, Default)]
pub struct CorpusStore {
    source: Option<PathBuf>,
    /// Sorted by id; ids of failed lines are absent.
    docs: Vec<Document>,
    failures: Vec<IngestFailure>,
    /// Number of ids handed out, including failures.
    slots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub documents: usize,
    pub failures: usize,
    pub nodes: usize,
}

impl CorpusStore {
    /// Builds a store from in-memory documents; ids follow iteration order.
    pub fn from_texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut store = CorpusStore::default();
        for text in texts {
            store.push(text.into(), 0, None);
        }
        store
    }

    /// Loads a JSON Lines file (id = 0-based line number) or a directory of
    /// `.json` files (ids by sorted file name). Malformed documents are
    /// recorded as failures and keep their id slot.
    pub fn ingest(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let io_err = |source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        };
        let meta = fs::metadata(path).map_err(io_err)?;
        let mut store = CorpusStore {
            source: Some(path.to_path_buf()),
            ..CorpusStore::default()
        };
        if meta.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(path)
                .map_err(io_err)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
            for file in files {
                let text = fs::read_to_string(&file).map_err(|source| CorpusError::Io {
                    path: file.clone(),
                    source,
                })?;
                store.push(text, 0, Some(file));
            }
        } else {
            let text = fs::read_to_string(path).map_err(io_err)?;
            for (i, line) in text.lines().enumerate() {
                store.push(line.to_string(), i + 1, None);
            }
        }
        if store.slots > TreeId::MAX as usize {
            return Err(CorpusError::TooManyDocuments {
                path: path.to_path_buf(),
            });
        }
        Ok(store)
    }

    fn push(&mut self, text: String, line: usize, file: Option<PathBuf>) {
        let id = self.slots as TreeId;
        self.slots += 1;
        match parse_document(&text) {
            Ok(tree) => self.docs.push(Document { id, text, tree }),
            Err(e) => self.failures.push(IngestFailure {
                id,
                line,
                file,
                message: e.to_string(),
            }),
        }
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    /// Number of parsed documents.
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn failures(&self) -> &[IngestFailure] {
        &self.failures
    }

    pub fn summary(&self) -> IngestSummary {
        IngestSummary {
            documents: self.docs.len(),
            failures: self.failures.len(),
            nodes: self.docs.iter().map(|d| d.tree.len()).sum(),
        }
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn document(&self, id: TreeId) -> Option<&Document> {
        self.docs
            .binary_search_by_key(&id, |d| d.id)
            .ok()
            .map(|i| &self.docs[i])
    }

    pub fn tree(&self, id: TreeId) -> Option<&JsonTree> {
        self.document(id).map(|d| &d.tree)
    }

    pub fn ids(&self) -> impl Iterator<Item = TreeId> + '_ {
        self.docs.iter().map(|d| d.id)
    }

    /// The document at the `pct`-th percentile of tree size (nearest rank,
    /// ties by id).
    pub fn size_quantile(&self, pct: f64) -> Option<TreeId> {
        if self.docs.is_empty() {
            return None;
        }
        let mut by_size: Vec<(usize, TreeId)> =
            self.docs.iter().map(|d| (d.tree.len(), d.id)).collect();
        by_size.sort_unstable();
        let n = by_size.len();
        let rank = ((pct.clamp(0.0, 100.0) / 100.0) * n as f64).ceil() as usize;
        Some(by_size[rank.clamp(1, n) - 1].1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_ingest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        fs::write(&path, "{\"a\": 1}\n{oops\n[1, 2]\n").unwrap();
        let store = CorpusStore::ingest(&path).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.failures().len(), 1);
        assert_eq!(store.failures()[0].line, 2);
        assert_eq!(store.failures()[0].id, 1);
        assert_eq!(store.ids().collect::<Vec<_>>(), vec![0, 2]);
        assert!(store.tree(1).is_none());
        assert_eq!(store.tree(2).unwrap().len(), 3);
    }

    #[test]
    fn directory_ids_by_name() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.json"), "[1]").unwrap();
        fs::write(dir.path().join("a.json"), "{}").unwrap();
        fs::write(dir.path().join("notes.txt"), "skip").unwrap();
        let store = CorpusStore::ingest(dir.path()).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.tree(0).unwrap().len(), 1);
        assert_eq!(store.tree(1).unwrap().len(), 2);
    }

    #[test]
    fn unreadable_path() {
        assert!(matches!(
            CorpusStore::ingest("/nonexistent/corpus.jsonl"),
            Err(CorpusError::Io { .. })
        ));
    }

    #[test]
    fn quantiles() {
        let store = CorpusStore::from_texts(["[1,2,3]", "1", "[1]", "[[1],[2]]"]);
        assert_eq!(store.size_quantile(25.0), Some(1));
        assert_eq!(store.size_quantile(50.0), Some(2));
        assert_eq!(store.size_quantile(75.0), Some(0));
        assert_eq!(store.size_quantile(100.0), Some(3));
        assert_eq!(CorpusStore::default().size_quantile(50.0), None);
    }
}
