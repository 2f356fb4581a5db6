use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use super::Observation;
use crate::canonical::{canonical_value, sha256_hex};

/// Digest of the tool name followed by the canonical serialization of `args`.
pub fn cache_fingerprint(tool: &str, args: &Value) -> String {
    let mut bytes = tool.as_bytes().to_vec();
    bytes.push(0);
    bytes.extend_from_slice(canonical_value(args).as_bytes());
    sha256_hex(&bytes)
}

#[derive(Debug, Clone)]
struct Entry {
    observation: Observation,
    bundles: BTreeSet<String>,
}

/// Per-session memo of successful tool results.
///
/// Each entry remembers which bundle references it read or wrote; a later call
/// that mutates one of those bundles evicts the entry.
#[derive(Debug, Clone, Default)]
pub struct ExecutionCache {
    entries: BTreeMap<String, Entry>,
    derived_artifacts: BTreeMap<String, String>,
    pub hits: usize,
    pub misses: usize,
}

impl ExecutionCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&mut self, fingerprint: &str) -> Option<Observation> {
        match self.entries.get(fingerprint) {
            Some(e) => {
                self.hits += 1;
                Some(e.observation.clone())
            }
            None => {
                self.misses += 1;
                None
            }
        }
    }

    /// Evicts entries touching any of `mutated`, then stores the new entry.
    pub fn insert(&mut self, fingerprint: String, observation: Observation, reads: BTreeSet<String>, mutated: &BTreeSet<String>) {
        if !mutated.is_empty() {
            self.entries.retain(|_, e| e.bundles.is_disjoint(mutated));
        }
        let mut bundles = reads;
        bundles.extend(mutated.iter().cloned());
        self.entries.insert(fingerprint, Entry { observation, bundles });
    }

    pub fn register_artifact(&mut self, layer: &str, bundle: &str) {
        self.derived_artifacts.insert(layer.to_owned(), bundle.to_owned());
    }

    pub fn derived_artifacts(&self) -> &BTreeMap<String, String> {
        &self.derived_artifacts
    }
}
