//! Simulated configuration discovery.
//!
//! Replicas register attested configurations per epoch; records are taken as
//! authentic. The registry answers point-in-time snapshots and publishes
//! configuration distributions with small groups folded into [`OTHER`] so that
//! rare configurations are not singled out.
//!
//! State persists as an epoch log, one JSON object per line:
//! `{"epoch":0,"replica":{...}}` where `replica` uses the population document
//! replica schema.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{from_json, IngestError, ReplicaDoc};
use crate::metrics::{distribution_of, merge_groups, Distribution, Grouping, MetricError};
use crate::population::{Configuration, Population, PowerUnits, Replica};

/// Identity receiving every configuration group below the publication threshold.
pub const OTHER: &str = "OTHER";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("replica `{replica_id}` registered conflicting records at epoch {epoch}")]
    Equivocation { replica_id: String, epoch: u64 },
    #[error("attestation record has an empty {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("log line {line}: {source}")]
    Log {
        line: usize,
        source: Box<RegistryError>,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttestationRecord {
    pub replica_id: String,
    pub operator_id: String,
    pub configuration: Arc<Configuration>,
    pub power: PowerUnits,
    pub epoch: u64,
}

impl AttestationRecord {
    pub fn from_replica(replica: &Replica, epoch: u64) -> Self {
        AttestationRecord {
            replica_id: replica.id.clone(),
            operator_id: replica.operator_id.clone(),
            configuration: replica.configuration.clone(),
            power: replica.power,
            epoch,
        }
    }

    fn to_replica(&self) -> Replica {
        Replica::new(
            &self.replica_id,
            &self.operator_id,
            self.configuration.clone(),
            self.power,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ack {
    Stored,
    /// Identical record already present.
    Unchanged,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistrySnapshot {
    pub epoch: u64,
    /// Latest record at or before `epoch` for every replica. May be empty or
    /// have zero power; metric operations reject such snapshots.
    pub population: Population,
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    records: BTreeMap<String, BTreeMap<u64, AttestationRecord>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogLine {
    epoch: u64,
    replica: ReplicaDoc,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn register(&mut self, record: AttestationRecord) -> Result<Ack, RegistryError> {
        if record.replica_id.is_empty() {
            return Err(RegistryError::Malformed("replica id"));
        }
        if record.operator_id.is_empty() {
            return Err(RegistryError::Malformed("operator id"));
        }
        let history = self.records.entry(record.replica_id.clone()).or_default();
        match history.get(&record.epoch) {
            Some(existing) if *existing == record => Ok(Ack::Unchanged),
            Some(_) => Err(RegistryError::Equivocation {
                replica_id: record.replica_id,
                epoch: record.epoch,
            }),
            None => {
                history.insert(record.epoch, record);
                Ok(Ack::Stored)
            }
        }
    }

    pub fn snapshot(&self, epoch: u64) -> RegistrySnapshot {
        let replicas = self
            .records
            .values()
            .filter_map(|history| history.range(..=epoch).next_back())
            .map(|(_, record)| record.to_replica())
            .collect();
        RegistrySnapshot {
            epoch,
            population: Population::from_replicas(replicas),
        }
    }

    /// By-configuration distribution at `epoch` with every configuration whose
    /// share is below `min_group_share` merged into [`OTHER`]. Published
    /// identities are configuration digests.
    pub fn anonymized_distribution(
        &self,
        epoch: u64,
        min_group_share: Ratio<u64>,
    ) -> Result<Distribution, RegistryError> {
        let snapshot = self.snapshot(epoch);
        let dist = distribution_of(&snapshot.population, Grouping::ByConfiguration)?;
        Ok(anonymize(&dist, min_group_share))
    }

    pub fn latest_epoch(&self) -> Option<u64> {
        self.records
            .values()
            .filter_map(|h| h.keys().next_back().copied())
            .max()
    }

    /// All records, ordered by epoch then replica id.
    pub fn records(&self) -> Vec<&AttestationRecord> {
        let mut all: Vec<_> = self.records.values().flat_map(|h| h.values()).collect();
        all.sort_by(|a, b| a.epoch.cmp(&b.epoch).then(a.replica_id.cmp(&b.replica_id)));
        all
    }

    /// Replays an epoch log. Blank lines are ignored.
    pub fn from_log(text: &str) -> Result<Self, RegistryError> {
        let mut registry = Registry::new();
        let mut interned: HashMap<String, Arc<Configuration>> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let wrap = |e: RegistryError| RegistryError::Log {
                line,
                source: Box::new(e),
            };
            let entry: LogLine = from_json(raw).map_err(|e| wrap(e.into()))?;
            let replica = entry
                .replica
                .into_replica("replica", &mut interned)
                .map_err(|e| wrap(e.into()))?;
            registry
                .register(AttestationRecord::from_replica(&replica, entry.epoch))
                .map_err(wrap)?;
        }
        Ok(registry)
    }

    pub fn log_line(record: &AttestationRecord) -> String {
        let line = LogLine {
            epoch: record.epoch,
            replica: ReplicaDoc::from_replica(&record.to_replica()),
        };
        serde_json::to_string(&line).expect("plain data serializes")
    }

    /// The whole log, one line per record.
    pub fn to_log(&self) -> String {
        self.records()
            .into_iter()
            .map(|r| Registry::log_line(r) + "\n")
            .collect()
    }
}

/// Folds every identity whose share is below `min_group_share` into [`OTHER`].
pub fn anonymize(dist: &Distribution, min_group_share: Ratio<u64>) -> Distribution {
    let total = dist.total_weight() as u128;
    let (num, den) = (
        *min_group_share.numer() as u128,
        *min_group_share.denom() as u128,
    );
    merge_groups(dist, |id| {
        let w = dist.weight(id).unwrap_or(0) as u128;
        if w * den < num * total {
            OTHER.to_owned()
        } else {
            id.to_owned()
        }
    })
}

/// A registry behind a lock: registrations are serialized, snapshots are
/// owned point-in-time copies that never observe later writes.
#[derive(Debug, Default)]
pub struct SharedRegistry {
    inner: RwLock<Registry>,
}

impl SharedRegistry {
    pub fn new(registry: Registry) -> Self {
        SharedRegistry {
            inner: RwLock::new(registry),
        }
    }

    pub fn register(&self, record: AttestationRecord) -> Result<Ack, RegistryError> {
        self.inner
            .write()
            .expect("registry lock poisoned")
            .register(record)
    }

    pub fn snapshot(&self, epoch: u64) -> RegistrySnapshot {
        self.inner
            .read()
            .expect("registry lock poisoned")
            .snapshot(epoch)
    }

    pub fn anonymized_distribution(
        &self,
        epoch: u64,
        min_group_share: Ratio<u64>,
    ) -> Result<Distribution, RegistryError> {
        self.inner
            .read()
            .expect("registry lock poisoned")
            .anonymized_distribution(epoch, min_group_share)
    }
}
