//! Diversity metrics over replica populations.
//!
//! Shares are power-weighted and kept exact: a [`Distribution`] stores integer
//! weights over a common total, so every share is the rational
//! `weight / total` and optimality checks compare integers. Entropy is
//! evaluated in `f64` from those exact shares.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_rational::Ratio;
use thiserror::Error;

use crate::population::{validate_population, ComponentCategory, Population, ValidationReport};

/// Identity used by [`Grouping::ByComponent`] for replicas lacking the category.
pub const ABSENT: &str = "ABSENT";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error(transparent)]
    InvalidPopulation(#[from] ValidationReport),
    #[error("distribution has zero total weight")]
    ZeroTotal,
    #[error("distribution weights overflow u64")]
    WeightOverflow,
    #[error("duplicate identity `{0}` in distribution")]
    DuplicateIdentity(String),
    #[error("support size must be at least 1")]
    ZeroSupport,
    #[error("kappa must be at least 1")]
    ZeroKappa,
    #[error("omega must be at least 1")]
    ZeroOmega,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Grouping {
    ByConfiguration,
    ByOperator,
    ByComponent(ComponentCategory),
}

/// Normalized shares over distinct identities, stored as integer weights over
/// their exact sum. Entries are ordered by identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    entries: Vec<(String, u64)>,
    total: u64,
}

impl Distribution {
    pub fn from_weights<I, S>(weights: I) -> Result<Self, MetricError>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (id, w) in weights {
            match map.entry(id.into()) {
                Entry::Vacant(e) => {
                    e.insert(w);
                }
                Entry::Occupied(e) => return Err(MetricError::DuplicateIdentity(e.key().clone())),
            }
        }
        Self::from_map(map)
    }

    fn from_map(map: BTreeMap<String, u64>) -> Result<Self, MetricError> {
        let total = map
            .values()
            .try_fold(0u64, |acc, w| acc.checked_add(*w))
            .ok_or(MetricError::WeightOverflow)?;
        if total == 0 {
            return Err(MetricError::ZeroTotal);
        }
        Ok(Distribution {
            entries: map.into_iter().collect(),
            total,
        })
    }

    /// Number of entries, zero-share ones included.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of entries with a nonzero share.
    pub fn support_size(&self) -> usize {
        self.entries.iter().filter(|(_, w)| *w > 0).count()
    }

    pub fn total_weight(&self) -> u64 {
        self.total
    }

    pub fn weights(&self) -> impl Iterator<Item = (&str, u64)> + '_ {
        self.entries.iter().map(|(id, w)| (id.as_str(), *w))
    }

    pub fn shares(&self) -> impl Iterator<Item = (&str, Ratio<u64>)> + '_ {
        self.entries
            .iter()
            .map(|(id, w)| (id.as_str(), Ratio::new(*w, self.total)))
    }

    pub fn weight(&self, identity: &str) -> Option<u64> {
        self.entries
            .binary_search_by(|(id, _)| id.as_str().cmp(identity))
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn share(&self, identity: &str) -> Option<Ratio<u64>> {
        self.weight(identity).map(|w| Ratio::new(w, self.total))
    }
}

fn measurable(pop: &Population) -> Result<(), MetricError> {
    validate_population(pop).map_err(MetricError::from)
}

/// Power-weighted distribution of `pop` under `grouping`.
pub fn distribution_of(pop: &Population, grouping: Grouping) -> Result<Distribution, MetricError> {
    measurable(pop)?;
    let mut map: BTreeMap<String, u64> = BTreeMap::new();
    for r in pop {
        let key = match grouping {
            Grouping::ByConfiguration => r.configuration.digest().to_owned(),
            Grouping::ByOperator => r.operator_id.clone(),
            Grouping::ByComponent(category) => r
                .configuration
                .component(category)
                .map_or_else(|| ABSENT.to_owned(), |c| c.label()),
        };
        // validation guarantees the total fits, so partial sums do too
        *map.entry(key).or_default() += r.power.get();
    }
    Distribution::from_map(map)
}

/// Shannon entropy in bits. Zero shares contribute nothing.
pub fn entropy_bits(dist: &Distribution) -> f64 {
    let total = dist.total as f64;
    // Neumaier summation
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    for &(_, w) in &dist.entries {
        if w == 0 {
            continue;
        }
        let p = w as f64 / total;
        let term = -p * p.log2();
        let t = sum + term;
        if sum.abs() >= term.abs() {
            compensation += (sum - t) + term;
        } else {
            compensation += (term - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// Upper bound on entropy for a distribution with `support` nonzero entries.
pub fn max_entropy_bits(support: usize) -> Result<f64, MetricError> {
    if support == 0 {
        return Err(MetricError::ZeroSupport);
    }
    Ok((support as f64).log2())
}

/// Exactly `kappa` nonzero shares, all equal.
pub fn is_kappa_optimal(dist: &Distribution, kappa: usize) -> Result<bool, MetricError> {
    if kappa == 0 {
        return Err(MetricError::ZeroKappa);
    }
    let mut nonzero = dist.entries.iter().map(|(_, w)| *w).filter(|w| *w > 0);
    let Some(first) = nonzero.next() else {
        return Ok(false);
    };
    let mut count = 1;
    for w in nonzero {
        if w != first {
            return Ok(false);
        }
        count += 1;
    }
    Ok(count == kappa)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbundanceEntry {
    /// Configuration digest.
    pub identity: String,
    pub replica_count: usize,
    pub power: u64,
}

/// Replica counts (configuration abundance) and power shares (relative
/// configuration abundance) per configuration, ordered by digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbundanceReport {
    pub entries: Vec<AbundanceEntry>,
    pub total_power: u64,
}

impl AbundanceReport {
    pub fn total_configurations(&self) -> usize {
        self.entries.len()
    }

    pub fn total_replicas(&self) -> usize {
        self.entries.iter().map(|e| e.replica_count).sum()
    }

    pub fn power_share(&self, entry: &AbundanceEntry) -> Ratio<u64> {
        Ratio::new(entry.power, self.total_power)
    }
}

pub fn abundance_report(pop: &Population) -> Result<AbundanceReport, MetricError> {
    measurable(pop)?;
    let mut map: BTreeMap<&str, (usize, u64)> = BTreeMap::new();
    for r in pop {
        let e = map.entry(r.configuration.digest()).or_default();
        e.0 += 1;
        e.1 += r.power.get();
    }
    Ok(AbundanceReport {
        entries: map
            .into_iter()
            .map(|(id, (replica_count, power))| AbundanceEntry {
                identity: id.to_owned(),
                replica_count,
                power,
            })
            .collect(),
        total_power: pop.total_power().get(),
    })
}

/// κ-optimal by configuration, with exactly `omega` replicas in every
/// configuration that holds power.
pub fn is_kappa_omega_optimal(
    pop: &Population,
    kappa: usize,
    omega: usize,
) -> Result<bool, MetricError> {
    if kappa == 0 {
        return Err(MetricError::ZeroKappa);
    }
    if omega == 0 {
        return Err(MetricError::ZeroOmega);
    }
    let dist = distribution_of(pop, Grouping::ByConfiguration)?;
    if !is_kappa_optimal(&dist, kappa)? {
        return Ok(false);
    }
    let report = abundance_report(pop)?;
    Ok(report
        .entries
        .iter()
        .filter(|e| e.power > 0)
        .all(|e| e.replica_count == omega))
}

/// Relabels identities through `mapping`, summing the weights of identities
/// that land on the same label.
pub fn merge_groups<F>(dist: &Distribution, mut mapping: F) -> Distribution
where
    F: FnMut(&str) -> String,
{
    let mut map: BTreeMap<String, u64> = BTreeMap::new();
    for (id, w) in &dist.entries {
        *map.entry(mapping(id)).or_default() += *w;
    }
    Distribution {
        entries: map.into_iter().collect(),
        total: dist.total,
    }
}
