//! Replica populations.
//!
//! A [`Population`] is a snapshot of every participant holding voting power at
//! one point in time. Each [`Replica`] runs a [`Configuration`], a set of at most
//! one [`Component`] per [`ComponentCategory`], and configurations are identified
//! by a SHA-256 digest of their canonical encoding.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Integer voting power.
///
/// `u64` holds the total of 10^6 replicas at 10^9 units each with four orders
/// of magnitude to spare. Population totals are still summed with overflow
/// checks.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct PowerUnits(pub u64);

impl PowerUnits {
    pub const ZERO: PowerUnits = PowerUnits(0);

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn checked_add(self, other: PowerUnits) -> Option<PowerUnits> {
        self.0.checked_add(other.0).map(PowerUnits)
    }
}

impl fmt::Display for PowerUnits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for PowerUnits {
    fn from(value: u64) -> Self {
        PowerUnits(value)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PopulationError {
    #[error("configuration has no components")]
    EmptyConfiguration,
    #[error("configuration has more than one `{0}` component")]
    DuplicateCategory(ComponentCategory),
    #[error("component {field} must not be empty")]
    EmptyComponentField { field: &'static str },
    #[error("unknown component category `{0}`, expected one of: trusted_hardware, system_software, application_wallet, application_consensus")]
    UnknownCategory(String),
}

/// The layers of a replica's stack that can carry a shared fault.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentCategory {
    TrustedHardware,
    SystemSoftware,
    ApplicationWallet,
    ApplicationConsensus,
}

impl ComponentCategory {
    pub const ALL: [ComponentCategory; 4] = [
        ComponentCategory::TrustedHardware,
        ComponentCategory::SystemSoftware,
        ComponentCategory::ApplicationWallet,
        ComponentCategory::ApplicationConsensus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ComponentCategory::TrustedHardware => "trusted_hardware",
            ComponentCategory::SystemSoftware => "system_software",
            ComponentCategory::ApplicationWallet => "application_wallet",
            ComponentCategory::ApplicationConsensus => "application_consensus",
        }
    }
}

impl fmt::Display for ComponentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ComponentCategory {
    type Err = PopulationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ComponentCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| PopulationError::UnknownCategory(s.to_owned()))
    }
}

/// One concrete piece of a replica's stack, e.g. `system_software linux 6.1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Component {
    category: ComponentCategory,
    id: String,
    version: String,
}

impl Component {
    pub fn new(
        category: ComponentCategory,
        id: impl Into<String>,
        version: impl Into<String>,
    ) -> Result<Self, PopulationError> {
        let id = id.into();
        let version = version.into();
        if id.is_empty() {
            return Err(PopulationError::EmptyComponentField { field: "id" });
        }
        if version.is_empty() {
            return Err(PopulationError::EmptyComponentField { field: "version" });
        }
        Ok(Component {
            category,
            id,
            version,
        })
    }

    pub fn category(&self) -> ComponentCategory {
        self.category
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// `id@version`, the label used when grouping by a single category.
    pub fn label(&self) -> String {
        format!("{}@{}", self.id, self.version)
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}@{}", self.category, self.id, self.version)
    }
}

/// The component set a replica runs. Categories not present are simply absent
/// and that absence is part of the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    // sorted by category, at most one per category
    components: Vec<Component>,
    digest: String,
}

impl Configuration {
    pub fn new(components: impl IntoIterator<Item = Component>) -> Result<Self, PopulationError> {
        let mut components: Vec<Component> = components.into_iter().collect();
        let digest = canonical_digest(&mut components)?;
        Ok(Configuration { components, digest })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, category: ComponentCategory) -> Option<&Component> {
        self.components.iter().find(|c| c.category == category)
    }

    pub fn contains(&self, component: &Component) -> bool {
        self.component(component.category) == Some(component)
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }
}

/// Sorts `components` into canonical order and returns the hex SHA-256 digest
/// of their length-prefixed encoding.
pub fn canonical_digest(components: &mut [Component]) -> Result<String, PopulationError> {
    if components.is_empty() {
        return Err(PopulationError::EmptyConfiguration);
    }
    components.sort();
    for pair in components.windows(2) {
        if pair[0].category == pair[1].category {
            return Err(PopulationError::DuplicateCategory(pair[0].category));
        }
    }
    let mut hasher = Sha256::new();
    for c in components.iter() {
        for field in [c.category.as_str(), c.id.as_str(), c.version.as_str()] {
            hasher.update((field.len() as u64).to_be_bytes());
            hasher.update(field.as_bytes());
        }
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replica {
    pub id: String,
    pub operator_id: String,
    pub configuration: Arc<Configuration>,
    pub power: PowerUnits,
}

impl Replica {
    pub fn new(
        id: impl Into<String>,
        operator_id: impl Into<String>,
        configuration: Arc<Configuration>,
        power: impl Into<PowerUnits>,
    ) -> Self {
        Replica {
            id: id.into(),
            operator_id: operator_id.into(),
            configuration,
            power: power.into(),
        }
    }
}

/// A snapshot of replicas, kept sorted by replica id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Population {
    replicas: Vec<Replica>,
    total_power: Option<PowerUnits>,
}

impl Population {
    /// Builds a population without validating it. Use [`validate_population`]
    /// or [`Population::new`] before computing metrics.
    pub fn from_replicas(mut replicas: Vec<Replica>) -> Self {
        replicas.sort_by(|a, b| a.id.cmp(&b.id));
        let total_power = replicas
            .iter()
            .try_fold(PowerUnits::ZERO, |acc, r| acc.checked_add(r.power));
        Population {
            replicas,
            total_power,
        }
    }

    pub fn new(replicas: Vec<Replica>) -> Result<Self, ValidationReport> {
        let pop = Population::from_replicas(replicas);
        validate_population(&pop)?;
        Ok(pop)
    }

    pub fn replicas(&self) -> &[Replica] {
        &self.replicas
    }

    pub fn len(&self) -> usize {
        self.replicas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicas.is_empty()
    }

    /// Total voting power. Saturates at `u64::MAX` when the sum overflows,
    /// which validation reports as a violation.
    pub fn total_power(&self) -> PowerUnits {
        self.total_power.unwrap_or(PowerUnits(u64::MAX))
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Replica> {
        self.replicas.iter()
    }
}

impl<'a> IntoIterator for &'a Population {
    type Item = &'a Replica;
    type IntoIter = std::slice::Iter<'a, Replica>;

    fn into_iter(self) -> Self::IntoIter {
        self.replicas.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateReplicaId(String),
    EmptyReplicaId { index: usize },
    EmptyOperatorId { replica: String },
    ZeroTotalPower,
    TotalPowerOverflow,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateReplicaId(id) => write!(f, "duplicate replica id `{id}`"),
            Violation::EmptyReplicaId { index } => write!(f, "replica #{index} has an empty id"),
            Violation::EmptyOperatorId { replica } => {
                write!(f, "replica `{replica}` has an empty operator id")
            }
            Violation::ZeroTotalPower => f.write_str("total voting power is zero"),
            Violation::TotalPowerOverflow => f.write_str("total voting power overflows u64"),
        }
    }
}

/// Every violation found in a population, not just the first.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn contains(&self, violation: &Violation) -> bool {
        self.violations.contains(violation)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid population: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate_population(pop: &Population) -> Result<(), ValidationReport> {
    let mut violations = Vec::new();
    let mut seen = HashSet::with_capacity(pop.len());
    let mut reported = HashSet::new();
    for (index, r) in pop.replicas.iter().enumerate() {
        if r.id.is_empty() {
            violations.push(Violation::EmptyReplicaId { index });
        } else if !seen.insert(r.id.as_str()) && reported.insert(r.id.as_str()) {
            violations.push(Violation::DuplicateReplicaId(r.id.clone()));
        }
        if r.operator_id.is_empty() {
            violations.push(Violation::EmptyOperatorId {
                replica: r.id.clone(),
            });
        }
    }
    match pop.total_power {
        None => violations.push(Violation::TotalPowerOverflow),
        Some(PowerUnits(0)) => violations.push(Violation::ZeroTotalPower),
        Some(_) => {}
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ValidationReport { violations })
    }
}
