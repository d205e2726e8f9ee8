//! Vulnerabilities, fault scenarios and the safety predicate.
//!
//! A vulnerability compromises every replica whose configuration matches its
//! [`VulnerabilityTarget`]. The safety condition compares the tolerated power
//! `f` with the affected power of a scenario, reported two ways: the literal
//! sum over vulnerabilities (replicas hit twice count twice) and the power of
//! the union of affected replicas.

mod monte_carlo;
mod resilience;
mod search;

pub use monte_carlo::{
    monte_carlo_safety, CompromiseModel, Execution, MonteCarloError, MonteCarloEstimate,
};
pub use resilience::{
    abundance_resilience_table, optimal_population, ResilienceCell, ResilienceError,
};
pub use search::{
    min_operator_corruptions, min_vulnerabilities_to_break, AttackPlan, Granularity, OperatorPlan,
    SearchError, SearchMode, EXHAUSTIVE_TARGET_LIMIT,
};

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::population::{Component, ComponentCategory, Configuration, Population, PowerUnits};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VulnerabilityTarget {
    ExactComponent(Component),
    AnyVersion {
        category: ComponentCategory,
        id: String,
    },
    /// Configuration digest.
    WholeConfiguration(String),
}

impl VulnerabilityTarget {
    pub fn matches(&self, configuration: &Configuration) -> bool {
        match self {
            VulnerabilityTarget::ExactComponent(c) => configuration.contains(c),
            VulnerabilityTarget::AnyVersion { category, id } => configuration
                .component(*category)
                .is_some_and(|c| c.id() == id),
            VulnerabilityTarget::WholeConfiguration(digest) => configuration.digest() == digest,
        }
    }

    /// Stable textual identity, also used for lexicographic tie-breaking.
    pub fn identity(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for VulnerabilityTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VulnerabilityTarget::ExactComponent(c) => write!(f, "component:{c}"),
            VulnerabilityTarget::AnyVersion { category, id } => write!(f, "any:{category}:{id}"),
            VulnerabilityTarget::WholeConfiguration(d) => write!(f, "configuration:{d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Vulnerability {
    pub id: String,
    pub target: VulnerabilityTarget,
}

impl Vulnerability {
    pub fn new(id: impl Into<String>, target: VulnerabilityTarget) -> Self {
        Vulnerability {
            id: id.into(),
            target,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("vulnerability id must not be empty")]
    EmptyId,
    #[error("duplicate vulnerability id `{0}`")]
    DuplicateId(String),
}

/// The vulnerabilities exploitable at one instant. `k()` is their count.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FaultScenario {
    vulnerabilities: Vec<Vulnerability>,
}

impl FaultScenario {
    pub fn new(vulnerabilities: Vec<Vulnerability>) -> Result<Self, ScenarioError> {
        let mut seen = HashSet::new();
        for v in &vulnerabilities {
            if v.id.is_empty() {
                return Err(ScenarioError::EmptyId);
            }
            if !seen.insert(v.id.as_str()) {
                return Err(ScenarioError::DuplicateId(v.id.clone()));
            }
        }
        Ok(FaultScenario { vulnerabilities })
    }

    pub fn vulnerabilities(&self) -> &[Vulnerability] {
        &self.vulnerabilities
    }

    pub fn k(&self) -> usize {
        self.vulnerabilities.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyVerdict {
    pub per_vulnerability_power: Vec<(String, PowerUnits)>,
    /// Σ affected power over vulnerabilities (saturating).
    pub sum_affected: PowerUnits,
    /// Power of the union of affected replicas.
    pub union_affected: PowerUnits,
    pub threshold_f: PowerUnits,
    /// `f >= sum_affected`.
    pub sum_condition_holds: bool,
    /// `f >= union_affected`.
    pub union_condition_holds: bool,
}

/// Power of every replica whose configuration `v` targets.
pub fn affected_power(pop: &Population, v: &Vulnerability) -> PowerUnits {
    PowerUnits(
        pop.iter()
            .filter(|r| v.target.matches(&r.configuration))
            .map(|r| r.power.get())
            .sum(),
    )
}

pub fn evaluate_scenario(
    pop: &Population,
    scenario: &FaultScenario,
    f: PowerUnits,
) -> SafetyVerdict {
    let per_vulnerability_power: Vec<(String, PowerUnits)> = scenario
        .vulnerabilities
        .iter()
        .map(|v| (v.id.clone(), affected_power(pop, v)))
        .collect();
    let sum_affected = PowerUnits(
        per_vulnerability_power
            .iter()
            .fold(0u64, |acc, (_, p)| acc.saturating_add(p.get())),
    );
    let union_affected = PowerUnits(
        pop.iter()
            .filter(|r| {
                scenario
                    .vulnerabilities
                    .iter()
                    .any(|v| v.target.matches(&r.configuration))
            })
            .map(|r| r.power.get())
            .sum(),
    );
    SafetyVerdict {
        per_vulnerability_power,
        sum_affected,
        union_affected,
        threshold_f: f,
        sum_condition_holds: f >= sum_affected,
        union_condition_holds: f >= union_affected,
    }
}
