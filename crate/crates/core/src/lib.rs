//! Replica diversity and fault-independence analysis.
//!
//! - [`population`]: replicas, configurations and voting power.
//! - [`metrics`]: power-weighted distributions, Shannon entropy, configuration
//!   abundance and the κ / (κ, ω) optimality checks.
//! - [`fault`]: vulnerabilities, the safety predicate, attacker searches,
//!   Monte-Carlo safety estimation and operator resilience tables.
//! - [`ingest`]: pool share tables and JSON documents.
//! - [`registry`]: simulated attestation registry with anonymized publication.

pub mod fault;
pub mod ingest;
pub mod metrics;
pub mod population;
pub mod registry;

pub use fault::{
    affected_power, evaluate_scenario, FaultScenario, SafetyVerdict, Vulnerability,
    VulnerabilityTarget,
};
pub use metrics::{
    abundance_report, distribution_of, entropy_bits, is_kappa_omega_optimal, is_kappa_optimal,
    max_entropy_bits, merge_groups, AbundanceReport, Distribution, Grouping, MetricError,
};
pub use population::{
    canonical_digest, validate_population, Component, ComponentCategory, Configuration, Population,
    PowerUnits, Replica, ValidationReport, Violation,
};
pub use registry::{AttestationRecord, Registry, RegistrySnapshot};
