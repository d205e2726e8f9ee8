//! JSON documents for populations, fault scenarios and compromise models.
//!
//! ```json
//! {
//!   "replicas": [
//!     {
//!       "configuration": {
//!         "components": [
//!           { "category": "system_software", "id": "linux", "version": "6.1" }
//!         ]
//!       },
//!       "id": "r1",
//!       "operator": "op1",
//!       "power_units": 25
//!     }
//!   ]
//! }
//! ```
//!
//! Fields are declared in alphabetical order so serialized keys come out sorted.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{from_json, IngestError};
use crate::fault::{CompromiseModel, FaultScenario, Vulnerability, VulnerabilityTarget};
use crate::population::{Component, ComponentCategory, Configuration, Population, Replica};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PopulationDoc {
    replicas: Vec<ReplicaDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ReplicaDoc {
    configuration: ConfigurationDoc,
    id: String,
    operator: String,
    power_units: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigurationDoc {
    components: Vec<ComponentDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDoc {
    category: ComponentCategory,
    id: String,
    version: String,
}

impl ComponentDoc {
    fn build(self, path: impl FnOnce() -> String) -> Result<Component, IngestError> {
        Component::new(self.category, self.id, self.version).map_err(|e| IngestError::Document {
            path: path(),
            message: e.to_string(),
        })
    }
}

impl From<&Component> for ComponentDoc {
    fn from(c: &Component) -> Self {
        ComponentDoc {
            category: c.category(),
            id: c.id().to_owned(),
            version: c.version().to_owned(),
        }
    }
}

impl ReplicaDoc {
    /// `path` prefixes error locations, e.g. `replicas[3]`.
    pub(crate) fn into_replica(
        self,
        path: &str,
        interned: &mut HashMap<String, Arc<Configuration>>,
    ) -> Result<Replica, IngestError> {
        let components = self
            .configuration
            .components
            .into_iter()
            .enumerate()
            .map(|(j, c)| c.build(|| format!("{path}.configuration.components[{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let configuration = Configuration::new(components).map_err(|e| IngestError::Document {
            path: format!("{path}.configuration.components"),
            message: e.to_string(),
        })?;
        let configuration = interned
            .entry(configuration.digest().to_owned())
            .or_insert_with(|| Arc::new(configuration))
            .clone();
        Ok(Replica::new(
            self.id,
            self.operator,
            configuration,
            self.power_units,
        ))
    }

    pub(crate) fn from_replica(r: &Replica) -> Self {
        ReplicaDoc {
            configuration: ConfigurationDoc {
                components: r
                    .configuration
                    .components()
                    .iter()
                    .map(ComponentDoc::from)
                    .collect(),
            },
            id: r.id.clone(),
            operator: r.operator_id.clone(),
            power_units: r.power.get(),
        }
    }
}

/// Parses and validates a population document.
pub fn load_population_spec(text: &str) -> Result<Population, IngestError> {
    let doc: PopulationDoc = from_json(text)?;
    let mut interned = HashMap::new();
    let replicas = doc
        .replicas
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.into_replica(&format!("replicas[{i}]"), &mut interned))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Population::new(replicas)?)
}

/// Pretty-printed JSON with sorted keys, replicas sorted by id and a trailing
/// newline. Identical populations serialize to identical bytes.
pub fn serialize_population(pop: &Population) -> String {
    let doc = PopulationDoc {
        replicas: pop.iter().map(ReplicaDoc::from_replica).collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    out.push('\n');
    out
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    vulnerabilities: Vec<VulnerabilityDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VulnerabilityDoc {
    id: String,
    target: TargetDoc,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum TargetDoc {
    ExactComponent {
        category: ComponentCategory,
        id: String,
        version: String,
    },
    AnyVersion {
        category: ComponentCategory,
        id: String,
    },
    WholeConfiguration {
        digest: String,
    },
}

/// Parses a scenario document:
/// `{"vulnerabilities": [{"id": "v1", "target": {"kind": "any_version", "category": "system_software", "id": "linux"}}]}`.
/// Target kinds are `exact_component`, `any_version` and `whole_configuration`
/// (with a `digest` field).
pub fn load_scenario(text: &str) -> Result<FaultScenario, IngestError> {
    let doc: ScenarioDoc = from_json(text)?;
    let mut vulnerabilities = Vec::with_capacity(doc.vulnerabilities.len());
    for (i, v) in doc.vulnerabilities.into_iter().enumerate() {
        let path = || format!("vulnerabilities[{i}].target");
        let target = match v.target {
            TargetDoc::ExactComponent {
                category,
                id,
                version,
            } => VulnerabilityTarget::ExactComponent(
                ComponentDoc {
                    category,
                    id,
                    version,
                }
                .build(path)?,
            ),
            TargetDoc::AnyVersion { category, id } => {
                if id.is_empty() {
                    return Err(IngestError::Document {
                        path: path(),
                        message: "component id must not be empty".into(),
                    });
                }
                VulnerabilityTarget::AnyVersion { category, id }
            }
            TargetDoc::WholeConfiguration { digest } => {
                VulnerabilityTarget::WholeConfiguration(digest)
            }
        };
        vulnerabilities.push(Vulnerability::new(v.id, target));
    }
    FaultScenario::new(vulnerabilities).map_err(|e| IngestError::Document {
        path: "vulnerabilities".into(),
        message: e.to_string(),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    components: Vec<ModelComponentDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelComponentDoc {
    category: ComponentCategory,
    id: String,
    probability: f64,
    version: String,
}

/// Parses a compromise model:
/// `{"components": [{"category": "system_software", "id": "linux", "version": "6.1", "probability": 0.05}]}`.
pub fn load_compromise_model(text: &str) -> Result<CompromiseModel, IngestError> {
    let doc: ModelDoc = from_json(text)?;
    let mut entries = Vec::with_capacity(doc.components.len());
    for (i, c) in doc.components.into_iter().enumerate() {
        let path = format!("components[{i}]");
        let component = ComponentDoc {
            category: c.category,
            id: c.id,
            version: c.version,
        }
        .build(|| path.clone())?;
        if entries.iter().any(|(seen, _)| *seen == component) {
            return Err(IngestError::Document {
                path,
                message: format!("duplicate component {component}"),
            });
        }
        entries.push((component, c.probability));
    }
    CompromiseModel::new(entries).map_err(|e| IngestError::Document {
        path: "components".into(),
        message: e.to_string(),
    })
}
