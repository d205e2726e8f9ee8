//! Monte-Carlo estimate of the probability that independent component
//! compromises push the union of affected power above `f`.
//!
//! Trial `t` draws from a ChaCha8 stream keyed by `(seed, t)`, so the outcome
//! of every trial is fixed before scheduling and serial and parallel runs
//! agree bit for bit.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::population::{Component, Population, PowerUnits};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonteCarloError {
    #[error("probability {probability} for {component} is outside [0, 1]")]
    InvalidProbability { component: String, probability: f64 },
    #[error("trials must be at least 1")]
    ZeroTrials,
}

/// Per-component probability of being exploitable during the analysis window.
/// Components absent from the model are never compromised.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompromiseModel {
    probabilities: BTreeMap<Component, f64>,
}

impl CompromiseModel {
    pub fn new(
        probabilities: impl IntoIterator<Item = (Component, f64)>,
    ) -> Result<Self, MonteCarloError> {
        let probabilities: BTreeMap<_, _> = probabilities.into_iter().collect();
        for (c, p) in &probabilities {
            if !(0.0..=1.0).contains(p) {
                return Err(MonteCarloError::InvalidProbability {
                    component: c.to_string(),
                    probability: *p,
                });
            }
        }
        Ok(CompromiseModel { probabilities })
    }

    /// Components in sampling order.
    pub fn iter(&self) -> impl Iterator<Item = (&Component, f64)> + '_ {
        self.probabilities.iter().map(|(c, p)| (c, *p))
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub trials: u64,
    pub violations: u64,
    pub estimate: f64,
    /// Normal-approximation 95% half-width.
    pub half_width: f64,
}

struct Sampler {
    probabilities: Vec<f64>,
    // (power, indices into `probabilities` the configuration carries)
    groups: Vec<(u64, Vec<usize>)>,
    base: ChaCha8Rng,
    f: u64,
}

impl Sampler {
    fn violates(&self, trial: u64, compromised: &mut [bool]) -> bool {
        let mut rng = self.base.clone();
        rng.set_stream(trial);
        for (slot, p) in compromised.iter_mut().zip(&self.probabilities) {
            *slot = rng.random::<f64>() < *p;
        }
        let affected: u64 = self
            .groups
            .iter()
            .filter(|(_, idx)| idx.iter().any(|&i| compromised[i]))
            .map(|(power, _)| *power)
            .sum();
        affected > self.f
    }
}

pub fn monte_carlo_safety(
    pop: &Population,
    model: &CompromiseModel,
    f: PowerUnits,
    trials: u64,
    seed: u64,
    execution: Execution,
) -> Result<MonteCarloEstimate, MonteCarloError> {
    if trials == 0 {
        return Err(MonteCarloError::ZeroTrials);
    }
    let index: BTreeMap<&Component, usize> = model
        .probabilities
        .keys()
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect();
    let mut by_config: BTreeMap<&str, (u64, Vec<usize>)> = BTreeMap::new();
    for r in pop.iter().filter(|r| r.power.get() > 0) {
        let entry = by_config
            .entry(r.configuration.digest())
            .or_insert_with(|| {
                let idx = r
                    .configuration
                    .components()
                    .iter()
                    .filter_map(|c| index.get(c).copied())
                    .collect();
                (0, idx)
            });
        entry.0 += r.power.get();
    }
    let sampler = Sampler {
        probabilities: model.probabilities.values().copied().collect(),
        groups: by_config
            .into_values()
            .filter(|(_, idx)| !idx.is_empty())
            .collect(),
        base: ChaCha8Rng::seed_from_u64(seed),
        f: f.get(),
    };
    let width = sampler.probabilities.len();

    let violations = match execution {
        Execution::Serial => {
            let mut buf = vec![false; width];
            (0..trials)
                .filter(|&t| sampler.violates(t, &mut buf))
                .count() as u64
        }
        Execution::Parallel => (0..trials)
            .into_par_iter()
            .map_init(|| vec![false; width], |buf, t| sampler.violates(t, buf))
            .filter(|v| *v)
            .count() as u64,
    };
    let estimate = violations as f64 / trials as f64;
    let half_width = 1.96 * (estimate * (1.0 - estimate) / trials as f64).sqrt();
    Ok(MonteCarloEstimate {
        trials,
        violations,
        estimate,
        half_width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{ComponentCategory, Configuration, Replica};
    use std::sync::Arc;

    fn os(id: &str) -> Component {
        Component::new(ComponentCategory::SystemSoftware, id, "1").unwrap()
    }

    fn pop() -> Population {
        Population::new(
            ["a", "b", "c"]
                .into_iter()
                .enumerate()
                .map(|(i, id)| {
                    Replica::new(
                        id,
                        id,
                        Arc::new(Configuration::new([os(id)]).unwrap()),
                        10 * (i as u64 + 1),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_probabilities_never_violate() {
        let model = CompromiseModel::new([(os("a"), 0.0), (os("b"), 0.0), (os("c"), 0.0)]).unwrap();
        let est =
            monte_carlo_safety(&pop(), &model, PowerUnits(0), 1000, 7, Execution::Serial).unwrap();
        assert_eq!(est.violations, 0);
        assert_eq!(est.half_width, 0.0);
    }

    #[test]
    fn certain_compromise_always_violates() {
        let model = CompromiseModel::new([(os("a"), 1.0), (os("b"), 1.0), (os("c"), 1.0)]).unwrap();
        let est = monte_carlo_safety(&pop(), &model, PowerUnits(59), 1000, 7, Execution::Parallel)
            .unwrap();
        assert_eq!(est.estimate, 1.0);
    }

    #[test]
    fn serial_and_parallel_agree() {
        let model = CompromiseModel::new([(os("a"), 0.3), (os("b"), 0.5), (os("c"), 0.2)]).unwrap();
        let serial =
            monte_carlo_safety(&pop(), &model, PowerUnits(25), 5000, 42, Execution::Serial)
                .unwrap();
        let parallel = monte_carlo_safety(
            &pop(),
            &model,
            PowerUnits(25),
            5000,
            42,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(serial, parallel);
        let other = monte_carlo_safety(&pop(), &model, PowerUnits(25), 5000, 43, Execution::Serial)
            .unwrap();
        assert_ne!(serial.violations, other.violations);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(CompromiseModel::new([(os("a"), 1.5)]).is_err());
        assert!(CompromiseModel::new([(os("a"), f64::NAN)]).is_err());
        assert_eq!(
            monte_carlo_safety(
                &pop(),
                &CompromiseModel::default(),
                PowerUnits(0),
                0,
                1,
                Execution::Serial
            ),
            Err(MonteCarloError::ZeroTrials)
        );
    }
}
