//! The attacker's side of the safety condition: the fewest vulnerabilities, or
//! the fewest corrupt operators, whose combined power exceeds `f`.

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use thiserror::Error;

use super::VulnerabilityTarget;
use crate::population::{Component, Population, PowerUnits};

/// Largest candidate set [`SearchMode::Exhaustive`] accepts.
pub const EXHAUSTIVE_TARGET_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Granularity {
    /// One candidate vulnerability per distinct component.
    Component,
    /// One candidate vulnerability per distinct configuration.
    Configuration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchMode {
    Greedy,
    Exhaustive,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("exhaustive search over {count} targets exceeds the limit of {limit}")]
    TooManyTargets { count: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttackPlan {
    Breakable {
        targets: Vec<VulnerabilityTarget>,
        union_power: PowerUnits,
    },
    /// Even every candidate together does not exceed `f`.
    Unbreakable { max_power: PowerUnits },
}

impl AttackPlan {
    pub fn count(&self) -> Option<usize> {
        match self {
            AttackPlan::Breakable { targets, .. } => Some(targets.len()),
            AttackPlan::Unbreakable { .. } => None,
        }
    }
}

/// Candidate targets over configuration groups. Only groups with positive
/// power are kept, and so only targets that affect some power.
struct Candidates {
    targets: Vec<VulnerabilityTarget>,
    covers: Vec<FixedBitSet>,
    group_power: Vec<u64>,
}

impl Candidates {
    fn build(pop: &Population, granularity: Granularity) -> Self {
        let mut groups: BTreeMap<&str, (u64, &[Component])> = BTreeMap::new();
        for r in pop.iter().filter(|r| r.power.get() > 0) {
            let g = groups
                .entry(r.configuration.digest())
                .or_insert((0, r.configuration.components()));
            g.0 += r.power.get();
        }
        let n = groups.len();
        let group_power: Vec<u64> = groups.values().map(|(p, _)| *p).collect();

        let mut by_target: BTreeMap<String, (VulnerabilityTarget, FixedBitSet)> = BTreeMap::new();
        for (index, (digest, (_, components))) in groups.iter().enumerate() {
            let targets: Vec<VulnerabilityTarget> = match granularity {
                Granularity::Configuration => {
                    vec![VulnerabilityTarget::WholeConfiguration(
                        (*digest).to_owned(),
                    )]
                }
                Granularity::Component => components
                    .iter()
                    .cloned()
                    .map(VulnerabilityTarget::ExactComponent)
                    .collect(),
            };
            for t in targets {
                by_target
                    .entry(t.identity())
                    .or_insert_with(|| (t, FixedBitSet::with_capacity(n)))
                    .1
                    .insert(index);
            }
        }
        let (targets, covers) = by_target.into_values().unzip();
        Candidates {
            targets,
            covers,
            group_power,
        }
    }

    fn power_of(&self, set: &FixedBitSet) -> u64 {
        set.ones().map(|g| self.group_power[g]).sum()
    }

    fn union_of(&self, chosen: &[usize]) -> FixedBitSet {
        let mut acc = FixedBitSet::with_capacity(self.group_power.len());
        for &i in chosen {
            acc.union_with(&self.covers[i]);
        }
        acc
    }

    fn plan(&self, chosen: &[usize]) -> AttackPlan {
        AttackPlan::Breakable {
            targets: chosen.iter().map(|&i| self.targets[i].clone()).collect(),
            union_power: PowerUnits(self.power_of(&self.union_of(chosen))),
        }
    }
}

/// Smallest set of vulnerabilities, one per candidate target, whose affected
/// replicas together hold more than `f`.
///
/// Greedy repeatedly takes the target adding the most uncovered power, breaking
/// ties towards the lexicographically smallest target identity. Exhaustive
/// tries subsets by increasing size and returns the lexicographically first
/// minimum one.
pub fn min_vulnerabilities_to_break(
    pop: &Population,
    f: PowerUnits,
    granularity: Granularity,
    mode: SearchMode,
) -> Result<AttackPlan, SearchError> {
    let candidates = Candidates::build(pop, granularity);
    let n = candidates.targets.len();
    if mode == SearchMode::Exhaustive && n > EXHAUSTIVE_TARGET_LIMIT {
        return Err(SearchError::TooManyTargets {
            count: n,
            limit: EXHAUSTIVE_TARGET_LIMIT,
        });
    }
    let everything: Vec<usize> = (0..n).collect();
    let max_power = candidates.power_of(&candidates.union_of(&everything));
    if max_power <= f.get() {
        return Ok(AttackPlan::Unbreakable {
            max_power: PowerUnits(max_power),
        });
    }
    let chosen = match mode {
        SearchMode::Greedy => greedy(&candidates, f.get()),
        SearchMode::Exhaustive => exhaustive(&candidates, f.get()),
    };
    Ok(candidates.plan(&chosen))
}

fn greedy(c: &Candidates, f: u64) -> Vec<usize> {
    let mut covered = FixedBitSet::with_capacity(c.group_power.len());
    let mut used = vec![false; c.targets.len()];
    let mut chosen = Vec::new();
    while c.power_of(&covered) <= f {
        let mut best: Option<(usize, u64)> = None;
        for (i, cover) in c.covers.iter().enumerate() {
            if used[i] {
                continue;
            }
            let gain: u64 = cover.difference(&covered).map(|g| c.group_power[g]).sum();
            if best.is_none_or(|(_, b)| gain > b) {
                best = Some((i, gain));
            }
        }
        // the caller checked that all targets together exceed f
        let (i, _) = best.expect("candidates exhausted below threshold");
        used[i] = true;
        covered.union_with(&c.covers[i]);
        chosen.push(i);
    }
    chosen
}

fn exhaustive(c: &Candidates, f: u64) -> Vec<usize> {
    let n = c.targets.len();
    for size in 1..=n {
        if let Some(combo) = (0..n)
            .combinations(size)
            .find(|combo| c.power_of(&c.union_of(combo)) > f)
        {
            return combo;
        }
    }
    unreachable!("the full candidate set exceeds the threshold")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OperatorPlan {
    Breakable {
        operators: Vec<String>,
        power: PowerUnits,
    },
    Unbreakable {
        total: PowerUnits,
    },
}

impl OperatorPlan {
    pub fn count(&self) -> Option<usize> {
        match self {
            OperatorPlan::Breakable { operators, .. } => Some(operators.len()),
            OperatorPlan::Unbreakable { .. } => None,
        }
    }
}

/// Fewest operators whose replicas together hold more than `f`, regardless of
/// configuration. Taking operators in decreasing power order is optimal for a
/// sum threshold; ties go to the smaller operator id.
pub fn min_operator_corruptions(pop: &Population, f: PowerUnits) -> OperatorPlan {
    let mut by_operator: BTreeMap<&str, u64> = BTreeMap::new();
    for r in pop {
        *by_operator.entry(r.operator_id.as_str()).or_default() += r.power.get();
    }
    let mut ranked: Vec<(&str, u64)> = by_operator.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

    let mut power = 0u64;
    let mut operators = Vec::new();
    for (op, p) in ranked {
        if power > f.get() {
            break;
        }
        power += p;
        operators.push(op.to_owned());
    }
    if power > f.get() {
        OperatorPlan::Breakable {
            operators,
            power: PowerUnits(power),
        }
    } else {
        OperatorPlan::Unbreakable {
            total: PowerUnits(power),
        }
    }
}
