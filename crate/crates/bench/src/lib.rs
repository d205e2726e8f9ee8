//! Workloads shared by the benchmarks.

use std::sync::Arc;

use replidiv_core::fault::CompromiseModel;
use replidiv_core::ingest::{parse_pool_shares, PoolFormat, PoolShare};
use replidiv_core::population::{Component, ComponentCategory, Configuration, Population, Replica};

const POOLS: &str = "name,share_percent
Foundry,34.239
AntPool,19.981
pool-03,12.997
pool-04,11.348
pool-05,8.826
pool-06,2.619
pool-07,2.037
pool-08,1.649
pool-09,1.358
pool-10,1.261
pool-11,0.780
pool-12,0.680
pool-13,0.680
pool-14,0.390
pool-15,0.100
pool-16,0.100
pool-17,0.100
";

/// The 17-pool hashrate snapshot.
pub fn pool_shares() -> Vec<PoolShare> {
    parse_pool_shares(POOLS, PoolFormat::Csv).expect("embedded snapshot parses")
}

/// `replicas` replicas over a catalogue of `ids` system-software ids and two
/// application ids, with deterministic powers. Components are shared across
/// configurations.
pub fn layered_population(replicas: usize, ids: usize) -> Population {
    let replicas = (0..replicas)
        .map(|i| {
            let os = Component::new(
                ComponentCategory::SystemSoftware,
                format!("os-{}", i % ids),
                "1",
            )
            .expect("non-empty");
            let app = Component::new(
                ComponentCategory::ApplicationConsensus,
                format!("app-{}", i % 2),
                "1",
            )
            .expect("non-empty");
            let config = Arc::new(Configuration::new([os, app]).expect("distinct categories"));
            Replica::new(
                format!("r{i:05}"),
                format!("op{}", i % 7),
                config,
                1 + (i as u64 * 7919) % 101,
            )
        })
        .collect();
    Population::new(replicas).expect("valid population")
}

/// Every component of `pop` compromised with probability `p`.
pub fn uniform_model(pop: &Population, p: f64) -> CompromiseModel {
    let mut components: Vec<Component> = pop
        .iter()
        .flat_map(|r| r.configuration.components().iter().cloned())
        .collect();
    components.sort();
    components.dedup();
    CompromiseModel::new(components.into_iter().map(|c| (c, p))).expect("probability in range")
}
