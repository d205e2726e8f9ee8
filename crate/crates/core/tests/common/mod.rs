//! Test-only oracles, independent of the library's computation paths.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use rand::seq::SliceRandom;
use rand::Rng;

use replidiv_core::fault::CompromiseModel;
use replidiv_core::population::{Component, ComponentCategory, Configuration, Population, Replica};
use replidiv_core::VulnerabilityTarget;

/// Fractional bits of the fixed-point oracle (~96 decimal digits).
const PREC: u64 = 320;

/// atanh(a / b) in fixed point, for 0 <= a / b < 1.
fn atanh_fixed(a: &BigInt, b: &BigInt) -> BigInt {
    let one: BigInt = BigInt::from(1) << PREC;
    let mut power = &one * a / b;
    let a2 = a * a;
    let b2 = b * b;
    let mut sum = BigInt::from(0);
    let mut k = 1u64;
    while power != BigInt::from(0) {
        sum += &power / BigInt::from(k);
        power = power * &a2 / &b2;
        k += 2;
    }
    sum
}

fn ln2_fixed() -> BigInt {
    atanh_fixed(&BigInt::from(1), &BigInt::from(3)) * 2
}

/// log2(n) in fixed point: n = 2^e * m with m in [1, 2), and
/// ln m = 2 atanh((n - 2^e) / (n + 2^e)).
fn log2_fixed(n: &BigUint, ln2: &BigInt) -> BigInt {
    assert!(n.bits() > 0, "log2 of zero");
    let e = n.bits() - 1;
    let n = BigInt::from(n.clone());
    let pow = BigInt::from(1) << e;
    let ln_m = atanh_fixed(&(&n - &pow), &(&n + &pow)) * 2;
    (BigInt::from(e) << PREC) + (ln_m << PREC) / ln2
}

fn fixed_to_f64(v: &BigInt) -> f64 {
    let shift = PREC - 60;
    (v >> shift)
        .to_string()
        .parse::<f64>()
        .expect("integer literal")
        / (1u64 << 60) as f64
}

/// Σ p log2(1/p) over `weights / Σ weights`, evaluated with ~96-digit fixed
/// point arithmetic. Zero weights contribute nothing.
pub fn entropy_bits_hp(weights: &[u64]) -> f64 {
    let ln2 = ln2_fixed();
    let total: u128 = weights.iter().map(|w| *w as u128).sum();
    let log_total = log2_fixed(&BigUint::from(total), &ln2);
    let mut cache: HashMap<u64, BigInt> = HashMap::new();
    let mut acc = BigInt::from(0);
    for &w in weights.iter().filter(|w| **w > 0) {
        let lw = cache
            .entry(w)
            .or_insert_with(|| log2_fixed(&BigUint::from(w), &ln2))
            .clone();
        acc += BigInt::from(w) * (&log_total - lw);
    }
    fixed_to_f64(&(acc / BigInt::from(total)))
}

pub fn log2_hp(n: u64) -> f64 {
    fixed_to_f64(&log2_fixed(&BigUint::from(n), &ln2_fixed()))
}

/// Bitcoin mining pool shares, thousandths of a percent.
pub const BITCOIN_POOLS_MILLI: [u64; 17] = [
    34_239, 19_981, 12_997, 11_348, 8_826, 2_619, 2_037, 1_649, 1_358, 1_261, 780, 680, 680, 390,
    100, 100, 100,
];

pub fn bitcoin_pool_names() -> Vec<String> {
    let mut names = vec!["Foundry".to_owned(), "AntPool".to_owned()];
    names.extend((3..=17).map(|i| format!("pool-{i:02}")));
    names
}

pub fn bitcoin_pools_csv() -> String {
    let mut out = String::from("name,share_percent\n");
    for (name, milli) in bitcoin_pool_names().iter().zip(BITCOIN_POOLS_MILLI) {
        out.push_str(&format!("{name},{}.{:03}\n", milli / 1000, milli % 1000));
    }
    out
}

/// Weights of the pools plus `x` residual miners sharing the remainder, over a
/// total of 100_000 * x.
pub fn bitcoin_weights(x: u64) -> Vec<u64> {
    let residual = 100_000 - BITCOIN_POOLS_MILLI.iter().sum::<u64>();
    let mut w: Vec<u64> = BITCOIN_POOLS_MILLI.iter().map(|m| m * x).collect();
    w.extend(std::iter::repeat_n(residual, x as usize));
    w
}

/// Minimum number of operators whose power exceeds `f`, by enumerating every
/// operator subset.
pub fn brute_operator_corruptions(pop: &Population, f: u64) -> Option<usize> {
    let mut by_op: BTreeMap<&str, u64> = BTreeMap::new();
    for r in pop {
        *by_op.entry(&r.operator_id).or_default() += r.power.get();
    }
    let powers: Vec<u64> = by_op.into_values().collect();
    assert!(powers.len() <= 24, "brute force over too many operators");
    (0u32..1 << powers.len())
        .filter(|mask| {
            let total: u64 = (0..powers.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| powers[i])
                .sum();
            total > f
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
}

/// Smallest operator coalition exceeding `f` from the best power reachable with
/// exactly `s` operators, a 0/1 knapsack over every operator.
pub fn dp_operator_corruptions(pop: &Population, f: u64) -> Option<usize> {
    let mut by_op: BTreeMap<&str, u64> = BTreeMap::new();
    for r in pop {
        *by_op.entry(&r.operator_id).or_default() += r.power.get();
    }
    let n = by_op.len();
    // best[s] = max power of any s operators seen so far
    let mut best: Vec<Option<u64>> = vec![None; n + 1];
    best[0] = Some(0);
    for p in by_op.into_values() {
        for s in (1..=n).rev() {
            if let Some(prev) = best[s - 1] {
                best[s] = Some(best[s].map_or(prev + p, |b| b.max(prev + p)));
            }
        }
    }
    (0..=n).find(|&s| best[s].is_some_and(|b| b > f))
}

/// Smallest subset of `targets` whose union of affected replica power exceeds
/// `f`, by enumerating every subset.
pub fn brute_min_vulnerabilities(
    pop: &Population,
    f: u64,
    targets: &[VulnerabilityTarget],
) -> Option<usize> {
    let n = targets.len();
    assert!(n <= 22);
    let replicas: Vec<_> = pop.iter().collect();
    assert!(replicas.len() <= 64);
    let covers: Vec<u64> = targets
        .iter()
        .map(|t| {
            replicas
                .iter()
                .enumerate()
                .filter(|(_, r)| t.matches(&r.configuration))
                .fold(0u64, |m, (j, _)| m | 1 << j)
        })
        .collect();
    let power_of = |set: u64| -> u64 {
        (0..replicas.len())
            .filter(|j| set & (1 << j) != 0)
            .map(|j| replicas[j].power.get())
            .sum()
    };
    // union[mask] = union[mask without its lowest bit] | covers[lowest bit]
    let mut union = vec![0u64; 1 << n];
    let mut best: Option<usize> = None;
    let mut seen: HashMap<u64, u64> = HashMap::new();
    for mask in 1usize..1 << n {
        let low = mask.trailing_zeros() as usize;
        union[mask] = union[mask & (mask - 1)] | covers[low];
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| b <= size) {
            continue;
        }
        let power = *seen
            .entry(union[mask])
            .or_insert_with(|| power_of(union[mask]));
        if power > f {
            best = Some(size);
        }
    }
    best
}

pub fn component_targets(pop: &Population) -> Vec<VulnerabilityTarget> {
    let set: BTreeSet<Component> = pop
        .iter()
        .filter(|r| r.power.get() > 0)
        .flat_map(|r| r.configuration.components().iter().cloned())
        .collect();
    set.into_iter()
        .map(VulnerabilityTarget::ExactComponent)
        .collect()
}

pub fn configuration_targets(pop: &Population) -> Vec<VulnerabilityTarget> {
    let set: BTreeSet<String> = pop
        .iter()
        .filter(|r| r.power.get() > 0)
        .map(|r| r.configuration.digest().to_owned())
        .collect();
    set.into_iter()
        .map(VulnerabilityTarget::WholeConfiguration)
        .collect()
}

/// Exact probability that the union of compromised replicas exceeds `f`,
/// summing over all 2^n compromise patterns of the model's components.
pub fn exact_violation_probability(pop: &Population, model: &CompromiseModel, f: u64) -> f64 {
    let comps: Vec<(&Component, f64)> = model.iter().collect();
    assert!(comps.len() <= 16);
    let mut prob = 0.0;
    for mask in 0u32..1 << comps.len() {
        let mut p = 1.0;
        for (i, (_, pi)) in comps.iter().enumerate() {
            p *= if mask & (1 << i) != 0 { *pi } else { 1.0 - *pi };
        }
        if p == 0.0 {
            continue;
        }
        let affected: u64 = pop
            .iter()
            .filter(|r| {
                comps
                    .iter()
                    .enumerate()
                    .any(|(i, (c, _))| mask & (1 << i) != 0 && r.configuration.contains(c))
            })
            .map(|r| r.power.get())
            .sum();
        if affected > f {
            prob += p;
        }
    }
    // rounding can push a certain event to 1 + ulp
    prob.clamp(0.0, 1.0)
}

fn component(category: ComponentCategory, id: &str, version: &str) -> Component {
    Component::new(category, id, version).expect("non-empty fields")
}

/// One system-software component per configuration, 1 to 3 replicas each, so
/// configuration-level targets hit pairwise disjoint replica sets.
pub fn disjoint_population(rng: &mut impl Rng, max_configs: usize) -> Population {
    loop {
        let configs = rng.random_range(1..=max_configs);
        let mut replicas = Vec::new();
        for k in 0..configs {
            let cfg = Arc::new(
                Configuration::new([component(
                    ComponentCategory::SystemSoftware,
                    &format!("os-{k}"),
                    "1",
                )])
                .expect("single component"),
            );
            for j in 0..rng.random_range(1..=3) {
                replicas.push(Replica::new(
                    format!("r{k}-{j}"),
                    format!("op{}", rng.random_range(0..6)),
                    cfg.clone(),
                    rng.random_range(0..=100u64),
                ));
            }
        }
        if let Ok(pop) = Population::new(replicas) {
            return pop;
        }
    }
}

/// Replicas drawing each layer from a small catalogue, so components are
/// shared across configurations. At most 20 distinct components exist.
pub fn overlapping_population(rng: &mut impl Rng, max_replicas: usize) -> Population {
    const CATALOGUE: [(ComponentCategory, &[&str]); 4] = [
        (ComponentCategory::TrustedHardware, &["sgx", "sev"]),
        (
            ComponentCategory::SystemSoftware,
            &["linux", "bsd", "windows"],
        ),
        (ComponentCategory::ApplicationWallet, &["builtin", "hsm"]),
        (
            ComponentCategory::ApplicationConsensus,
            &["core", "knots", "btcd"],
        ),
    ];
    loop {
        let n = rng.random_range(2..=max_replicas);
        let replicas: Vec<Replica> = (0..n)
            .map(|i| {
                let mut comps = Vec::new();
                for (category, ids) in CATALOGUE {
                    // trusted hardware is optional
                    if category == ComponentCategory::TrustedHardware && rng.random_bool(0.5) {
                        continue;
                    }
                    let id = ids[rng.random_range(0..ids.len())];
                    let version = if rng.random_bool(0.5) { "1" } else { "2" };
                    comps.push(component(category, id, version));
                }
                Replica::new(
                    format!("r{i:02}"),
                    format!("op{}", rng.random_range(0..4)),
                    Arc::new(Configuration::new(comps).expect("one per category")),
                    rng.random_range(0..=100u64),
                )
            })
            .collect();
        if let Ok(pop) = Population::new(replicas) {
            return pop;
        }
    }
}

/// Up to `max_components` components of `pop` with probabilities that
/// include the degenerate values 0 and 1 now and then.
pub fn toy_model(rng: &mut impl Rng, pop: &Population, max_components: usize) -> CompromiseModel {
    let mut all: Vec<Component> = pop
        .iter()
        .flat_map(|r| r.configuration.components().iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    all.shuffle(rng);
    all.truncate(rng.random_range(1..=max_components.min(all.len())));
    CompromiseModel::new(all.into_iter().map(|c| {
        let p = match rng.random_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(0.02..0.6),
        };
        (c, p)
    }))
    .expect("probabilities in range")
}
