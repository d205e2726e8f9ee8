//! Operator resilience of (κ, ω)-optimal populations.

use std::ops::RangeInclusive;
use std::sync::Arc;

use num_rational::Ratio;
use thiserror::Error;

use super::search::min_operator_corruptions;
use crate::population::{
    Component, ComponentCategory, Configuration, Population, PowerUnits, Replica,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResilienceError {
    #[error("kappa and omega must be at least 1")]
    ZeroDimension,
    #[error("kappa * omega = {cells} does not divide total power {total}")]
    Indivisible { cells: u64, total: u64 },
    #[error("alpha {0} is outside [0, 1]")]
    AlphaOutOfRange(Ratio<u64>),
}

/// `kappa` configurations with `omega` replicas each, every replica run by its
/// own operator and holding `total / (kappa * omega)` power.
pub fn optimal_population(
    kappa: usize,
    omega: usize,
    total: PowerUnits,
) -> Result<Population, ResilienceError> {
    if kappa == 0 || omega == 0 {
        return Err(ResilienceError::ZeroDimension);
    }
    let cells = (kappa as u64)
        .checked_mul(omega as u64)
        .ok_or(ResilienceError::ZeroDimension)?;
    if !total.get().is_multiple_of(cells) {
        return Err(ResilienceError::Indivisible {
            cells,
            total: total.get(),
        });
    }
    let each = total.get() / cells;
    let mut replicas = Vec::with_capacity(kappa * omega);
    for k in 0..kappa {
        let component = Component::new(ComponentCategory::SystemSoftware, format!("os-{k}"), "1")
            .expect("non-empty fields");
        let config = Arc::new(Configuration::new([component]).expect("single component"));
        for w in 0..omega {
            replicas.push(Replica::new(
                format!("k{k:03}-w{w:03}"),
                format!("op-k{k:03}-w{w:03}"),
                config.clone(),
                each,
            ));
        }
    }
    Ok(Population::from_replicas(replicas))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResilienceCell {
    pub kappa: usize,
    pub omega: usize,
    /// `None` when no coalition of operators exceeds the threshold.
    pub min_corruptions: Option<usize>,
}

/// Minimum operator corruptions for every (κ, ω) cell, with the tolerated
/// power set to `alpha * total` (an adversary must hold strictly more).
pub fn abundance_resilience_table(
    kappas: RangeInclusive<usize>,
    omegas: RangeInclusive<usize>,
    total: PowerUnits,
    alpha: Ratio<u64>,
) -> Result<Vec<ResilienceCell>, ResilienceError> {
    if alpha > Ratio::from_integer(1) {
        return Err(ResilienceError::AlphaOutOfRange(alpha));
    }
    // power > alpha * total  <=>  power > floor(alpha * total) for integer power
    let f = (total.get() as u128 * *alpha.numer() as u128 / *alpha.denom() as u128) as u64;
    let mut table = Vec::new();
    for kappa in kappas {
        for omega in omegas.clone() {
            let pop = optimal_population(kappa, omega, total)?;
            table.push(ResilienceCell {
                kappa,
                omega,
                min_corruptions: min_operator_corruptions(&pop, PowerUnits(f)).count(),
            });
        }
    }
    Ok(table)
}
