//! Mining-pool share tables and the oligopoly-plus-residual population built
//! from them.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Deserialize;

use super::IngestError;
use crate::metrics::Distribution;
use crate::population::{Component, ComponentCategory, Configuration, Population, Replica};

/// Thousandths of a percent in a whole (100% = 100,000).
pub const MILLI_PERCENT_WHOLE: u32 = 100_000;

/// A percentage with at most three fractional digits, stored exactly as
/// thousandths of a percent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SharePercent(u32);

impl SharePercent {
    pub fn from_milli(milli: u32) -> Option<Self> {
        (milli <= MILLI_PERCENT_WHOLE).then_some(SharePercent(milli))
    }

    pub fn milli(self) -> u32 {
        self.0
    }
}

impl fmt::Display for SharePercent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}", self.0 / 1000, self.0 % 1000)
    }
}

impl FromStr for SharePercent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        let digits = |part: &str| part.bytes().all(|b| b.is_ascii_digit());
        if int.is_empty() || !digits(int) || !digits(frac) || (s.contains('.') && frac.is_empty()) {
            return Err(format!("`{s}` is not a non-negative decimal"));
        }
        if frac.len() > 3 {
            return Err(format!("`{s}` has more than 3 fractional digits"));
        }
        let int: u32 = int
            .parse()
            .ok()
            .filter(|v| *v <= 100)
            .ok_or_else(|| format!("`{s}` exceeds 100 percent"))?;
        let frac: u32 = format!("{frac:0<3}").parse().expect("three ascii digits");
        SharePercent::from_milli(int * 1000 + frac)
            .ok_or_else(|| format!("`{s}` exceeds 100 percent"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolShare {
    pub name: String,
    pub share: SharePercent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolFormat {
    Csv,
    Json,
}

pub fn parse_pool_shares(text: &str, format: PoolFormat) -> Result<Vec<PoolShare>, IngestError> {
    let rows = match format {
        PoolFormat::Csv => parse_csv(text)?,
        PoolFormat::Json => parse_json(text)?,
    };
    let mut seen = HashSet::new();
    let mut total = 0u32;
    let mut shares = Vec::with_capacity(rows.len());
    for (location, share) in rows {
        if !seen.insert(share.name.clone()) {
            return Err(IngestError::DuplicatePool {
                name: share.name,
                location,
            });
        }
        total += share.share.milli();
        shares.push(share);
    }
    if total > MILLI_PERCENT_WHOLE {
        return Err(IngestError::SharesExceedWhole {
            total_milli: total as u64,
        });
    }
    Ok(shares)
}

fn parse_csv(text: &str) -> Result<Vec<(String, PoolShare)>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| IngestError::Csv {
        line: e.position().map_or(1, |p| p.line()),
        message: e.to_string(),
    };
    let header = reader.headers().map_err(csv_err)?;
    if header.iter().collect::<Vec<_>>() != ["name", "share_percent"] {
        return Err(IngestError::Csv {
            line: 1,
            message: "header must be exactly `name,share_percent`".into(),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let name = record[0].to_owned();
        if name.is_empty() {
            return Err(IngestError::Csv {
                line,
                message: "pool name must not be empty".into(),
            });
        }
        let share = record[1]
            .parse()
            .map_err(|message| IngestError::Csv { line, message })?;
        rows.push((format!("line {line}"), PoolShare { name, share }));
    }
    Ok(rows)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonPercent {
    Number(serde_json::Number),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonPool {
    name: String,
    share_percent: JsonPercent,
}

fn parse_json(text: &str) -> Result<Vec<(String, PoolShare)>, IngestError> {
    let pools: Vec<JsonPool> = super::from_json(text)?;
    pools
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            if p.name.is_empty() {
                return Err(IngestError::Document {
                    path: format!("[{i}].name"),
                    message: "pool name must not be empty".into(),
                });
            }
            let raw = match p.share_percent {
                JsonPercent::Number(n) => n.to_string(),
                JsonPercent::Text(s) => s,
            };
            let share = raw.parse().map_err(|message| IngestError::Document {
                path: format!("[{i}].share_percent"),
                message,
            })?;
            Ok((
                format!("[{i}]"),
                PoolShare {
                    name: p.name,
                    share,
                },
            ))
        })
        .collect()
}

fn residual_milli(shares: &[PoolShare], residual_count: usize) -> Result<u64, IngestError> {
    if residual_count == 0 {
        return Err(IngestError::ZeroResidualCount);
    }
    let total: u64 = shares.iter().map(|s| s.share.milli() as u64).sum();
    if total > MILLI_PERCENT_WHOLE as u64 {
        return Err(IngestError::SharesExceedWhole { total_milli: total });
    }
    Ok(MILLI_PERCENT_WHOLE as u64 - total)
}

fn residual_id(i: usize) -> String {
    format!("residual-{i:04}")
}

/// One replica per pool, each with its own configuration and operator, plus
/// `residual_count` replicas splitting the remaining share evenly.
///
/// Power is scaled so the split is exact: the total is `100_000 * residual_count`
/// units, a pool with share `s` thousandths-of-a-percent holds
/// `s * residual_count` units and each residual replica holds the residual
/// share's thousandths-of-a-percent.
pub fn example1_population(
    shares: &[PoolShare],
    residual_count: usize,
) -> Result<Population, IngestError> {
    let residual = residual_milli(shares, residual_count)?;
    let x = residual_count as u64;
    let stack = |name: &str| {
        let component = Component::new(
            ComponentCategory::ApplicationConsensus,
            format!("stack-{name}"),
            "1",
        )
        .expect("non-empty fields");
        Arc::new(Configuration::new([component]).expect("single component"))
    };
    let mut replicas = Vec::with_capacity(shares.len() + residual_count);
    for s in shares {
        replicas.push(Replica::new(
            &s.name,
            &s.name,
            stack(&s.name),
            s.share.milli() as u64 * x,
        ));
    }
    for i in 1..=residual_count {
        let id = residual_id(i);
        replicas.push(Replica::new(&id, &id, stack(&id), residual));
    }
    Ok(Population::new(replicas)?)
}

/// The by-operator distribution of [`example1_population`], built directly
/// from the shares.
pub fn example1_distribution(
    shares: &[PoolShare],
    residual_count: usize,
) -> Result<Distribution, IngestError> {
    let residual = residual_milli(shares, residual_count)?;
    let x = residual_count as u64;
    let pools = shares
        .iter()
        .map(|s| (s.name.clone(), s.share.milli() as u64 * x));
    let rest = (1..=residual_count).map(|i| (residual_id(i), residual));
    Distribution::from_weights(pools.chain(rest)).map_err(IngestError::from)
}
