//! Entropy of a pool snapshot as the residual share is spread over more miners.

use replidiv_core::ingest::{example1_distribution, IngestError, PoolShare};
use replidiv_core::metrics::entropy_bits;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Figure1Row {
    /// Residual miners sharing the unattributed power.
    pub x: usize,
    pub total_miners: usize,
    pub entropy_bits: f64,
}

pub fn figure1_rows(shares: &[PoolShare], x_max: usize) -> Result<Vec<Figure1Row>, IngestError> {
    (1..=x_max)
        .map(|x| {
            let dist = example1_distribution(shares, x)?;
            Ok(Figure1Row {
                x,
                total_miners: shares.len() + x,
                entropy_bits: entropy_bits(&dist),
            })
        })
        .collect()
}

pub fn figure1_csv(rows: &[Figure1Row]) -> String {
    let mut out = String::from("x,total_miners,entropy_bits\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.x,
            r.total_miners,
            significant(r.entropy_bits, 12)
        ));
    }
    out
}

/// Fixed-point rendering of `v` rounded to `digits` significant digits.
pub fn significant(v: f64, digits: usize) -> String {
    assert!(digits > 0);
    if v == 0.0 || !v.is_finite() {
        return format!("{:.*}", digits - 1, v);
    }
    // let the formatter do the rounding, then read back the exponent
    let sci = format!("{:.*e}", digits - 1, v);
    let exp: i64 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    let decimals = (digits as i64 - 1 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}
