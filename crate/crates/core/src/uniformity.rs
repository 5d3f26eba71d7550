//! Chi-square goodness-of-fit test for field elements against the uniform
//! distribution on `[0, p)`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::field::{FieldElement, FieldModulus};

pub const DEFAULT_BUCKETS: usize = 64;
pub const DEFAULT_SIGNIFICANCE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityResult {
    pub samples: usize,
    pub buckets: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub significance: f64,
    pub rejected: bool,
}

/// Left edge of bucket `k`: `ceil(k * p / buckets)`, computed without overflow.
fn bucket_edge(k: u128, p: u128, buckets: u128) -> u128 {
    let (q, r) = (p / buckets, p % buckets);
    k * q + (k * r).div_ceil(buckets)
}

/// Tests whether `values` look uniform over the field, using buckets that
/// partition `[0, p)` into `buckets` near-equal integer ranges.
pub fn chi_square_uniform(
    values: &[FieldElement],
    modulus: &FieldModulus,
    buckets: usize,
    significance: f64,
) -> UniformityResult {
    let p = modulus.p();
    let b = buckets.clamp(2, p.min(1 << 20) as usize) as u128;
    let edges: Vec<u128> = (0..=b).map(|k| bucket_edge(k, p, b)).collect();
    let mut counts = vec![0u64; b as usize];
    for v in values {
        let k = edges.partition_point(|&e| e <= v.value()) - 1;
        counts[k] += 1;
    }
    let n = values.len() as f64;
    let statistic: f64 = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let expected = n * (edges[k + 1] - edges[k]) as f64 / p as f64;
            let diff = c as f64 - expected;
            diff * diff / expected
        })
        .sum();
    let dof = (b - 1) as f64;
    let p_value = if values.is_empty() {
        1.0
    } else {
        1.0 - ChiSquared::new(dof).expect("positive dof").cdf(statistic)
    };
    UniformityResult {
        samples: values.len(),
        buckets: b as usize,
        statistic,
        p_value,
        significance,
        rejected: p_value < significance,
    }
}
