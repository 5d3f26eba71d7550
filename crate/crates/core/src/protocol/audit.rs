//! Checks what a coalition of fewer than `t` centers could learn from the
//! transcript.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::Serialize;
use serde_json::Value;

use super::messages::{AggregateBody, BetaBody, HessianWire, SharePolicy, SubmissionBody};
use super::transcript::{MessageRecord, MessageType, Transcript};
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldModulus};
use crate::regression::LocalDataset;
use crate::sharing::GridWire;
use crate::uniformity::{chi_square_uniform, UniformityResult, DEFAULT_BUCKETS, DEFAULT_SIGNIFICANCE};

/// Fewer samples than this and the uniformity test is skipped.
const MIN_UNIFORMITY_SAMPLES: usize = 5 * DEFAULT_BUCKETS;

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub subset: Vec<u64>,
    pub messages_inspected: usize,
    pub share_values_observed: usize,
    /// Plaintext summary values (Hessian, gradient or deviance entries).
    pub plaintext_summary_values: usize,
    /// Summaries visible in plaintext because the share policy allows it.
    pub policy_exposed: Vec<String>,
    /// (institution, iteration) pairs for which the subset holds `t` shares.
    pub reconstructable_institution_values: usize,
    pub raw_rows_found: usize,
    /// Messages whose body does not parse as a known message type.
    pub unrecognized_messages: usize,
    pub uniformity: Option<UniformityResult>,
    pub passed: bool,
}

#[derive(Default)]
struct Observed {
    shares: Vec<FieldElement>,
    modulus: Option<FieldModulus>,
    threshold: usize,
    plaintext_hessian: usize,
    plaintext_reals: HashSet<u64>,
    // (iteration, institution) -> distinct centers holding a share of it
    holders: HashMap<(usize, usize), BTreeSet<u64>>,
}

impl Observed {
    fn grid(&mut self, g: &GridWire) -> Result<()> {
        if self.modulus.is_none() {
            let p: u128 = g
                .modulus
                .parse()
                .map_err(|_| Error::Malformed(format!("modulus {:?}", g.modulus)))?;
            self.modulus = Some(FieldModulus::new(p)?);
            self.threshold = g.t;
        }
        let m = self.modulus.expect("set above");
        for (_, _, v) in &g.entries {
            let v: u128 = v
                .parse()
                .map_err(|_| Error::Malformed(format!("share value {v:?}")))?;
            self.shares.push(m.element(v));
        }
        Ok(())
    }

    fn hessian(&mut self, h: &HessianWire) -> Result<()> {
        match h {
            HessianWire::Shared { grid } => self.grid(grid),
            HessianWire::Plaintext { values } => {
                for s in values.iter().flatten() {
                    self.plaintext_hessian += 1;
                    if let Ok(v) = s.parse::<f64>() {
                        self.plaintext_reals.insert(v.to_bits());
                    }
                }
                Ok(())
            }
        }
    }

    fn record(&mut self, r: &MessageRecord) -> Result<bool> {
        let Some(body) = &r.body else {
            return Ok(false);
        };
        match r.msg_type {
            MessageType::Submission => {
                let Ok(b) = serde_json::from_value::<SubmissionBody>(body.clone()) else {
                    return Ok(false);
                };
                self.grid(&b.gradient)?;
                self.grid(&b.deviance)?;
                self.hessian(&b.hessian)?;
                self.holders
                    .entry((r.iteration, b.institution_id))
                    .or_default()
                    .insert(b.gradient.center_id);
            }
            MessageType::Aggregate => {
                let Ok(b) = serde_json::from_value::<AggregateBody>(body.clone()) else {
                    return Ok(false);
                };
                self.grid(&b.gradient)?;
                self.grid(&b.deviance)?;
                self.hessian(&b.hessian)?;
            }
            MessageType::BetaBroadcast => {
                let Ok(b) = serde_json::from_value::<BetaBody>(body.clone()) else {
                    return Ok(false);
                };
                for s in &b.beta {
                    if let Ok(v) = s.parse::<f64>() {
                        self.plaintext_reals.insert(v.to_bits());
                    }
                }
            }
        }
        Ok(true)
    }
}

fn center_of(name: &str) -> Option<u64> {
    name.strip_prefix("center-")?.parse().ok()
}

/// Audits everything the centers in `subset` sent or received.
///
/// `policy` says which plaintext is permitted. With `datasets`, each record's
/// covariates are also searched for among the plaintext reals the subset saw.
/// The transcript must have been recorded with bodies.
pub fn privacy_audit(
    transcript: &Transcript,
    subset: &[u64],
    threshold: usize,
    policy: SharePolicy,
    datasets: Option<&[LocalDataset]>,
) -> Result<AuditReport> {
    if subset.is_empty() || subset.len() >= threshold {
        return Err(Error::InvalidConfig(format!(
            "audit subset must have 1..{threshold} centers, got {}",
            subset.len()
        )));
    }
    if !transcript.keeps_bodies() {
        return Err(Error::InvalidConfig("transcript was recorded without bodies".into()));
    }
    let members: HashSet<u64> = subset.iter().copied().collect();
    let visible = |r: &MessageRecord| {
        [&r.sender, &r.receiver]
            .iter()
            .any(|n| center_of(n).is_some_and(|c| members.contains(&c)))
    };

    let mut seen = Observed::default();
    let mut inspected = 0;
    let mut unrecognized = 0;
    // an aggregate sent to several peers is one observation, not several
    let mut distinct = HashSet::new();
    for r in transcript.records().iter().filter(|r| visible(r)) {
        inspected += 1;
        let key = (r.msg_type, r.iteration, r.sender.clone(), r.body.as_ref().map(Value::to_string));
        if !distinct.insert(key) {
            continue;
        }
        if !seen.record(r)? {
            unrecognized += 1;
        }
    }

    let reconstructable = seen
        .holders
        .values()
        .filter(|c| seen.threshold > 0 && c.len() >= seen.threshold)
        .count();

    let raw_rows_found = datasets.map_or(0, |sets| {
        sets.iter()
            .flat_map(|ds| (0..ds.rows()).map(move |i| ds.row(i)))
            .filter(|row| {
                let covariates = &row[1.min(row.len())..];
                !covariates.is_empty()
                    && covariates
                        .iter()
                        .all(|v| seen.plaintext_reals.contains(&v.to_bits()))
            })
            .count()
    });

    let uniformity = match seen.modulus {
        Some(m) if seen.shares.len() >= MIN_UNIFORMITY_SAMPLES => Some(chi_square_uniform(
            &seen.shares,
            &m,
            DEFAULT_BUCKETS,
            DEFAULT_SIGNIFICANCE,
        )),
        _ => None,
    };

    let mut policy_exposed = Vec::new();
    if seen.plaintext_hessian > 0 {
        policy_exposed.push("hessian".to_string());
    }
    let plaintext_ok = seen.plaintext_hessian == 0 || policy == SharePolicy::GradientOnly;
    let passed = plaintext_ok
        && reconstructable == 0
        && raw_rows_found == 0
        && unrecognized == 0
        && uniformity.as_ref().is_none_or(|u| !u.rejected);

    Ok(AuditReport {
        subset: subset.to_vec(),
        messages_inspected: inspected,
        share_values_observed: seen.shares.len(),
        plaintext_summary_values: seen.plaintext_hessian,
        policy_exposed,
        reconstructable_institution_values: reconstructable,
        raw_rows_found,
        unrecognized_messages: unrecognized,
        uniformity,
        passed,
    })
}
