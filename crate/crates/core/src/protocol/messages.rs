//! Payloads exchanged between institutions and computation centers, and
//! their JSON bodies.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::sharing::{GridWire, ShareGrid};

/// Which per-institution summaries travel secret-shared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharePolicy {
    /// Gradient and deviance are shared; the Hessian travels in plaintext.
    GradientOnly,
    /// Hessian, gradient and deviance are all shared.
    AllSummaries,
}

impl fmt::Display for SharePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SharePolicy::GradientOnly => "gradient-only",
            SharePolicy::AllSummaries => "all",
        })
    }
}

impl FromStr for SharePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient-only" | "gradient_only" => Ok(SharePolicy::GradientOnly),
            "all" | "all-summaries" | "all_summaries" => Ok(SharePolicy::AllSummaries),
            other => Err(Error::InvalidConfig(format!("unknown share policy {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum HessianPayload {
    Shared(ShareGrid),
    Plaintext(DMatrix<f64>),
}

impl HessianPayload {
    pub fn is_plaintext(&self) -> bool {
        matches!(self, HessianPayload::Plaintext(_))
    }
}

/// What one institution sends to one center in one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterPayload {
    pub center_id: u64,
    pub gradient: ShareGrid,
    pub deviance: ShareGrid,
    pub hessian: HessianPayload,
}

/// One institution's output for one iteration: a payload per center.
#[derive(Clone, Debug, PartialEq)]
pub struct ShareSubmission {
    pub institution_id: usize,
    pub iteration: usize,
    pub payloads: Vec<CenterPayload>,
}

impl ShareSubmission {
    pub fn payload_for(&self, center_id: u64) -> Option<&CenterPayload> {
        self.payloads.iter().find(|p| p.center_id == center_id)
    }
}

/// A center's local sum of its shares across all institutions.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterAggregate {
    pub center_id: u64,
    pub iteration: usize,
    pub institutions: usize,
    pub gradient: ShareGrid,
    pub deviance: ShareGrid,
    pub hessian: HessianPayload,
}

/// Reals travel as decimal strings with 17 significant digits.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_real(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Malformed(format!("real {s:?}")))
}

fn matrix_to_strings(m: &DMatrix<f64>) -> Vec<Vec<String>> {
    m.row_iter()
        .map(|r| r.iter().map(|&v| format_real(v)).collect())
        .collect()
}

fn matrix_from_strings(rows: &[Vec<String>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Malformed("ragged plaintext matrix".into()));
    }
    let flat = rows
        .iter()
        .flatten()
        .map(|s| parse_real(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_row_slice(n, m, &flat))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "snake_case", deny_unknown_fields)]
pub enum HessianWire {
    Shared { grid: GridWire },
    Plaintext { values: Vec<Vec<String>> },
}

impl HessianWire {
    fn from_payload(h: &HessianPayload) -> Self {
        match h {
            HessianPayload::Shared(g) => HessianWire::Shared { grid: g.to_wire() },
            HessianPayload::Plaintext(m) => HessianWire::Plaintext {
                values: matrix_to_strings(m),
            },
        }
    }

    fn into_payload(self) -> Result<HessianPayload> {
        Ok(match self {
            HessianWire::Shared { grid } => HessianPayload::Shared(ShareGrid::from_wire(&grid)?),
            HessianWire::Plaintext { values } => {
                HessianPayload::Plaintext(matrix_from_strings(&values)?)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmissionBody {
    pub institution_id: usize,
    pub gradient: GridWire,
    pub deviance: GridWire,
    pub hessian: HessianWire,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateBody {
    pub center_id: u64,
    pub institutions: usize,
    pub gradient: GridWire,
    pub deviance: GridWire,
    pub hessian: HessianWire,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaBody {
    pub beta: Vec<String>,
    pub converged: bool,
}

impl CenterPayload {
    pub fn to_body(&self, institution_id: usize) -> Value {
        serde_json::to_value(SubmissionBody {
            institution_id,
            gradient: self.gradient.to_wire(),
            deviance: self.deviance.to_wire(),
            hessian: HessianWire::from_payload(&self.hessian),
        })
        .expect("plain data serializes")
    }

    /// Parses a submission body back into `(institution_id, payload)`.
    pub fn from_body(body: &Value) -> Result<(usize, CenterPayload)> {
        let b: SubmissionBody = serde_json::from_value(body.clone())?;
        let gradient = ShareGrid::from_wire(&b.gradient)?;
        Ok((
            b.institution_id,
            CenterPayload {
                center_id: gradient.eval_point,
                deviance: ShareGrid::from_wire(&b.deviance)?,
                hessian: b.hessian.into_payload()?,
                gradient,
            },
        ))
    }
}

impl CenterAggregate {
    pub fn to_body(&self) -> Value {
        serde_json::to_value(AggregateBody {
            center_id: self.center_id,
            institutions: self.institutions,
            gradient: self.gradient.to_wire(),
            deviance: self.deviance.to_wire(),
            hessian: HessianWire::from_payload(&self.hessian),
        })
        .expect("plain data serializes")
    }

    pub fn from_body(iteration: usize, body: &Value) -> Result<CenterAggregate> {
        let b: AggregateBody = serde_json::from_value(body.clone())?;
        Ok(CenterAggregate {
            center_id: b.center_id,
            iteration,
            institutions: b.institutions,
            gradient: ShareGrid::from_wire(&b.gradient)?,
            deviance: ShareGrid::from_wire(&b.deviance)?,
            hessian: b.hessian.into_payload()?,
        })
    }
}

pub fn beta_body(beta: &DVector<f64>, converged: bool) -> Value {
    serde_json::to_value(BetaBody {
        beta: beta.iter().map(|&v| format_real(v)).collect(),
        converged,
    })
    .expect("plain data serializes")
}

pub fn beta_from_body(body: &Value) -> Result<DVector<f64>> {
    let b: BetaBody = serde_json::from_value(body.clone())?;
    let v = b.beta.iter().map(|s| parse_real(s)).collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(v))
}
