//! In-process simulation of the secure estimation protocol.
//!
//! Each iteration runs three phases separated by barriers:
//!
//! 1. every institution computes its [`SummaryBundle`] at the broadcast
//!    coefficients, fixed-point encodes it and secret-shares it, producing one
//!    payload per computation center ([`institution_round`]);
//! 2. every center adds up the shares it received, without talking to any
//!    other center ([`center_aggregate`]);
//! 3. a quorum of at least `t` centers exchanges aggregated shares,
//!    reconstructs the global sums only, and applies the ridge Newton update
//!    ([`center_finalize`]).
//!
//! The new coefficients are broadcast in plaintext. Every message is written
//! to a [`Transcript`] so byte counts and what each center saw can be audited.
//!
//! [`SummaryBundle`]: crate::regression::SummaryBundle

pub mod audit;
pub mod messages;
pub mod transcript;

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldModulus;
use crate::fixed_point::{FixedPoint, DEFAULT_SCALE_EXPONENT};
use crate::regression::{
    check_convergence, local_summaries, penalized_newton_step, LocalDataset, ModelState, Penalty,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::sharing::{reconstruct_grids, ShareGrid, SharedTensor, SharingParams};

pub use audit::{privacy_audit, AuditReport};
pub use messages::{CenterAggregate, CenterPayload, HessianPayload, SharePolicy, ShareSubmission};
pub use transcript::{Envelope, MessageRecord, MessageType, Transcript};

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    pub lambda: f64,
    pub penalize_intercept: bool,
    pub sharing: SharingParams,
    pub modulus: FieldModulus,
    pub scale_exponent: u32,
    pub tol: f64,
    pub max_iter: usize,
    pub share_policy: SharePolicy,
    pub rng_seed: u64,
    /// Centers that reconstruct aggregates; defaults to `1..=t`.
    pub quorum: Option<Vec<u64>>,
    /// Keep message bodies in the transcript (needed for auditing).
    pub record_bodies: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            lambda: 1.0,
            penalize_intercept: true,
            sharing: SharingParams {
                threshold: 2,
                parties: 3,
            },
            modulus: FieldModulus::default(),
            scale_exponent: DEFAULT_SCALE_EXPONENT,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            share_policy: SharePolicy::AllSummaries,
            rng_seed: 0,
            quorum: None,
            record_bodies: true,
        }
    }
}

impl ProtocolConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        ProtocolConfig {
            lambda,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sharing.validate_for(&self.modulus)?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda {} must be >= 0", self.lambda)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig(format!("tolerance {} must be > 0", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if self.scale_exponent > 100 {
            return Err(Error::InvalidConfig(format!(
                "scale exponent {} leaves no headroom",
                self.scale_exponent
            )));
        }
        let quorum = self.quorum();
        if quorum.len() < self.sharing.threshold {
            return Err(Error::InvalidConfig(format!(
                "quorum of {} below threshold {}",
                quorum.len(),
                self.sharing.threshold
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for &c in &quorum {
            if c == 0 || c as usize > self.sharing.parties || !seen.insert(c) {
                return Err(Error::InvalidConfig(format!("bad quorum member {c}")));
            }
        }
        Ok(())
    }

    pub fn quorum(&self) -> Vec<u64> {
        self.quorum
            .clone()
            .unwrap_or_else(|| (1..=self.sharing.threshold as u64).collect())
    }

    pub fn penalty(&self) -> Penalty {
        Penalty {
            lambda: self.lambda,
            penalize_intercept: self.penalize_intercept,
        }
    }

    /// Codec sized so `institutions` encodings can be summed without wrapping.
    pub fn codec(&self, institutions: usize) -> FixedPoint {
        FixedPoint::new(self.modulus, self.scale_exponent, institutions)
    }
}

fn round_rng(cfg: &ProtocolConfig, iteration: usize, institution: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(((iteration as u64) << 32) | institution as u64);
    rng
}

/// Computes, encodes and shares one institution's summaries at `beta`.
///
/// `institutions` is the total number of participants, which sets the
/// fixed-point headroom for the later sum.
pub fn institution_round(
    data: &LocalDataset,
    beta: &DVector<f64>,
    iteration: usize,
    institutions: usize,
    cfg: &ProtocolConfig,
) -> Result<ShareSubmission> {
    let summary = local_summaries(data, beta)?;
    let d = data.dim();
    let codec = cfg.codec(institutions);
    let mut rng = round_rng(cfg, iteration, data.institution_id);

    let gradient = SharedTensor::share_reals(
        summary.gradient.as_slice(),
        (d, 1),
        &codec,
        cfg.sharing,
        &mut rng,
    )?;
    let deviance =
        SharedTensor::share_reals(&[summary.deviance], (1, 1), &codec, cfg.sharing, &mut rng)?;
    let hessian = match cfg.share_policy {
        SharePolicy::AllSummaries => {
            let row_major: Vec<f64> = summary.hessian.transpose().as_slice().to_vec();
            Some(SharedTensor::share_reals(
                &row_major,
                (d, d),
                &codec,
                cfg.sharing,
                &mut rng,
            )?)
        }
        SharePolicy::GradientOnly => None,
    };

    let mut hessian_grids = hessian.map(|h| h.into_grids().into_iter());
    let payloads = gradient
        .into_grids()
        .into_iter()
        .zip(deviance.into_grids())
        .map(|(g, dev)| CenterPayload {
            center_id: g.eval_point,
            hessian: match hessian_grids.as_mut() {
                Some(it) => HessianPayload::Shared(it.next().expect("one grid per center")),
                None => HessianPayload::Plaintext(summary.hessian.clone()),
            },
            gradient: g,
            deviance: dev,
        })
        .collect();
    Ok(ShareSubmission {
        institution_id: data.institution_id,
        iteration,
        payloads,
    })
}

/// Adds up, locally at `center_id`, the shares from every institution.
///
/// Institutions are identified `0..institutions`; a missing one aborts the
/// iteration.
pub fn center_aggregate(
    submissions: &[ShareSubmission],
    center_id: u64,
    iteration: usize,
    institutions: usize,
) -> Result<CenterAggregate> {
    let mut by_institution: Vec<Option<&CenterPayload>> = vec![None; institutions];
    for s in submissions {
        if s.iteration != iteration {
            return Err(Error::IterationMismatch {
                expected: iteration,
                got: s.iteration,
            });
        }
        if s.institution_id >= institutions {
            return Err(Error::InvalidConfig(format!(
                "unregistered institution {}",
                s.institution_id
            )));
        }
        let payload = s.payload_for(center_id).ok_or_else(|| {
            Error::LayoutMismatch(format!(
                "institution {} sent nothing for center {center_id}",
                s.institution_id
            ))
        })?;
        by_institution[s.institution_id] = Some(payload);
    }
    let payloads = by_institution
        .into_iter()
        .enumerate()
        .map(|(institution, p)| p.ok_or(Error::MissingSubmission { institution, iteration }))
        .collect::<Result<Vec<_>>>()?;

    let first = payloads[0];
    let mut gradient = first.gradient.clone();
    let mut deviance = first.deviance.clone();
    let mut hessian = first.hessian.clone();
    for p in &payloads[1..] {
        gradient.add_assign(&p.gradient)?;
        deviance.add_assign(&p.deviance)?;
        match (&mut hessian, &p.hessian) {
            (HessianPayload::Shared(acc), HessianPayload::Shared(g)) => acc.add_assign(g)?,
            (HessianPayload::Plaintext(acc), HessianPayload::Plaintext(m)) => {
                if acc.shape() != m.shape() {
                    return Err(Error::ShapeMismatch(acc.shape(), m.shape()));
                }
                *acc += m;
            }
            _ => {
                return Err(Error::LayoutMismatch(
                    "mixed Hessian encodings across institutions".into(),
                ))
            }
        }
    }
    Ok(CenterAggregate {
        center_id,
        iteration,
        institutions,
        gradient,
        deviance,
        hessian,
    })
}

/// Result of reconstructing the aggregates and taking one Newton step.
#[derive(Clone, Debug, PartialEq)]
pub struct FinalizeOutput {
    pub beta_new: DVector<f64>,
    /// Deviance at the coefficients the summaries were computed at.
    pub deviance: f64,
    pub hessian_sum: DMatrix<f64>,
    pub gradient_sum: DVector<f64>,
}

fn decode_grid(grids: &[&ShareGrid], codec: &FixedPoint) -> Result<Vec<f64>> {
    Ok(reconstruct_grids(grids)?
        .into_iter()
        .map(|e| codec.decode(e))
        .collect())
}

/// Reconstructs the global sums from at least `t` center aggregates and
/// applies the penalized Newton update.
pub fn center_finalize(
    aggregates: &[CenterAggregate],
    beta_old: &DVector<f64>,
    cfg: &ProtocolConfig,
) -> Result<FinalizeOutput> {
    if aggregates.len() < cfg.sharing.threshold {
        return Err(Error::InsufficientShares {
            got: aggregates.len(),
            need: cfg.sharing.threshold,
        });
    }
    let first = &aggregates[0];
    for a in &aggregates[1..] {
        if a.iteration != first.iteration {
            return Err(Error::IterationMismatch {
                expected: first.iteration,
                got: a.iteration,
            });
        }
    }
    let codec = cfg.codec(first.institutions);
    let d = beta_old.len();

    let grads: Vec<&ShareGrid> = aggregates.iter().map(|a| &a.gradient).collect();
    let gradient_sum = DVector::from_vec(decode_grid(&grads, &codec)?);
    if gradient_sum.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: gradient_sum.len(),
        });
    }
    let devs: Vec<&ShareGrid> = aggregates.iter().map(|a| &a.deviance).collect();
    let deviance = decode_grid(&devs, &codec)?[0];

    let hessian_sum = match &first.hessian {
        HessianPayload::Plaintext(m) => m.clone(),
        HessianPayload::Shared(_) => {
            let grids = aggregates
                .iter()
                .map(|a| match &a.hessian {
                    HessianPayload::Shared(g) => Ok(g),
                    HessianPayload::Plaintext(_) => Err(Error::LayoutMismatch(
                        "mixed Hessian encodings across centers".into(),
                    )),
                })
                .collect::<Result<Vec<_>>>()?;
            let (rows, cols) = grids[0].shape();
            DMatrix::from_row_slice(rows, cols, &decode_grid(&grids, &codec)?)
        }
    };
    let beta_new = penalized_newton_step(&hessian_sum, &gradient_sum, beta_old, &cfg.penalty())?;
    Ok(FinalizeOutput {
        beta_new,
        deviance,
        hessian_sum,
        gradient_sum,
    })
}

/// Outcome of a protocol run, with the accounting behind it.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub model: ModelState,
    pub samples: usize,
    pub institutions: usize,
    pub central_phase_seconds: f64,
    pub total_seconds: f64,
    pub bytes_transmitted: u64,
    pub quorum: Vec<u64>,
    pub transcript: Transcript,
}

impl FitResult {
    pub fn iterations(&self) -> usize {
        self.model.iteration
    }

    pub fn deviance_trace(&self) -> &[f64] {
        &self.model.deviance_history
    }

    pub fn report(&self) -> FitReport {
        FitReport {
            samples: self.samples,
            covariates: self.model.beta.len().saturating_sub(1),
            coefficients: self.model.beta.len(),
            institutions: self.institutions,
            iterations: self.model.iteration,
            converged: self.model.converged,
            central_runtime_seconds: self.central_phase_seconds,
            total_runtime_seconds: self.total_seconds,
            bytes_transmitted: self.bytes_transmitted,
            megabytes_transmitted: self.bytes_transmitted as f64 / 1e6,
            beta: self.model.beta.iter().map(|&v| messages::format_real(v)).collect(),
            deviance_trace: self.model.deviance_history.clone(),
        }
    }
}

/// JSON export of a [`FitResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub samples: usize,
    /// Intercept excluded.
    pub covariates: usize,
    pub coefficients: usize,
    pub institutions: usize,
    pub iterations: usize,
    pub converged: bool,
    pub central_runtime_seconds: f64,
    pub total_runtime_seconds: f64,
    pub bytes_transmitted: u64,
    pub megabytes_transmitted: f64,
    pub beta: Vec<String>,
    pub deviance_trace: Vec<f64>,
}

fn institution_name(id: usize) -> String {
    format!("institution-{id}")
}

fn center_name(id: u64) -> String {
    format!("center-{id}")
}

/// Runs the full iterative protocol over `datasets`, one per institution.
///
/// Institution ids are reassigned to `0..S` in slice order. Stops when
/// successive deviances differ by less than `cfg.tol` or after
/// `cfg.max_iter` iterations, in which case `model.converged` is false.
pub fn run_protocol(datasets: &[LocalDataset], cfg: &ProtocolConfig) -> Result<FitResult> {
    cfg.validate()?;
    let first = datasets
        .first()
        .ok_or_else(|| Error::InvalidDataset("no institutions".into()))?;
    let d = first.dim();
    for ds in datasets {
        if ds.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: ds.dim(),
            });
        }
    }
    let institutions = datasets.len();
    let datasets: Vec<LocalDataset> = datasets
        .iter()
        .enumerate()
        .map(|(j, ds)| {
            let mut ds = ds.clone();
            ds.institution_id = j;
            ds
        })
        .collect();
    let quorum = cfg.quorum();
    let transcript = Transcript::new(cfg.record_bodies);
    let started = Instant::now();
    let mut central = Duration::ZERO;

    let mut beta = DVector::zeros(d);
    let mut history = Vec::new();
    let mut converged = false;

    for iteration in 1..=cfg.max_iter {
        let ctx = |e: Error| e.at_iteration(iteration);

        let submissions = datasets
            .par_iter()
            .map(|ds| institution_round(ds, &beta, iteration, institutions, cfg))
            .collect::<Result<Vec<_>>>()
            .map_err(ctx)?;
        submissions
            .par_iter()
            .flat_map(|s| s.payloads.par_iter().map(move |p| (s.institution_id, p)))
            .try_for_each(|(inst, p)| {
                transcript
                    .append(Envelope {
                        msg_type: MessageType::Submission,
                        iteration,
                        sender: institution_name(inst),
                        receiver: center_name(p.center_id),
                        body: p.to_body(inst),
                    })
                    .map(|_| ())
            })
            .map_err(ctx)?;

        // Centers are independent parties working concurrently, so the
        // phase costs as much as the slowest of them.
        let timed = (1..=cfg.sharing.parties as u64)
            .into_par_iter()
            .map(|c| {
                let t0 = Instant::now();
                center_aggregate(&submissions, c, iteration, institutions).map(|a| (a, t0.elapsed()))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(ctx)?;
        central += timed.iter().map(|(_, t)| *t).max().unwrap_or_default();
        let aggregates: Vec<CenterAggregate> = timed.into_iter().map(|(a, _)| a).collect();

        // Quorum members send their aggregates to each other; the lead
        // center rebuilds its peers' aggregates from the bytes it received.
        let mut slowest_send = Duration::ZERO;
        let mut received = Vec::with_capacity(quorum.len());
        for &c in &quorum {
            let agg = &aggregates[c as usize - 1];
            let t0 = Instant::now();
            let body = agg.to_body();
            slowest_send = slowest_send.max(t0.elapsed());
            for &peer in quorum.iter().filter(|&&p| p != c) {
                transcript
                    .append(Envelope {
                        msg_type: MessageType::Aggregate,
                        iteration,
                        sender: center_name(c),
                        receiver: center_name(peer),
                        body: body.clone(),
                    })
                    .map_err(ctx)?;
            }
            received.push((c, body));
        }

        let t0 = Instant::now();
        let quorum_aggs = received
            .iter()
            .map(|(c, body)| {
                if *c == quorum[0] {
                    Ok(aggregates[*c as usize - 1].clone())
                } else {
                    CenterAggregate::from_body(iteration, body)
                }
            })
            .collect::<Result<Vec<_>>>()
            .map_err(ctx)?;
        let out = center_finalize(&quorum_aggs, &beta, cfg).map_err(ctx)?;
        central += slowest_send + t0.elapsed();

        history.push(out.deviance);
        beta = out.beta_new;
        converged = check_convergence(&history, cfg.tol);

        let body = messages::beta_body(&beta, converged);
        for j in 0..institutions {
            transcript
                .append(Envelope {
                    msg_type: MessageType::BetaBroadcast,
                    iteration,
                    sender: center_name(quorum[0]),
                    receiver: institution_name(j),
                    body: body.clone(),
                })
                .map_err(ctx)?;
        }
        if converged {
            break;
        }
    }

    let total = started.elapsed();
    Ok(FitResult {
        model: ModelState {
            beta,
            iteration: history.len(),
            deviance_history: history,
            converged,
        },
        samples: datasets.iter().map(|d| d.rows()).sum(),
        institutions,
        central_phase_seconds: central.as_secs_f64(),
        total_seconds: total.as_secs_f64(),
        bytes_transmitted: transcript.total_bytes(),
        quorum,
        transcript,
    })
}
