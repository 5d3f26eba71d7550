//! Synthetic study generation, CSV ingestion and horizontal partitioning.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Bernoulli, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::{sigmoid, LocalDataset};

/// Parameters of a synthetic multi-institution study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Number of coefficients, intercept included.
    pub dim: usize,
    pub institution_sizes: Vec<usize>,
    pub mu: f64,
    pub sigma: f64,
    pub beta_range: (f64, f64),
    pub seed: u64,
}

impl SyntheticSpec {
    /// `total` records spread as evenly as possible over `institutions`.
    pub fn even(total: usize, dim: usize, institutions: usize, seed: u64) -> Self {
        SyntheticSpec {
            dim,
            institution_sizes: even_sizes(total, institutions),
            mu: 0.0,
            sigma: 1.0,
            beta_range: (-1.0, 1.0),
            seed,
        }
    }

    pub fn total_records(&self) -> usize {
        self.institution_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidSpec(format!(
                "need an intercept and at least one covariate, got d={}",
                self.dim
            )));
        }
        if self.institution_sizes.is_empty() {
            return Err(Error::InvalidSpec("no institutions".into()));
        }
        if self.institution_sizes.contains(&0) {
            return Err(Error::InvalidSpec("every institution needs at least one record".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) || !self.mu.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "bad covariate distribution N({}, {}^2)",
                self.mu, self.sigma
            )));
        }
        let (lo, hi) = self.beta_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidSpec(format!("bad coefficient range [{lo}, {hi}]")));
        }
        Ok(())
    }
}

fn even_sizes(total: usize, parts: usize) -> Vec<usize> {
    if parts == 0 {
        return Vec::new();
    }
    (0..parts)
        .map(|j| total / parts + usize::from(j < total % parts))
        .collect()
}

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Draws true coefficients once, then covariates and Bernoulli responses
/// per institution from independent RNG streams.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Vec<LocalDataset>, DVector<f64>)> {
    spec.validate()?;
    let (lo, hi) = spec.beta_range;
    let mut beta_rng = stream(spec.seed, 0);
    let beta = DVector::from_fn(spec.dim, |_, _| {
        if lo == hi {
            lo
        } else {
            beta_rng.random_range(lo..hi)
        }
    });
    let normal = Normal::new(spec.mu, spec.sigma).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let datasets = spec
        .institution_sizes
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let mut rng = stream(spec.seed, j as u64 + 1);
            let mut x = DMatrix::zeros(n, spec.dim);
            let mut y = DVector::zeros(n);
            for i in 0..n {
                x[(i, 0)] = 1.0;
                let mut z = beta[0];
                for k in 1..spec.dim {
                    let v = normal.sample(&mut rng);
                    x[(i, k)] = v;
                    z += beta[k] * v;
                }
                let bern = Bernoulli::new(sigmoid(z)).expect("clamped probability");
                y[i] = if bern.sample(&mut rng) { 1.0 } else { 0.0 };
            }
            LocalDataset::new(j, x, y)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((datasets, beta))
}

/// Where to read a pooled study from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularSource {
    pub path: PathBuf,
    pub response: String,
    /// `None` takes every column except the response.
    pub covariates: Option<Vec<String>>,
    pub delimiter: u8,
    /// Explicit labels for non-numeric responses, e.g. `yes -> 1`.
    pub response_map: Option<HashMap<String, u8>>,
}

impl TabularSource {
    pub fn new(path: impl Into<PathBuf>, response: impl Into<String>) -> Self {
        TabularSource {
            path: path.into(),
            response: response.into(),
            covariates: None,
            delimiter: b',',
            response_map: None,
        }
    }
}

/// Loads a headed CSV; prepends the intercept column and keeps row order.
pub fn load_csv(src: &TabularSource) -> Result<LocalDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(src.delimiter)
        .has_headers(true)
        .from_path(&src.path)?;
    let headers = reader.headers()?.clone();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let response_idx = position(&src.response)?;
    let covariate_idx: Vec<(usize, String)> = match &src.covariates {
        Some(names) => names
            .iter()
            .map(|n| {
                if n == &src.response {
                    return Err(Error::InvalidDataset(format!(
                        "{n:?} is both response and covariate"
                    )));
                }
                Ok((position(n)?, n.clone()))
            })
            .collect::<Result<_>>()?,
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != response_idx)
            .map(|(i, h)| (i, h.trim().to_string()))
            .collect(),
    };
    let d = covariate_idx.len() + 1;
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let raw = record.get(response_idx).unwrap_or("").trim();
        let y = match &src.response_map {
            Some(map) => map.get(raw).copied(),
            None => match raw.parse::<f64>() {
                Ok(0.0) => Some(0),
                Ok(1.0) => Some(1),
                _ => None,
            },
        };
        match y {
            Some(v @ (0 | 1)) => ys.push(v as f64),
            _ => {
                return Err(Error::NonBinaryResponse {
                    row,
                    value: raw.to_string(),
                })
            }
        }
        xs.push(1.0);
        for (i, name) in &covariate_idx {
            let cell = record.get(*i).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: name.clone(),
                message: format!("{cell:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: name.clone(),
                    message: format!("{cell:?} is not finite"),
                });
            }
            xs.push(v);
        }
    }
    let n = ys.len();
    LocalDataset::new(0, DMatrix::from_row_slice(n, d, &xs), DVector::from_vec(ys))
}

/// Writes a dataset as `y,x1,..,x{d-1}` (intercept column dropped).
pub fn write_csv(path: &Path, data: &LocalDataset) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header: Vec<String> = std::iter::once("y".to_string())
        .chain((1..data.dim()).map(|k| format!("x{k}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::new();
    for i in 0..data.rows() {
        line.clear();
        line.push_str(if data.y()[i] == 1.0 { "1" } else { "0" });
        for k in 1..data.dim() {
            line.push(',');
            line.push_str(&data.x()[(i, k)].to_string());
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Shuffles rows with `seed` and splits them into `parts` near-equal pieces.
pub fn partition_horizontal(
    pooled: &LocalDataset,
    parts: usize,
    seed: u64,
) -> Result<Vec<LocalDataset>> {
    let n = pooled.rows();
    if parts == 0 || parts > n {
        return Err(Error::TooManyPartitions { rows: n, parts });
    }
    if parts == 1 {
        let mut only = pooled.clone();
        only.institution_id = 0;
        return Ok(vec![only]);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let mut offset = 0;
    Ok(even_sizes(n, parts)
        .into_iter()
        .enumerate()
        .map(|(j, size)| {
            let rows = &order[offset..offset + size];
            offset += size;
            pooled.select_rows(j, rows)
        })
        .collect())
}
