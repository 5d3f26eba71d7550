//! Shamir t-out-of-w secret sharing over [`FieldModulus`], extended to
//! matrices, with share-local addition and public-constant scaling.
//!
//! Center `j` (1-based) always holds the evaluation at `x = j`, so a share's
//! evaluation point doubles as the id of the center holding it.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldModulus};
use crate::fixed_point::FixedPoint;

/// Threshold `t` and number of share holders `w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SharingParams {
    pub threshold: usize,
    pub parties: usize,
}

impl SharingParams {
    pub fn new(threshold: usize, parties: usize) -> Result<Self> {
        let params = SharingParams { threshold, parties };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.threshold < 2 {
            return Err(Error::InvalidParams(format!(
                "threshold must be at least 2, got {}",
                self.threshold
            )));
        }
        if self.threshold > self.parties {
            return Err(Error::InvalidParams(format!(
                "threshold {} exceeds share holders {}",
                self.threshold, self.parties
            )));
        }
        Ok(())
    }

    /// Checks that `1..=w` are distinct nonzero elements of the field.
    pub fn validate_for(&self, modulus: &FieldModulus) -> Result<()> {
        self.validate()?;
        if self.parties as u128 >= modulus.p() {
            return Err(Error::InvalidParams(format!(
                "{} share holders need distinct nonzero points mod {}",
                self.parties,
                modulus.p()
            )));
        }
        Ok(())
    }
}

/// One point `(x, q(x))` of a secret polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Share {
    pub eval_point: u64,
    pub value: FieldElement,
}

fn horner(coeffs: &[FieldElement], x: FieldElement, modulus: &FieldModulus) -> FieldElement {
    coeffs
        .iter()
        .rev()
        .fold(FieldElement::ZERO, |acc, &c| modulus.add(modulus.mul(acc, x), c))
}

/// Shares `m` using explicit higher-order coefficients `a_1..a_{t-1}`.
pub fn share_with_coefficients(
    m: FieldElement,
    coefficients: &[FieldElement],
    parties: usize,
    modulus: &FieldModulus,
) -> Vec<Share> {
    let mut poly = Vec::with_capacity(coefficients.len() + 1);
    poly.push(m);
    poly.extend_from_slice(coefficients);
    (1..=parties as u64)
        .map(|x| Share {
            eval_point: x,
            value: horner(&poly, modulus.element(x as u128), modulus),
        })
        .collect()
}

/// Splits `m` into `w` shares; any `t` of them determine `m`.
pub fn share_secret<R: Rng + ?Sized>(
    m: FieldElement,
    params: SharingParams,
    modulus: &FieldModulus,
    rng: &mut R,
) -> Result<Vec<Share>> {
    params.validate_for(modulus)?;
    let coeffs: Vec<FieldElement> = (1..params.threshold)
        .map(|_| random_element(rng, modulus))
        .collect();
    Ok(share_with_coefficients(m, &coeffs, params.parties, modulus))
}

fn random_element<R: Rng + ?Sized>(rng: &mut R, modulus: &FieldModulus) -> FieldElement {
    modulus.element(rng.random_range(0..modulus.p()))
}

/// Lagrange basis values `L_j(0)` for the given distinct nonzero points.
pub fn lagrange_at_zero(points: &[u64], modulus: &FieldModulus) -> Result<Vec<FieldElement>> {
    let mut seen = HashSet::with_capacity(points.len());
    for &x in points {
        if x == 0 || (x as u128).is_multiple_of(modulus.p()) {
            return Err(Error::ZeroEvalPoint);
        }
        if !seen.insert(x as u128 % modulus.p()) {
            return Err(Error::DuplicateEvalPoint(x));
        }
    }
    points
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            let xj = modulus.element(xj as u128);
            let mut num = FieldElement::ONE;
            let mut den = FieldElement::ONE;
            for (k, &xk) in points.iter().enumerate() {
                if k == j {
                    continue;
                }
                let xk = modulus.element(xk as u128);
                num = modulus.mul(num, xk);
                den = modulus.mul(den, modulus.sub(xk, xj));
            }
            Ok(modulus.mul(num, modulus.inverse(den)?))
        })
        .collect()
}

/// Recovers `q(0)` from at least `t` shares.
pub fn reconstruct_secret(
    shares: &[Share],
    params: SharingParams,
    modulus: &FieldModulus,
) -> Result<FieldElement> {
    if shares.len() < params.threshold {
        return Err(Error::InsufficientShares {
            got: shares.len(),
            need: params.threshold,
        });
    }
    let points: Vec<u64> = shares.iter().map(|s| s.eval_point).collect();
    let basis = lagrange_at_zero(&points, modulus)?;
    Ok(shares
        .iter()
        .zip(&basis)
        .fold(FieldElement::ZERO, |acc, (s, &l)| {
            modulus.add(acc, modulus.mul(s.value, l))
        }))
}

/// A single center's shares of every entry of a `rows x cols` matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareGrid {
    pub eval_point: u64,
    pub rows: usize,
    pub cols: usize,
    pub scale_exponent: u32,
    pub params: SharingParams,
    pub modulus: FieldModulus,
    /// Row-major.
    pub values: Vec<FieldElement>,
}

impl ShareGrid {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> FieldElement {
        self.values[row * self.cols + col]
    }

    fn check_compatible(&self, other: &ShareGrid) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(self.shape(), other.shape()));
        }
        if self.scale_exponent != other.scale_exponent {
            return Err(Error::ScaleMismatch(self.scale_exponent, other.scale_exponent));
        }
        if self.eval_point != other.eval_point {
            return Err(Error::LayoutMismatch(format!(
                "evaluation points {} and {}",
                self.eval_point, other.eval_point
            )));
        }
        if self.params != other.params || self.modulus != other.modulus {
            return Err(Error::LayoutMismatch(
                "sharing parameters or modulus differ".into(),
            ));
        }
        Ok(())
    }

    /// Share-local addition; the result is this center's share of the sum.
    pub fn secure_add(&self, other: &ShareGrid) -> Result<ShareGrid> {
        self.check_compatible(other)?;
        let m = self.modulus;
        Ok(ShareGrid {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| m.add(a, b))
                .collect(),
            ..self.clone()
        })
    }

    pub fn add_assign(&mut self, other: &ShareGrid) -> Result<()> {
        self.check_compatible(other)?;
        let m = self.modulus;
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a = m.add(*a, b);
        }
        Ok(())
    }

    pub fn secure_scale_public(&self, c: FieldElement) -> ShareGrid {
        let m = self.modulus;
        let c = m.element(c.value());
        ShareGrid {
            values: self.values.iter().map(|&v| m.mul(v, c)).collect(),
            ..self.clone()
        }
    }

    pub fn to_wire(&self) -> GridWire {
        GridWire {
            modulus: self.modulus.p().to_string(),
            scale_exponent: self.scale_exponent,
            t: self.params.threshold,
            w: self.params.parties,
            shape: [self.rows, self.cols],
            center_id: self.eval_point,
            entries: self
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| (i / self.cols, i % self.cols, v.to_string()))
                .collect(),
        }
    }

    pub fn from_wire(wire: &GridWire) -> Result<ShareGrid> {
        let p: u128 = wire
            .modulus
            .parse()
            .map_err(|_| Error::Malformed(format!("modulus {:?}", wire.modulus)))?;
        let modulus = FieldModulus::new(p)?;
        let params = SharingParams::new(wire.t, wire.w)?;
        let [rows, cols] = wire.shape;
        if wire.entries.len() != rows * cols {
            return Err(Error::Malformed(format!(
                "{} entries for shape {rows}x{cols}",
                wire.entries.len()
            )));
        }
        let mut values = vec![None; rows * cols];
        for (r, c, v) in &wire.entries {
            if *r >= rows || *c >= cols {
                return Err(Error::Malformed(format!("entry ({r},{c}) out of bounds")));
            }
            let v: u128 = v
                .parse()
                .map_err(|_| Error::Malformed(format!("field value {v:?}")))?;
            if v >= p {
                return Err(Error::Malformed(format!("field value {v} not below modulus")));
            }
            values[r * cols + c] = Some(modulus.element(v));
        }
        let values = values
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Malformed("duplicate entries".into()))?;
        Ok(ShareGrid {
            eval_point: wire.center_id,
            rows,
            cols,
            scale_exponent: wire.scale_exponent,
            params,
            modulus,
            values,
        })
    }
}

/// Canonical JSON form of one center's [`ShareGrid`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridWire {
    pub modulus: String,
    pub scale_exponent: u32,
    pub t: usize,
    pub w: usize,
    pub shape: [usize; 2],
    pub center_id: u64,
    pub entries: Vec<(usize, usize, String)>,
}

/// Reconstructs every entry from grids held by at least `t` distinct centers.
pub fn reconstruct_grids(grids: &[&ShareGrid]) -> Result<Vec<FieldElement>> {
    let first = grids.first().ok_or(Error::InsufficientShares { got: 0, need: 2 })?;
    if grids.len() < first.params.threshold {
        return Err(Error::InsufficientShares {
            got: grids.len(),
            need: first.params.threshold,
        });
    }
    for g in &grids[1..] {
        if g.shape() != first.shape() {
            return Err(Error::ShapeMismatch(first.shape(), g.shape()));
        }
        if g.scale_exponent != first.scale_exponent {
            return Err(Error::ScaleMismatch(first.scale_exponent, g.scale_exponent));
        }
        if g.params != first.params || g.modulus != first.modulus {
            return Err(Error::LayoutMismatch(
                "sharing parameters or modulus differ".into(),
            ));
        }
    }
    let m = first.modulus;
    let points: Vec<u64> = grids.iter().map(|g| g.eval_point).collect();
    let basis = lagrange_at_zero(&points, &m)?;
    Ok((0..first.values.len())
        .map(|i| {
            grids
                .iter()
                .zip(&basis)
                .fold(FieldElement::ZERO, |acc, (g, &l)| {
                    m.add(acc, m.mul(g.values[i], l))
                })
        })
        .collect())
}

/// Shares of a matrix for all `w` centers, as produced by the dealer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedTensor {
    grids: Vec<ShareGrid>,
}

impl SharedTensor {
    /// Shares each entry of a row-major matrix of field elements independently.
    pub fn share<R: Rng + ?Sized>(
        values: &[FieldElement],
        shape: (usize, usize),
        scale_exponent: u32,
        params: SharingParams,
        modulus: &FieldModulus,
        rng: &mut R,
    ) -> Result<SharedTensor> {
        params.validate_for(modulus)?;
        let (rows, cols) = shape;
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: values.len(),
            });
        }
        let w = params.parties;
        let mut grids: Vec<ShareGrid> = (1..=w as u64)
            .map(|x| ShareGrid {
                eval_point: x,
                rows,
                cols,
                scale_exponent,
                params,
                modulus: *modulus,
                values: Vec::with_capacity(values.len()),
            })
            .collect();
        let mut coeffs = vec![FieldElement::ZERO; params.threshold];
        for &m in values {
            coeffs[0] = m;
            for c in coeffs.iter_mut().skip(1) {
                *c = random_element(rng, modulus);
            }
            for g in grids.iter_mut() {
                let x = modulus.element(g.eval_point as u128);
                g.values.push(horner(&coeffs, x, modulus));
            }
        }
        Ok(SharedTensor { grids })
    }

    /// Fixed-point encodes and shares a row-major real matrix.
    pub fn share_reals<R: Rng + ?Sized>(
        values: &[f64],
        shape: (usize, usize),
        codec: &FixedPoint,
        params: SharingParams,
        rng: &mut R,
    ) -> Result<SharedTensor> {
        let encoded = codec.encode_all(values)?;
        SharedTensor::share(
            &encoded,
            shape,
            codec.scale_exponent,
            params,
            &codec.modulus,
            rng,
        )
    }

    pub fn from_grids(grids: Vec<ShareGrid>) -> Result<SharedTensor> {
        let first = grids.first().ok_or_else(|| Error::LayoutMismatch("no grids".into()))?;
        if grids.len() != first.params.parties {
            return Err(Error::LayoutMismatch(format!(
                "{} grids for {} share holders",
                grids.len(),
                first.params.parties
            )));
        }
        for (i, g) in grids.iter().enumerate() {
            if g.eval_point != i as u64 + 1 {
                return Err(Error::LayoutMismatch(format!(
                    "grid {i} has evaluation point {}",
                    g.eval_point
                )));
            }
            if g.shape() != first.shape() {
                return Err(Error::ShapeMismatch(first.shape(), g.shape()));
            }
            if g.scale_exponent != first.scale_exponent {
                return Err(Error::ScaleMismatch(first.scale_exponent, g.scale_exponent));
            }
        }
        Ok(SharedTensor { grids })
    }

    pub fn grids(&self) -> &[ShareGrid] {
        &self.grids
    }

    pub fn into_grids(self) -> Vec<ShareGrid> {
        self.grids
    }

    /// The grid held by center `center_id` (1-based).
    pub fn grid(&self, center_id: u64) -> Option<&ShareGrid> {
        self.grids.get((center_id as usize).checked_sub(1)?)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.grids[0].shape()
    }

    pub fn params(&self) -> SharingParams {
        self.grids[0].params
    }

    pub fn scale_exponent(&self) -> u32 {
        self.grids[0].scale_exponent
    }

    pub fn secure_add(&self, other: &SharedTensor) -> Result<SharedTensor> {
        if self.grids.len() != other.grids.len() {
            return Err(Error::LayoutMismatch(format!(
                "{} vs {} share holders",
                self.grids.len(),
                other.grids.len()
            )));
        }
        let grids = self
            .grids
            .iter()
            .zip(&other.grids)
            .map(|(a, b)| a.secure_add(b))
            .collect::<Result<_>>()?;
        Ok(SharedTensor { grids })
    }

    pub fn secure_scale_public(&self, c: FieldElement) -> SharedTensor {
        SharedTensor {
            grids: self.grids.iter().map(|g| g.secure_scale_public(c)).collect(),
        }
    }

    /// Reconstructs from the listed centers (must be at least `t`).
    pub fn reconstruct_from(&self, centers: &[u64]) -> Result<Vec<FieldElement>> {
        let grids = centers
            .iter()
            .map(|&c| {
                self.grid(c)
                    .ok_or_else(|| Error::LayoutMismatch(format!("no center {c}")))
            })
            .collect::<Result<Vec<_>>>()?;
        reconstruct_grids(&grids)
    }

    /// Reconstructs from all `w` centers.
    pub fn reconstruct(&self) -> Result<Vec<FieldElement>> {
        let grids: Vec<&ShareGrid> = self.grids.iter().collect();
        reconstruct_grids(&grids)
    }
}

/// Free-function form of [`SharedTensor::secure_add`].
pub fn secure_add(a: &SharedTensor, b: &SharedTensor) -> Result<SharedTensor> {
    a.secure_add(b)
}

/// Free-function form of [`SharedTensor::secure_scale_public`].
pub fn secure_scale_public(a: &SharedTensor, c: FieldElement) -> SharedTensor {
    a.secure_scale_public(c)
}
