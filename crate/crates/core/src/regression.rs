//! Plaintext logistic-regression math: probabilities, per-institution
//! summaries, the ridge-penalized Newton update, and a pooled reference fit.
//!
//! Summaries are additive over rows, so the sum of per-institution
//! [`SummaryBundle`]s equals the bundle of the pooled data. The federated
//! protocol relies on nothing else.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Probabilities are clamped to `[EPS, 1 - EPS]`.
pub const PROB_CLAMP: f64 = 1e-12;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 50;

/// One institution's design matrix (intercept column first) and {0,1} response.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalDataset {
    pub institution_id: usize,
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl LocalDataset {
    pub fn new(institution_id: usize, x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::InvalidDataset(format!(
                "{} covariate rows but {} responses",
                x.nrows(),
                y.len()
            )));
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::InvalidDataset("empty dataset".into()));
        }
        if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidDataset(format!(
                "response {} at row {i} is not 0 or 1",
                y[i]
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite covariate".into()));
        }
        Ok(LocalDataset { institution_id, x, y })
    }

    /// Builds from covariates without the intercept column; one is prepended.
    pub fn with_intercept(
        institution_id: usize,
        covariates: &DMatrix<f64>,
        y: DVector<f64>,
    ) -> Result<Self> {
        let x = covariates.clone().insert_column(0, 1.0);
        Self::new(institution_id, x, y)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Row `i` as a slice-like vector (copy).
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    pub fn select_rows(&self, institution_id: usize, rows: &[usize]) -> LocalDataset {
        LocalDataset {
            institution_id,
            x: self.x.select_rows(rows),
            y: self.y.select_rows(rows),
        }
    }

    /// Concatenates datasets row-wise, preserving order.
    pub fn pool(datasets: &[LocalDataset]) -> Result<LocalDataset> {
        let first = datasets
            .first()
            .ok_or_else(|| Error::InvalidDataset("no datasets to pool".into()))?;
        let d = first.dim();
        for ds in datasets {
            if ds.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: ds.dim(),
                });
            }
        }
        let n: usize = datasets.iter().map(|ds| ds.rows()).sum();
        let mut x = DMatrix::zeros(n, d);
        let mut y = DVector::zeros(n);
        let mut offset = 0;
        for ds in datasets {
            x.rows_mut(offset, ds.rows()).copy_from(&ds.x);
            y.rows_mut(offset, ds.rows()).copy_from(&ds.y);
            offset += ds.rows();
        }
        Ok(LocalDataset {
            institution_id: 0,
            x,
            y,
        })
    }
}

/// Fitted probabilities and IRLS weights `p(1-p)` at one coefficient vector.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkingSet {
    pub p: DVector<f64>,
    pub w: DVector<f64>,
}

/// Per-institution Hessian (positive form), score and deviance.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryBundle {
    pub hessian: DMatrix<f64>,
    pub gradient: DVector<f64>,
    pub deviance: f64,
}

impl SummaryBundle {
    pub fn zeros(d: usize) -> Self {
        SummaryBundle {
            hessian: DMatrix::zeros(d, d),
            gradient: DVector::zeros(d),
            deviance: 0.0,
        }
    }

    pub fn accumulate(&mut self, other: &SummaryBundle) {
        self.hessian += &other.hessian;
        self.gradient += &other.gradient;
        self.deviance += other.deviance;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    pub beta: DVector<f64>,
    pub iteration: usize,
    pub deviance_history: Vec<f64>,
    pub converged: bool,
}

impl ModelState {
    pub fn require_converged(self, max_iter: usize) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged { max_iter })
        }
    }
}

/// Logistic function, evaluated without overflow and clamped away from 0 and 1.
pub fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    s.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

fn check_dim(data: &LocalDataset, len: usize) -> Result<()> {
    if data.dim() != len {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: len,
        });
    }
    Ok(())
}

pub fn compute_working_set(data: &LocalDataset, beta: &DVector<f64>) -> Result<WorkingSet> {
    check_dim(data, beta.len())?;
    let p = (&data.x * beta).map(sigmoid);
    let w = p.map(|pi| pi * (1.0 - pi));
    Ok(WorkingSet { p, w })
}

fn check_ws(data: &LocalDataset, ws: &WorkingSet) -> Result<()> {
    if ws.p.len() != data.rows() || ws.w.len() != data.rows() {
        return Err(Error::DimensionMismatch {
            expected: data.rows(),
            got: ws.p.len(),
        });
    }
    Ok(())
}

/// `X^T W X`.
pub fn local_hessian(data: &LocalDataset, ws: &WorkingSet) -> Result<DMatrix<f64>> {
    check_ws(data, ws)?;
    let mut wx = data.x.clone();
    for mut col in wx.column_iter_mut() {
        col.component_mul_assign(&ws.w);
    }
    let h = data.x.tr_mul(&wx);
    // exact symmetry regardless of summation order
    Ok((&h + h.transpose()) * 0.5)
}

/// `X^T (y - p)`, the score of the unpenalized log-likelihood.
pub fn local_gradient(data: &LocalDataset, ws: &WorkingSet) -> Result<DVector<f64>> {
    check_ws(data, ws)?;
    Ok(data.x.tr_mul(&(&data.y - &ws.p)))
}

/// `-2 * sum(y log p + (1-y) log(1-p))`, with compensated summation.
pub fn local_deviance(data: &LocalDataset, ws: &WorkingSet) -> Result<f64> {
    check_ws(data, ws)?;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (&y, &p) in data.y.iter().zip(ws.p.iter()) {
        let term = if y == 1.0 { p.ln() } else { (1.0 - p).ln() };
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    Ok((-2.0 * (sum + comp)).max(0.0))
}

pub fn local_summaries(data: &LocalDataset, beta: &DVector<f64>) -> Result<SummaryBundle> {
    let ws = compute_working_set(data, beta)?;
    Ok(SummaryBundle {
        hessian: local_hessian(data, &ws)?,
        gradient: local_gradient(data, &ws)?,
        deviance: local_deviance(data, &ws)?,
    })
}

/// Ridge penalty settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Penalty {
    pub lambda: f64,
    pub penalize_intercept: bool,
}

impl Penalty {
    pub fn new(lambda: f64) -> Self {
        Penalty {
            lambda,
            penalize_intercept: true,
        }
    }

    fn diag(&self, d: usize) -> DVector<f64> {
        DVector::from_fn(d, |i, _| {
            if i == 0 && !self.penalize_intercept {
                0.0
            } else {
                self.lambda
            }
        })
    }
}

/// `beta + (H + lambda I)^-1 (g - lambda beta)` via Cholesky.
pub fn newton_step(
    h_sum: &DMatrix<f64>,
    g_sum: &DVector<f64>,
    beta_old: &DVector<f64>,
    lambda: f64,
) -> Result<DVector<f64>> {
    penalized_newton_step(h_sum, g_sum, beta_old, &Penalty::new(lambda))
}

pub fn penalized_newton_step(
    h_sum: &DMatrix<f64>,
    g_sum: &DVector<f64>,
    beta_old: &DVector<f64>,
    penalty: &Penalty,
) -> Result<DVector<f64>> {
    let d = beta_old.len();
    if h_sum.nrows() != d || h_sum.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: h_sum.nrows(),
        });
    }
    if g_sum.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: g_sum.len(),
        });
    }
    let lam = penalty.diag(d);
    let mut system = h_sum.clone();
    for i in 0..d {
        system[(i, i)] += lam[i];
    }
    let rhs = g_sum - lam.component_mul(beta_old);
    let chol = system.cholesky().ok_or(Error::SingularSystem)?;
    let step = chol.solve(&rhs);
    if step.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(beta_old + step)
}

/// True once the last two deviances differ by less than `tol`.
pub fn check_convergence(deviance_history: &[f64], tol: f64) -> bool {
    match deviance_history {
        [.., prev, last] => (last - prev).abs() < tol,
        _ => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub penalty: Penalty,
    pub tol: f64,
    pub max_iter: usize,
}

impl FitOptions {
    pub fn new(lambda: f64) -> Self {
        FitOptions {
            penalty: Penalty::new(lambda),
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Pools all rows and runs Newton-Raphson from `beta = 0`.
///
/// Each iteration records the deviance at the current coefficients, then
/// updates them. A fit that hits `max_iter` comes back with `converged = false`.
pub fn centralized_fit(datasets: &[LocalDataset], opts: &FitOptions) -> Result<ModelState> {
    let pooled = LocalDataset::pool(datasets)?;
    let d = pooled.dim();
    let mut beta = DVector::zeros(d);
    let mut history = Vec::new();
    let mut converged = false;
    for iteration in 1..=opts.max_iter {
        let s = local_summaries(&pooled, &beta).map_err(|e| e.at_iteration(iteration))?;
        history.push(s.deviance);
        beta = penalized_newton_step(&s.hessian, &s.gradient, &beta, &opts.penalty)
            .map_err(|e| e.at_iteration(iteration))?;
        if check_convergence(&history, opts.tol) {
            converged = true;
            break;
        }
    }
    Ok(ModelState {
        beta,
        iteration: history.len(),
        deviance_history: history,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use nalgebra::dvector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn single(x: &[f64], y: f64) -> LocalDataset {
        LocalDataset::new(0, DMatrix::from_row_slice(1, x.len(), x), dvector![y]).unwrap()
    }

    fn random_dataset(rng: &mut ChaCha20Rng, n: usize, d: usize) -> LocalDataset {
        let x = DMatrix::from_fn(n, d, |_, j| if j == 0 { 1.0 } else { rng.random_range(-2.0..2.0) });
        let y = DVector::from_fn(n, |_, _| if rng.random_bool(0.4) { 1.0 } else { 0.0 });
        LocalDataset::new(0, x, y).unwrap()
    }

    fn log_likelihood(data: &LocalDataset, beta: &DVector<f64>) -> f64 {
        let mut ll = 0.0;
        for i in 0..data.rows() {
            let z: f64 = (0..data.dim()).map(|j| data.x()[(i, j)] * beta[j]).sum();
            // unclamped, log-sum-exp form
            let log1pexp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            ll += data.y()[i] * z - log1pexp;
        }
        ll
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(800.0), 1.0 - PROB_CLAMP);
        assert_eq!(sigmoid(-800.0), PROB_CLAMP);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn working_set_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let data = random_dataset(&mut rng, 20, 3);
        let ws = compute_working_set(&data, &DVector::zeros(3)).unwrap();
        assert!(ws.p.iter().all(|&p| p == 0.5));
        assert!(ws.w.iter().all(|&w| w == 0.25));

        let one = single(&[1.0, 0.0], 1.0);
        let ws = compute_working_set(&one, &dvector![3f64.ln(), 5.0]).unwrap();
        assert!((ws.p[0] - 0.75).abs() < 1e-15);

        let ws = compute_working_set(&data, &dvector![0.3, -4.0, 2.5]).unwrap();
        assert!(ws.w.iter().all(|&w| w > 0.0 && w <= 0.25));

        assert!(matches!(
            compute_working_set(&data, &DVector::zeros(2)),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn single_record_summaries() {
        let data = single(&[1.0], 1.0);
        let s = local_summaries(&data, &dvector![0.0]).unwrap();
        assert_eq!(s.hessian, dmatrix![0.25]);
        assert_eq!(s.gradient, dvector![0.5]);
        assert!((s.deviance - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((s.deviance - 1.386_294_4).abs() < 1e-7);

        let twice = LocalDataset::pool(&[data.clone(), data]).unwrap();
        let s2 = local_summaries(&twice, &dvector![0.0]).unwrap();
        assert_eq!(s2.hessian, dmatrix![0.5]);
    }

    #[test]
    fn stationary_when_probabilities_match_responses() {
        // p saturates to the clamp bounds, so gradient and deviance vanish
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        let data = LocalDataset::new(0, x, dvector![1.0, 0.0]).unwrap();
        let s = local_summaries(&data, &dvector![0.0, 100.0]).unwrap();
        assert!(s.gradient.amax() < 1e-11);
        assert!(s.deviance < 1e-10);
    }

    #[test]
    fn summaries_match_loop_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        for _ in 0..20 {
            let d = rng.random_range(1..6);
            let n = rng.random_range(1..60);
            let data = random_dataset(&mut rng, n, d);
            let beta = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let ws = compute_working_set(&data, &beta).unwrap();
            let h = local_hessian(&data, &ws).unwrap();
            let dev = local_deviance(&data, &ws).unwrap();
            let mut h_loop = DMatrix::<f64>::zeros(d, d);
            let mut dev_loop = 0.0;
            for i in 0..data.rows() {
                let z: f64 = (0..d).map(|j| data.x()[(i, j)] * beta[j]).sum();
                let p = 1.0 / (1.0 + (-z).exp());
                for a in 0..d {
                    for b in 0..d {
                        h_loop[(a, b)] += p * (1.0 - p) * data.x()[(i, a)] * data.x()[(i, b)];
                    }
                }
                let y = data.y()[i];
                dev_loop += -2.0 * (y * p.ln() + (1.0 - y) * (1.0 - p).ln());
            }
            let scale = h_loop.amax().max(1e-300);
            assert!((&h - &h_loop).amax() / scale <= 1e-12);
            assert!((dev - dev_loop).abs() / dev_loop.abs() <= 1e-12);
            assert!(dev >= 0.0);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..100 {
            let d = rng.random_range(1..6);
            let n = rng.random_range(5..50);
            let data = random_dataset(&mut rng, n, d);
            let beta = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let g = local_gradient(&data, &compute_working_set(&data, &beta).unwrap()).unwrap();
            let step = 1e-6;
            for j in 0..d {
                let mut bp = beta.clone();
                let mut bm = beta.clone();
                bp[j] += step;
                bm[j] -= step;
                let fd = (log_likelihood(&data, &bp) - log_likelihood(&data, &bm)) / (2.0 * step);
                let rel = (g[j] - fd).abs() / g.amax().max(1.0);
                assert!(rel <= 1e-5, "j={j} g={} fd={fd}", g[j]);
            }
        }
    }

    #[test]
    fn newton_step_examples() {
        let beta = dvector![0.5, -0.25];
        let h = dmatrix![2.0, 0.3; 0.3, 1.0];
        let g = &beta * 1.5;
        assert_eq!(newton_step(&h, &g, &beta, 1.5).unwrap(), beta);

        let b = newton_step(&dmatrix![2.0], &dvector![3.0], &dvector![0.0], 1.0).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-15);

        let singular = dmatrix![1.0, 1.0; 1.0, 1.0];
        assert!(matches!(
            newton_step(&singular, &dvector![1.0, 0.0], &DVector::zeros(2), 0.0),
            Err(Error::SingularSystem)
        ));
        // the same rank-deficient Hessian becomes solvable with a ridge
        assert!(newton_step(&singular, &dvector![1.0, 0.0], &DVector::zeros(2), 0.1).is_ok());
    }

    #[test]
    fn unpenalized_intercept() {
        let pen = Penalty { lambda: 10.0, penalize_intercept: false };
        let h = DMatrix::identity(2, 2);
        let b = penalized_newton_step(&h, &dvector![1.0, 1.0], &DVector::zeros(2), &pen).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-15);
        assert!((b[1] - 1.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn convergence_examples() {
        assert!(!check_convergence(&[10.0], 1e-10));
        assert!(check_convergence(&[10.0, 10.0], 1e-10));
        assert!(!check_convergence(&[10.0, 9.0], 1e-10));
        assert!(!check_convergence(&[], 1e-10));
    }

    #[test]
    fn heavy_penalty_shrinks_to_zero() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let data = random_dataset(&mut rng, 50, 4);
        let fit = centralized_fit(&[data], &FitOptions::new(1e8)).unwrap();
        assert!(fit.converged);
        assert!(fit.beta.amax() < 1e-6);
    }

    #[test]
    fn fit_reduces_deviance_and_is_stationary() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let data = random_dataset(&mut rng, 400, 4);
        let opts = FitOptions::new(0.5);
        let fit = centralized_fit(std::slice::from_ref(&data), &opts).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.iteration, fit.deviance_history.len());
        assert!(fit.deviance_history.last().unwrap() <= &fit.deviance_history[0]);
        let s = local_summaries(&data, &fit.beta).unwrap();
        assert!((&s.gradient - &fit.beta * 0.5).amax() <= 1e-6);
    }

    #[test]
    fn not_converged_is_flagged() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let data = random_dataset(&mut rng, 100, 3);
        let opts = FitOptions { max_iter: 1, ..FitOptions::new(1.0) };
        let fit = centralized_fit(&[data], &opts).unwrap();
        assert!(!fit.converged);
        assert!(matches!(fit.require_converged(1), Err(Error::NotConverged { max_iter: 1 })));
    }

    #[test]
    fn dataset_validation() {
        let x = DMatrix::from_element(2, 2, 1.0);
        assert!(LocalDataset::new(0, x.clone(), dvector![1.0]).is_err());
        assert!(LocalDataset::new(0, x.clone(), dvector![1.0, 2.0]).is_err());
        assert!(LocalDataset::new(0, DMatrix::zeros(0, 2), DVector::zeros(0)).is_err());
        let cov = DMatrix::from_row_slice(2, 1, &[3.0, 4.0]);
        let ds = LocalDataset::with_intercept(1, &cov, dvector![0.0, 1.0]).unwrap();
        assert_eq!(ds.row(1), vec![1.0, 4.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn summaries_are_additive_over_row_partitions(seed: u64, n in 2usize..80, d in 1usize..6, cut_frac in 0.0f64..1.0) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let data = random_dataset(&mut rng, n, d);
            let beta = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let cut = ((n as f64 * cut_frac) as usize).clamp(1, n - 1);
            let left: Vec<usize> = (0..cut).collect();
            let right: Vec<usize> = (cut..n).collect();
            let whole = local_summaries(&data, &beta).unwrap();
            let mut parts = local_summaries(&data.select_rows(1, &left), &beta).unwrap();
            parts.accumulate(&local_summaries(&data.select_rows(2, &right), &beta).unwrap());
            let hs = whole.hessian.amax().max(1e-300);
            prop_assert!((&whole.hessian - &parts.hessian).amax() / hs <= 1e-10);
            prop_assert!((&whole.gradient - &parts.gradient).amax() / whole.gradient.amax().max(1.0) <= 1e-10);
            prop_assert!((whole.deviance - parts.deviance).abs() / whole.deviance.max(1.0) <= 1e-10);
        }

        #[test]
        fn hessian_is_negative_jacobian_of_gradient(seed: u64, d in 1usize..5) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let data = random_dataset(&mut rng, 40, d);
            let beta = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let h = local_hessian(&data, &compute_working_set(&data, &beta).unwrap()).unwrap();
            let grad = |b: &DVector<f64>| local_gradient(&data, &compute_working_set(&data, b).unwrap()).unwrap();
            let step = 1e-6;
            for j in 0..d {
                let mut bp = beta.clone();
                let mut bm = beta.clone();
                bp[j] += step;
                bm[j] -= step;
                let col = (grad(&bp) - grad(&bm)) / (2.0 * step);
                for i in 0..d {
                    let rel = (h[(i, j)] + col[i]).abs() / h.amax();
                    prop_assert!(rel <= 1e-4);
                }
            }
            prop_assert_eq!(&h, &h.transpose());
            prop_assert!(h.clone().symmetric_eigenvalues().iter().all(|&e| e >= -1e-10 * h.amax()));
        }

        #[test]
        fn newton_residual_is_small(seed: u64, d in 1usize..10, lambda in 0.0f64..10.0) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let a = DMatrix::from_fn(d + 3, d, |_, _| rng.random_range(-1.0..1.0));
            let h = a.tr_mul(&a) + DMatrix::identity(d, d) * 0.1;
            let g = DVector::from_fn(d, |_, _| rng.random_range(-5.0..5.0));
            let beta = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let new = newton_step(&h, &g, &beta, lambda).unwrap();
            let lhs = (&h + DMatrix::identity(d, d) * lambda) * (&new - &beta);
            let rhs = &g - &beta * lambda;
            prop_assert!((lhs - rhs).norm() <= 1e-10 * g.norm().max(1e-300));
        }
    }
}
