//! Exact and weighted estimators for the outcome and mediator
//! regressions: least squares via QR, logistic maximum likelihood via
//! Newton/IRLS with step-halving.
//!
//! A weighted fit with integer frequencies is identical (coefficients and
//! standard errors) to the unweighted fit on the row-expanded data, with
//! the effective sample size taken as the weight total.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Which dataset columns enter the design matrix. The regressor layout is
/// `[intercept][exposure][mediators...][covariates...]` with absent parts
/// skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignSpec {
    pub include_intercept: bool,
    pub include_exposure: bool,
    pub mediator_cols: Vec<usize>,
    pub covariate_cols: Vec<usize>,
}

impl DesignSpec {
    /// Outcome regression: Y on (X, M_1..M_d, Z_1..Z_q) plus intercept.
    pub fn outcome(d: usize, q: usize) -> Self {
        DesignSpec {
            include_intercept: true,
            include_exposure: true,
            mediator_cols: (0..d).collect(),
            covariate_cols: (0..q).collect(),
        }
    }

    /// Mediator regression: M_k on (X, Z_1..Z_q) plus intercept.
    pub fn mediator(q: usize) -> Self {
        DesignSpec {
            include_intercept: true,
            include_exposure: true,
            mediator_cols: Vec::new(),
            covariate_cols: (0..q).collect(),
        }
    }

    pub fn width(&self) -> usize {
        usize::from(self.include_intercept)
            + usize::from(self.include_exposure)
            + self.mediator_cols.len()
            + self.covariate_cols.len()
    }

    /// Column index of the exposure coefficient, if present.
    pub fn exposure_index(&self) -> Option<usize> {
        self.include_exposure
            .then_some(usize::from(self.include_intercept))
    }

    /// Column index of the coefficient for mediator slot `pos` (position
    /// within `mediator_cols`).
    pub fn mediator_index(&self, pos: usize) -> usize {
        usize::from(self.include_intercept) + usize::from(self.include_exposure) + pos
    }

    pub fn regressor_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.width());
        if self.include_intercept {
            names.push("intercept".into());
        }
        if self.include_exposure {
            names.push("exposure".into());
        }
        for &k in &self.mediator_cols {
            names.push(format!("mediator_{}", k + 1));
        }
        for &j in &self.covariate_cols {
            names.push(format!("covariate_{}", j + 1));
        }
        names
    }
}

/// Response column for a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    Outcome,
    Mediator(usize),
}

/// A subset of rows together with integer repetition frequencies; the
/// frequencies sum to the full-data size.
#[derive(Debug, Clone)]
pub struct WeightedSample<'a> {
    pub data: &'a Dataset,
    /// Row indices into `data`; `None` means all rows in order.
    pub rows: Option<&'a [usize]>,
    pub weights: &'a [u64],
}

impl<'a> WeightedSample<'a> {
    pub fn len(&self) -> usize {
        self.rows.map_or(self.data.n(), <[usize]>::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self) -> Result<()> {
        if self.len() != self.weights.len() {
            return Err(Error::InvalidArgument(format!(
                "weighted sample has {} rows but {} weights",
                self.len(),
                self.weights.len()
            )));
        }
        Ok(())
    }
}

/// Coefficients and standard errors of a completed fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// RSS / (n - p); present for linear fits only.
    pub residual_variance: Option<f64>,
}

fn build_design(data: &Dataset, spec: &DesignSpec, rows: Option<&[usize]>) -> DMatrix<f64> {
    let n = rows.map_or(data.n(), <[usize]>::len);
    let p = spec.width();
    let mut x = DMatrix::zeros(n, p);
    let row_id = |i: usize| rows.map_or(i, |r| r[i]);
    for i in 0..n {
        let r = row_id(i);
        let mut c = 0;
        if spec.include_intercept {
            x[(i, c)] = 1.0;
            c += 1;
        }
        if spec.include_exposure {
            x[(i, c)] = data.exposure[r];
            c += 1;
        }
        for &k in &spec.mediator_cols {
            x[(i, c)] = data.mediators[k][r];
            c += 1;
        }
        for &j in &spec.covariate_cols {
            x[(i, c)] = data.covariates[j][r];
            c += 1;
        }
    }
    x
}

fn build_response(data: &Dataset, response: Response, rows: Option<&[usize]>) -> DVector<f64> {
    let col = match response {
        Response::Outcome => &data.outcome,
        Response::Mediator(k) => &data.mediators[k],
    };
    match rows {
        None => DVector::from_column_slice(col),
        Some(r) => DVector::from_iterator(r.len(), r.iter().map(|&i| col[i])),
    }
}

/// Back-substitution solve of `R b = v` for upper-triangular `R`.
fn solve_upper(r: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let p = r.ncols();
    let mut b = DVector::zeros(p);
    for i in (0..p).rev() {
        let mut s = v[i];
        for j in i + 1..p {
            s -= r[(i, j)] * b[j];
        }
        b[i] = s / r[(i, i)];
    }
    b
}

/// Inverse of upper-triangular `R` by back-substitution per column.
fn invert_upper(r: &DMatrix<f64>) -> DMatrix<f64> {
    let p = r.ncols();
    let mut inv = DMatrix::zeros(p, p);
    for col in 0..p {
        let mut e = DVector::zeros(p);
        e[col] = 1.0;
        inv.set_column(col, &solve_upper(r, &e));
    }
    inv
}

fn linear_core(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    weights: Option<&[u64]>,
    context: &str,
) -> Result<FitResult> {
    let n = x.nrows();
    let p = x.ncols();
    let n_eff = weights.map_or(n as f64, |w| w.iter().sum::<u64>() as f64);
    if (n_eff as usize) < p {
        return Err(Error::InvalidArgument(format!(
            "{context}: {n_eff} effective rows for {p} regressors"
        )));
    }

    let (xw, yw) = match weights {
        None => (x.clone(), y.clone()),
        Some(w) => {
            let mut xw = x.clone();
            let mut yw = y.clone();
            for i in 0..n {
                let s = (w[i] as f64).sqrt();
                for j in 0..p {
                    xw[(i, j)] *= s;
                }
                yw[i] *= s;
            }
            (xw, yw)
        }
    };

    if n < p {
        // Fewer distinct rows than regressors: rank-deficient by construction.
        return Err(Error::SingularDesign {
            context: context.to_string(),
        });
    }
    let qr = xw.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    let tol = max_diag * (n.max(p) as f64) * f64::EPSILON;
    if max_diag == 0.0 || (0..p).any(|i| r[(i, i)].abs() <= tol) {
        return Err(Error::SingularDesign {
            context: context.to_string(),
        });
    }

    let qty = qr.q().transpose() * &yw;
    let beta = solve_upper(&r, &qty);

    let resid = yw - &xw * &beta;
    let rss: f64 = resid.iter().map(|e| e * e).sum();
    let dof = n_eff - p as f64;
    let sigma2 = if dof > 0.0 { rss / dof } else { 0.0 };

    // (X'WX)^-1 = R^-1 R^-T, so the diagonal is the squared row norms of R^-1.
    let rinv = invert_upper(&r);
    let std_errors: Vec<f64> = (0..p)
        .map(|j| (sigma2 * rinv.row(j).iter().map(|v| v * v).sum::<f64>()).sqrt())
        .collect();

    Ok(FitResult {
        coefficients: beta.iter().copied().collect(),
        std_errors,
        converged: true,
        iterations: 0,
        residual_variance: Some(sigma2),
    })
}

const LOGISTIC_TOL: f64 = 1e-8;
const LOGISTIC_MAX_ITER: usize = 100;
const SEPARATION_BOUND: f64 = 30.0;

fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// log(1 + e^eta), stable for large |eta|.
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn logistic_core(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    weights: Option<&[u64]>,
    context: &str,
) -> Result<FitResult> {
    let n = x.nrows();
    let p = x.ncols();
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidArgument(format!(
            "{context}: outcome must take values in {{0, 1}}"
        )));
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i] as f64);
    let n_eff: f64 = (0..n).map(w).sum();
    if (n_eff as usize) < p {
        return Err(Error::InvalidArgument(format!(
            "{context}: {n_eff} effective rows for {p} regressors"
        )));
    }
    let pos: f64 = (0..n).map(|i| w(i) * y[i]).sum();
    if pos == 0.0 || pos == n_eff {
        // Raw single-class data is a caller error; a resample that puts
        // all its mass on one class is a degenerate draw.
        let raw_single = y.iter().all(|&v| v == 0.0) || y.iter().all(|&v| v == 1.0);
        return Err(if raw_single {
            Error::InvalidArgument(format!("{context}: single-class outcome"))
        } else {
            Error::Separation {
                context: context.to_string(),
            }
        });
    }

    let nll = |beta: &DVector<f64>| -> f64 {
        let eta = x * beta;
        (0..n)
            .map(|i| w(i) * (softplus(eta[i]) - y[i] * eta[i]))
            .sum()
    };

    let mut beta: DVector<f64> = DVector::zeros(p);
    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=LOGISTIC_MAX_ITER {
        iterations = iter;
        let eta = x * &beta;
        let mut grad = DVector::zeros(p);
        let mut info = DMatrix::zeros(p, p);
        for i in 0..n {
            let wi = w(i);
            if wi == 0.0 {
                continue;
            }
            let pi = sigmoid(eta[i]);
            let gi = wi * (y[i] - pi);
            let hi = wi * pi * (1.0 - pi);
            for a in 0..p {
                grad[a] += gi * x[(i, a)];
                for b in a..p {
                    info[(a, b)] += hi * x[(i, a)] * x[(i, b)];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                info[(a, b)] = info[(b, a)];
            }
        }

        let chol = match nalgebra::Cholesky::new(info) {
            Some(c) => c,
            None if iter == 1 => {
                return Err(Error::SingularDesign {
                    context: context.to_string(),
                })
            }
            None => {
                return Err(Error::Separation {
                    context: context.to_string(),
                })
            }
        };
        let delta = chol.solve(&grad);

        // Newton step; halving on the weighted negative log-likelihood is
        // only needed far from the optimum. Near it the objective change is
        // below floating-point noise, so small steps are taken as-is to
        // preserve quadratic convergence.
        let step_norm = delta.iter().fold(0.0f64, |m, d: &f64| m.max(d.abs()));
        let mut t = 1.0;
        if step_norm >= 1e-4 {
            let f0 = nll(&beta);
            let mut accepted = false;
            for _ in 0..40 {
                if nll(&(&beta + &delta * t)) <= f0 {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                // No descent direction left at machine precision.
                converged = true;
                break;
            }
        }
        beta += &delta * t;
        if beta.iter().any(|b| b.abs() > SEPARATION_BOUND) {
            return Err(Error::Separation {
                context: context.to_string(),
            });
        }
        if delta.iter().map(|d| (d * t).abs()).fold(0.0f64, f64::max) < LOGISTIC_TOL {
            converged = true;
            break;
        }
    }

    // Observed information at the optimum for standard errors.
    let eta = x * &beta;
    let mut info = DMatrix::zeros(p, p);
    for i in 0..n {
        let wi = w(i);
        if wi == 0.0 {
            continue;
        }
        let pi = sigmoid(eta[i]);
        let hi = wi * pi * (1.0 - pi);
        for a in 0..p {
            for b in a..p {
                info[(a, b)] += hi * x[(i, a)] * x[(i, b)];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            info[(a, b)] = info[(b, a)];
        }
    }
    let cov: DMatrix<f64> = nalgebra::Cholesky::new(info)
        .ok_or_else(|| Error::Separation {
            context: context.to_string(),
        })?
        .inverse();
    let std_errors: Vec<f64> = (0..p).map(|j| cov[(j, j)].sqrt()).collect();

    Ok(FitResult {
        coefficients: beta.iter().copied().collect(),
        std_errors,
        converged,
        iterations,
        residual_variance: None,
    })
}

/// Ordinary least squares with standard errors from `sigma^2 (X'X)^-1`.
pub fn fit_linear(data: &Dataset, spec: &DesignSpec, response: Response) -> Result<FitResult> {
    let x = build_design(data, spec, None);
    let y = build_response(data, response, None);
    linear_core(&x, &y, None, "linear fit")
}

/// Weighted least squares; equals `fit_linear` on the row-expanded data.
pub fn fit_linear_weighted(
    sample: &WeightedSample,
    spec: &DesignSpec,
    response: Response,
) -> Result<FitResult> {
    sample.validate()?;
    let x = build_design(sample.data, spec, sample.rows);
    let y = build_response(sample.data, response, sample.rows);
    linear_core(&x, &y, Some(sample.weights), "weighted linear fit")
}

/// Logistic maximum likelihood via Newton iterations with step-halving;
/// standard errors from the inverse observed information.
pub fn fit_logistic(data: &Dataset, spec: &DesignSpec, response: Response) -> Result<FitResult> {
    let x = build_design(data, spec, None);
    let y = build_response(data, response, None);
    logistic_core(&x, &y, None, "logistic fit")
}

/// Weighted logistic maximum likelihood; equals `fit_logistic` on the
/// row-expanded data.
pub fn fit_logistic_weighted(
    sample: &WeightedSample,
    spec: &DesignSpec,
    response: Response,
) -> Result<FitResult> {
    sample.validate()?;
    let x = build_design(sample.data, spec, sample.rows);
    let y = build_response(sample.data, response, sample.rows);
    logistic_core(&x, &y, Some(sample.weights), "weighted logistic fit")
}
