//! The multi-mediator system: joint fitting of the outcome and mediator
//! regressions, the Sobel standard error for each product, and the
//! closed-form natural effect formulas on the mean-difference and
//! odds-ratio scales.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::data::{Dataset, OutcomeKind};
use crate::error::{Error, Result};
use crate::regression::{
    fit_linear, fit_linear_weighted, fit_logistic, fit_logistic_weighted, DesignSpec, FitResult,
    Response, WeightedSample,
};

/// Population parameters of the mediation system
///
///   M_k = c_k + alpha_k X + eta_k' Z + e_k,
///   Y   = c + gamma X + beta' M + theta' Z + eps   (continuous), or
///   logit P(Y=1) = c + gamma X + beta' M + theta' Z  (binary).
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub c: f64,
    pub gamma: f64,
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub c_k: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Row k holds the covariate coefficients of mediator k (d x q).
    pub eta: Vec<Vec<f64>>,
    /// Covariance of the mediator errors (d x d, symmetric PSD).
    pub sigma_e: DMatrix<f64>,
    /// SD of the outcome error; continuous outcomes only.
    pub sigma_eps: Option<f64>,
    pub outcome_kind: OutcomeKind,
}

impl ModelParams {
    pub fn n_mediators(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.theta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.n_mediators();
        let q = self.n_covariates();
        if self.beta.len() != d || self.c_k.len() != d || self.eta.len() != d {
            return Err(Error::InvalidArgument(
                "model parameters: beta, c_k and eta must all have one entry per mediator".into(),
            ));
        }
        if self.eta.iter().any(|row| row.len() != q) {
            return Err(Error::InvalidArgument(
                "model parameters: each eta row must have one entry per covariate".into(),
            ));
        }
        if self.sigma_e.nrows() != d || self.sigma_e.ncols() != d {
            return Err(Error::InvalidArgument(
                "model parameters: sigma_e must be d x d".into(),
            ));
        }
        let sym = (0..d).all(|i| (0..d).all(|j| self.sigma_e[(i, j)] == self.sigma_e[(j, i)]));
        if !sym {
            return Err(Error::InvalidArgument(
                "model parameters: sigma_e must be symmetric".into(),
            ));
        }
        // PSD check: Cholesky of a minutely regularized copy.
        let jitter = DMatrix::identity(d, d) * 1e-10;
        if d > 0 && nalgebra::Cholesky::new(&self.sigma_e + jitter).is_none() {
            return Err(Error::InvalidArgument(
                "model parameters: sigma_e must be positive semi-definite".into(),
            ));
        }
        match (self.outcome_kind, self.sigma_eps) {
            (OutcomeKind::Continuous, None) => Err(Error::InvalidArgument(
                "model parameters: continuous outcome requires sigma_eps".into(),
            )),
            (OutcomeKind::Continuous, Some(s)) if s < 0.0 => Err(Error::InvalidArgument(
                "model parameters: sigma_eps must be nonnegative".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Estimated exposure-to-mediator and mediator-to-outcome path for one
/// mediator, with the product and its delta-method standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathEstimate {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub se_alpha: f64,
    pub se_beta: f64,
    pub product: f64,
    pub sobel_se: f64,
}

/// Full fit of the mediation system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MediationFit {
    pub paths: Vec<PathEstimate>,
    pub gamma_hat: f64,
    pub se_gamma: f64,
    pub outcome_fit: FitResult,
    pub mediator_fits: Vec<FitResult>,
}

/// An exposure contrast `x` vs `x_star` at which effects are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectQuery {
    pub x: f64,
    pub x_star: f64,
}

impl Default for EffectQuery {
    /// Unit contrast, matching the product-of-coefficients reading.
    fn default() -> Self {
        EffectQuery { x: 1.0, x_star: 0.0 }
    }
}

/// Natural effects of a continuous-outcome system on the mean scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearEffects {
    pub nde: f64,
    pub nie: f64,
    pub te: f64,
    pub per_mediator_nie: Vec<f64>,
}

/// Natural effects of a binary-outcome system on the odds-ratio scale
/// (valid as an approximation when the outcome is rare).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrEffects {
    pub nde_or: f64,
    pub nie_or: f64,
    pub te_or: f64,
    /// (log nde_or, log nie_or, log te_or) before exponentiation.
    pub log_scale_triple: (f64, f64, f64),
}

/// Outcome prevalence diagnostic for the odds-ratio approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RareOutcomeCheck {
    pub prevalence: f64,
    /// Set when prevalence exceeds 0.1 (diagnostic convention, not a
    /// theoretical bound).
    pub warning: bool,
}

/// Delta-method standard error of a product of two estimates:
/// sqrt(alpha^2 se_beta^2 + beta^2 se_alpha^2).
pub fn sobel_se(alpha_hat: f64, se_alpha: f64, beta_hat: f64, se_beta: f64) -> f64 {
    (alpha_hat * alpha_hat * se_beta * se_beta + beta_hat * beta_hat * se_alpha * se_alpha).sqrt()
}

fn assemble(
    outcome_fit: FitResult,
    mediator_fits: Vec<FitResult>,
    d: usize,
) -> Result<MediationFit> {
    // Outcome design layout: [intercept, exposure, mediators..., covariates...].
    let gamma_hat = outcome_fit.coefficients[1];
    let se_gamma = outcome_fit.std_errors[1];
    let mut paths = Vec::with_capacity(d);
    for (k, mfit) in mediator_fits.iter().enumerate() {
        let alpha_hat = mfit.coefficients[1];
        let se_alpha = mfit.std_errors[1];
        let beta_hat = outcome_fit.coefficients[2 + k];
        let se_beta = outcome_fit.std_errors[2 + k];
        paths.push(PathEstimate {
            alpha_hat,
            beta_hat,
            se_alpha,
            se_beta,
            product: alpha_hat * beta_hat,
            sobel_se: sobel_se(alpha_hat, se_alpha, beta_hat, se_beta),
        });
    }
    Ok(MediationFit {
        paths,
        gamma_hat,
        se_gamma,
        outcome_fit,
        mediator_fits,
    })
}

fn tag<T>(target: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::SubFit {
        target: target.to_string(),
        source: Box::new(e),
    })
}

/// Fits the outcome regression and all mediator regressions on the full
/// data and collects the per-mediator path estimates.
pub fn fit_mediation(data: &Dataset, kind: OutcomeKind) -> Result<MediationFit> {
    let d = data.n_mediators();
    let q = data.n_covariates();
    if d == 0 {
        return Err(Error::InvalidArgument("at least one mediator required".into()));
    }
    if kind == OutcomeKind::Binary {
        data.check_binary_outcome()?;
    }
    let ospec = DesignSpec::outcome(d, q);
    let outcome_fit = tag(
        "outcome",
        match kind {
            OutcomeKind::Continuous => fit_linear(data, &ospec, Response::Outcome),
            OutcomeKind::Binary => fit_logistic(data, &ospec, Response::Outcome),
        },
    )?;
    let mspec = DesignSpec::mediator(q);
    let mediator_fits = (0..d)
        .map(|k| {
            tag(
                &format!("mediator {}", k + 1),
                fit_linear(data, &mspec, Response::Mediator(k)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(outcome_fit, mediator_fits, d)
}

/// As [`fit_mediation`] but on a weighted subsample; identical to fitting
/// the row-expanded data.
pub fn fit_mediation_weighted(sample: &WeightedSample, kind: OutcomeKind) -> Result<MediationFit> {
    let d = sample.data.n_mediators();
    let q = sample.data.n_covariates();
    if d == 0 {
        return Err(Error::InvalidArgument("at least one mediator required".into()));
    }
    let ospec = DesignSpec::outcome(d, q);
    let outcome_fit = tag(
        "outcome",
        match kind {
            OutcomeKind::Continuous => fit_linear_weighted(sample, &ospec, Response::Outcome),
            OutcomeKind::Binary => fit_logistic_weighted(sample, &ospec, Response::Outcome),
        },
    )?;
    let mspec = DesignSpec::mediator(q);
    let mediator_fits = (0..d)
        .map(|k| {
            tag(
                &format!("mediator {}", k + 1),
                fit_linear_weighted(sample, &mspec, Response::Mediator(k)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(outcome_fit, mediator_fits, d)
}

/// Natural direct, indirect and total effect of the contrast for a
/// continuous outcome: nde = gamma (x - x*), nie_k = alpha_k beta_k (x - x*),
/// te = nde + nie exactly.
pub fn effects_linear(params: &ModelParams, query: EffectQuery) -> Result<LinearEffects> {
    if params.outcome_kind != OutcomeKind::Continuous {
        return Err(Error::InvalidArgument(
            "effects_linear requires a continuous outcome".into(),
        ));
    }
    if !query.x.is_finite() || !query.x_star.is_finite() {
        return Err(Error::InvalidArgument("effect query must be finite".into()));
    }
    let dx = query.x - query.x_star;
    let nde = params.gamma * dx;
    let per_mediator_nie: Vec<f64> = params
        .alpha
        .iter()
        .zip(&params.beta)
        .map(|(a, b)| a * b * dx)
        .collect();
    let nie: f64 = per_mediator_nie.iter().sum();
    Ok(LinearEffects {
        nde,
        nie,
        te: nde + nie,
        per_mediator_nie,
    })
}

const EXP_GUARD: f64 = 700.0;

/// Odds-ratio-scale effects for a rare binary outcome: exponentials of the
/// same linear quantities, with te_or = nde_or * nie_or exactly.
pub fn effects_logistic_or(params: &ModelParams, query: EffectQuery) -> Result<OrEffects> {
    if params.outcome_kind != OutcomeKind::Binary {
        return Err(Error::InvalidArgument(
            "effects_logistic_or requires a binary outcome".into(),
        ));
    }
    if !query.x.is_finite() || !query.x_star.is_finite() {
        return Err(Error::InvalidArgument("effect query must be finite".into()));
    }
    let dx = query.x - query.x_star;
    let log_nde = params.gamma * dx;
    let log_nie: f64 = params
        .alpha
        .iter()
        .zip(&params.beta)
        .map(|(a, b)| a * b * dx)
        .sum();
    let log_te = log_nde + log_nie;
    for (name, v) in [("nde", log_nde), ("nie", log_nie), ("te", log_te)] {
        if v.abs() > EXP_GUARD {
            return Err(Error::Numeric(format!(
                "odds-ratio {name} exponent {v} out of range (|exponent| > {EXP_GUARD})"
            )));
        }
    }
    let nde_or = log_nde.exp();
    let nie_or = log_nie.exp();
    Ok(OrEffects {
        nde_or,
        nie_or,
        te_or: nde_or * nie_or,
        log_scale_triple: (log_nde, log_nie, log_te),
    })
}

/// Mean of the binary outcome, flagged when above 0.1 — the regime where
/// the odds-ratio effect approximation becomes questionable.
pub fn rare_outcome_check(data: &Dataset) -> Result<RareOutcomeCheck> {
    data.check_binary_outcome()?;
    if data.n() == 0 {
        return Err(Error::EmptyData);
    }
    let prevalence = data.outcome.iter().sum::<f64>() / data.n() as f64;
    Ok(RareOutcomeCheck {
        prevalence,
        warning: prevalence > 0.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params_51(kind: OutcomeKind) -> ModelParams {
        ModelParams {
            c: 0.5,
            gamma: 0.5,
            beta: vec![0.0, 0.0, 0.2, 0.1, 0.15],
            theta: vec![1.0, 1.0],
            c_k: vec![0.5; 5],
            alpha: vec![0.0, 0.2, 0.0, 0.1, 0.15],
            eta: vec![vec![1.0, 1.0]; 5],
            sigma_e: crate::stochastics::ar1_covariance(5, 0.5),
            sigma_eps: match kind {
                OutcomeKind::Continuous => Some(2.0),
                OutcomeKind::Binary => None,
            },
            outcome_kind: kind,
        }
    }

    #[test]
    fn sobel_se_hand_values() {
        assert_abs_diff_eq!(sobel_se(0.2, 0.1, 0.5, 0.2), 0.0640312, epsilon = 1e-7);
        assert_eq!(sobel_se(0.0, 3.0, 0.0, 7.0), 0.0);
        assert_eq!(sobel_se(4.0, 0.0, -2.0, 0.0), 0.0);
    }

    #[test]
    fn linear_effects_hand_values() {
        let p = params_51(OutcomeKind::Continuous);
        let e = effects_linear(&p, EffectQuery::default()).unwrap();
        assert_abs_diff_eq!(e.nde, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(e.nie, 0.0325, epsilon = 1e-12);
        assert_abs_diff_eq!(e.te, 0.5325, epsilon = 1e-12);
        assert_eq!(e.te, e.nde + e.nie);

        let null = effects_linear(&p, EffectQuery { x: 2.0, x_star: 2.0 }).unwrap();
        assert_eq!(null.nde, 0.0);
        assert_eq!(null.nie, 0.0);
        assert_eq!(null.te, 0.0);

        let double = effects_linear(&p, EffectQuery { x: 2.0, x_star: 0.0 }).unwrap();
        assert_abs_diff_eq!(double.te, 2.0 * e.te, epsilon = 1e-12);
        assert_abs_diff_eq!(double.nie, 2.0 * e.nie, epsilon = 1e-12);
    }

    #[test]
    fn or_effects_hand_values() {
        let p = params_51(OutcomeKind::Binary);
        let e = effects_logistic_or(&p, EffectQuery::default()).unwrap();
        assert_abs_diff_eq!(e.nie_or, 1.033034, epsilon = 1e-6);
        assert_abs_diff_eq!(e.nde_or, 0.5f64.exp(), epsilon = 1e-12);
        assert_eq!(e.te_or, e.nde_or * e.nie_or);

        let null = effects_logistic_or(&p, EffectQuery { x: 3.0, x_star: 3.0 }).unwrap();
        assert_eq!(null.nde_or, 1.0);
        assert_eq!(null.nie_or, 1.0);
        assert_eq!(null.te_or, 1.0);
    }

    #[test]
    fn or_effects_overflow_guard() {
        let mut p = params_51(OutcomeKind::Binary);
        p.gamma = 800.0;
        let err = effects_logistic_or(&p, EffectQuery::default());
        assert!(matches!(err, Err(Error::Numeric(_))), "{err:?}");
    }

    #[test]
    fn rare_outcome_thresholds() {
        let mk = |y: Vec<f64>| {
            let n = y.len();
            Dataset::new(vec![0.0; n], vec![vec![0.0; n]], y, vec![]).unwrap()
        };
        let all_zero = rare_outcome_check(&mk(vec![0.0; 20])).unwrap();
        assert_eq!(all_zero.prevalence, 0.0);
        assert!(!all_zero.warning);

        let mut half = vec![0.0; 10];
        half.extend(vec![1.0; 10]);
        let c = rare_outcome_check(&mk(half)).unwrap();
        assert_abs_diff_eq!(c.prevalence, 0.5, epsilon = 1e-15);
        assert!(c.warning);

        let mut rare = vec![0.0; 19];
        rare.push(1.0);
        let c = rare_outcome_check(&mk(rare)).unwrap();
        assert_abs_diff_eq!(c.prevalence, 0.05, epsilon = 1e-15);
        assert!(!c.warning);
    }

    #[test]
    fn collinear_mediator_fails_with_outcome_tag() {
        // M = X exactly: the outcome design has two identical columns.
        let x: Vec<f64> = (0..30).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let data = Dataset::new(x.clone(), vec![x], y, vec![]).unwrap();
        let err = fit_mediation(&data, OutcomeKind::Continuous);
        match err {
            Err(Error::SubFit { target, source }) => {
                assert_eq!(target, "outcome");
                assert!(matches!(*source, Error::SingularDesign { .. }));
            }
            other => panic!("expected tagged singular-design error, got {other:?}"),
        }
    }

    #[test]
    fn weighted_fit_matches_row_expansion() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let m: Vec<f64> = x
            .iter()
            .map(|v| 0.5 * v + rng.random::<f64>() - 0.5)
            .collect();
        let y: Vec<f64> = x
            .iter()
            .zip(&m)
            .map(|(xv, mv)| 0.3 * xv + 0.7 * mv + rng.random::<f64>() - 0.5)
            .collect();
        let data = Dataset::new(x, vec![m], y, vec![]).unwrap();
        let weights: Vec<u64> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let sample = WeightedSample {
            data: &data,
            rows: None,
            weights: &weights,
        };
        let wfit = fit_mediation_weighted(&sample, OutcomeKind::Continuous).unwrap();
        let rows: Vec<usize> = (0..n)
            .flat_map(|i| std::iter::repeat(i).take(weights[i] as usize))
            .collect();
        let expanded = data.select_rows(&rows);
        let efit = fit_mediation(&expanded, OutcomeKind::Continuous).unwrap();
        assert_abs_diff_eq!(wfit.paths[0].product, efit.paths[0].product, epsilon = 1e-10);
        assert_abs_diff_eq!(
            wfit.paths[0].sobel_se,
            efit.paths[0].sobel_se,
            epsilon = 1e-10
        );
    }

    #[test]
    fn params_validation_rejects_asymmetric_sigma() {
        let mut p = params_51(OutcomeKind::Continuous);
        assert!(p.validate().is_ok());
        p.sigma_e[(0, 1)] = 0.9;
        assert!(matches!(p.validate(), Err(Error::InvalidArgument(_))));
    }

    proptest! {
        #[test]
        fn sobel_se_symmetric(a in -5.0f64..5.0, sa in 0.0f64..2.0,
                              b in -5.0f64..5.0, sb in 0.0f64..2.0) {
            prop_assert_eq!(sobel_se(a, sa, b, sb), sobel_se(b, sb, a, sa));
            prop_assert!(sobel_se(a, sa, b, sb) >= 0.0);
        }

        #[test]
        fn linear_effects_additive_and_scaling(
            gamma in -3.0f64..3.0,
            ab in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..6),
            dx in -4.0f64..4.0,
        ) {
            let d = ab.len();
            let p = ModelParams {
                c: 0.0,
                gamma,
                beta: ab.iter().map(|v| v.1).collect(),
                theta: vec![],
                c_k: vec![0.0; d],
                alpha: ab.iter().map(|v| v.0).collect(),
                eta: vec![vec![]; d],
                sigma_e: nalgebra::DMatrix::identity(d, d),
                sigma_eps: Some(1.0),
                outcome_kind: OutcomeKind::Continuous,
            };
            let q = EffectQuery { x: dx, x_star: 0.0 };
            let e = effects_linear(&p, q).unwrap();
            prop_assert_eq!(e.te, e.nde + e.nie);
            let half = effects_linear(&p, EffectQuery { x: dx / 2.0, x_star: 0.0 }).unwrap();
            prop_assert!((e.nie - 2.0 * half.nie).abs() <= 1e-12 * (1.0 + e.nie.abs()));
        }

        #[test]
        fn or_effects_log_additive(
            gamma in -3.0f64..3.0,
            ab in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..6),
            dx in -4.0f64..4.0,
        ) {
            let d = ab.len();
            let p = ModelParams {
                c: 0.0,
                gamma,
                beta: ab.iter().map(|v| v.1).collect(),
                theta: vec![],
                c_k: vec![0.0; d],
                alpha: ab.iter().map(|v| v.0).collect(),
                eta: vec![vec![]; d],
                sigma_e: nalgebra::DMatrix::identity(d, d),
                sigma_eps: None,
                outcome_kind: OutcomeKind::Binary,
            };
            let e = effects_logistic_or(&p, EffectQuery { x: dx, x_star: 0.0 }).unwrap();
            let (lnde, lnie, lte) = e.log_scale_triple;
            prop_assert!((lte - (lnde + lnie)).abs() < 1e-12);
            prop_assert!((e.te_or.ln() - (e.nde_or.ln() + e.nie_or.ln())).abs() < 1e-12);
        }
    }
}
