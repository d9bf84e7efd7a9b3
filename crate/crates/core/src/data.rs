use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether the outcome column is continuous (linear model) or binary 0/1
/// (logistic model).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Continuous,
    Binary,
}

/// Column-major table of one exposure, `d` mediators, one outcome and `q`
/// covariates, all of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub exposure: Vec<f64>,
    pub mediators: Vec<Vec<f64>>,
    pub outcome: Vec<f64>,
    pub covariates: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        exposure: Vec<f64>,
        mediators: Vec<Vec<f64>>,
        outcome: Vec<f64>,
        covariates: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let data = Dataset {
            exposure,
            mediators,
            outcome,
            covariates,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn n(&self) -> usize {
        self.exposure.len()
    }

    /// Number of mediators `d`.
    pub fn n_mediators(&self) -> usize {
        self.mediators.len()
    }

    /// Number of covariates `q`.
    pub fn n_covariates(&self) -> usize {
        self.covariates.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.outcome.len() != n {
            return Err(Error::InvalidArgument(format!(
                "outcome length {} != exposure length {}",
                self.outcome.len(),
                n
            )));
        }
        for (k, m) in self.mediators.iter().enumerate() {
            if m.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "mediator {} length {} != {}",
                    k + 1,
                    m.len(),
                    n
                )));
            }
        }
        for (j, z) in self.covariates.iter().enumerate() {
            if z.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "covariate {} length {} != {}",
                    j + 1,
                    z.len(),
                    n
                )));
            }
        }
        Ok(())
    }

    /// Checks that every outcome value is exactly 0.0 or 1.0.
    pub fn check_binary_outcome(&self) -> Result<()> {
        if self.outcome.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::InvalidArgument(
                "binary outcome must take values in {0, 1}".into(),
            ));
        }
        Ok(())
    }

    /// Gathers the given rows into a new dataset (rows may repeat).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let gather = |col: &Vec<f64>| rows.iter().map(|&i| col[i]).collect::<Vec<f64>>();
        Dataset {
            exposure: gather(&self.exposure),
            mediators: self.mediators.iter().map(gather).collect(),
            outcome: gather(&self.outcome),
            covariates: self.covariates.iter().map(gather).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_ragged_columns() {
        let err = Dataset::new(vec![1.0, 2.0], vec![vec![1.0]], vec![0.0, 1.0], vec![]);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn select_rows_gathers_in_order() {
        let d = Dataset::new(
            vec![1.0, 2.0, 3.0],
            vec![vec![10.0, 20.0, 30.0]],
            vec![0.1, 0.2, 0.3],
            vec![],
        )
        .unwrap();
        let s = d.select_rows(&[2, 0, 2]);
        assert_eq!(s.exposure, vec![3.0, 1.0, 3.0]);
        assert_eq!(s.mediators[0], vec![30.0, 10.0, 30.0]);
        assert_eq!(s.outcome, vec![0.3, 0.1, 0.3]);
    }
}
