use serde::{Deserialize, Serialize};

use super::{DataError, ReturnMatrix};

/// Per-asset z-score parameters. `sigma` is the sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Scaler {
    pub fn identity(n: usize) -> Self {
        Self {
            mu: vec![0.0; n],
            sigma: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn scale(&self, asset: usize, r: f64) -> f64 {
        (r - self.mu[asset]) / self.sigma[asset]
    }

    pub fn unscale(&self, asset: usize, z: f64) -> f64 {
        z * self.sigma[asset] + self.mu[asset]
    }
}

/// Column means and sample standard deviations (divisor `T - 1`).
pub fn fit_scaler(train: &ReturnMatrix) -> Result<Scaler, DataError> {
    let t = train.n_rows();
    if t < 2 {
        return Err(DataError::TooFewRows(t));
    }
    let n = train.n_assets();
    let mut mu = vec![0.0; n];
    let mut sigma = vec![0.0; n];
    for i in 0..n {
        let col = train.column(i);
        let mean = col.iter().sum::<f64>() / t as f64;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1) as f64;
        let sd = var.sqrt();
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(DataError::DegenerateSeries(i));
        }
        mu[i] = mean;
        sigma[i] = sd;
    }
    Ok(Scaler { mu, sigma })
}

/// `z[t][i] = (r[t][i] - mu[i]) / sigma[i]`.
pub fn apply_scaler(scaler: &Scaler, data: &ReturnMatrix) -> Result<ReturnMatrix, DataError> {
    if data.n_assets() != scaler.len() {
        return Err(DataError::DimensionMismatch {
            expected: scaler.len(),
            got: data.n_assets(),
        });
    }
    let returns = data
        .returns
        .iter()
        .map(|row| row.iter().enumerate().map(|(i, &r)| scaler.scale(i, r)).collect())
        .collect();
    Ok(ReturnMatrix {
        assets: data.assets.clone(),
        timestamps: data.timestamps.clone(),
        returns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mean_sd(col: &[f64]) -> (f64, f64) {
        let n = col.len() as f64;
        let m = col.iter().sum::<f64>() / n;
        let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v.sqrt())
    }

    #[test]
    fn one_two_three() {
        let data = ReturnMatrix::from_rows(vec![vec![1.0], vec![2.0], vec![3.0]]);
        let s = fit_scaler(&data).unwrap();
        assert_eq!(s.mu, vec![2.0]);
        assert_eq!(s.sigma, vec![1.0]);
        let z = apply_scaler(&s, &data).unwrap();
        assert_eq!(z.column(0), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn degenerate_rejected() {
        let data = ReturnMatrix::from_rows(vec![vec![1.0, 0.5], vec![2.0, 0.5], vec![3.0, 0.5]]);
        let err = fit_scaler(&data).unwrap_err();
        assert!(matches!(err, DataError::DegenerateSeries(1)));
        assert!(err.to_string().contains("degenerate series"));
    }

    #[test]
    fn identity_and_mismatch() {
        let data = ReturnMatrix::from_rows(vec![vec![0.3, -0.1], vec![0.2, 0.4]]);
        assert_eq!(apply_scaler(&Scaler::identity(2), &data).unwrap(), data);
        assert!(matches!(
            apply_scaler(&Scaler::identity(3), &data),
            Err(DataError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn columns_independent_under_permutation() {
        let data = ReturnMatrix::from_rows(vec![vec![1.0, 10.0], vec![4.0, 11.0], vec![2.0, 15.0]]);
        let swapped = ReturnMatrix::from_rows(data.returns.iter().map(|r| vec![r[1], r[0]]).collect());
        let a = fit_scaler(&data).unwrap();
        let b = fit_scaler(&swapped).unwrap();
        assert_eq!((a.mu[0], a.sigma[0]), (b.mu[1], b.sigma[1]));
        assert_eq!((a.mu[1], a.sigma[1]), (b.mu[0], b.sigma[0]));
    }

    #[test]
    fn train_fit_does_not_renormalize_test() {
        let train = ReturnMatrix::from_rows(vec![vec![0.0], vec![1.0], vec![2.0]]);
        let test = ReturnMatrix::from_rows(vec![vec![5.0], vec![6.0]]);
        let s = fit_scaler(&train).unwrap();
        let z = apply_scaler(&s, &test).unwrap();
        assert_eq!(z.column(0), vec![4.0, 5.0]);
    }

    proptest! {
        #[test]
        fn standardizes_fit_data(rows in prop::collection::vec(prop::collection::vec(-0.5f64..0.5, 3), 3..60)) {
            let data = ReturnMatrix::from_rows(rows);
            let Ok(s) = fit_scaler(&data) else { return Ok(()); };
            prop_assume!(s.sigma.iter().all(|&x| x > 1e-6));
            let z = apply_scaler(&s, &data).unwrap();
            for i in 0..3 {
                let (m, sd) = mean_sd(&z.column(i));
                prop_assert!(m.abs() < 1e-9);
                prop_assert!((sd - 1.0).abs() < 1e-9);
            }
        }
    }
}
