//! Ordinary least squares baseline.
//!
//! Solved through an SVD of the intercept-augmented design matrix rather
//! than the normal equations; the ratio of extreme singular values doubles
//! as the condition estimate that decides applicability.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;

/// Fits with a condition estimate above this are rejected as not applicable.
pub const CONDITION_LIMIT: f64 = 1e8;

#[derive(Debug, Error)]
pub enum LinregError {
    #[error("need at least two data points, got {0}")]
    TooFewPoints(usize),
    #[error("design matrix is ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },
    #[error("dimension mismatch: model has {expected} features, input has {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "ols")]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub b: f64,
    #[serde(rename = "cond")]
    pub condition_estimate: f64,
}

/// Least-squares fit of `y ~ w'x + b`.
pub fn fit_ols(data: &[FeatureVector]) -> Result<LinearModel, LinregError> {
    if data.len() < 2 {
        return Err(LinregError::TooFewPoints(data.len()));
    }
    let m = data.len();
    let n = data[0].x.len();
    // Design matrix with a trailing all-ones intercept column.
    let design = DMatrix::from_fn(m, n + 1, |i, j| if j < n { data[i].x[j] } else { 1.0 });
    let y = DVector::from_fn(m, |i, _| data[i].y);

    let svd = design.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let sigma_min = svd.singular_values.min();
    if !(sigma_min > 0.0) || !sigma_max.is_finite() {
        return Err(LinregError::IllConditioned { condition: f64::INFINITY });
    }
    let condition = sigma_max / sigma_min;
    if condition > CONDITION_LIMIT {
        return Err(LinregError::IllConditioned { condition });
    }

    let solution = svd
        .solve(&y, 0.0)
        .map_err(|_| LinregError::IllConditioned { condition })?;
    Ok(LinearModel {
        w: solution.as_slice()[..n].to_vec(),
        b: solution[n],
        condition_estimate: condition,
    })
}

pub fn predict_linear(model: &LinearModel, x: &[f64]) -> Result<f64, LinregError> {
    if x.len() != model.w.len() {
        return Err(LinregError::DimensionMismatch {
            expected: model.w.len(),
            got: x.len(),
        });
    }
    Ok(model.w.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + model.b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fv(x: Vec<f64>, y: f64) -> FeatureVector {
        FeatureVector {
            x,
            y,
            source_job_id: String::new(),
        }
    }

    #[test]
    fn exact_line() {
        let data = vec![fv(vec![1.0], 1.0), fv(vec![2.0], 2.0), fv(vec![3.0], 3.0)];
        let model = fit_ols(&data).unwrap();
        assert_relative_eq!(model.w[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(model.b, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_point_interpolation() {
        let data = vec![fv(vec![0.0], 1.0), fv(vec![1.0], 3.0)];
        let model = fit_ols(&data).unwrap();
        assert_relative_eq!(model.w[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(model.b, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn duplicated_columns_are_ill_conditioned() {
        let data: Vec<_> = (0..8)
            .map(|i| {
                let v = i as f64;
                fv(vec![v, v], 2.0 * v + 1.0)
            })
            .collect();
        assert!(matches!(fit_ols(&data), Err(LinregError::IllConditioned { .. })));
    }

    #[test]
    fn predict_examples() {
        let m = LinearModel {
            w: vec![1.0],
            b: 0.0,
            condition_estimate: 1.0,
        };
        assert_eq!(predict_linear(&m, &[7.0]).unwrap(), 7.0);

        let m = LinearModel {
            w: vec![2.0, 0.0],
            b: 1.0,
            condition_estimate: 1.0,
        };
        assert_eq!(predict_linear(&m, &[3.0, 99.0]).unwrap(), 7.0);

        let m = LinearModel {
            w: vec![0.0, 0.0],
            b: 5.0,
            condition_estimate: 1.0,
        };
        assert_eq!(predict_linear(&m, &[123.0, -4.0]).unwrap(), 5.0);
    }

    #[test]
    fn predict_dimension_mismatch() {
        let m = LinearModel {
            w: vec![1.0, 2.0],
            b: 0.0,
            condition_estimate: 1.0,
        };
        assert!(matches!(
            predict_linear(&m, &[1.0]),
            Err(LinregError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn residuals_orthogonal_to_design() {
        let data = vec![
            fv(vec![1.0, 0.5], 3.1),
            fv(vec![2.0, -1.0], 1.2),
            fv(vec![0.3, 2.2], 5.9),
            fv(vec![-1.0, 0.7], 2.4),
            fv(vec![1.5, 1.5], 4.8),
        ];
        let model = fit_ols(&data).unwrap();
        let y_norm = data.iter().map(|d| d.y * d.y).sum::<f64>().sqrt();
        let n = 2;
        for j in 0..=n {
            let dot: f64 = data
                .iter()
                .map(|d| {
                    let r = d.y - predict_linear(&model, &d.x).unwrap();
                    let xj = if j < n { d.x[j] } else { 1.0 };
                    r * xj
                })
                .sum();
            assert!(dot.abs() <= 1e-8 * y_norm, "column {j}: {dot}");
        }
    }

    #[test]
    fn scale_equivariance() {
        let data = vec![
            fv(vec![1.0, 0.5], 3.1),
            fv(vec![2.0, -1.0], 1.2),
            fv(vec![0.3, 2.2], 5.9),
            fv(vec![-1.0, 0.7], 2.4),
        ];
        let c = 37.5;
        let scaled: Vec<_> = data
            .iter()
            .map(|d| fv(vec![d.x[0] * c, d.x[1]], d.y))
            .collect();
        let m1 = fit_ols(&data).unwrap();
        let m2 = fit_ols(&scaled).unwrap();
        assert_relative_eq!(m2.w[0], m1.w[0] / c, max_relative = 1e-10);
        for (d, s) in data.iter().zip(&scaled) {
            let p1 = predict_linear(&m1, &d.x).unwrap();
            let p2 = predict_linear(&m2, &s.x).unwrap();
            assert_relative_eq!(p1, p2, max_relative = 1e-10);
        }
    }

    #[test]
    fn json_round_trip() {
        let m = LinearModel {
            w: vec![1.5, -0.25],
            b: 3.125,
            condition_estimate: 42.0,
        };
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"type\":\"ols\""));
        assert!(json.contains("\"cond\""));
        let back: LinearModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
