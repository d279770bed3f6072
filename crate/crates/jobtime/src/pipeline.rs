//! Model catalog, cross-validation grid search, the mean-relative-error
//! metric, and the three experiment designs: same-query validation,
//! core-count holdout, and cross-query prediction.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{self, JobProfile, SplitSpec};
use crate::features::{self, CoreFeature, FeatureSpec, FeatureVector};
use crate::linreg::{self, LinearModel};
use crate::svr::{self, Kernel, SvrError, SvrModel, SvrParams};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("length mismatch: {pred} predictions vs {actual} actuals")]
    LengthMismatch { pred: usize, actual: usize },
    #[error("non-positive actual duration {0}")]
    NonPositiveActual(f64),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("profiles span multiple {field}: {values:?}; expected exactly one")]
    MixedProfiles { field: &'static str, values: Vec<String> },
    #[error("dag signature mismatch: train {train:?} vs test {test:?}")]
    SignatureMismatch { train: String, test: String },
    #[error("no profiles with n_cores = {0}")]
    UnknownCoreCount(u32),
    #[error("only one distinct core count would remain for training")]
    DegenerateTraining,
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Feature(#[from] features::FeatureError),
    #[error(transparent)]
    Linreg(#[from] linreg::LinregError),
    #[error(transparent)]
    Svr(#[from] SvrError),
}

/// The model rows of the experiment tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    Ols,
    SvrLinear,
    SvrPoly(u32),
    SvrGaussian,
}

impl ModelFamily {
    /// Catalog order used for report rows: OLS, linear SVR, polynomial SVR
    /// with degrees 2/3/4/6, Gaussian SVR.
    pub fn all() -> Vec<ModelFamily> {
        vec![
            ModelFamily::Ols,
            ModelFamily::SvrLinear,
            ModelFamily::SvrPoly(2),
            ModelFamily::SvrPoly(3),
            ModelFamily::SvrPoly(4),
            ModelFamily::SvrPoly(6),
            ModelFamily::SvrGaussian,
        ]
    }

    pub fn display_name(&self) -> String {
        match self {
            ModelFamily::Ols => "Linear regression".to_string(),
            ModelFamily::SvrLinear => "Linear SVR".to_string(),
            ModelFamily::SvrPoly(d) => format!("Polynomial SVR ({d})"),
            ModelFamily::SvrGaussian => "Gaussian SVR".to_string(),
        }
    }

    pub fn is_svr(&self) -> bool {
        !matches!(self, ModelFamily::Ols)
    }

    /// Parses the CLI spelling: ols, svr-linear, svr-poly2/3/4/6,
    /// svr-gaussian.
    pub fn parse(s: &str) -> Option<ModelFamily> {
        match s.trim() {
            "ols" => Some(ModelFamily::Ols),
            "svr-linear" => Some(ModelFamily::SvrLinear),
            "svr-gaussian" => Some(ModelFamily::SvrGaussian),
            other => other
                .strip_prefix("svr-poly")
                .and_then(|d| d.parse::<u32>().ok())
                .map(ModelFamily::SvrPoly),
        }
    }

    pub fn id(&self) -> String {
        match self {
            ModelFamily::Ols => "ols".to_string(),
            ModelFamily::SvrLinear => "svr-linear".to_string(),
            ModelFamily::SvrPoly(d) => format!("svr-poly{d}"),
            ModelFamily::SvrGaussian => "svr-gaussian".to_string(),
        }
    }

    fn kernel(&self, n: usize) -> Option<Kernel> {
        match self {
            ModelFamily::Ols => None,
            ModelFamily::SvrLinear => Some(Kernel::linear(n)),
            ModelFamily::SvrPoly(d) => Some(Kernel::polynomial(*d, n)),
            ModelFamily::SvrGaussian => Some(Kernel::gaussian(n)),
        }
    }
}

/// Hyperparameter grid driving cross-validation selection. `epsilon_values`
/// are fractions of the mean absolute training target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub c_values: Vec<f64>,
    pub epsilon_values: Vec<f64>,
    pub families: Vec<ModelFamily>,
    pub core_features: Vec<CoreFeature>,
}

impl SearchGrid {
    pub fn standard() -> Self {
        SearchGrid {
            c_values: vec![0.0625, 0.25, 1.0, 4.0, 16.0, 64.0, 256.0, 1024.0],
            epsilon_values: vec![0.01, 0.02, 0.05, 0.1],
            families: ModelFamily::all(),
            core_features: vec![CoreFeature::InverseCores],
        }
    }
}

/// Mean of `|pred - actual| / actual`, as a fraction.
pub fn mean_relative_error(pred: &[f64], actual: &[f64]) -> Result<f64, PipelineError> {
    if pred.len() != actual.len() || pred.is_empty() {
        return Err(PipelineError::LengthMismatch {
            pred: pred.len(),
            actual: actual.len(),
        });
    }
    let mut sum = 0.0;
    for (p, a) in pred.iter().zip(actual) {
        if !(*a > 0.0) {
            return Err(PipelineError::NonPositiveActual(*a));
        }
        sum += (p - a).abs() / a;
    }
    Ok(sum / pred.len() as f64)
}

/// A model fitted by the pipeline, carrying the (possibly scaler-bearing)
/// feature spec it was trained against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub family: ModelFamily,
    pub spec: FeatureSpec,
    pub inner: InnerModel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InnerModel {
    Ols(LinearModel),
    Svr(SvrModel),
}

impl TrainedModel {
    /// Predicts from an unscaled feature vector, applying the spec's scaler
    /// when present.
    pub fn predict(&self, x_raw: &[f64]) -> Result<f64, PipelineError> {
        let scaled: Option<Vec<f64>> = self.spec.scaler.as_ref().map(|scaler| {
            x_raw
                .iter()
                .zip(scaler)
                .map(|(xi, e)| (xi - e.mean) / e.std)
                .collect()
        });
        let x: &[f64] = scaled.as_deref().unwrap_or(x_raw);
        match &self.inner {
            InnerModel::Ols(m) => Ok(linreg::predict_linear(m, x)?),
            InnerModel::Svr(m) => Ok(svr::predict_svr(m, x)?),
        }
    }

    /// Weight vector for linear models (OLS or linear-kernel SVR), in the
    /// space the model was trained in.
    pub fn weights(&self) -> Option<Vec<f64>> {
        match &self.inner {
            InnerModel::Ols(m) => Some(m.w.clone()),
            InnerModel::Svr(m) => svr::extract_weights(m).ok(),
        }
    }
}

/// Named weights in feature-spec order; only linear families have them.
pub fn report_weights(model: &TrainedModel) -> Option<Vec<(String, f64)>> {
    let w = model.weights()?;
    Some(model.spec.names.iter().cloned().zip(w).collect())
}

/// Outcome of a grid search for one (family, core feature) row.
#[derive(Debug, Clone)]
pub enum GridOutcome {
    Fitted {
        model: Box<TrainedModel>,
        c: Option<f64>,
        epsilon: Option<f64>,
        cv_error: f64,
    },
    NotApplicable {
        reason: String,
    },
}

fn cv_error_of(model: &TrainedModel, cv: &[FeatureVector]) -> Result<f64, PipelineError> {
    let preds: Result<Vec<f64>, _> = cv.iter().map(|v| model.predict(&v.x)).collect();
    let actual: Vec<f64> = cv.iter().map(|v| v.y).collect();
    mean_relative_error(&preds?, &actual)
}

/// Fits one model per grid point on `train`, scores each on `cv`, and
/// returns the argmin. Ties break toward smaller C, then smaller ε. OLS has
/// an empty grid and is fitted once. Numerical failure of every grid point
/// yields `NotApplicable`.
pub fn grid_search(
    train: &[FeatureVector],
    cv: &[FeatureVector],
    grid: &SearchGrid,
    family: ModelFamily,
    spec: &FeatureSpec,
) -> Result<GridOutcome, PipelineError> {
    if train.is_empty() || cv.is_empty() {
        return Err(PipelineError::EmptyInput(format!(
            "grid search needs nonempty train ({}) and cv ({})",
            train.len(),
            cv.len()
        )));
    }

    // Standardization applies to SVR families only; OLS is scale-equivariant
    // and trained on the raw features.
    let (fit_spec, train_scaled) = if family.is_svr() && spec.standardize {
        let fitted = features::fit_scaler(train, spec)?;
        let scaled = features::scale_vectors(train, &fitted)?;
        (fitted, scaled)
    } else {
        let mut unscaled = spec.clone();
        unscaled.scaler = None;
        (unscaled, train.to_vec())
    };

    if family == ModelFamily::Ols {
        return match linreg::fit_ols(&train_scaled) {
            Ok(inner) => {
                let model = TrainedModel {
                    family,
                    spec: fit_spec,
                    inner: InnerModel::Ols(inner),
                };
                let cv_error = cv_error_of(&model, cv)?;
                Ok(GridOutcome::Fitted {
                    model: Box::new(model),
                    c: None,
                    epsilon: None,
                    cv_error,
                })
            }
            Err(e) => Ok(GridOutcome::NotApplicable { reason: e.to_string() }),
        };
    }

    let kernel = family.kernel(spec.len()).expect("svr family has a kernel");
    let mean_abs_y = train.iter().map(|v| v.y.abs()).sum::<f64>() / train.len() as f64;

    let mut best: Option<(f64, f64, f64, TrainedModel)> = None; // (cv_err, c, eps, model)
    let mut last_failure = String::new();
    for &c in &grid.c_values {
        for &eps_frac in &grid.epsilon_values {
            let epsilon = eps_frac * mean_abs_y;
            let params = SvrParams::new(c, epsilon);
            let inner = match svr::fit_svr(&train_scaled, &kernel, &params) {
                Ok(m) => m,
                Err(e @ (SvrError::NoConvergence { .. } | SvrError::NonFiniteKernel)) => {
                    last_failure = e.to_string();
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let mut inner = inner;
            inner.spec_ref = fit_spec.fingerprint();
            let model = TrainedModel {
                family,
                spec: fit_spec.clone(),
                inner: InnerModel::Svr(inner),
            };
            let cv_error = cv_error_of(&model, cv)?;
            let better = match &best {
                None => true,
                // Strict improvement only: earlier grid points (smaller C,
                // then smaller eps) win ties.
                Some((best_err, _, _, _)) => cv_error < *best_err,
            };
            if better {
                best = Some((cv_error, c, epsilon, model));
            }
        }
    }

    match best {
        Some((cv_error, c, epsilon, model)) => Ok(GridOutcome::Fitted {
            model: Box::new(model),
            c: Some(c),
            epsilon: Some(epsilon),
            cv_error,
        }),
        None => Ok(GridOutcome::NotApplicable {
            reason: if last_failure.is_empty() {
                "empty hyperparameter grid".to_string()
            } else {
                format!("no grid point converged; last failure: {last_failure}")
            },
        }),
    }
}

/// One row of an [`EvaluationReport`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub family: String,
    pub family_id: String,
    pub core_feature: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cv_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<(String, f64)>>,
}

/// Per-experiment results: one row per (family, core feature). Errors are
/// stored as fractions; rendering converts to percentages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema: u32,
    pub experiment: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annotation: Option<String>,
    pub train_count: usize,
    pub cv_count: usize,
    pub test_count: usize,
    pub rows: Vec<ReportRow>,
}

fn assert_no_leakage(train: &[JobProfile], cv: &[JobProfile], test: &[JobProfile]) {
    let trained: BTreeSet<&str> = train
        .iter()
        .chain(cv.iter())
        .map(|p| p.job_id.as_str())
        .collect();
    for p in test {
        assert!(
            !trained.contains(p.job_id.as_str()),
            "test job {} leaked into training data",
            p.job_id
        );
    }
}

fn single_value<'a>(
    profiles: &'a [JobProfile],
    field: &'static str,
    get: impl Fn(&JobProfile) -> &str,
) -> Result<&'a str, PipelineError> {
    let values: BTreeSet<&str> = profiles.iter().map(&get).collect();
    if values.len() != 1 {
        return Err(PipelineError::MixedProfiles {
            field,
            values: values.into_iter().map(String::from).collect(),
        });
    }
    Ok(profiles.iter().map(get).next().unwrap())
}

fn build_vectors(profiles: &[JobProfile], spec: &FeatureSpec) -> Result<Vec<FeatureVector>, PipelineError> {
    profiles
        .iter()
        .map(|p| features::build_vector(p, spec).map_err(Into::into))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn evaluate_rows(
    experiment: String,
    annotation: Option<String>,
    dag_signature: &str,
    standardize: bool,
    grid: &SearchGrid,
    train: &[JobProfile],
    cv: &[JobProfile],
    test: &[JobProfile],
    include_weights: bool,
) -> Result<EvaluationReport, PipelineError> {
    assert_no_leakage(train, cv, test);
    let mut rows = Vec::new();
    for &core in &grid.core_features {
        let spec = FeatureSpec::for_signature(dag_signature, core, standardize);
        let train_v = build_vectors(train, &spec)?;
        let cv_v = build_vectors(cv, &spec)?;
        let test_v = build_vectors(test, &spec)?;
        for &family in &grid.families {
            let outcome = grid_search(&train_v, &cv_v, grid, family, &spec)?;
            let row = match outcome {
                GridOutcome::Fitted {
                    model,
                    c,
                    epsilon,
                    cv_error,
                } => {
                    let preds: Result<Vec<f64>, _> = test_v.iter().map(|v| model.predict(&v.x)).collect();
                    let actual: Vec<f64> = test_v.iter().map(|v| v.y).collect();
                    let test_error = mean_relative_error(&preds?, &actual)?;
                    let weights = if include_weights { report_weights(&model) } else { None };
                    ReportRow {
                        family: family.display_name(),
                        family_id: family.id(),
                        core_feature: core.name().to_string(),
                        status: "ok".to_string(),
                        reason: None,
                        c,
                        epsilon,
                        cv_error: Some(cv_error),
                        test_error: Some(test_error),
                        weights,
                    }
                }
                GridOutcome::NotApplicable { reason } => ReportRow {
                    family: family.display_name(),
                    family_id: family.id(),
                    core_feature: core.name().to_string(),
                    status: "not_applicable".to_string(),
                    reason: Some(reason),
                    c: None,
                    epsilon: None,
                    cv_error: None,
                    test_error: None,
                    weights: None,
                },
            };
            rows.push(row);
        }
    }
    Ok(EvaluationReport {
        schema: 1,
        experiment,
        annotation,
        train_count: train.len(),
        cv_count: cv.len(),
        test_count: test.len(),
        rows,
    })
}

/// Same-query validation: outlier-filter, split 60/20/20, grid-search each
/// family, score on the held-out test slice.
pub fn run_validation(
    profiles: &[JobProfile],
    standardize: bool,
    grid: &SearchGrid,
    split_spec: &SplitSpec,
) -> Result<EvaluationReport, PipelineError> {
    if profiles.is_empty() {
        return Err(PipelineError::EmptyInput("no profiles".into()));
    }
    let query = single_value(profiles, "query_id", |p| &p.query_id)?.to_string();
    let sig = single_value(profiles, "dag_signature", |p| &p.dag_signature)?.to_string();
    let (kept, _discarded) = dataset::filter_outliers(profiles);
    if kept.len() < 3 {
        return Err(PipelineError::EmptyInput(format!(
            "only {} profiles remain after outlier filtering; need at least 3",
            kept.len()
        )));
    }
    let (train, cv, test) = dataset::split(&kept, split_spec)?;
    if train.is_empty() || cv.is_empty() || test.is_empty() {
        return Err(PipelineError::EmptyInput(format!(
            "degenerate split sizes ({}, {}, {})",
            train.len(),
            cv.len(),
            test.len()
        )));
    }
    evaluate_rows(
        format!("validation {query}"),
        None,
        &sig,
        standardize,
        grid,
        &train,
        &cv,
        &test,
        false,
    )
}

/// Core-count holdout: everything with `held_out_cores` becomes the test
/// set; the rest splits 75/25 into train/cv. The report is annotated
/// extrapolation or interpolation from where the held-out count sits
/// relative to the remaining core counts.
pub fn run_core_holdout(
    profiles: &[JobProfile],
    standardize: bool,
    grid: &SearchGrid,
    held_out_cores: u32,
    seed: u64,
) -> Result<EvaluationReport, PipelineError> {
    if profiles.is_empty() {
        return Err(PipelineError::EmptyInput("no profiles".into()));
    }
    let sig = single_value(profiles, "dag_signature", |p| &p.dag_signature)?.to_string();
    let (kept, _discarded) = dataset::filter_outliers(profiles);
    let (test, rest): (Vec<_>, Vec<_>) = kept.into_iter().partition(|p| p.n_cores == held_out_cores);
    if test.is_empty() {
        return Err(PipelineError::UnknownCoreCount(held_out_cores));
    }
    let remaining: BTreeSet<u32> = rest.iter().map(|p| p.n_cores).collect();
    if remaining.len() < 2 {
        return Err(PipelineError::DegenerateTraining);
    }
    let (min_c, max_c) = (*remaining.first().unwrap(), *remaining.last().unwrap());
    let annotation = if held_out_cores < min_c || held_out_cores > max_c {
        "extrapolation"
    } else {
        "interpolation"
    };
    let (train, cv) = dataset::split_two(&rest, 0.75, seed)?;
    evaluate_rows(
        format!("core-holdout {held_out_cores}"),
        Some(annotation.to_string()),
        &sig,
        standardize,
        grid,
        &train,
        &cv,
        &test,
        false,
    )
}

/// Cross-query prediction: train/cv (75/25) from one query set, test on all
/// runs of another.
pub fn run_cross_query(
    train_profiles: &[JobProfile],
    test_profiles: &[JobProfile],
    standardize: bool,
    grid: &SearchGrid,
    seed: u64,
) -> Result<EvaluationReport, PipelineError> {
    if train_profiles.is_empty() || test_profiles.is_empty() {
        return Err(PipelineError::EmptyInput("cross-query needs nonempty train and test".into()));
    }
    let train_sig = single_value(train_profiles, "dag_signature", |p| &p.dag_signature)?.to_string();
    let test_sig = single_value(test_profiles, "dag_signature", |p| &p.dag_signature)?.to_string();
    if train_sig != test_sig {
        return Err(PipelineError::SignatureMismatch {
            train: train_sig,
            test: test_sig,
        });
    }
    let train_queries: BTreeSet<&str> = train_profiles.iter().map(|p| p.query_id.as_str()).collect();
    let test_queries: BTreeSet<&str> = test_profiles.iter().map(|p| p.query_id.as_str()).collect();
    let tag = format!(
        "{}→{}",
        train_queries.iter().copied().collect::<Vec<_>>().join(","),
        test_queries.iter().copied().collect::<Vec<_>>().join(",")
    );
    let (kept_train, _) = dataset::filter_outliers(train_profiles);
    let (kept_test, _) = dataset::filter_outliers(test_profiles);
    let (train, cv) = dataset::split_two(&kept_train, 0.75, seed)?;
    evaluate_rows(
        format!("cross-query {tag}"),
        Some(tag),
        &train_sig,
        standardize,
        grid,
        &train,
        &cv,
        &kept_test,
        false,
    )
}

/// Feature-weight report: trains the linear families (OLS and linear SVR)
/// on a 75/25 split of all data and reports per-feature weights.
pub fn run_weights(
    profiles: &[JobProfile],
    standardize: bool,
    grid: &SearchGrid,
    seed: u64,
) -> Result<EvaluationReport, PipelineError> {
    if profiles.is_empty() {
        return Err(PipelineError::EmptyInput("no profiles".into()));
    }
    let sig = single_value(profiles, "dag_signature", |p| &p.dag_signature)?.to_string();
    let (kept, _) = dataset::filter_outliers(profiles);
    let (train, cv) = dataset::split_two(&kept, 0.75, seed)?;
    let linear_grid = SearchGrid {
        families: grid
            .families
            .iter()
            .copied()
            .filter(|f| matches!(f, ModelFamily::Ols | ModelFamily::SvrLinear))
            .collect(),
        ..grid.clone()
    };
    let mut rows = Vec::new();
    for &core in &linear_grid.core_features {
        let spec = FeatureSpec::for_signature(&sig, core, standardize);
        let train_v = build_vectors(&train, &spec)?;
        let cv_v = build_vectors(&cv, &spec)?;
        for &family in &linear_grid.families {
            let outcome = grid_search(&train_v, &cv_v, &linear_grid, family, &spec)?;
            let row = match outcome {
                GridOutcome::Fitted {
                    model, c, epsilon, cv_error,
                } => ReportRow {
                    family: family.display_name(),
                    family_id: family.id(),
                    core_feature: core.name().to_string(),
                    status: "ok".to_string(),
                    reason: None,
                    c,
                    epsilon,
                    cv_error: Some(cv_error),
                    test_error: None,
                    weights: report_weights(&model),
                },
                GridOutcome::NotApplicable { reason } => ReportRow {
                    family: family.display_name(),
                    family_id: family.id(),
                    core_feature: core.name().to_string(),
                    status: "not_applicable".to_string(),
                    reason: Some(reason),
                    c: None,
                    epsilon: None,
                    cv_error: None,
                    test_error: None,
                    weights: None,
                },
            };
            rows.push(row);
        }
    }
    Ok(EvaluationReport {
        schema: 1,
        experiment: "weights".to_string(),
        annotation: None,
        train_count: train.len(),
        cv_count: cv.len(),
        test_count: 0,
        rows,
    })
}
