//! Feature vectors for the regression models.
//!
//! The MapReduce feature layout is, in order: map tasks, reduce tasks,
//! avg/max map duration, avg/max reduce duration, avg/max shuffle duration,
//! avg/max shuffle bytes, dataset size, core term. Tez layouts repeat the
//! ten per-stage fields once per DAG stage (in signature order) before the
//! dataset size and core term, so a vector has `10*S + 2` components for an
//! `S`-stage signature.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::JobProfile;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("dag signature mismatch: profile has {profile:?}, spec expects {spec:?}")]
    SignatureMismatch { profile: String, spec: String },
    #[error("empty input")]
    EmptyInput,
    #[error("vector length {got} does not match spec length {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// How cluster parallelism enters the feature vector; exactly one candidate
/// is active per model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoreFeature {
    PlainCores,
    InverseCores,
    MapOverCores,
    ReduceOverCores,
}

impl CoreFeature {
    pub fn name(self) -> &'static str {
        match self {
            CoreFeature::PlainCores => "n_cores",
            CoreFeature::InverseCores => "inv_n_cores",
            CoreFeature::MapOverCores => "n_map_over_cores",
            CoreFeature::ReduceOverCores => "n_reduce_over_cores",
        }
    }

    pub fn term(self, profile: &JobProfile) -> f64 {
        let cores = profile.n_cores as f64;
        match self {
            CoreFeature::PlainCores => cores,
            CoreFeature::InverseCores => 1.0 / cores,
            CoreFeature::MapOverCores => profile.total_map_tasks() as f64 / cores,
            CoreFeature::ReduceOverCores => profile.total_reduce_tasks() as f64 / cores,
        }
    }
}

impl std::fmt::Display for CoreFeature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-component standardization parameters fitted on training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalerEntry {
    pub mean: f64,
    pub std: f64,
    /// True when the component had zero training variance (std forced to 1).
    pub degenerate: bool,
}

const STAGE_FEATURES: [&str; 10] = [
    "n_map",
    "n_reduce",
    "avg_map_s",
    "max_map_s",
    "avg_reduce_s",
    "max_reduce_s",
    "avg_shuffle_s",
    "max_shuffle_s",
    "avg_shuffle_bytes",
    "max_shuffle_bytes",
];

/// Ordered recipe mapping a [`JobProfile`] to a numeric feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub dag_signature: String,
    pub core_feature: CoreFeature,
    pub standardize: bool,
    pub names: Vec<String>,
    pub scaler: Option<Vec<ScalerEntry>>,
}

impl FeatureSpec {
    /// Builds the spec for a DAG signature. `"mr"` yields the 12-feature
    /// MapReduce layout; other signatures are split on `+` into stage names.
    pub fn for_signature(dag_signature: &str, core_feature: CoreFeature, standardize: bool) -> Self {
        let mut names = Vec::new();
        if dag_signature == "mr" {
            names.extend(STAGE_FEATURES.iter().map(|f| f.to_string()));
        } else {
            for stage in dag_signature.split('+') {
                names.extend(STAGE_FEATURES.iter().map(|f| format!("{stage}_{f}")));
            }
        }
        names.push("dataset_size_gb".to_string());
        names.push(core_feature.name().to_string());
        FeatureSpec {
            dag_signature: dag_signature.to_string(),
            core_feature,
            standardize,
            names,
            scaler: None,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Stage names in signature order.
    fn stage_names(&self) -> Vec<&str> {
        if self.dag_signature == "mr" {
            vec!["mr"]
        } else {
            self.dag_signature.split('+').collect()
        }
    }

    /// Short identifier tying a trained model back to its feature layout.
    pub fn fingerprint(&self) -> String {
        format!(
            "{}|{}|std={}|n={}",
            self.dag_signature,
            self.core_feature.name(),
            self.standardize,
            self.names.len()
        )
    }
}

/// One training/evaluation point: features, target, and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub x: Vec<f64>,
    pub y: f64,
    pub source_job_id: String,
}

/// Maps a profile to its feature vector under `spec`, applying the spec's
/// scaler when present.
pub fn build_vector(profile: &JobProfile, spec: &FeatureSpec) -> Result<FeatureVector, FeatureError> {
    if profile.dag_signature != spec.dag_signature {
        return Err(FeatureError::SignatureMismatch {
            profile: profile.dag_signature.clone(),
            spec: spec.dag_signature.clone(),
        });
    }
    let mut x = Vec::with_capacity(spec.len());
    for name in spec.stage_names() {
        let stage = profile
            .stages
            .iter()
            .find(|s| s.stage_name == name)
            .ok_or_else(|| FeatureError::SignatureMismatch {
                profile: profile.dag_signature.clone(),
                spec: spec.dag_signature.clone(),
            })?;
        x.push(stage.n_map_tasks as f64);
        x.push(stage.n_reduce_tasks as f64);
        x.push(stage.avg_map_s);
        x.push(stage.max_map_s);
        x.push(stage.avg_reduce_s);
        x.push(stage.max_reduce_s);
        x.push(stage.avg_shuffle_s);
        x.push(stage.max_shuffle_s);
        x.push(stage.avg_shuffle_bytes);
        x.push(stage.max_shuffle_bytes);
    }
    x.push(profile.dataset_size_gb);
    x.push(spec.core_feature.term(profile));
    debug_assert_eq!(x.len(), spec.len());

    if let Some(scaler) = &spec.scaler {
        for (v, entry) in x.iter_mut().zip(scaler) {
            *v = (*v - entry.mean) / entry.std;
        }
    }
    Ok(FeatureVector {
        x,
        y: profile.duration_s,
        source_job_id: profile.job_id.clone(),
    })
}

/// Fits a per-component (mean, sample std) scaler on training vectors and
/// returns a copy of `spec` carrying it. Zero-variance components get
/// std = 1 and are flagged degenerate.
pub fn fit_scaler(train: &[FeatureVector], spec: &FeatureSpec) -> Result<FeatureSpec, FeatureError> {
    if train.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let dim = spec.len();
    for v in train {
        if v.x.len() != dim {
            return Err(FeatureError::LengthMismatch {
                expected: dim,
                got: v.x.len(),
            });
        }
    }
    let m = train.len() as f64;
    let mut scaler = Vec::with_capacity(dim);
    for j in 0..dim {
        let mean = train.iter().map(|v| v.x[j]).sum::<f64>() / m;
        let std = if train.len() < 2 {
            0.0
        } else {
            let ss: f64 = train.iter().map(|v| (v.x[j] - mean).powi(2)).sum();
            (ss / (m - 1.0)).sqrt()
        };
        let degenerate = std == 0.0;
        scaler.push(ScalerEntry {
            mean,
            std: if degenerate { 1.0 } else { std },
            degenerate,
        });
    }
    let mut out = spec.clone();
    out.scaler = Some(scaler);
    Ok(out)
}

/// Applies the spec's scaler to already-built unscaled vectors.
pub fn scale_vectors(vectors: &[FeatureVector], spec: &FeatureSpec) -> Result<Vec<FeatureVector>, FeatureError> {
    let scaler = match &spec.scaler {
        Some(s) => s,
        None => return Ok(vectors.to_vec()),
    };
    vectors
        .iter()
        .map(|v| {
            if v.x.len() != scaler.len() {
                return Err(FeatureError::LengthMismatch {
                    expected: scaler.len(),
                    got: v.x.len(),
                });
            }
            let x = v
                .x
                .iter()
                .zip(scaler)
                .map(|(xi, e)| (xi - e.mean) / e.std)
                .collect();
            Ok(FeatureVector {
                x,
                y: v.y,
                source_job_id: v.source_job_id.clone(),
            })
        })
        .collect()
}
