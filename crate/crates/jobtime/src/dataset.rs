//! Loading, validation, grouping, outlier filtering and splitting of
//! job-profile records.
//!
//! A [`JobProfile`] is one observed job run. Profiles are grouped by
//! configuration (query, DAG, cores, dataset size) for the 3-sigma outlier
//! rule, and randomly partitioned into train/cv/test sets with a seeded
//! shuffle.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column: {0}")]
    MissingColumn(String),
    #[error("row {row}: malformed value in column {column}: {value:?}")]
    MalformedValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: invariant violation: {reason}")]
    InvariantViolation { row: usize, reason: String },
    #[error("empty input")]
    EmptyInput,
    #[error("invalid split spec: {0}")]
    InvalidSplitSpec(String),
}

/// Per-stage task statistics. MapReduce jobs have exactly one stage named
/// `"mr"`; Tez jobs have one entry per DAG vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub stage_name: String,
    pub n_map_tasks: u32,
    pub n_reduce_tasks: u32,
    pub avg_map_s: f64,
    pub max_map_s: f64,
    pub avg_reduce_s: f64,
    pub max_reduce_s: f64,
    pub avg_shuffle_s: f64,
    pub max_shuffle_s: f64,
    pub avg_shuffle_bytes: f64,
    pub max_shuffle_bytes: f64,
}

impl StageStats {
    fn validate(&self) -> Result<(), String> {
        let pairs = [
            ("map duration", self.avg_map_s, self.max_map_s),
            ("reduce duration", self.avg_reduce_s, self.max_reduce_s),
            ("shuffle duration", self.avg_shuffle_s, self.max_shuffle_s),
            ("shuffle bytes", self.avg_shuffle_bytes, self.max_shuffle_bytes),
        ];
        for (name, avg, max) in pairs {
            if !(avg.is_finite() && max.is_finite()) {
                return Err(format!("stage {}: non-finite {}", self.stage_name, name));
            }
            if avg < 0.0 || max < 0.0 {
                return Err(format!("stage {}: negative {}", self.stage_name, name));
            }
            if avg > max {
                return Err(format!(
                    "stage {}: avg {} ({}) exceeds max ({})",
                    self.stage_name, name, avg, max
                ));
            }
        }
        Ok(())
    }
}

/// One observed job run; `duration_s` is the regression target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobProfile {
    pub job_id: String,
    pub query_id: String,
    pub dag_signature: String,
    pub dataset_size_gb: f64,
    pub n_cores: u32,
    pub stages: Vec<StageStats>,
    pub duration_s: f64,
}

impl JobProfile {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.duration_s > 0.0) {
            return Err(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if self.n_cores < 1 {
            return Err("n_cores must be >= 1".into());
        }
        if !(self.dataset_size_gb >= 0.0) {
            return Err(format!(
                "dataset_size_gb must be nonnegative, got {}",
                self.dataset_size_gb
            ));
        }
        if self.stages.is_empty() {
            return Err("stages must be nonempty".into());
        }
        let mut seen = HashSet::new();
        for s in &self.stages {
            if !seen.insert(s.stage_name.as_str()) {
                return Err(format!("duplicate stage name {:?}", s.stage_name));
            }
            s.validate()?;
        }
        Ok(())
    }

    /// Total map tasks over all stages.
    pub fn total_map_tasks(&self) -> u32 {
        self.stages.iter().map(|s| s.n_map_tasks).sum()
    }

    /// Total reduce tasks over all stages.
    pub fn total_reduce_tasks(&self) -> u32 {
        self.stages.iter().map(|s| s.n_reduce_tasks).sum()
    }
}

/// Grouping key for the 3-sigma rule: one group per experiment configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupKey {
    pub query_id: String,
    pub dag_signature: String,
    pub n_cores: u32,
    size_bits: u64,
}

impl GroupKey {
    pub fn of(p: &JobProfile) -> Self {
        GroupKey {
            query_id: p.query_id.clone(),
            dag_signature: p.dag_signature.clone(),
            n_cores: p.n_cores,
            size_bits: p.dataset_size_gb.to_bits(),
        }
    }

    pub fn dataset_size_gb(&self) -> f64 {
        f64::from_bits(self.size_bits)
    }
}

/// Profiles sharing one experiment configuration.
#[derive(Debug, Clone)]
pub struct RunGroup {
    pub key: GroupKey,
    pub members: Vec<JobProfile>,
}

/// Fractions for the train/cv/test partition plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub cv_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_frac: f64, cv_frac: f64, test_frac: f64, seed: u64) -> Result<Self, DatasetError> {
        for (name, f) in [("train", train_frac), ("cv", cv_frac), ("test", test_frac)] {
            if !(f > 0.0 && f < 1.0) {
                return Err(DatasetError::InvalidSplitSpec(format!(
                    "{name} fraction {f} not in (0,1)"
                )));
            }
        }
        if (train_frac + cv_frac + test_frac - 1.0).abs() > 1e-12 {
            return Err(DatasetError::InvalidSplitSpec("fractions must sum to 1".into()));
        }
        Ok(SplitSpec {
            train_frac,
            cv_frac,
            test_frac,
            seed,
        })
    }

    /// The standard 60/20/20 partition.
    pub fn standard(seed: u64) -> Self {
        SplitSpec {
            train_frac: 0.6,
            cv_frac: 0.2,
            test_frac: 0.2,
            seed,
        }
    }
}

const BASE_COLUMNS: [&str; 6] = [
    "job_id",
    "query_id",
    "dag_signature",
    "dataset_size_gb",
    "n_cores",
    "duration_s",
];

const STAGE_COLUMNS: [&str; 10] = [
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

struct ColumnMap(HashMap<String, usize>);

impl ColumnMap {
    fn index(&self, name: &str) -> Result<usize, DatasetError> {
        self.0
            .get(name)
            .copied()
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    }

    fn has(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }
}

fn field<'r>(
    record: &'r csv::StringRecord,
    cols: &ColumnMap,
    name: &str,
    row: usize,
) -> Result<&'r str, DatasetError> {
    let idx = cols.index(name)?;
    record.get(idx).ok_or_else(|| DatasetError::MalformedValue {
        row,
        column: name.to_string(),
        value: "<missing>".into(),
    })
}

fn parse_f64(
    record: &csv::StringRecord,
    cols: &ColumnMap,
    name: &str,
    row: usize,
) -> Result<f64, DatasetError> {
    let raw = field(record, cols, name, row)?;
    raw.trim().parse::<f64>().map_err(|_| DatasetError::MalformedValue {
        row,
        column: name.to_string(),
        value: raw.to_string(),
    })
}

fn parse_u32(
    record: &csv::StringRecord,
    cols: &ColumnMap,
    name: &str,
    row: usize,
) -> Result<u32, DatasetError> {
    let raw = field(record, cols, name, row)?;
    raw.trim().parse::<u32>().map_err(|_| DatasetError::MalformedValue {
        row,
        column: name.to_string(),
        value: raw.to_string(),
    })
}

fn parse_stage(
    record: &csv::StringRecord,
    cols: &ColumnMap,
    prefix: &str,
    stage_name: String,
    row: usize,
) -> Result<StageStats, DatasetError> {
    let col = |base: &str| format!("{prefix}{base}");
    Ok(StageStats {
        stage_name,
        n_map_tasks: parse_u32(record, cols, &col("n_map"), row)?,
        n_reduce_tasks: parse_u32(record, cols, &col("n_reduce"), row)?,
        avg_map_s: parse_f64(record, cols, &col("avg_map_s"), row)?,
        max_map_s: parse_f64(record, cols, &col("max_map_s"), row)?,
        avg_reduce_s: parse_f64(record, cols, &col("avg_reduce_s"), row)?,
        max_reduce_s: parse_f64(record, cols, &col("max_reduce_s"), row)?,
        avg_shuffle_s: parse_f64(record, cols, &col("avg_shuffle_s"), row)?,
        max_shuffle_s: parse_f64(record, cols, &col("max_shuffle_s"), row)?,
        avg_shuffle_bytes: parse_f64(record, cols, &col("avg_shuffle_bytes"), row)?,
        max_shuffle_bytes: parse_f64(record, cols, &col("max_shuffle_bytes"), row)?,
    })
}

/// Loads job profiles from a CSV file.
///
/// Two schemas are accepted, distinguished by the header: the flat MapReduce
/// schema (`n_map`, `n_reduce`, ... after the base columns) and the Tez
/// schema with per-stage blocks `s{k}_name, s{k}_n_map, ...`. Rows violating
/// the type invariants are rejected with row-numbered diagnostics.
pub fn load_profiles(path: &Path) -> Result<Vec<JobProfile>, DatasetError> {
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();
    let cols = ColumnMap(
        headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect(),
    );
    for c in BASE_COLUMNS {
        cols.index(c)?;
    }

    let tez = cols.has("s0_name");
    if !tez {
        for c in STAGE_COLUMNS {
            cols.index(c)?;
        }
    }
    let n_stage_blocks = if tez {
        (0..).take_while(|k| cols.has(&format!("s{k}_name"))).count()
    } else {
        0
    };

    let mut profiles = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2; // 1-based, counting the header line

        let stages = if tez {
            let mut stages = Vec::with_capacity(n_stage_blocks);
            for k in 0..n_stage_blocks {
                let name = field(&record, &cols, &format!("s{k}_name"), row)?.trim().to_string();
                stages.push(parse_stage(&record, &cols, &format!("s{k}_"), name, row)?);
            }
            stages
        } else {
            vec![parse_stage(&record, &cols, "", "mr".to_string(), row)?]
        };

        let profile = JobProfile {
            job_id: field(&record, &cols, "job_id", row)?.to_string(),
            query_id: field(&record, &cols, "query_id", row)?.to_string(),
            dag_signature: field(&record, &cols, "dag_signature", row)?.to_string(),
            dataset_size_gb: parse_f64(&record, &cols, "dataset_size_gb", row)?,
            n_cores: parse_u32(&record, &cols, "n_cores", row)?,
            stages,
            duration_s: parse_f64(&record, &cols, "duration_s", row)?,
        };
        profile
            .validate()
            .map_err(|reason| DatasetError::InvariantViolation { row, reason })?;
        let expected_sig = canonical_signature(&profile.stages);
        if profile.dag_signature != expected_sig {
            return Err(DatasetError::InvariantViolation {
                row,
                reason: format!(
                    "dag_signature {:?} does not match stage layout {:?}",
                    profile.dag_signature, expected_sig
                ),
            });
        }
        profiles.push(profile);
    }
    Ok(profiles)
}

/// Canonical DAG signature: `"mr"` for the single-stage MapReduce layout,
/// otherwise the stage names joined by `+` in stage order.
pub fn canonical_signature(stages: &[StageStats]) -> String {
    if stages.len() == 1 && stages[0].stage_name == "mr" {
        "mr".to_string()
    } else {
        stages
            .iter()
            .map(|s| s.stage_name.as_str())
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Writes MapReduce-schema profiles to a CSV string. All profiles must have
/// the single `"mr"` stage.
pub fn write_mr_csv(profiles: &[JobProfile]) -> Result<String, DatasetError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = BASE_COLUMNS.to_vec();
    header.extend(STAGE_COLUMNS);
    w.write_record(&header)?;
    for p in profiles {
        if p.dag_signature != "mr" || p.stages.len() != 1 {
            return Err(DatasetError::InvariantViolation {
                row: 0,
                reason: format!("profile {} is not a MapReduce profile", p.job_id),
            });
        }
        let s = &p.stages[0];
        w.write_record(&[
            p.job_id.clone(),
            p.query_id.clone(),
            p.dag_signature.clone(),
            p.dataset_size_gb.to_string(),
            p.n_cores.to_string(),
            p.duration_s.to_string(),
            s.n_map_tasks.to_string(),
            s.n_reduce_tasks.to_string(),
            s.avg_map_s.to_string(),
            s.max_map_s.to_string(),
            s.avg_reduce_s.to_string(),
            s.max_reduce_s.to_string(),
            s.avg_shuffle_s.to_string(),
            s.max_shuffle_s.to_string(),
            s.avg_shuffle_bytes.to_string(),
            s.max_shuffle_bytes.to_string(),
        ])?;
    }
    let bytes = w.into_inner().expect("csv writer into_inner");
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Groups profiles by experiment configuration, preserving first-seen group
/// order and member order.
pub fn group_runs(profiles: &[JobProfile]) -> Vec<RunGroup> {
    let mut order: Vec<GroupKey> = Vec::new();
    let mut groups: HashMap<GroupKey, Vec<JobProfile>> = HashMap::new();
    for p in profiles {
        let key = GroupKey::of(p);
        groups.entry(key.clone()).or_insert_with(|| {
            order.push(key.clone());
            Vec::new()
        });
        groups.get_mut(&key).unwrap().push(p.clone());
    }
    order
        .into_iter()
        .map(|key| {
            let members = groups.remove(&key).unwrap();
            RunGroup { key, members }
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n-1 denominator). Zero for fewer than two
/// values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Discards runs whose duration deviates from their configuration-group mean
/// by more than three sample standard deviations.
///
/// Groups smaller than three are never filtered. Single pass: mean and std
/// are computed once per group on the full group, not re-estimated after
/// discarding.
pub fn filter_outliers(profiles: &[JobProfile]) -> (Vec<JobProfile>, Vec<JobProfile>) {
    let mut discard_ids: HashSet<String> = HashSet::new();
    for group in group_runs(profiles) {
        if group.members.len() < 3 {
            continue;
        }
        let durations: Vec<f64> = group.members.iter().map(|p| p.duration_s).collect();
        let m = mean(&durations);
        let sd = sample_std(&durations);
        for p in &group.members {
            if (p.duration_s - m).abs() > 3.0 * sd {
                discard_ids.insert(p.job_id.clone());
            }
        }
    }
    let mut kept = Vec::new();
    let mut discarded = Vec::new();
    for p in profiles {
        if discard_ids.contains(&p.job_id) {
            discarded.push(p.clone());
        } else {
            kept.push(p.clone());
        }
    }
    (kept, discarded)
}

/// Randomly partitions profiles into train/cv/test by a seeded shuffle.
///
/// Sizes are `floor(frac * n)` with remainder rows assigned train, then cv,
/// then test. Deterministic for a fixed seed.
/// Train / cross-validation / test slices in that order.
pub type SplitSlices = (Vec<JobProfile>, Vec<JobProfile>, Vec<JobProfile>);

pub fn split(
    profiles: &[JobProfile],
    spec: &SplitSpec,
) -> Result<SplitSlices, DatasetError> {
    if profiles.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    let n = profiles.len();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    indices.shuffle(&mut rng);

    let mut n_train = (spec.train_frac * n as f64).floor() as usize;
    let mut n_cv = (spec.cv_frac * n as f64).floor() as usize;
    let n_test = (spec.test_frac * n as f64).floor() as usize;
    let mut remainder = n - (n_train + n_cv + n_test);
    if remainder > 0 {
        n_train += 1;
        remainder -= 1;
    }
    if remainder > 0 {
        n_cv += 1;
    }

    let pick = |range: std::ops::Range<usize>| -> Vec<JobProfile> {
        indices[range].iter().map(|&i| profiles[i].clone()).collect()
    };
    let train = pick(0..n_train);
    let cv = pick(n_train..n_train + n_cv);
    let test = pick(n_train + n_cv..n);
    Ok((train, cv, test))
}

/// Two-way split used by the core-holdout and cross-query runners
/// (train/cv with no test slice).
pub fn split_two(
    profiles: &[JobProfile],
    first_frac: f64,
    seed: u64,
) -> Result<(Vec<JobProfile>, Vec<JobProfile>), DatasetError> {
    if profiles.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    let n = profiles.len();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    // Remainder goes to the first (training) slice.
    let n_second = ((1.0 - first_frac) * n as f64).floor() as usize;
    let n_first = n - n_second;
    let first = indices[0..n_first].iter().map(|&i| profiles[i].clone()).collect();
    let second = indices[n_first..].iter().map(|&i| profiles[i].clone()).collect();
    Ok((first, second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    pub(crate) fn mr_profile(job_id: &str, duration_s: f64) -> JobProfile {
        JobProfile {
            job_id: job_id.to_string(),
            query_id: "R1".to_string(),
            dag_signature: "mr".to_string(),
            dataset_size_gb: 250.0,
            n_cores: 40,
            stages: vec![StageStats {
                stage_name: "mr".to_string(),
                n_map_tasks: 10,
                n_reduce_tasks: 2,
                avg_map_s: 1.0,
                max_map_s: 2.0,
                avg_reduce_s: 1.0,
                max_reduce_s: 2.0,
                avg_shuffle_s: 1.0,
                max_shuffle_s: 2.0,
                avg_shuffle_bytes: 100.0,
                max_shuffle_bytes: 200.0,
            }],
            duration_s,
        }
    }

    const MR_HEADER: &str = "job_id,query_id,dag_signature,dataset_size_gb,n_cores,duration_s,n_map,n_reduce,avg_map_s,max_map_s,avg_reduce_s,max_reduce_s,avg_shuffle_s,max_shuffle_s,avg_shuffle_bytes,max_shuffle_bytes";

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn load_empty_file_with_valid_header() {
        let f = write_temp(&format!("{MR_HEADER}\n"));
        let profiles = load_profiles(f.path()).unwrap();
        assert!(profiles.is_empty());
    }

    #[test]
    fn load_rejects_avg_above_max() {
        let f = write_temp(&format!(
            "{MR_HEADER}\nj1,R1,mr,250,40,100,10,2,10,5,1,2,1,2,100,200\n"
        ));
        let err = load_profiles(f.path()).unwrap_err();
        match err {
            DatasetError::InvariantViolation { row, .. } => assert_eq!(row, 2),
            other => panic!("expected InvariantViolation, got {other:?}"),
        }
    }

    #[test]
    fn load_three_valid_rows() {
        let f = write_temp(&format!(
            "{MR_HEADER}\n\
             j1,R1,mr,250,40,100,10,2,1,2,1,2,1,2,100,200\n\
             j2,R1,mr,250,40,110,10,2,1,2,1,2,1,2,100,200\n\
             j3,R1,mr,500,80,90,20,4,1,2,1,2,1,2,100,200\n"
        ));
        let profiles = load_profiles(f.path()).unwrap();
        assert_eq!(profiles.len(), 3);
        assert_eq!(profiles[0].job_id, "j1");
        assert_eq!(profiles[2].n_cores, 80);
        assert_eq!(profiles[2].dataset_size_gb, 500.0);
        assert_eq!(profiles[1].duration_s, 110.0);
        assert_eq!(profiles[0].stages[0].n_map_tasks, 10);
    }

    #[test]
    fn load_missing_column() {
        let f = write_temp("job_id,query_id\nj1,R1\n");
        assert!(matches!(
            load_profiles(f.path()),
            Err(DatasetError::MissingColumn(_))
        ));
    }

    #[test]
    fn load_tez_schema() {
        let header = "job_id,query_id,dag_signature,dataset_size_gb,n_cores,duration_s,\
             s0_name,s0_n_map,s0_n_reduce,s0_avg_map_s,s0_max_map_s,s0_avg_reduce_s,s0_max_reduce_s,\
             s0_avg_shuffle_s,s0_max_shuffle_s,s0_avg_shuffle_bytes,s0_max_shuffle_bytes,\
             s1_name,s1_n_map,s1_n_reduce,s1_avg_map_s,s1_max_map_s,s1_avg_reduce_s,s1_max_reduce_s,\
             s1_avg_shuffle_s,s1_max_shuffle_s,s1_avg_shuffle_bytes,s1_max_shuffle_bytes";
        let f = write_temp(&format!(
            "{header}\nj1,Q2,v1+v2,50,16,80,v1,5,1,1,2,1,2,1,2,10,20,v2,8,2,1,2,1,2,1,2,30,60\n"
        ));
        let profiles = load_profiles(f.path()).unwrap();
        assert_eq!(profiles.len(), 1);
        assert_eq!(profiles[0].stages.len(), 2);
        assert_eq!(profiles[0].stages[0].stage_name, "v1");
        assert_eq!(profiles[0].stages[1].stage_name, "v2");
        assert_eq!(profiles[0].dag_signature, "v1+v2");
    }

    #[test]
    fn mr_csv_round_trip() {
        let profiles = vec![mr_profile("a", 100.0), mr_profile("b", 120.5)];
        let csv = write_mr_csv(&profiles).unwrap();
        let f = write_temp(&csv);
        let loaded = load_profiles(f.path()).unwrap();
        assert_eq!(loaded, profiles);
    }

    #[test]
    fn outliers_zero_variance_group_all_kept() {
        let profiles: Vec<_> = (0..5).map(|i| mr_profile(&format!("j{i}"), 100.0)).collect();
        let (kept, discarded) = filter_outliers(&profiles);
        assert_eq!(kept.len(), 5);
        assert!(discarded.is_empty());
    }

    #[test]
    fn outliers_single_spike_discarded() {
        // 19 x 100 plus one 1000: mean = 145, sample std ~ 201.2,
        // |1000 - 145| = 855 > 3 * 201.2 ~ 603.7.
        let mut profiles: Vec<_> = (0..19).map(|i| mr_profile(&format!("j{i}"), 100.0)).collect();
        profiles.push(mr_profile("spike", 1000.0));
        let (kept, discarded) = filter_outliers(&profiles);
        assert_eq!(kept.len(), 19);
        assert_eq!(discarded.len(), 1);
        assert_eq!(discarded[0].job_id, "spike");
    }

    #[test]
    fn outliers_moderate_deviation_kept() {
        // [100,101,99,100,500]: mean = 180, sample std ~ 178.9,
        // |500 - 180| = 320 < 3 * 178.9.
        let durations = [100.0, 101.0, 99.0, 100.0, 500.0];
        let profiles: Vec<_> = durations
            .iter()
            .enumerate()
            .map(|(i, &d)| mr_profile(&format!("j{i}"), d))
            .collect();
        let (kept, discarded) = filter_outliers(&profiles);
        assert_eq!(kept.len(), 5);
        assert!(discarded.is_empty());
    }

    #[test]
    fn outliers_small_groups_never_filtered() {
        let profiles = vec![mr_profile("a", 1.0), mr_profile("b", 1e9)];
        let (kept, discarded) = filter_outliers(&profiles);
        assert_eq!(kept.len(), 2);
        assert!(discarded.is_empty());
    }

    #[test]
    fn outliers_second_pass_may_shrink_never_grow() {
        let mut profiles: Vec<_> = (0..18).map(|i| mr_profile(&format!("j{i}"), 100.0)).collect();
        profiles.push(mr_profile("s1", 600.0));
        profiles.push(mr_profile("s2", 1000.0));
        let (kept1, _) = filter_outliers(&profiles);
        let (kept2, _) = filter_outliers(&kept1);
        assert!(kept2.len() <= kept1.len());
    }

    #[test]
    fn split_exact_fractions() {
        let profiles: Vec<_> = (0..10).map(|i| mr_profile(&format!("j{i}"), 100.0)).collect();
        let spec = SplitSpec::standard(1);
        let (train, cv, test) = split(&profiles, &spec).unwrap();
        assert_eq!((train.len(), cv.len(), test.len()), (6, 2, 2));
    }

    #[test]
    fn split_remainder_rule() {
        // n=5, fracs .6/.2/.2: floors are 3,1,1 which already sum to 5.
        let profiles: Vec<_> = (0..5).map(|i| mr_profile(&format!("j{i}"), 100.0)).collect();
        let spec = SplitSpec::standard(7);
        let (train, cv, test) = split(&profiles, &spec).unwrap();
        assert_eq!((train.len(), cv.len(), test.len()), (3, 1, 1));

        // n=7: floors are 4,1,1; remainder 1 goes to train.
        let profiles: Vec<_> = (0..7).map(|i| mr_profile(&format!("j{i}"), 100.0)).collect();
        let (train, cv, test) = split(&profiles, &spec).unwrap();
        assert_eq!((train.len(), cv.len(), test.len()), (5, 1, 1));
    }

    #[test]
    fn split_deterministic() {
        let profiles: Vec<_> = (0..23).map(|i| mr_profile(&format!("j{i}"), i as f64 + 1.0)).collect();
        let spec = SplitSpec::standard(42);
        let a = split(&profiles, &spec).unwrap();
        let b = split(&profiles, &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_empty_input() {
        assert!(matches!(
            split(&[], &SplitSpec::standard(1)),
            Err(DatasetError::EmptyInput)
        ));
    }

    #[test]
    fn split_is_partition() {
        let profiles: Vec<_> = (0..17).map(|i| mr_profile(&format!("j{i}"), 100.0)).collect();
        let spec = SplitSpec::standard(3);
        let (train, cv, test) = split(&profiles, &spec).unwrap();
        let mut ids: Vec<_> = train
            .iter()
            .chain(cv.iter())
            .chain(test.iter())
            .map(|p| p.job_id.clone())
            .collect();
        ids.sort();
        let mut expected: Vec<_> = profiles.iter().map(|p| p.job_id.clone()).collect();
        expected.sort();
        assert_eq!(ids, expected);
    }
}
