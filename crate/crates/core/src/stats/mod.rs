//! Error metrics, paired t-tests and Same/Other/All comparison tables.

mod special;

pub use special::{inc_beta, ln_gamma, student_t_cdf, student_t_two_sided_p};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resampling::TrainPolicy;

/// Lower clamp applied to `log10(p)`.
pub const LOG10_P_FLOOR: f64 = -300.0;

/// Fraction of misclassified rows.
pub fn error_rate(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyView("prediction"));
    }
    let wrong = predicted.iter().zip(truth).filter(|(p, t)| p != t).count();
    Ok(wrong as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    /// `None` when the differences have zero spread.
    pub t_stat: Option<f64>,
    pub p_value: f64,
    pub mean_diff: f64,
    pub df: usize,
}

/// Two-sided one-sample t-test on paired differences, `K - 1` degrees of
/// freedom. Zero spread gives `p = 1` for a zero mean and `p = 0` otherwise.
pub fn paired_ttest(diffs: &[f64]) -> Result<TTest> {
    let k = diffs.len();
    if k < 2 {
        return Err(Error::TooFewPairs(k));
    }
    let kf = k as f64;
    let mean = diffs.iter().sum::<f64>() / kf;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (kf - 1.0);
    let sd = var.sqrt();
    let df = k - 1;
    // spread below rounding noise of the mean counts as zero
    if sd == 0.0 || sd <= 1e-12 * mean.abs() {
        let p_value = if mean == 0.0 { 1.0 } else { 0.0 };
        return Ok(TTest {
            t_stat: None,
            p_value,
            mean_diff: mean,
            df,
        });
    }
    let t = mean / (sd / kf.sqrt());
    Ok(TTest {
        t_stat: Some(t),
        p_value: student_t_two_sided_p(t, df as f64),
        mean_diff: mean,
        df,
    })
}

/// `log10(p)` clamped below at [`LOG10_P_FLOOR`].
pub fn clamped_log10(p: f64) -> f64 {
    if p <= 0.0 {
        LOG10_P_FLOOR
    } else {
        p.log10().max(LOG10_P_FLOOR)
    }
}

/// Test error of one (learner, split) execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub data: String,
    pub learner: String,
    pub test_subset: String,
    /// One-based fold id.
    pub test_fold: usize,
    pub policy: TrainPolicy,
    pub test_error: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub fit_seconds: f64,
}

impl EvalRecord {
    /// Serialization without wall-time, stable across runs.
    pub fn canonical_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:?},{},{}",
            self.data,
            self.learner,
            self.test_subset,
            self.test_fold,
            self.policy,
            self.test_error,
            self.n_train,
            self.n_test
        )
    }

    fn sort_key(&self) -> (&str, &str, &str, TrainPolicy, usize) {
        (&self.data, &self.learner, &self.test_subset, self.policy, self.test_fold)
    }
}

/// Sort records into (data, learner, subset, policy, fold) order.
pub fn sort_records(records: &mut [EvalRecord]) {
    records.sort_by(|a, b| {
        a.sort_key()
            .cmp(&b.sort_key())
            .then(a.test_error.total_cmp(&b.test_error))
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Comparison {
    OtherVsSame,
    AllVsSame,
}

impl Comparison {
    pub fn treatment(self) -> TrainPolicy {
        match self {
            Comparison::OtherVsSame => TrainPolicy::Other,
            Comparison::AllVsSame => TrainPolicy::All,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Comparison::OtherVsSame => "OtherVsSame",
            Comparison::AllVsSame => "AllVsSame",
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Comparison {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "OtherVsSame" => Ok(Comparison::OtherVsSame),
            "AllVsSame" => Ok(Comparison::AllVsSame),
            other => Err(Error::Parse(format!("unknown comparison {other:?}"))),
        }
    }
}

/// Paired comparison of a treatment policy against Same on one test subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetComparison {
    pub data: String,
    pub learner: String,
    pub test_subset: String,
    pub comparison: Comparison,
    /// Mean over folds of (treatment − Same) error, percentage points.
    pub mean_diff: f64,
    pub t_stat: Option<f64>,
    pub p_value: f64,
    pub log10_p: f64,
    pub k_used: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Comparisons {
    pub rows: Vec<SubsetComparison>,
    pub notices: Vec<String>,
}

type ArmKey = (String, String, String);

/// Per test subset, pair treatment and Same errors fold by fold and test the
/// differences. Folds missing either arm are dropped.
pub fn soak_compare(records: &[EvalRecord]) -> Comparisons {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);

    let mut arms: BTreeMap<ArmKey, BTreeMap<TrainPolicy, BTreeMap<usize, f64>>> = BTreeMap::new();
    for r in &sorted {
        arms.entry((r.data.clone(), r.learner.clone(), r.test_subset.clone()))
            .or_default()
            .entry(r.policy)
            .or_default()
            .entry(r.test_fold)
            .or_insert(r.test_error);
    }

    let mut out = Comparisons::default();
    for ((data, learner, subset), by_policy) in &arms {
        let treatments: Vec<Comparison> = [Comparison::OtherVsSame, Comparison::AllVsSame]
            .into_iter()
            .filter(|c| by_policy.contains_key(&c.treatment()))
            .collect();
        if treatments.is_empty() {
            continue;
        }
        let Some(same) = by_policy.get(&TrainPolicy::Same) else {
            out.notices.push(format!(
                "{data}/{learner}/{subset}: no Same records, comparison skipped"
            ));
            continue;
        };
        for comparison in treatments {
            let treat = &by_policy[&comparison.treatment()];
            let diffs: Vec<f64> = same
                .iter()
                .filter_map(|(fold, s)| treat.get(fold).map(|t| t - s))
                .collect();
            match paired_ttest(&diffs) {
                Ok(tt) => out.rows.push(SubsetComparison {
                    data: data.clone(),
                    learner: learner.clone(),
                    test_subset: subset.clone(),
                    comparison,
                    mean_diff: 100.0 * tt.mean_diff,
                    t_stat: tt.t_stat,
                    p_value: tt.p_value,
                    log10_p: clamped_log10(tt.p_value),
                    k_used: diffs.len(),
                }),
                Err(_) => out.notices.push(format!(
                    "{data}/{learner}/{subset}/{comparison}: {} paired folds, not computable",
                    diffs.len()
                )),
            }
        }
    }
    out.rows.sort_by(|a, b| {
        (&a.data, &a.learner, a.comparison, &a.test_subset).cmp(&(
            &b.data,
            &b.learner,
            b.comparison,
            &b.test_subset,
        ))
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    Similar,
    Different,
}

impl fmt::Display for Similarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Similarity::Similar => "similar",
            Similarity::Different => "different",
        })
    }
}

/// Min/max of error differences and `log10(p)` over the test subsets of one
/// (data, learner, comparison).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub data: String,
    pub learner: String,
    pub comparison: Comparison,
    pub min_diff: f64,
    pub max_diff: f64,
    /// Arithmetic mean over subset means.
    pub mean_diff: f64,
    pub min_log10p: f64,
    pub max_log10p: f64,
    pub mean_log10p: f64,
    pub subsets: usize,
    pub category: Similarity,
}

pub fn categorize(min_diff: f64, max_diff: f64, mean_diff: f64) -> Similarity {
    if max_diff <= 0.0 {
        Similarity::Similar
    } else if min_diff >= 0.0 {
        Similarity::Different
    } else if mean_diff <= 0.0 {
        Similarity::Similar
    } else {
        Similarity::Different
    }
}

pub fn summarize_dataset(comparisons: &[SubsetComparison]) -> Vec<DatasetSummary> {
    let mut groups: BTreeMap<(String, String, Comparison), Vec<&SubsetComparison>> = BTreeMap::new();
    for c in comparisons {
        groups
            .entry((c.data.clone(), c.learner.clone(), c.comparison))
            .or_default()
            .push(c);
    }
    groups
        .into_iter()
        .map(|((data, learner, comparison), rows)| {
            let n = rows.len() as f64;
            let diffs = rows.iter().map(|r| r.mean_diff);
            let logs = rows.iter().map(|r| r.log10_p);
            let min_diff = diffs.clone().fold(f64::INFINITY, f64::min);
            let max_diff = diffs.clone().fold(f64::NEG_INFINITY, f64::max);
            let mean_diff = diffs.sum::<f64>() / n;
            let min_log10p = logs.clone().fold(f64::INFINITY, f64::min);
            let max_log10p = logs.clone().fold(f64::NEG_INFINITY, f64::max);
            let mean_log10p = logs.sum::<f64>() / n;
            DatasetSummary {
                data,
                learner,
                comparison,
                min_diff,
                max_diff,
                mean_diff,
                min_log10p,
                max_log10p,
                mean_log10p,
                subsets: rows.len(),
                category: categorize(min_diff, max_diff, mean_diff),
            }
        })
        .collect()
}

/// Mean and sample SD of test error over folds, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub data: String,
    pub learner: String,
    pub test_subset: String,
    pub policy: TrainPolicy,
    pub mean_error: f64,
    pub sd_error: f64,
    pub folds: usize,
}

pub fn error_table(records: &[EvalRecord]) -> Vec<ErrorSummary> {
    let mut groups: BTreeMap<(String, String, String, TrainPolicy), Vec<f64>> = BTreeMap::new();
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    for r in &sorted {
        groups
            .entry((r.data.clone(), r.learner.clone(), r.test_subset.clone(), r.policy))
            .or_default()
            .push(100.0 * r.test_error);
    }
    groups
        .into_iter()
        .map(|((data, learner, test_subset, policy), errs)| {
            let n = errs.len() as f64;
            let mean = errs.iter().sum::<f64>() / n;
            let sd = if errs.len() > 1 {
                (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            ErrorSummary {
                data,
                learner,
                test_subset,
                policy,
                mean_error: mean,
                sd_error: sd,
                folds: errs.len(),
            }
        })
        .collect()
}
