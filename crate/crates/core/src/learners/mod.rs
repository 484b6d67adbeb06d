//! Built-in classifiers, each tuned by internal class-stratified K-fold CV.

mod featureless;
mod knn;
mod logistic;

pub use featureless::fit_featureless;
pub use knn::{fit_knn, fit_knn_fixed, KnnSpec};
pub use logistic::{
    fit_l1_logistic, lambda_max, objective_and_gradient, solve_path, L1Spec, PathPoint, SolverOptions,
};

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{DataView, Matrix};
use crate::error::{Error, Result};

/// Row access shared by matrices and views.
pub trait Rows: Sync {
    fn n_rows(&self) -> usize;
    fn width(&self) -> usize;
    fn row_at(&self, i: usize) -> &[f64];
}

impl Rows for Matrix {
    fn n_rows(&self) -> usize {
        self.rows()
    }
    fn width(&self) -> usize {
        self.cols()
    }
    fn row_at(&self, i: usize) -> &[f64] {
        self.row(i)
    }
}

impl Rows for DataView<'_> {
    fn n_rows(&self) -> usize {
        self.len()
    }
    fn width(&self) -> usize {
        self.n_features()
    }
    fn row_at(&self, i: usize) -> &[f64] {
        self.x(i)
    }
}

/// Column means and population standard deviations of a training set.
/// Constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit<R: Rows + ?Sized>(data: &R) -> Self {
        let p = data.width();
        let n = data.n_rows().max(1) as f64;
        let mut mean = vec![0.0; p];
        for i in 0..data.n_rows() {
            for (m, x) in mean.iter_mut().zip(data.row_at(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for i in 0..data.n_rows() {
            for ((v, x), m) in var.iter_mut().zip(data.row_at(i)).zip(&mean) {
                *v += (x - m).powi(2);
            }
        }
        let sd = var
            .into_iter()
            .zip(&mean)
            .map(|(v, m)| {
                let sd = (v / n).sqrt();
                // relative to the column scale, rounding noise is a constant column
                if sd <= 1e-12 * m.abs().max(f64::MIN_POSITIVE) {
                    0.0
                } else {
                    sd
                }
            })
            .collect();
        Standardizer { mean, sd }
    }

    pub fn transform_into(&self, row: &[f64], out: &mut [f64]) {
        for (j, (o, x)) in out.iter_mut().zip(row).enumerate() {
            let sd = self.sd[j];
            *o = if sd > 0.0 { (x - self.mean[j]) / sd } else { 0.0 };
        }
    }

    pub fn transform<R: Rows + ?Sized>(&self, data: &R) -> Matrix {
        let p = data.width();
        let mut out = Matrix::zeros(data.n_rows(), p);
        for i in 0..data.n_rows() {
            self.transform_into(data.row_at(i), out.row_mut(i));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Featureless,
    Knn,
    L1Logistic,
}

impl LearnerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Featureless => "featureless",
            LearnerKind::Knn => "knn",
            LearnerKind::L1Logistic => "l1_logistic",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "featureless" => Ok(LearnerKind::Featureless),
            "knn" | "nearest_neighbors" => Ok(LearnerKind::Knn),
            "l1_logistic" | "cv_glmnet" | "glmnet" => Ok(LearnerKind::L1Logistic),
            other => Err(Error::UnknownLearner(other.to_string())),
        }
    }
}

/// A built-in learner with its tuning configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    Featureless,
    Knn(KnnSpec),
    L1Logistic(L1Spec),
}

impl LearnerSpec {
    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerSpec::Featureless => LearnerKind::Featureless,
            LearnerSpec::Knn(_) => LearnerKind::Knn,
            LearnerSpec::L1Logistic(_) => LearnerKind::L1Logistic,
        }
    }

    pub fn default_for(kind: LearnerKind) -> Self {
        match kind {
            LearnerKind::Featureless => LearnerSpec::Featureless,
            LearnerKind::Knn => LearnerSpec::Knn(KnnSpec::default()),
            LearnerKind::L1Logistic => LearnerSpec::L1Logistic(L1Spec::default()),
        }
    }

    pub fn fit(&self, train: &DataView<'_>, seed: u64) -> Result<FittedModel> {
        match self {
            LearnerSpec::Featureless => fit_featureless(train),
            LearnerSpec::Knn(spec) => fit_knn(train, spec, seed),
            LearnerSpec::L1Logistic(spec) => fit_l1_logistic(train, spec, seed),
        }
    }
}

impl FromStr for LearnerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(LearnerSpec::default_for(s.parse()?))
    }
}

/// Anything the engine can train on one split and evaluate on its test set.
/// Third-party learners implement this directly.
pub trait Learner: Send + Sync {
    fn name(&self) -> String;
    fn fit_predict(&self, train: &DataView<'_>, test: &DataView<'_>, seed: u64) -> Result<Vec<usize>>;
}

impl Learner for LearnerSpec {
    fn name(&self) -> String {
        self.kind().to_string()
    }

    fn fit_predict(&self, train: &DataView<'_>, test: &DataView<'_>, seed: u64) -> Result<Vec<usize>> {
        self.fit(train, seed)?.predict(test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Featureless {
        class: usize,
    },
    Knn {
        neighbors: usize,
        standardizer: Standardizer,
        exemplars: Matrix,
        labels: Vec<usize>,
        threads: usize,
    },
    L1Logistic {
        /// Class index of each weight row; classes absent from training are never predicted.
        classes: Vec<usize>,
        /// One row per entry of `classes`, one column per feature.
        weights: Matrix,
        intercepts: Vec<f64>,
        lambda: f64,
        standardizer: Standardizer,
    },
}

/// Hyper-parameter selection record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    /// Candidate values in the order they were scored.
    pub grid: Vec<f64>,
    /// Mean internal validation error per candidate.
    pub cv_error: Vec<f64>,
    pub chosen: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub kind: LearnerKind,
    pub params: ModelParams,
    pub tuning: Tuning,
    pub n_features: usize,
    pub fit_seconds: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FittedModel {
    pub fn predict<R: Rows + ?Sized>(&self, data: &R) -> Result<Vec<usize>> {
        if data.width() != self.n_features {
            return Err(Error::WidthMismatch {
                expected: self.n_features,
                got: data.width(),
            });
        }
        Ok(match &self.params {
            ModelParams::Featureless { class } => vec![*class; data.n_rows()],
            ModelParams::Knn {
                neighbors,
                standardizer,
                exemplars,
                labels,
                threads,
            } => knn::predict(data, standardizer, exemplars, labels, *neighbors, *threads),
            ModelParams::L1Logistic {
                classes,
                weights,
                intercepts,
                standardizer,
                ..
            } => logistic::predict(data, standardizer, classes, weights, intercepts),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub(crate) fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = crate::clock::Stopwatch::start();
    let out = f()?;
    Ok((out, start.seconds()))
}

/// Class-stratified fold ids for the positions of `view`. Uses at most
/// `view.len()` folds.
pub(crate) fn internal_folds(view: &DataView<'_>, k: usize, seed: u64) -> (usize, Vec<usize>) {
    let k = k.min(view.len()).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class = vec![Vec::new(); view.n_classes()];
    for i in 0..view.len() {
        by_class[view.y(i)].push(i);
    }
    let mut folds = vec![0; view.len()];
    let mut slot = 0;
    for members in by_class.iter_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[i] = slot % k;
            slot += 1;
        }
    }
    (k, folds)
}

/// Positions in and out of internal fold `f`.
pub(crate) fn fold_positions(folds: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    let (mut fit, mut val) = (Vec::new(), Vec::new());
    for (i, &fi) in folds.iter().enumerate() {
        if fi == f {
            val.push(i);
        } else {
            fit.push(i);
        }
    }
    (fit, val)
}

/// Index of the smallest value; ties keep the first.
pub(crate) fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_constant_column() {
        let m = Matrix::from_rows(&[vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
        let s = Standardizer::fit(&m);
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.sd, vec![1.0, 0.0]);
        let t = s.transform(&m);
        assert_eq!(t.row(0), &[-1.0, 0.0]);
    }

    #[test]
    fn internal_folds_stratified() {
        let x = Matrix::zeros(20, 1);
        let y: Vec<usize> = (0..20).map(|i| usize::from(i < 6)).collect();
        let v = DataView::full(&x, &y, 2);
        let (k, folds) = internal_folds(&v, 3, 9);
        assert_eq!(k, 3);
        for c in 0..2 {
            let mut counts = [0; 3];
            for i in 0..20 {
                if y[i] == c {
                    counts[folds[i]] += 1;
                }
            }
            assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn learner_names_parse() {
        assert_eq!("knn".parse::<LearnerKind>().unwrap(), LearnerKind::Knn);
        assert_eq!("cv_glmnet".parse::<LearnerKind>().unwrap(), LearnerKind::L1Logistic);
        assert!("xgboost".parse::<LearnerKind>().is_err());
    }

    #[test]
    fn argmin_ties_keep_first() {
        assert_eq!(argmin_first(&[0.2, 0.1, 0.1]), 1);
    }
}
