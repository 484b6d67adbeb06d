use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::{DataView, Matrix};
use crate::error::{Error, Result};

use super::{
    argmin_first, fold_positions, internal_folds, timed, FittedModel, LearnerKind, ModelParams, Rows,
    Standardizer, Tuning,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnSpec {
    pub neighbors: Vec<usize>,
    pub internal_folds: usize,
    /// Worker threads for prediction-time distance computation.
    pub threads: usize,
}

impl Default for KnnSpec {
    fn default() -> Self {
        KnnSpec {
            neighbors: (1..=20).collect(),
            internal_folds: 10,
            threads: 1,
        }
    }
}

fn by_distance(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Exemplar positions of the `k` nearest neighbours, nearest first; distance
/// ties resolve to the smaller exemplar index.
fn nearest(query: &[f64], exemplars: &Matrix, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = (0..exemplars.rows())
        .map(|i| {
            let dist = exemplars
                .row(i)
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            (dist, i)
        })
        .collect();
    let k = k.min(d.len());
    if k == 0 {
        return Vec::new();
    }
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, by_distance);
        d.truncate(k);
    }
    d.sort_by(by_distance);
    d.into_iter().map(|(_, i)| i).collect()
}

/// Majority class; vote ties go to the smallest class index.
fn vote(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

fn predict_one(query: &[f64], exemplars: &Matrix, labels: &[usize], k: usize, n_classes: usize) -> usize {
    let mut counts = vec![0usize; n_classes];
    for i in nearest(query, exemplars, k) {
        counts[labels[i]] += 1;
    }
    vote(&counts)
}

pub(super) fn predict<R: Rows + ?Sized>(
    data: &R,
    standardizer: &Standardizer,
    exemplars: &Matrix,
    labels: &[usize],
    k: usize,
    threads: usize,
) -> Vec<usize> {
    let n_classes = labels.iter().max().map_or(1, |m| m + 1);
    let p = data.width();
    let run = |range: std::ops::Range<usize>| -> Vec<usize> {
        let mut buf = vec![0.0; p];
        range
            .map(|i| {
                standardizer.transform_into(data.row_at(i), &mut buf);
                predict_one(&buf, exemplars, labels, k, n_classes)
            })
            .collect()
    };
    let n = data.n_rows();
    let threads = threads.clamp(1, n.max(1));
    if threads == 1 {
        return run(0..n);
    }
    let chunk = n.div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let range = (t * chunk).min(n)..((t + 1) * chunk).min(n);
                scope.spawn(move || run(range))
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("knn worker panicked"))
            .collect()
    })
}

fn build(train: &DataView<'_>, k: usize, threads: usize) -> ModelParams {
    let standardizer = Standardizer::fit(train);
    let exemplars = standardizer.transform(train);
    ModelParams::Knn {
        neighbors: k.min(train.len()).max(1),
        standardizer,
        exemplars,
        labels: train.labels(),
        threads,
    }
}

/// Nearest neighbours with a fixed `k`, no tuning.
pub fn fit_knn_fixed(train: &DataView<'_>, k: usize) -> Result<FittedModel> {
    if train.is_empty() {
        return Err(Error::EmptyView("train"));
    }
    let (params, secs) = timed(|| Ok(build(train, k, 1)))?;
    Ok(FittedModel {
        kind: LearnerKind::Knn,
        params,
        tuning: Tuning {
            chosen: Some(k as f64),
            ..Tuning::default()
        },
        n_features: train.n_features(),
        fit_seconds: secs,
        warnings: Vec::new(),
    })
}

/// Choose `k` from the grid by internal CV (smallest `k` among ties), then
/// keep the standardized training set as exemplars.
pub fn fit_knn(train: &DataView<'_>, spec: &KnnSpec, seed: u64) -> Result<FittedModel> {
    if train.is_empty() {
        return Err(Error::EmptyView("train"));
    }
    let mut warnings = Vec::new();
    let ((params, tuning), secs) = timed(|| {
        let (k_folds, folds) = internal_folds(train, spec.internal_folds, seed);
        let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k_folds).map(|f| fold_positions(&folds, f)).collect();
        let degenerate =
            k_folds < 2 || splits.iter().any(|(fit, val)| fit.is_empty() || val.is_empty());
        if degenerate {
            warnings.push("degenerate internal folds, using k = 1".to_string());
            return Ok((
                build(train, 1, spec.threads),
                Tuning {
                    chosen: Some(1.0),
                    ..Tuning::default()
                },
            ));
        }
        let min_fit = splits.iter().map(|(fit, _)| fit.len()).min().unwrap_or(1);
        let mut grid: Vec<usize> = spec
            .neighbors
            .iter()
            .map(|&k| k.clamp(1, min_fit))
            .collect();
        grid.sort_unstable();
        grid.dedup();
        if grid.is_empty() {
            grid.push(1);
        }
        let k_max = *grid.last().unwrap();

        let mut cv_error = vec![0.0; grid.len()];
        for (fit, val) in &splits {
            let fit_view = train.subview(fit);
            let standardizer = Standardizer::fit(&fit_view);
            let exemplars = standardizer.transform(&fit_view);
            let labels = fit_view.labels();
            let mut wrong = vec![0usize; grid.len()];
            let mut buf = vec![0.0; train.n_features()];
            for &v in val {
                standardizer.transform_into(train.x(v), &mut buf);
                let truth = train.y(v);
                let mut counts = vec![0usize; train.n_classes()];
                let mut g = 0;
                for (rank, nb) in nearest(&buf, &exemplars, k_max).into_iter().enumerate() {
                    counts[labels[nb]] += 1;
                    if rank + 1 == grid[g] {
                        if vote(&counts) != truth {
                            wrong[g] += 1;
                        }
                        g += 1;
                        if g == grid.len() {
                            break;
                        }
                    }
                }
            }
            for (e, w) in cv_error.iter_mut().zip(wrong) {
                *e += w as f64 / val.len() as f64;
            }
        }
        cv_error.iter_mut().for_each(|e| *e /= k_folds as f64);
        let best = grid[argmin_first(&cv_error)];
        Ok((
            build(train, best, spec.threads),
            Tuning {
                grid: grid.iter().map(|&k| k as f64).collect(),
                cv_error,
                chosen: Some(best as f64),
            },
        ))
    })?;
    Ok(FittedModel {
        kind: LearnerKind::Knn,
        params,
        tuning,
        n_features: train.n_features(),
        fit_seconds: secs,
        warnings,
    })
}
