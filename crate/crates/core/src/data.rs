//! Dataset representation, validation and meta-data summary.
//!
//! Class, subset and group indices are zero-based positions into the
//! corresponding name tables.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of real values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: rows * cols,
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: cols,
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Copy of the listed rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    /// Multiply column `j` by `factor` in place.
    pub fn scale_column(&mut self, j: usize, factor: f64) {
        for i in 0..self.rows {
            self.data[i * self.cols + j] *= factor;
        }
    }
}

/// A classification data set whose rows are partitioned into named subsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    name: String,
    features: Matrix,
    feature_names: Vec<String>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    subsets: Vec<usize>,
    subset_names: Vec<String>,
    groups: Option<Vec<usize>>,
}

impl Dataset {
    /// Build and validate a dataset. Any violation is fatal.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        features: Matrix,
        feature_names: Vec<String>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        subsets: Vec<usize>,
        subset_names: Vec<String>,
        groups: Option<Vec<usize>>,
    ) -> Result<Self> {
        let ds = Self::new_unchecked(
            name,
            features,
            feature_names,
            labels,
            class_names,
            subsets,
            subset_names,
            groups,
        );
        let report = validate(&ds);
        if report.is_ok() {
            Ok(ds)
        } else {
            Err(Error::InvalidDataset(report))
        }
    }

    /// Build without validation; pair with [`validate`].
    #[allow(clippy::too_many_arguments)]
    pub fn new_unchecked(
        name: impl Into<String>,
        features: Matrix,
        feature_names: Vec<String>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        subsets: Vec<usize>,
        subset_names: Vec<String>,
        groups: Option<Vec<usize>>,
    ) -> Self {
        let feature_names = if feature_names.len() == features.cols() {
            feature_names
        } else {
            (1..=features.cols()).map(|j| format!("x{j}")).collect()
        };
        Dataset {
            name: name.into(),
            features,
            feature_names,
            labels,
            class_names,
            subsets,
            subset_names,
            groups,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn subsets(&self) -> &[usize] {
        &self.subsets
    }

    pub fn subset_names(&self) -> &[String] {
        &self.subset_names
    }

    pub fn groups(&self) -> Option<&[usize]> {
        self.groups.as_deref()
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_subsets(&self) -> usize {
        self.subset_names.len()
    }

    /// Row permutation: row `i` of the result is row `order[i]` of `self`.
    pub fn permute_rows(&self, order: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.select_rows(order),
            feature_names: self.feature_names.clone(),
            labels: order.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            subsets: order.iter().map(|&i| self.subsets[i]).collect(),
            subset_names: self.subset_names.clone(),
            groups: self
                .groups
                .as_ref()
                .map(|g| order.iter().map(|&i| g[i]).collect()),
        }
    }

    /// View over the listed rows, exposing only features and labels.
    pub fn view(&self, rows: Vec<usize>) -> DataView<'_> {
        DataView::new(&self.features, &self.labels, self.n_classes(), rows)
    }
}

/// Row-index view of a feature matrix and its labels.
///
/// Subset and group columns are never reachable from a view.
#[derive(Debug, Clone)]
pub struct DataView<'a> {
    features: &'a Matrix,
    labels: &'a [usize],
    n_classes: usize,
    rows: Vec<usize>,
}

impl<'a> DataView<'a> {
    pub fn new(features: &'a Matrix, labels: &'a [usize], n_classes: usize, rows: Vec<usize>) -> Self {
        DataView {
            features,
            labels,
            n_classes,
            rows,
        }
    }

    /// View over every row of the matrix.
    pub fn full(features: &'a Matrix, labels: &'a [usize], n_classes: usize) -> Self {
        Self::new(features, labels, n_classes, (0..labels.len()).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Feature row `i` of the view.
    #[inline]
    pub fn x(&self, i: usize) -> &'a [f64] {
        self.features.row(self.rows[i])
    }

    /// Label of row `i` of the view.
    #[inline]
    pub fn y(&self, i: usize) -> usize {
        self.labels[self.rows[i]]
    }

    pub fn labels(&self) -> Vec<usize> {
        self.rows.iter().map(|&r| self.labels[r]).collect()
    }

    /// Sub-view over positions (not underlying rows) of this view.
    pub fn subview(&self, positions: &[usize]) -> DataView<'a> {
        DataView {
            features: self.features,
            labels: self.labels,
            n_classes: self.n_classes,
            rows: positions.iter().map(|&p| self.rows[p]).collect(),
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for i in 0..self.len() {
            counts[self.y(i)] += 1;
        }
        counts
    }

    /// Copy of the viewed features as a dense matrix.
    pub fn to_matrix(&self) -> Matrix {
        self.features.select_rows(&self.rows)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    NoRows,
    NoFeatures,
    LengthMismatch { column: String, expected: usize, got: usize },
    IndexOutOfRange { column: String, row: usize },
    SingleClass,
    EmptyClass { class: String },
    NoSubsets,
    EmptySubset { subset: String },
    NonFiniteFeature { row: usize, column: usize },
    GroupStraddlesSubsets { group: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoRows => write!(f, "dataset has no rows"),
            Violation::NoFeatures => write!(f, "dataset has no feature columns"),
            Violation::LengthMismatch {
                column,
                expected,
                got,
            } => write!(f, "{column} has length {got}, expected {expected}"),
            Violation::IndexOutOfRange { column, row } => {
                write!(f, "{column} index out of range at row {row}")
            }
            Violation::SingleClass => write!(f, "single class"),
            Violation::EmptyClass { class } => write!(f, "class {class:?} has no rows"),
            Violation::NoSubsets => write!(f, "no subsets"),
            Violation::EmptySubset { subset } => write!(f, "subset {subset:?} has no rows"),
            Violation::NonFiniteFeature { row, column } => {
                write!(f, "non-finite feature at row {row}, column {column}")
            }
            Violation::GroupStraddlesSubsets { group } => {
                write!(f, "group {group} straddles subsets")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        let msgs: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// Check every dataset invariant, collecting all violations.
pub fn validate(ds: &Dataset) -> ValidationReport {
    let mut v = Vec::new();
    let n = ds.labels.len();
    if n == 0 {
        v.push(Violation::NoRows);
    }
    if ds.features.cols() == 0 {
        v.push(Violation::NoFeatures);
    }
    let mut check_len = |column: &str, got: usize| {
        if got != n {
            v.push(Violation::LengthMismatch {
                column: column.to_string(),
                expected: n,
                got,
            });
        }
    };
    check_len("features", ds.features.rows());
    check_len("subsets", ds.subsets.len());
    if let Some(g) = &ds.groups {
        check_len("groups", g.len());
    }
    if !v.is_empty() {
        return ValidationReport { violations: v };
    }

    let c = ds.class_names.len();
    let mut class_counts = vec![0usize; c];
    for (row, &y) in ds.labels.iter().enumerate() {
        match class_counts.get_mut(y) {
            Some(cnt) => *cnt += 1,
            None => v.push(Violation::IndexOutOfRange {
                column: "labels".into(),
                row,
            }),
        }
    }
    if class_counts.iter().filter(|&&k| k > 0).count() < 2 {
        v.push(Violation::SingleClass);
    }
    for (name, &cnt) in ds.class_names.iter().zip(&class_counts) {
        if cnt == 0 {
            v.push(Violation::EmptyClass {
                class: name.clone(),
            });
        }
    }

    let s = ds.subset_names.len();
    if s == 0 {
        v.push(Violation::NoSubsets);
    }
    let mut subset_counts = vec![0usize; s];
    for (row, &si) in ds.subsets.iter().enumerate() {
        match subset_counts.get_mut(si) {
            Some(cnt) => *cnt += 1,
            None => v.push(Violation::IndexOutOfRange {
                column: "subsets".into(),
                row,
            }),
        }
    }
    for (name, &cnt) in ds.subset_names.iter().zip(&subset_counts) {
        if cnt == 0 {
            v.push(Violation::EmptySubset {
                subset: name.clone(),
            });
        }
    }

    for i in 0..ds.features.rows() {
        for (j, x) in ds.features.row(i).iter().enumerate() {
            if !x.is_finite() {
                v.push(Violation::NonFiniteFeature { row: i, column: j });
            }
        }
    }

    if let Some(groups) = &ds.groups {
        let mut home: HashMap<usize, usize> = HashMap::new();
        let mut straddling = Vec::new();
        for (&g, &si) in groups.iter().zip(&ds.subsets) {
            let first = *home.entry(g).or_insert(si);
            if first != si && !straddling.contains(&g) {
                straddling.push(g);
            }
        }
        straddling.sort_unstable();
        v.extend(
            straddling
                .into_iter()
                .map(|group| Violation::GroupStraddlesSubsets { group }),
        );
    }

    ValidationReport { violations: v }
}

/// Table-1 style meta-data for a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaSummary {
    pub name: String,
    pub rows: usize,
    pub features: usize,
    pub classes: usize,
    pub class_imbalance: f64,
    pub subsets: usize,
    pub subset_imbalance: f64,
}

fn imbalance(counts: &[usize]) -> f64 {
    let max = counts.iter().copied().max().unwrap_or(0);
    let min = counts.iter().copied().filter(|&c| c > 0).min().unwrap_or(0);
    if min == 0 {
        return 1.0;
    }
    max as f64 / min as f64
}

pub fn meta_summary(ds: &Dataset) -> MetaSummary {
    let mut class_counts = vec![0usize; ds.n_classes()];
    for &y in &ds.labels {
        class_counts[y] += 1;
    }
    let mut subset_counts = vec![0usize; ds.n_subsets()];
    for &s in &ds.subsets {
        subset_counts[s] += 1;
    }
    MetaSummary {
        name: ds.name.clone(),
        rows: ds.n_rows(),
        features: ds.n_features(),
        classes: ds.n_classes(),
        class_imbalance: imbalance(&class_counts),
        subsets: ds.n_subsets(),
        subset_imbalance: imbalance(&subset_counts),
    }
}
