//! Fold assignment and enumeration of Same/Other/All train/test splits.
//!
//! Fold indices are zero-based in memory (`0..k`); CSV exports and
//! result records show them one-based.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{DataView, Dataset};
use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 10;

/// Which cells fold balance is enforced on when groups are absent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratify {
    /// Balance within every (subset, class) cell.
    #[default]
    SubsetClass,
    /// Balance within every subset only.
    Subset,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub folds: Vec<usize>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FoldAssignment {
    /// Wrap externally produced fold ids, checking range and group integrity.
    pub fn from_folds(ds: &Dataset, k: usize, folds: Vec<usize>, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooFewFolds(k));
        }
        if folds.len() != ds.n_rows() {
            return Err(Error::LengthMismatch {
                left: folds.len(),
                right: ds.n_rows(),
            });
        }
        if let Some(row) = folds.iter().position(|&f| f >= k) {
            return Err(Error::Parse(format!("fold id out of range at row {row}")));
        }
        if let Some(groups) = ds.groups() {
            let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
            for (row, (&g, &f)) in groups.iter().zip(&folds).enumerate() {
                if *seen.entry(g).or_insert(f) != f {
                    return Err(Error::Parse(format!(
                        "group {g} split across folds at row {row}"
                    )));
                }
            }
        }
        Ok(FoldAssignment {
            k,
            folds,
            seed,
            warnings: Vec::new(),
        })
    }

    pub fn fold_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &f in &self.folds {
            counts[f] += 1;
        }
        counts
    }
}

/// Assign folds stratified on (subset, class), or on groups within subsets
/// when the dataset has a group column.
pub fn assign_folds(ds: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    assign_folds_with(ds, k, seed, Stratify::default())
}

/// Each stratum is shuffled with a seeded ChaCha8 stream and dealt
/// round-robin. Dealing continues from where the previous stratum stopped,
/// so remainders rotate across folds and every subset with at least `k`
/// rows (or groups) touches every fold.
pub fn assign_folds_with(ds: &Dataset, k: usize, seed: u64, stratify: Stratify) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::TooFewFolds(k));
    }
    let n = ds.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0usize; n];
    let mut warnings = Vec::new();
    let mut slot = 0usize;

    match ds.groups() {
        None => {
            let mut strata: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
            for i in 0..n {
                let class = match stratify {
                    Stratify::SubsetClass => ds.labels()[i],
                    Stratify::Subset => 0,
                };
                strata.entry((ds.subsets()[i], class)).or_default().push(i);
            }
            for rows in strata.values_mut() {
                rows.shuffle(&mut rng);
                for &i in rows.iter() {
                    folds[i] = slot % k;
                    slot += 1;
                }
            }
            let mut per_subset = vec![0usize; ds.n_subsets()];
            for &s in ds.subsets() {
                per_subset[s] += 1;
            }
            for (s, &cnt) in per_subset.iter().enumerate() {
                if cnt < k {
                    warnings.push(format!(
                        "subset {:?} has {cnt} rows, fewer than {k} folds",
                        ds.subset_names()[s]
                    ));
                }
            }
        }
        Some(groups) => {
            let mut by_subset: BTreeMap<usize, BTreeMap<usize, Vec<usize>>> = BTreeMap::new();
            for i in 0..n {
                by_subset
                    .entry(ds.subsets()[i])
                    .or_default()
                    .entry(groups[i])
                    .or_default()
                    .push(i);
            }
            for (s, members) in by_subset {
                let mut ids: Vec<usize> = members.keys().copied().collect();
                if ids.len() < k {
                    warnings.push(format!(
                        "subset {:?} has {} groups, fewer than {k} folds",
                        ds.subset_names()[s],
                        ids.len()
                    ));
                }
                ids.shuffle(&mut rng);
                for g in ids {
                    for &i in &members[&g] {
                        folds[i] = slot % k;
                    }
                    slot += 1;
                }
            }
        }
    }

    Ok(FoldAssignment {
        k,
        folds,
        seed,
        warnings,
    })
}

/// Which rows form the training set relative to the test subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainPolicy {
    Same,
    Other,
    All,
}

impl TrainPolicy {
    pub const ALL: [TrainPolicy; 3] = [TrainPolicy::Same, TrainPolicy::Other, TrainPolicy::All];

    pub fn as_str(self) -> &'static str {
        match self {
            TrainPolicy::Same => "same",
            TrainPolicy::Other => "other",
            TrainPolicy::All => "all",
        }
    }
}

impl fmt::Display for TrainPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrainPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "same" => Ok(TrainPolicy::Same),
            "other" => Ok(TrainPolicy::Other),
            "all" => Ok(TrainPolicy::All),
            other => Err(Error::Parse(format!("unknown train policy {other:?}"))),
        }
    }
}

/// One (test subset, test fold, policy) train/test split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_subset: usize,
    pub test_fold: usize,
    pub policy: TrainPolicy,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

impl SplitSpec {
    pub fn is_runnable(&self) -> bool {
        !self.train_rows.is_empty() && !self.test_rows.is_empty()
    }
}

/// Every (σ, κ, policy) candidate in σ-major, κ, policy order, including
/// candidates whose train or test set is empty. With one subset only
/// `Same` candidates are produced.
pub fn enumerate_candidates(ds: &Dataset, fa: &FoldAssignment, policies: &[TrainPolicy]) -> Vec<SplitSpec> {
    let mut wanted: Vec<TrainPolicy> = policies.to_vec();
    wanted.sort();
    wanted.dedup();
    if ds.n_subsets() == 1 {
        wanted = if wanted.is_empty() {
            vec![]
        } else {
            vec![TrainPolicy::Same]
        };
    }

    let s = ds.n_subsets();
    let k = fa.k;
    // cells[σ][κ] = rows with subset σ and fold κ
    let mut cells = vec![vec![Vec::new(); k]; s];
    for i in 0..ds.n_rows() {
        cells[ds.subsets()[i]][fa.folds[i]].push(i);
    }

    let mut out = Vec::with_capacity(s * k * wanted.len());
    for sigma in 0..s {
        for kappa in 0..k {
            for &policy in &wanted {
                let mut train_rows: Vec<usize> = (0..ds.n_rows())
                    .filter(|&i| {
                        fa.folds[i] != kappa
                            && match policy {
                                TrainPolicy::Same => ds.subsets()[i] == sigma,
                                TrainPolicy::Other => ds.subsets()[i] != sigma,
                                TrainPolicy::All => true,
                            }
                    })
                    .collect();
                train_rows.shrink_to_fit();
                out.push(SplitSpec {
                    test_subset: sigma,
                    test_fold: kappa,
                    policy,
                    train_rows,
                    test_rows: cells[sigma][kappa].clone(),
                });
            }
        }
    }
    out
}

/// Runnable splits only: non-empty train and test sets.
pub fn enumerate_splits(ds: &Dataset, fa: &FoldAssignment, policies: &[TrainPolicy]) -> Vec<SplitSpec> {
    enumerate_candidates(ds, fa, policies)
        .into_iter()
        .filter(SplitSpec::is_runnable)
        .collect()
}

/// Train and test views for a split.
pub fn resolve_split<'a>(split: &SplitSpec, ds: &'a Dataset) -> Result<(DataView<'a>, DataView<'a>)> {
    if split.train_rows.is_empty() {
        return Err(Error::EmptyView("train"));
    }
    if split.test_rows.is_empty() {
        return Err(Error::EmptyView("test"));
    }
    Ok((ds.view(split.train_rows.clone()), ds.view(split.test_rows.clone())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Matrix;

    fn dataset(labels: Vec<usize>, subsets: Vec<usize>, groups: Option<Vec<usize>>) -> Dataset {
        let n = labels.len();
        let c = labels.iter().max().unwrap() + 1;
        let s = subsets.iter().max().unwrap() + 1;
        Dataset::new(
            "t",
            Matrix::new(n, 1, (0..n).map(|i| i as f64).collect()).unwrap(),
            vec![],
            labels,
            (0..c).map(|i| i.to_string()).collect(),
            subsets,
            (0..s).map(|i| format!("s{i}")).collect(),
            groups,
        )
        .unwrap()
    }

    #[test]
    fn rejects_k_below_two() {
        let ds = dataset(vec![0, 1], vec![0, 0], None);
        assert!(matches!(assign_folds(&ds, 1, 0), Err(Error::TooFewFolds(1))));
    }

    #[test]
    fn exact_balance_when_divisible() {
        let labels: Vec<usize> = (0..30).map(|i| i % 2).collect();
        let ds = dataset(labels.clone(), vec![0; 30], None);
        let fa = assign_folds(&ds, 3, 42).unwrap();
        for class in 0..2 {
            for fold in 0..3 {
                let cnt = (0..30).filter(|&i| labels[i] == class && fa.folds[i] == fold).count();
                assert_eq!(cnt, 5);
            }
        }
    }

    #[test]
    fn groups_dealt_whole() {
        let groups: Vec<usize> = (0..10).map(|i| i / 2).collect();
        let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let ds = dataset(labels, vec![0; 10], Some(groups.clone()));
        let fa = assign_folds(&ds, 5, 7).unwrap();
        for fold in 0..5 {
            let members: Vec<usize> = (0..10).filter(|&i| fa.folds[i] == fold).collect();
            assert_eq!(members.len(), 2);
            assert_eq!(groups[members[0]], groups[members[1]]);
        }
    }

    #[test]
    fn seven_rows_three_folds_over_many_seeds() {
        // brute force over seeds: counts always a permutation of (3,2,2)
        let ds = dataset(vec![0, 0, 0, 0, 0, 0, 0, 1], vec![0; 8], None);
        for seed in 0..100 {
            let fa = assign_folds(&ds, 3, seed).unwrap();
            let mut counts = [0usize; 3];
            for i in 0..7 {
                counts[fa.folds[i]] += 1;
            }
            let mut sorted = counts;
            sorted.sort_unstable();
            assert_eq!(sorted, [2, 2, 3], "seed {seed}");
        }
    }

    #[test]
    fn fewer_groups_than_folds_warns() {
        let ds = dataset(vec![0, 1, 0, 1], vec![0, 0, 1, 1], Some(vec![0, 0, 1, 2]));
        let fa = assign_folds(&ds, 3, 0).unwrap();
        assert_eq!(fa.warnings.len(), 2);
        let splits = enumerate_candidates(&ds, &fa, &TrainPolicy::ALL);
        assert_eq!(splits.len(), 18);
        assert!(enumerate_splits(&ds, &fa, &TrainPolicy::ALL).len() < 18);
    }

    #[test]
    fn figure_one_same_train_set() {
        // subsets A, B; K = 3; σ = B, κ = 3 (index 2)
        let n = 12;
        let subsets: Vec<usize> = (0..n).map(|i| usize::from(i >= 6)).collect();
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let ds = dataset(labels, subsets.clone(), None);
        let fa = assign_folds(&ds, 3, 1).unwrap();
        let splits = enumerate_splits(&ds, &fa, &TrainPolicy::ALL);
        assert_eq!(splits.len(), 18);
        let same = splits
            .iter()
            .find(|s| s.test_subset == 1 && s.test_fold == 2 && s.policy == TrainPolicy::Same)
            .unwrap();
        let expected: Vec<usize> = (0..n).filter(|&i| subsets[i] == 1 && fa.folds[i] != 2).collect();
        assert_eq!(same.train_rows, expected);
    }

    #[test]
    fn single_subset_emits_same_only() {
        let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let ds = dataset(labels, vec![0; 40], None);
        let fa = assign_folds(&ds, 10, 3).unwrap();
        let splits = enumerate_splits(&ds, &fa, &TrainPolicy::ALL);
        assert_eq!(splits.len(), 10);
        assert!(splits.iter().all(|s| s.policy == TrainPolicy::Same));
    }

    #[test]
    fn resolve_sizes_balanced_hundred_rows() {
        let subsets: Vec<usize> = (0..100).map(|i| usize::from(i >= 50)).collect();
        let labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let ds = dataset(labels, subsets, None);
        let fa = assign_folds(&ds, 10, 11).unwrap();
        for split in enumerate_splits(&ds, &fa, &TrainPolicy::ALL) {
            let (train, test) = resolve_split(&split, &ds).unwrap();
            assert_eq!(test.len(), 5);
            let expected = match split.policy {
                TrainPolicy::Same | TrainPolicy::Other => 45,
                TrainPolicy::All => 90,
            };
            assert_eq!(train.len(), expected, "{split:?}");
        }
    }

    #[test]
    fn resolve_rejects_empty() {
        let split = SplitSpec {
            test_subset: 0,
            test_fold: 0,
            policy: TrainPolicy::Same,
            train_rows: vec![0],
            test_rows: vec![],
        };
        let ds = dataset(vec![0, 1], vec![0, 0], None);
        assert!(matches!(resolve_split(&split, &ds), Err(Error::EmptyView("test"))));
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("Other".parse::<TrainPolicy>().unwrap(), TrainPolicy::Other);
        assert!("none".parse::<TrainPolicy>().is_err());
        assert!(TrainPolicy::Same < TrainPolicy::Other && TrainPolicy::Other < TrainPolicy::All);
    }
}
