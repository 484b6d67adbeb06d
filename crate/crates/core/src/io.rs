//! CSV ingestion and table/record serialization.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{meta_summary, Dataset, Matrix, MetaSummary};
use crate::error::{Error, Result};
use crate::resampling::FoldAssignment;
use crate::stats::{Comparison, DatasetSummary, ErrorSummary, EvalRecord, SubsetComparison};

/// Which CSV columns carry the label, subset and group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRoles {
    pub label: String,
    /// `None` puts every row in one subset named `all`.
    pub subset: Option<String>,
    pub group: Option<String>,
}

impl ColumnRoles {
    pub fn new(label: &str, subset: Option<&str>, group: Option<&str>) -> Self {
        ColumnRoles {
            label: label.to_string(),
            subset: subset.map(str::to_string),
            group: group.map(str::to_string),
        }
    }
}

/// Sorted categories: numerically when every value parses as a number.
fn categories<'a>(values: impl Iterator<Item = &'a str>) -> Vec<String> {
    let set: BTreeSet<&str> = values.collect();
    let mut cats: Vec<String> = set.into_iter().map(str::to_string).collect();
    if cats.iter().all(|c| c.parse::<f64>().is_ok()) {
        cats.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    cats
}

fn encode(values: &[String], cats: &[String]) -> Vec<usize> {
    let index: HashMap<&str, usize> = cats.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    values.iter().map(|v| index[v.as_str()]).collect()
}

fn row_list(rows: &[usize]) -> String {
    let shown: Vec<String> = rows.iter().take(10).map(ToString::to_string).collect();
    let more = if rows.len() > 10 {
        format!(" and {} more", rows.len() - 10)
    } else {
        String::new()
    };
    format!("{}{more}", shown.join(", "))
}

/// Parse a CSV with a header row. Every column not named in `roles` is a
/// real-valued feature. Categorical columns are mapped to indices in sorted
/// order. Reported line numbers count the header as line 1.
pub fn load_csv_reader<R: Read>(name: &str, reader: R, roles: &ColumnRoles) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |col: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| Error::Parse(format!("{name}: missing column {col:?}")))
    };
    let label_idx = find(&roles.label)?;
    let subset_idx = roles.subset.as_deref().map(find).transpose()?;
    let group_idx = roles.group.as_deref().map(find).transpose()?;
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&j| j != label_idx && Some(j) != subset_idx && Some(j) != group_idx)
        .collect();

    let mut records = Vec::new();
    for rec in rdr.records() {
        records.push(rec?);
    }
    if records.is_empty() {
        return Err(Error::Parse(format!("{name}: no data rows")));
    }
    let n = records.len();
    let p = feature_idx.len();

    let mut data = vec![0.0; n * p];
    let mut bad: Vec<Vec<usize>> = vec![Vec::new(); p];
    for (i, rec) in records.iter().enumerate() {
        for (f, &j) in feature_idx.iter().enumerate() {
            match rec.get(j).unwrap_or("").parse::<f64>() {
                Ok(v) => data[i * p + f] = v,
                Err(_) => bad[f].push(i + 2),
            }
        }
    }
    for (f, lines) in bad.iter().enumerate() {
        if lines.is_empty() {
            continue;
        }
        let col = &headers[feature_idx[f]];
        if lines.len() == n {
            return Err(Error::Parse(format!(
                "{name}: feature column {col:?} is not numeric; encode categorical features before loading"
            )));
        }
        return Err(Error::Parse(format!(
            "{name}: mixed-type feature column {col:?}, unparseable cells at lines {}",
            row_list(lines)
        )));
    }

    let column = |idx: usize, what: &str| -> Result<Vec<String>> {
        let vals: Vec<String> = records.iter().map(|r| r.get(idx).unwrap_or("").to_string()).collect();
        let missing: Vec<usize> = vals
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_empty())
            .map(|(i, _)| i + 2)
            .collect();
        if !missing.is_empty() {
            return Err(Error::Parse(format!(
                "{name}: missing {what} at lines {}",
                row_list(&missing)
            )));
        }
        Ok(vals)
    };

    let label_vals = column(label_idx, "label")?;
    let class_names = categories(label_vals.iter().map(String::as_str));
    let labels = encode(&label_vals, &class_names);

    let (subsets, subset_names) = match subset_idx {
        Some(idx) => {
            let vals = column(idx, "subset")?;
            let names = categories(vals.iter().map(String::as_str));
            (encode(&vals, &names), names)
        }
        None => (vec![0; n], vec!["all".to_string()]),
    };
    let groups = match group_idx {
        Some(idx) => {
            let vals = column(idx, "group")?;
            let names = categories(vals.iter().map(String::as_str));
            Some(encode(&vals, &names))
        }
        None => None,
    };

    Dataset::new(
        name,
        Matrix::new(n, p, data)?,
        feature_idx.iter().map(|&j| headers[j].clone()).collect(),
        labels,
        class_names,
        subsets,
        subset_names,
        groups,
    )
}

/// [`load_csv_reader`] on a file; the dataset is named after the file stem.
pub fn load_csv(path: &Path, roles: &ColumnRoles) -> Result<Dataset> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into());
    load_csv_reader(&name, File::open(path)?, roles)
}

/// Write features, label, subset and group back out. Values use the
/// shortest representation that round-trips exactly.
pub fn write_dataset_csv<W: Write>(ds: &Dataset, roles: &ColumnRoles, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ds.feature_names().to_vec();
    header.push(roles.label.clone());
    if let Some(s) = &roles.subset {
        header.push(s.clone());
    }
    if let Some(g) = &roles.group {
        header.push(g.clone());
    }
    w.write_record(&header)?;
    for i in 0..ds.n_rows() {
        let mut rec: Vec<String> = ds.features().row(i).iter().map(|v| format!("{v:?}")).collect();
        rec.push(ds.class_names()[ds.labels()[i]].clone());
        if roles.subset.is_some() {
            rec.push(ds.subset_names()[ds.subsets()[i]].clone());
        }
        if roles.group.is_some() {
            rec.push(ds.groups().map_or(0, |g| g[i]).to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `row_id,fold` with zero-based row ids and one-based folds.
pub fn write_folds_csv<W: Write>(fa: &FoldAssignment, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row_id", "fold"])?;
    for (i, f) in fa.folds.iter().enumerate() {
        w.write_record([i.to_string(), (f + 1).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a `row_id,fold` table; `k` is the largest fold id unless given.
pub fn read_folds_csv<R: Read>(ds: &Dataset, input: R, k: Option<usize>, seed: u64) -> Result<FoldAssignment> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut folds = vec![usize::MAX; ds.n_rows()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |j: usize| -> Result<usize> {
            rec.get(j)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("folds line {}: bad value", line + 2)))
        };
        let (row, fold) = (parse(0)?, parse(1)?);
        if row >= folds.len() || fold == 0 {
            return Err(Error::Parse(format!("folds line {}: out of range", line + 2)));
        }
        if folds[row] != usize::MAX {
            return Err(Error::Parse(format!("folds line {}: duplicate row {row}", line + 2)));
        }
        folds[row] = fold - 1;
    }
    if let Some(row) = folds.iter().position(|&f| f == usize::MAX) {
        return Err(Error::Parse(format!("folds: no fold for row {row}")));
    }
    let k = k.unwrap_or_else(|| folds.iter().max().map_or(0, |m| m + 1));
    FoldAssignment::from_folds(ds, k, folds, seed)
}

fn f1(v: f64) -> String {
    let s = format!("{v:.1}");
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

pub fn write_meta_csv<W: Write>(rows: &[MetaSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["data", "rows", "features", "classes", "class_imbalance", "subsets", "subset_imbalance"])?;
    for m in rows {
        w.write_record([
            m.name.clone(),
            m.rows.to_string(),
            m.features.to_string(),
            m.classes.to_string(),
            f1(m.class_imbalance),
            m.subsets.to_string(),
            f1(m.subset_imbalance),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn meta_table(datasets: &[Dataset]) -> Vec<MetaSummary> {
    datasets.iter().map(meta_summary).collect()
}

pub fn write_records_csv<W: Write>(records: &[EvalRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["data", "learner", "test_subset", "test_fold", "policy", "test_error", "n_train", "n_test"])?;
    for r in records {
        w.write_record([
            r.data.clone(),
            r.learner.clone(),
            r.test_subset.clone(),
            r.test_fold.to_string(),
            r.policy.to_string(),
            format!("{:?}", r.test_error),
            r.n_train.to_string(),
            r.n_test.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const COMPARISON_HEADER: [&str; 8] = ["data", "learner", "subset", "comparison", "mean_diff", "p_value", "log10_p", "K_used"];

pub fn write_comparisons_csv<W: Write>(rows: &[SubsetComparison], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COMPARISON_HEADER)?;
    for c in rows {
        w.write_record([
            c.data.clone(),
            c.learner.clone(),
            c.test_subset.clone(),
            c.comparison.to_string(),
            f1(c.mean_diff),
            format!("{:.3e}", c.p_value),
            f1(c.log10_p),
            c.k_used.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Comparison rows as written by [`write_comparisons_csv`] (rounded values).
pub fn read_comparisons_csv<R: Read>(input: R) -> Result<Vec<SubsetComparison>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = || Error::Parse(format!("comparisons line {}: bad row", line + 2));
        let get = |j: usize| rec.get(j).ok_or_else(bad);
        let num = |j: usize| -> Result<f64> { get(j)?.parse().map_err(|_| bad()) };
        out.push(SubsetComparison {
            data: get(0)?.to_string(),
            learner: get(1)?.to_string(),
            test_subset: get(2)?.to_string(),
            comparison: get(3)?.parse::<Comparison>()?,
            mean_diff: num(4)?,
            t_stat: None,
            p_value: num(5)?,
            log10_p: num(6)?,
            k_used: get(7)?.parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

pub fn write_summary_csv<W: Write>(rows: &[DatasetSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "Data",
        "learner",
        "comparison",
        "ErrorDiff_min",
        "ErrorDiff_max",
        "ErrorDiff_mean",
        "log10P_min",
        "log10P_max",
        "log10P_mean",
        "subsets",
        "category",
    ])?;
    for s in rows {
        w.write_record([
            s.data.clone(),
            s.learner.clone(),
            s.comparison.to_string(),
            f1(s.min_diff),
            f1(s.max_diff),
            f1(s.mean_diff),
            f1(s.min_log10p),
            f1(s.max_log10p),
            f1(s.mean_log10p),
            s.subsets.to_string(),
            s.category.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_error_table_csv<W: Write>(rows: &[ErrorSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["data", "learner", "subset", "policy", "mean_error", "sd_error", "folds"])?;
    for e in rows {
        w.write_record([
            e.data.clone(),
            e.learner.clone(),
            e.test_subset.clone(),
            e.policy.to_string(),
            format!("{:.3}", e.mean_error),
            format!("{:.3}", e.sd_error),
            e.folds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_error_table_csv<R: Read>(input: R) -> Result<Vec<ErrorSummary>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = || Error::Parse(format!("error table line {}: bad row", line + 2));
        let get = |j: usize| rec.get(j).ok_or_else(bad);
        let num = |j: usize| -> Result<f64> { get(j)?.parse().map_err(|_| bad()) };
        out.push(ErrorSummary {
            data: get(0)?.to_string(),
            learner: get(1)?.to_string(),
            test_subset: get(2)?.to_string(),
            policy: get(3)?.parse()?,
            mean_error: num(4)?,
            sd_error: num(5)?,
            folds: get(6)?.parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

/// Everything `run` needs. Built from a JSON config file and command-line
/// flags, flags taking precedence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: Vec<std::path::PathBuf>,
    pub label_col: String,
    pub subset_col: Option<String>,
    pub group_col: Option<String>,
    pub folds: usize,
    pub seed: u64,
    pub learners: Vec<String>,
    pub policies: Vec<crate::resampling::TrainPolicy>,
    pub out: std::path::PathBuf,
    pub workers: usize,
}

/// A list given either as a JSON array or a comma-separated string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ListOrCsv {
    List(Vec<String>),
    Csv(String),
}

impl ListOrCsv {
    pub fn items(&self) -> Vec<String> {
        match self {
            ListOrCsv::List(v) => v.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            ListOrCsv::Csv(s) => split_list(s),
        }
    }
}

pub fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

/// Config file contents; every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialRunConfig {
    pub data: Option<ListOrCsv>,
    pub label_col: Option<String>,
    pub subset_col: Option<String>,
    pub group_col: Option<String>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub learners: Option<ListOrCsv>,
    pub policies: Option<ListOrCsv>,
    pub out: Option<std::path::PathBuf>,
    pub workers: Option<usize>,
}

impl PartialRunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: PartialRunConfig) -> PartialRunConfig {
        PartialRunConfig {
            data: over.data.or(self.data),
            label_col: over.label_col.or(self.label_col),
            subset_col: over.subset_col.or(self.subset_col),
            group_col: over.group_col.or(self.group_col),
            folds: over.folds.or(self.folds),
            seed: over.seed.or(self.seed),
            learners: over.learners.or(self.learners),
            policies: over.policies.or(self.policies),
            out: over.out.or(self.out),
            workers: over.workers.or(self.workers),
        }
    }

    /// Fill defaults and check the result.
    pub fn resolve(self) -> Result<RunConfig> {
        let data: Vec<std::path::PathBuf> = self.data.map(|d| d.items()).unwrap_or_default().into_iter().map(Into::into).collect();
        if data.is_empty() {
            return Err(Error::Parse("no data files given".into()));
        }
        let label_col = self.label_col.ok_or_else(|| Error::Parse("no label column given".into()))?;
        let folds = self.folds.unwrap_or(crate::resampling::DEFAULT_FOLDS);
        if folds < 2 {
            return Err(Error::TooFewFolds(folds));
        }
        let learners = self
            .learners
            .map(|l| l.items())
            .unwrap_or_else(|| vec!["featureless".into(), "l1_logistic".into()]);
        if learners.is_empty() {
            return Err(Error::Parse("learner list is empty".into()));
        }
        for l in &learners {
            l.parse::<crate::learners::LearnerKind>()?;
        }
        let policies = match self.policies {
            Some(p) => p.items().iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?,
            None => crate::resampling::TrainPolicy::ALL.to_vec(),
        };
        if policies.is_empty() {
            return Err(Error::Parse("policy list is empty".into()));
        }
        let workers = self
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1);
        Ok(RunConfig {
            data,
            label_col,
            subset_col: self.subset_col,
            group_col: self.group_col,
            folds,
            seed: self.seed.unwrap_or(1),
            learners,
            policies,
            out: self.out.unwrap_or_else(|| "soak-out".into()),
            workers,
        })
    }
}

impl RunConfig {
    pub fn roles(&self) -> ColumnRoles {
        ColumnRoles {
            label: self.label_col.clone(),
            subset: self.subset_col.clone(),
            group: self.group_col.clone(),
        }
    }
}
