//! Job planning and parallel, resumable execution.
//!
//! One job is one (dataset, learner, split). Results are appended to a
//! line-delimited JSON store as jobs finish; re-running against the same
//! store only executes jobs without a `done` line.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::Learner;
use crate::resampling::{assign_folds, enumerate_candidates, FoldAssignment, SplitSpec, TrainPolicy};
use crate::stats::{error_rate, EvalRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Pending,
    Done,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: String,
    pub data: String,
    pub learner: String,
    pub test_subset: usize,
    /// Zero-based fold index.
    pub test_fold: usize,
    pub policy: TrainPolicy,
    pub seed: u64,
    pub status: JobStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    pub digest: String,
    pub folds: FoldAssignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub datasets: Vec<DatasetEntry>,
    pub k: usize,
    pub seed: u64,
    pub policies: Vec<TrainPolicy>,
    pub learners: Vec<String>,
    pub jobs: Vec<Job>,
}

impl RunManifest {
    pub fn count(&self, status: JobStatus) -> usize {
        self.jobs.iter().filter(|j| j.status == status).count()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Content digest over names, features, labels, subsets and groups.
pub fn dataset_digest(ds: &Dataset) -> String {
    let mut h = Sha256::new();
    h.update(ds.name().as_bytes());
    h.update((ds.n_rows() as u64).to_le_bytes());
    h.update((ds.n_features() as u64).to_le_bytes());
    for x in ds.features().as_slice() {
        h.update(x.to_bits().to_le_bytes());
    }
    for names in [ds.feature_names(), ds.class_names(), ds.subset_names()] {
        for n in names {
            h.update(n.as_bytes());
            h.update([0]);
        }
    }
    for &y in ds.labels() {
        h.update((y as u64).to_le_bytes());
    }
    for &s in ds.subsets() {
        h.update((s as u64).to_le_bytes());
    }
    if let Some(g) = ds.groups() {
        for &v in g {
            h.update((v as u64).to_le_bytes());
        }
    }
    hex(&h.finalize())
}

fn job_id(data: &str, learner: &str, sigma: usize, kappa: usize, policy: TrainPolicy, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(format!("{data}\u{1f}{learner}\u{1f}{sigma}\u{1f}{kappa}\u{1f}{policy}\u{1f}{seed}").as_bytes());
    hex(&h.finalize()[..8])
}

fn job_seed(job_id: &str, run_seed: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(b"job-seed");
    h.update(job_id.as_bytes());
    h.update(run_seed.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Assign folds to every dataset with `(k, seed)` and plan all jobs.
pub fn plan(
    datasets: &[Dataset],
    learners: &[&dyn Learner],
    k: usize,
    seed: u64,
    policies: &[TrainPolicy],
) -> Result<RunManifest> {
    let mut folds = Vec::with_capacity(datasets.len());
    for ds in datasets {
        folds.push(assign_folds(ds, k, seed)?);
    }
    plan_with_folds(datasets, &folds, learners, seed, policies)
}

/// Plan with caller-supplied fold assignments (one per dataset).
pub fn plan_with_folds(
    datasets: &[Dataset],
    folds: &[FoldAssignment],
    learners: &[&dyn Learner],
    seed: u64,
    policies: &[TrainPolicy],
) -> Result<RunManifest> {
    let mut names = HashSet::new();
    for ds in datasets {
        if !names.insert(ds.name().to_string()) {
            return Err(Error::DuplicateDataset(ds.name().to_string()));
        }
    }
    if folds.len() != datasets.len() {
        return Err(Error::LengthMismatch {
            left: folds.len(),
            right: datasets.len(),
        });
    }
    let k = folds.first().map_or(0, |f| f.k);
    let mut policies = policies.to_vec();
    policies.sort();
    policies.dedup();
    let learner_names: Vec<String> = learners.iter().map(|l| l.name()).collect();

    let mut jobs = Vec::new();
    let mut entries = Vec::new();
    let mut seen_ids: HashMap<String, String> = HashMap::new();
    let mut seen_seeds: HashMap<u64, String> = HashMap::new();
    for (ds, fa) in datasets.iter().zip(folds) {
        let candidates = enumerate_candidates(ds, fa, &policies);
        for learner in &learner_names {
            for split in &candidates {
                let id = job_id(ds.name(), learner, split.test_subset, split.test_fold, split.policy, seed);
                let describe = format!("{}/{learner}/{}/{}/{}", ds.name(), split.test_subset, split.test_fold, split.policy);
                if let Some(prev) = seen_ids.insert(id.clone(), describe.clone()) {
                    return Err(Error::JobIdCollision(prev, describe));
                }
                let js = job_seed(&id, seed);
                if let Some(prev) = seen_seeds.insert(js, describe.clone()) {
                    return Err(Error::JobIdCollision(prev, describe));
                }
                let (status, message) = if split.test_rows.is_empty() {
                    (JobStatus::Skipped, Some("empty test set".to_string()))
                } else if split.train_rows.is_empty() {
                    (JobStatus::Skipped, Some("empty train set".to_string()))
                } else {
                    (JobStatus::Pending, None)
                };
                jobs.push(Job {
                    job_id: id,
                    data: ds.name().to_string(),
                    learner: learner.clone(),
                    test_subset: split.test_subset,
                    test_fold: split.test_fold,
                    policy: split.policy,
                    seed: js,
                    status,
                    message,
                });
            }
        }
        entries.push(DatasetEntry {
            name: ds.name().to_string(),
            digest: dataset_digest(ds),
            folds: fa.clone(),
        });
    }

    let mut h = Sha256::new();
    h.update(format!("k={k};seed={seed};policies={policies:?};learners={learner_names:?}").as_bytes());
    for e in &entries {
        h.update(e.digest.as_bytes());
        for f in &e.folds.folds {
            h.update((*f as u64).to_le_bytes());
        }
    }
    Ok(RunManifest {
        config_digest: hex(&h.finalize()),
        datasets: entries,
        k,
        seed,
        policies,
        learners: learner_names,
        jobs,
    })
}

#[derive(Debug, Clone)]
pub struct ExecuteOptions {
    pub workers: usize,
    /// Line-delimited JSON results store; `None` keeps results in memory.
    pub results_path: Option<PathBuf>,
    /// Stop after this many newly executed jobs.
    pub max_jobs: Option<usize>,
}

impl Default for ExecuteOptions {
    fn default() -> Self {
        ExecuteOptions {
            workers: 1,
            results_path: None,
            max_jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
enum Outcome {
    Done { job_id: String, record: EvalRecord },
    Failed { job_id: String, error: String },
}

#[derive(Debug, Clone, Default)]
pub struct ExecuteReport {
    /// Records of every done job, in manifest order.
    pub records: Vec<EvalRecord>,
    /// Jobs executed by this call.
    pub executed: usize,
    pub failed: usize,
    pub skipped: usize,
}

/// Previously stored outcomes. A torn final line from an interrupted write is ignored.
fn load_outcomes(path: &Path) -> Result<HashMap<String, Outcome>> {
    let mut out = HashMap::new();
    if !path.exists() {
        return Ok(out);
    }
    let lines: Vec<String> = BufReader::new(File::open(path)?).lines().collect::<std::io::Result<_>>()?;
    let last = lines.len().saturating_sub(1);
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Outcome>(line) {
            Ok(o) => {
                let id = match &o {
                    Outcome::Done { job_id, .. } | Outcome::Failed { job_id, .. } => job_id.clone(),
                };
                // a later done line supersedes an earlier failure
                match (out.get(&id), &o) {
                    (Some(Outcome::Done { .. }), Outcome::Failed { .. }) => {}
                    _ => {
                        out.insert(id, o);
                    }
                }
            }
            Err(e) if i == last => {
                let _ = e;
            }
            Err(e) => return Err(Error::Parse(format!("{}:{}: {e}", path.display(), i + 1))),
        }
    }
    Ok(out)
}

fn run_job(
    job: &Job,
    ds: &Dataset,
    split: &SplitSpec,
    learner: &dyn Learner,
) -> std::result::Result<EvalRecord, String> {
    let (train, test) = crate::resampling::resolve_split(split, ds).map_err(|e| e.to_string())?;
    let start = crate::clock::Stopwatch::start();
    let pred = catch_unwind(AssertUnwindSafe(|| learner.fit_predict(&train, &test, job.seed)))
        .map_err(|p| {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            format!("learner panicked: {msg}")
        })?
        .map_err(|e| e.to_string())?;
    let fit_seconds = start.seconds();
    let test_error = error_rate(&pred, &test.labels()).map_err(|e| e.to_string())?;
    Ok(EvalRecord {
        data: job.data.clone(),
        learner: job.learner.clone(),
        test_subset: ds.subset_names()[job.test_subset].clone(),
        test_fold: job.test_fold + 1,
        policy: job.policy,
        test_error,
        n_train: train.len(),
        n_test: test.len(),
        fit_seconds,
    })
}

/// Execute every job of the manifest not already done, updating statuses in
/// place. Results are identical for any worker count since each job only
/// depends on its own seed.
pub fn execute(
    manifest: &mut RunManifest,
    datasets: &[Dataset],
    learners: &[&dyn Learner],
    opts: &ExecuteOptions,
) -> Result<ExecuteReport> {
    let by_name: HashMap<&str, &Dataset> = datasets.iter().map(|d| (d.name(), d)).collect();
    let learner_by_name: HashMap<String, &dyn Learner> = learners.iter().map(|l| (l.name(), *l)).collect();

    let mut splits: HashMap<&str, BTreeMap<(usize, usize, TrainPolicy), SplitSpec>> = HashMap::new();
    for entry in &manifest.datasets {
        let ds = by_name
            .get(entry.name.as_str())
            .ok_or_else(|| Error::UnknownDataset(entry.name.clone()))?;
        if dataset_digest(ds) != entry.digest {
            return Err(Error::Parse(format!("dataset {:?} changed since planning", entry.name)));
        }
        let map = enumerate_candidates(ds, &entry.folds, &manifest.policies)
            .into_iter()
            .map(|s| ((s.test_subset, s.test_fold, s.policy), s))
            .collect();
        splits.insert(entry.name.as_str(), map);
    }
    for name in &manifest.learners {
        if !learner_by_name.contains_key(name) {
            return Err(Error::UnknownLearner(name.clone()));
        }
    }

    let mut outcomes = match &opts.results_path {
        Some(p) => load_outcomes(p)?,
        None => HashMap::new(),
    };
    for job in manifest.jobs.iter_mut() {
        if job.status == JobStatus::Skipped {
            continue;
        }
        job.status = match outcomes.get(&job.job_id) {
            Some(Outcome::Done { .. }) => JobStatus::Done,
            _ => JobStatus::Pending,
        };
    }

    let mut pending: Vec<usize> = manifest
        .jobs
        .iter()
        .enumerate()
        .filter(|(_, j)| j.status == JobStatus::Pending)
        .map(|(i, _)| i)
        .collect();
    if let Some(max) = opts.max_jobs {
        pending.truncate(max);
    }

    let mut writer = match &opts.results_path {
        Some(p) => Some(OpenOptions::new().create(true).append(true).open(p)?),
        None => None,
    };

    let jobs = &manifest.jobs;
    let work = |idx: usize| -> Outcome {
        let job = &jobs[idx];
        let ds = by_name[job.data.as_str()];
        let split = &splits[job.data.as_str()][&(job.test_subset, job.test_fold, job.policy)];
        let learner = learner_by_name[&job.learner];
        match run_job(job, ds, split, learner) {
            Ok(record) => Outcome::Done {
                job_id: job.job_id.clone(),
                record,
            },
            Err(error) => Outcome::Failed {
                job_id: job.job_id.clone(),
                error,
            },
        }
    };
    let mut store = |outcome: &Outcome| -> Result<()> {
        if let Some(w) = writer.as_mut() {
            let line = serde_json::to_string(outcome)?;
            writeln!(w, "{line}")?;
            w.flush()?;
        }
        Ok(())
    };

    let workers = opts.workers.max(1).min(pending.len().max(1));
    let mut received = Vec::with_capacity(pending.len());
    if workers == 1 {
        for &idx in &pending {
            let outcome = work(idx);
            store(&outcome)?;
            received.push((idx, outcome));
        }
    } else {
        let next = AtomicUsize::new(0);
        let (tx, rx) = mpsc::channel::<(usize, Outcome)>();
        std::thread::scope(|scope| -> Result<()> {
            for _ in 0..workers {
                let tx = tx.clone();
                let next = &next;
                let pending = &pending;
                let work = &work;
                scope.spawn(move || loop {
                    let slot = next.fetch_add(1, Ordering::SeqCst);
                    let Some(&idx) = pending.get(slot) else { break };
                    if tx.send((idx, work(idx))).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            for (idx, outcome) in rx {
                store(&outcome)?;
                received.push((idx, outcome));
            }
            Ok(())
        })?;
    }

    let mut report = ExecuteReport {
        executed: received.len(),
        ..ExecuteReport::default()
    };
    for (idx, outcome) in received {
        let job = &mut manifest.jobs[idx];
        match &outcome {
            Outcome::Done { .. } => {
                job.status = JobStatus::Done;
                job.message = None;
            }
            Outcome::Failed { error, .. } => {
                job.status = JobStatus::Failed;
                job.message = Some(error.clone());
            }
        }
        outcomes.insert(job.job_id.clone(), outcome);
    }
    for job in &manifest.jobs {
        match job.status {
            JobStatus::Done => {
                if let Some(Outcome::Done { record, .. }) = outcomes.get(&job.job_id) {
                    report.records.push(record.clone());
                }
            }
            JobStatus::Failed => report.failed += 1,
            JobStatus::Skipped => report.skipped += 1,
            JobStatus::Pending => {}
        }
    }
    Ok(report)
}
