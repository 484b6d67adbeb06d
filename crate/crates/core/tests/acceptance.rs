//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{data_dir, random_dataset, t_cdf_oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soak::engine::JobStatus;
use soak::io::{load_csv, ColumnRoles};
use soak::learners::{lambda_max, objective_and_gradient, solve_path, SolverOptions};
use soak::resampling::enumerate_candidates;
use soak::stats::{error_rate, student_t_cdf};
use soak::{
    assign_folds, execute, meta_summary, paired_ttest, plan, soak_compare, synth, Comparison, Dataset, EvalRecord,
    ExecuteOptions, Learner, LearnerSpec, Matrix, SubsetComparison, TrainPolicy,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn run_soak(ds: &Dataset, learner: &LearnerSpec, k: usize, seed: u64, policies: &[TrainPolicy]) -> Result<Vec<EvalRecord>, String> {
    let learners: [&dyn Learner; 1] = [learner];
    let datasets = std::slice::from_ref(ds);
    let mut m = plan(datasets, &learners, k, seed, policies).map_err(|e| e.to_string())?;
    let opts = ExecuteOptions { workers: workers(), ..Default::default() };
    let rep = execute(&mut m, datasets, &learners, &opts).map_err(|e| e.to_string())?;
    ensure(rep.failed == 0, format!("{} jobs failed", rep.failed))?;
    Ok(rep.records)
}

fn other_vs_same(records: &[EvalRecord]) -> Vec<SubsetComparison> {
    soak_compare(records)
        .rows
        .into_iter()
        .filter(|r| r.comparison == Comparison::OtherVsSame)
        .collect()
}

fn describe(rows: &[SubsetComparison]) -> String {
    rows.iter()
        .map(|r| format!("{} diff={:.1} log10p={:.1}", r.test_subset, r.mean_diff, r.log10_p))
        .collect::<Vec<_>>()
        .join("; ")
}

fn split_algebra() -> Outcome {
    let mut checked = 0usize;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = rng.gen_range(1..=4);
        let k = rng.gen_range(2..=10);
        let n = rng.gen_range(s * 2..=200);
        let grouped = seed % 2 == 1;
        let ds = random_dataset(seed, n, 2, s, 2, grouped);
        let fa = assign_folds(&ds, k, seed).map_err(|e| e.to_string())?;
        let cands = enumerate_candidates(&ds, &fa, &TrainPolicy::ALL);
        let expect = if s > 1 { 3 * s * k } else { k };
        ensure(cands.len() == expect, format!("seed {seed}: {} splits, expected {expect}", cands.len()))?;

        let find = |sigma: usize, kappa: usize, p: TrainPolicy| -> Option<BTreeSet<usize>> {
            cands
                .iter()
                .find(|c| c.test_subset == sigma && c.test_fold == kappa && c.policy == p)
                .map(|c| c.train_rows.iter().copied().collect())
        };
        for sigma in 0..s {
            let mut covered = vec![0usize; ds.n_rows()];
            for kappa in 0..k {
                let same_split = cands
                    .iter()
                    .find(|c| c.test_subset == sigma && c.test_fold == kappa && c.policy == TrainPolicy::Same)
                    .ok_or("missing Same split")?;
                let test: BTreeSet<usize> = same_split.test_rows.iter().copied().collect();
                for &i in &test {
                    covered[i] += 1;
                    ensure(ds.subsets()[i] == sigma, format!("seed {seed}: test row outside subset"))?;
                }
                let same = find(sigma, kappa, TrainPolicy::Same).unwrap();
                ensure(same.is_disjoint(&test), format!("seed {seed}: Same overlaps test"))?;
                if let Some(groups) = ds.groups() {
                    let test_groups: BTreeSet<usize> = test.iter().map(|&i| groups[i]).collect();
                    for p in TrainPolicy::ALL {
                        if let Some(train) = find(sigma, kappa, p) {
                            ensure(
                                train.iter().all(|&i| !test_groups.contains(&groups[i])),
                                format!("seed {seed}: group straddles train/test"),
                            )?;
                        }
                    }
                }
                if s == 1 {
                    continue;
                }
                let other = find(sigma, kappa, TrainPolicy::Other).unwrap();
                let all = find(sigma, kappa, TrainPolicy::All).unwrap();
                ensure(same.is_disjoint(&other), format!("seed {seed}: Same ∩ Other ≠ ∅"))?;
                ensure(same.union(&other).copied().collect::<BTreeSet<_>>() == all, format!("seed {seed}: Same ∪ Other ≠ All"))?;
                for tau in 0..s {
                    ensure(find(tau, kappa, TrainPolicy::All).unwrap() == all, format!("seed {seed}: All depends on σ"))?;
                }
            }
            for i in 0..ds.n_rows() {
                let want = usize::from(ds.subsets()[i] == sigma);
                ensure(covered[i] == want, format!("seed {seed}: subset {sigma} test sets do not partition"))?;
            }
            checked += 1;
        }
    }
    Ok(format!("100 seeds, {checked} subsets"))
}

fn single_subset_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 500;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let labels: Vec<usize> = rows.iter().map(|r| usize::from(r[0] + 0.5 * r[1] + rng.gen_range(-0.3..0.3) > 0.0)).collect();
    let ds = Dataset::new(
        "single",
        Matrix::from_rows(&rows).unwrap(),
        vec![],
        labels,
        vec!["0".into(), "1".into()],
        vec![0; n],
        vec!["all".into()],
        None,
    )
    .map_err(|e| e.to_string())?;
    let k = 10;
    let seed = 7;
    let knn: LearnerSpec = "knn".parse().unwrap();
    let learners: [&dyn Learner; 1] = [&knn];
    let datasets = std::slice::from_ref(&ds);
    let mut m = plan(datasets, &learners, k, seed, &TrainPolicy::ALL).map_err(|e| e.to_string())?;
    let rep = execute(&mut m, datasets, &learners, &ExecuteOptions::default()).map_err(|e| e.to_string())?;
    ensure(rep.records.len() == k, format!("{} records, expected {k}", rep.records.len()))?;

    let fa = &m.datasets[0].folds;
    for kappa in 0..k {
        let train: Vec<usize> = (0..n).filter(|&i| fa.folds[i] != kappa).collect();
        let test: Vec<usize> = (0..n).filter(|&i| fa.folds[i] == kappa).collect();
        let job = m.jobs.iter().find(|j| j.test_fold == kappa).ok_or("missing job")?;
        let model = knn.fit(&ds.view(train), job.seed).map_err(|e| e.to_string())?;
        let test_view = ds.view(test);
        let pred = model.predict(&test_view).map_err(|e| e.to_string())?;
        let err = error_rate(&pred, &test_view.labels()).unwrap();
        let rec = rep.records.iter().find(|r| r.test_fold == kappa + 1).ok_or("missing record")?;
        ensure(rec.test_error == err, format!("fold {}: {} vs {}", kappa + 1, rec.test_error, err))?;
    }
    Ok(format!("{k} folds identical"))
}

fn t_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for df in [1u32, 2, 5, 9, 30] {
        for i in 0..=800 {
            let x = -40.0 + 0.1 * i as f64;
            worst = worst.max((student_t_cdf(x, df as f64) - t_cdf_oracle(x, df)).abs());
        }
    }
    ensure(worst <= 1e-10, format!("max |Δ| = {worst:e}"))?;
    let e: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let s = (e.iter().map(|v| v * v).sum::<f64>() / 9.0).sqrt();
    let diffs: Vec<f64> = e.iter().map(|v| v + 2.262157 * s / 10f64.sqrt()).collect();
    let tt = paired_ttest(&diffs).map_err(|e| e.to_string())?;
    ensure((tt.p_value - 0.05).abs() <= 1e-4, format!("p = {}", tt.p_value))?;
    Ok(format!("max |Δ| = {worst:.1e}, p = {:.6}", tt.p_value))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (n, p, c) = (30, 5, 3);
    let x = Matrix::new(n, p, (0..n * p).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
    let y: Vec<usize> = (0..n).map(|i| i % c).collect();
    let n_params = c * p + c;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let params: Vec<f64> = (0..n_params)
            .map(|_| {
                let v: f64 = rng.gen_range(0.05..1.0);
                if rng.gen::<bool>() {
                    v
                } else {
                    -v
                }
            })
            .collect();
        let lambda = rng.gen_range(0.0..0.1);
        let (_, grad) = objective_and_gradient(&x, &y, c, &params, lambda);
        for j in 0..n_params {
            let h = 1e-5;
            let mut up = params.clone();
            let mut down = params.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (objective_and_gradient(&x, &y, c, &up, lambda).0 - objective_and_gradient(&x, &y, c, &down, lambda).0) / (2.0 * h);
            worst = worst.max((fd - grad[j]).abs() / grad[j].abs().max(1e-6));
        }
    }
    ensure(worst <= 1e-4, format!("max relative error {worst:e}"))?;
    let lmax = lambda_max(&x, &y, c);
    let path = solve_path(&x, &y, c, &[lmax], &SolverOptions::default());
    ensure(path[0].params[..c * p].iter().all(|&w| w == 0.0), "weights nonzero at λ_max")?;
    Ok(format!("max relative error {worst:.1e}, λ_max weights all 0"))
}

fn shift_direction() -> Outcome {
    let learner: LearnerSpec = "l1_logistic".parse().unwrap();
    let pols = [TrainPolicy::Same, TrainPolicy::Other];
    let flip = synth::label_flip_pair(1000, 3, 2.5, true, 11).map_err(|e| e.to_string())?;
    let rows = other_vs_same(&run_soak(&flip, &learner, 10, 1, &pols)?);
    ensure(rows.len() == 2, "expected two subsets")?;
    for r in &rows {
        ensure(r.mean_diff > 30.0 && r.p_value < 1e-3, format!("flip: {}", describe(&rows)))?;
    }
    let control = synth::label_flip_pair(1000, 3, 2.5, false, 11).map_err(|e| e.to_string())?;
    let ctrl = other_vs_same(&run_soak(&control, &learner, 10, 1, &pols)?);
    ensure(ctrl.len() == 2, "expected two control subsets")?;
    for r in &ctrl {
        ensure(r.mean_diff.abs() < 5.0, format!("control: {}", describe(&ctrl)))?;
    }
    Ok(format!("flip [{}], control [{}]", describe(&rows), describe(&ctrl)))
}

fn load_benchmark(file: &str) -> Result<Dataset, String> {
    let path = data_dir().join(file);
    if !path.exists() {
        return Err(format!("{} not found", path.display()));
    }
    load_csv(&path, &ColumnRoles::new("y", Some("predefined"), None)).map_err(|e| e.to_string())
}

fn benchmark_rows(file: &str) -> Result<Vec<SubsetComparison>, String> {
    let ds = load_benchmark(file)?;
    let learner: LearnerSpec = "l1_logistic".parse().unwrap();
    let rows = other_vs_same(&run_soak(&ds, &learner, 10, 1, &[TrainPolicy::Same, TrainPolicy::Other])?);
    ensure(rows.len() == 2, format!("{} subsets compared, expected 2", rows.len()))?;
    Ok(rows)
}

fn vowel_reproduction() -> Outcome {
    let rows = benchmark_rows("vowel.csv")?;
    for r in &rows {
        ensure(r.mean_diff >= 10.0 && r.p_value < 1e-3, describe(&rows))?;
    }
    Ok(describe(&rows))
}

fn spam_reproduction() -> Outcome {
    let rows = benchmark_rows("spam.csv")?;
    for r in &rows {
        ensure(r.mean_diff.abs() <= 5.0, describe(&rows))?;
    }
    Ok(describe(&rows))
}

fn engine_determinism() -> Outcome {
    let ds = synth::shifted_pair(60, 3, 2.0, 0.2, 0.5, 3).map_err(|e| e.to_string())?;
    let knn: LearnerSpec = "knn".parse().unwrap();
    let l1: LearnerSpec = "l1_logistic".parse().unwrap();
    let learners: [&dyn Learner; 3] = [&LearnerSpec::Featureless, &knn, &l1];
    let datasets = std::slice::from_ref(&ds);
    let lines = |records: Vec<EvalRecord>| -> Vec<String> {
        let mut v: Vec<String> = records.iter().map(EvalRecord::canonical_line).collect();
        v.sort();
        v
    };
    let run = |workers: usize| -> Result<Vec<String>, String> {
        let mut m = plan(datasets, &learners, 5, 13, &TrainPolicy::ALL).map_err(|e| e.to_string())?;
        let rep = execute(&mut m, datasets, &learners, &ExecuteOptions { workers, ..Default::default() }).map_err(|e| e.to_string())?;
        Ok(lines(rep.records))
    };
    let one = run(1)?;
    let eight = run(8)?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("results.ndjson");
    let mut m = plan(datasets, &learners, 5, 13, &TrainPolicy::ALL).map_err(|e| e.to_string())?;
    let half = m.jobs.len() / 2;
    let opts = ExecuteOptions { workers: 8, results_path: Some(path.clone()), max_jobs: Some(half) };
    execute(&mut m, datasets, &learners, &opts).map_err(|e| e.to_string())?;
    ensure(m.count(JobStatus::Pending) > 0, "interrupted run finished everything")?;
    {
        use std::io::Write;
        let mut f = std::fs::OpenOptions::new().append(true).open(&path).map_err(|e| e.to_string())?;
        f.write_all(b"{\"status\":\"done\",\"job_id\":\"0f").map_err(|e| e.to_string())?;
    }
    let mut resumed = plan(datasets, &learners, 5, 13, &TrainPolicy::ALL).map_err(|e| e.to_string())?;
    let opts = ExecuteOptions { workers: 3, results_path: Some(path), max_jobs: None };
    let rep = execute(&mut resumed, datasets, &learners, &opts).map_err(|e| e.to_string())?;
    ensure(rep.executed == resumed.jobs.len() - half, format!("resume executed {} jobs", rep.executed))?;
    let resumed_lines = lines(rep.records);

    ensure(one == eight, "1 vs 8 workers differ")?;
    ensure(one == resumed_lines, "resumed run differs")?;
    Ok(format!("{} records identical across 1, 8 workers and resume", one.len()))
}

fn meta_reproduction() -> Outcome {
    // name, rows, features, classes, class imbalance, subsets, subset imbalance
    let table = [("vowel.csv", 990, 10, 11, 1.0, 2, 1.1), ("zipUSPS.csv", 9298, 256, 10, 2.2, 2, 3.6)];
    let mut notes = Vec::new();
    let mut missing = Vec::new();
    for (file, rows, features, classes, ci, subsets, si) in table {
        let ds = match load_benchmark(file) {
            Ok(ds) => ds,
            Err(e) => {
                missing.push(e);
                continue;
            }
        };
        let m = meta_summary(&ds);
        let got = (m.rows, m.features, m.classes, m.subsets);
        ensure(got == (rows, features, classes, subsets), format!("{file}: {got:?}"))?;
        ensure((m.class_imbalance - ci).abs() <= 0.1 + 1e-9, format!("{file}: class imbalance {:.2}", m.class_imbalance))?;
        ensure((m.subset_imbalance - si).abs() <= 0.1 + 1e-9, format!("{file}: subset imbalance {:.2}", m.subset_imbalance))?;
        notes.push(format!("{file} ok"));
    }
    ensure(missing.is_empty(), format!("{} ({})", missing.join(", "), notes.join(", ")))?;
    Ok(notes.join(", "))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("split algebra", 10, split_algebra),
        ("single-subset equivalence", 30, single_subset_equivalence),
        ("t-distribution oracle", 5, t_oracle),
        ("gradient check", 5, gradient_check),
        ("shift-detection direction", 120, shift_direction),
        ("vowel reproduction", 300, vowel_reproduction),
        ("spam reproduction", 300, spam_reproduction),
        ("engine determinism", 120, engine_determinism),
        ("meta-data reproduction", 30, meta_reproduction),
    ];
    let only: Option<usize> = std::env::var("SOAK_CRITERION").ok().and_then(|v| v.parse().ok());
    let mut failures = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > Duration::from_secs(*limit) => {
                Err(format!("took {:.1}s, limit {limit}s; {detail}", elapsed.as_secs_f64()))
            }
            other => other,
        };
        match result {
            Ok(detail) => println!("criterion {}: PASS {name} ({:.1}s) {detail}", i + 1, elapsed.as_secs_f64()),
            Err(detail) => {
                failures += 1;
                println!("criterion {}: FAIL {name} ({:.1}s) {detail}", i + 1, elapsed.as_secs_f64());
            }
        }
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
