//! Browser bindings: a synthetic SOAK run, a paired t-test explorer and a
//! fold/split picture.

use std::fmt::Write as _;

use serde_json::json;
use soak::resampling::enumerate_candidates;
use soak::stats::{clamped_log10, student_t_cdf};
use soak::{
    assign_folds, error_table, execute, paired_ttest, plan, soak_compare, synth, ExecuteOptions, Learner,
    LearnerSpec, TrainPolicy,
};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Run SOAK on two synthetic subsets where subset B has a label-flip
/// fraction `flip` and a feature offset `shift`. Returns JSON with the
/// comparison rows, the error table and two SVG figures.
#[wasm_bindgen]
pub fn soak_demo(n_per_subset: usize, flip: f64, shift: f64, folds: usize, learner: &str, seed: u64) -> Result<String, JsError> {
    soak_demo_json(n_per_subset, flip, shift, folds, learner, seed).map_err(js_err)
}

pub fn soak_demo_json(n_per_subset: usize, flip: f64, shift: f64, folds: usize, learner: &str, seed: u64) -> soak::Result<String> {
    let ds = synth::shifted_pair(n_per_subset, 2, 2.0, flip, shift, seed)?;
    let spec: LearnerSpec = learner.parse()?;
    let learners: [&dyn Learner; 1] = [&spec];
    let datasets = std::slice::from_ref(&ds);
    let mut manifest = plan(datasets, &learners, folds, seed, &TrainPolicy::ALL)?;
    let report = execute(&mut manifest, datasets, &learners, &ExecuteOptions::default())?;
    let comparisons = soak_compare(&report.records).rows;
    let errors = error_table(&report.records);
    let segments = soak::plot::segment_chart(&comparisons)?;
    let dots = soak::plot::error_dot_plot(&errors)?;
    Ok(json!({
        "jobs": manifest.jobs.len(),
        "comparisons": comparisons,
        "errors": errors,
        "segments_svg": segments,
        "errors_svg": dots,
    })
    .to_string())
}

/// Paired t-test on comma- or whitespace-separated differences.
#[wasm_bindgen]
pub fn t_test(diffs: &str) -> Result<String, JsError> {
    t_test_json(diffs).map_err(js_err)
}

pub fn t_test_json(diffs: &str) -> soak::Result<String> {
    let values: Vec<f64> = diffs
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| soak::Error::Parse(format!("{s:?}: {e}"))))
        .collect::<soak::Result<_>>()?;
    let tt = paired_ttest(&values)?;
    Ok(json!({
        "n": values.len(),
        "mean": tt.mean_diff,
        "t": tt.t_stat,
        "df": tt.df,
        "p_value": tt.p_value,
        "log10_p": clamped_log10(tt.p_value),
    })
    .to_string())
}

/// Student-t cumulative distribution function.
#[wasm_bindgen]
pub fn t_cdf(x: f64, df: f64) -> f64 {
    student_t_cdf(x, df)
}

/// SVG grid of rows coloured by role (test, train, unused) for test subset
/// `subset`, test fold `fold` (both 0-based) and the named policy.
#[wasm_bindgen]
pub fn split_picture(n_rows: usize, n_subsets: usize, folds: usize, seed: u64, subset: usize, fold: usize, policy: &str) -> Result<String, JsError> {
    split_svg(n_rows, n_subsets, folds, seed, subset, fold, policy).map_err(js_err)
}

pub fn split_svg(n_rows: usize, n_subsets: usize, folds: usize, seed: u64, subset: usize, fold: usize, policy: &str) -> soak::Result<String> {
    let n_subsets = n_subsets.clamp(1, 6);
    let per = (n_rows / n_subsets).max(2);
    let n = per * n_subsets;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut subsets = Vec::with_capacity(n);
    for i in 0..n {
        rows.push(vec![i as f64]);
        labels.push(i % 2);
        subsets.push(i / per);
    }
    let ds = soak::Dataset::new(
        "picture",
        soak::Matrix::from_rows(&rows)?,
        vec![],
        labels,
        vec!["0".into(), "1".into()],
        subsets,
        (0..n_subsets).map(|s| format!("S{}", s + 1)).collect(),
        None,
    )?;
    let policy: TrainPolicy = policy.parse()?;
    let fa = assign_folds(&ds, folds, seed)?;
    let split = enumerate_candidates(&ds, &fa, &[policy])
        .into_iter()
        .find(|c| c.test_subset == subset && c.test_fold == fold)
        .ok_or_else(|| soak::Error::Parse(format!("no split for subset {subset}, fold {fold}")))?;

    let mut role = vec![0u8; n];
    for &i in &split.train_rows {
        role[i] = 1;
    }
    for &i in &split.test_rows {
        role[i] = 2;
    }
    let cell = 14.0;
    let cols = folds;
    let label_w = 40.0;
    // rows of the picture are subsets, columns are folds, each cell stacks its rows
    let mut cells: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); cols]; n_subsets];
    for i in 0..n {
        cells[ds.subsets()[i]][fa.folds[i]].push(i);
    }
    let depth = cells.iter().flatten().map(Vec::len).max().unwrap_or(1);
    let block_w = cell * (depth as f64).sqrt().ceil();
    let block_h = block_w;
    let width = label_w + cols as f64 * (block_w + 8.0) + 10.0;
    let height = 30.0 + n_subsets as f64 * (block_h + 8.0) + 10.0;
    let per_side = (depth as f64).sqrt().ceil() as usize;

    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    for f in 0..cols {
        let x = label_w + f as f64 * (block_w + 8.0) + block_w / 2.0;
        let _ = write!(svg, r#"<text x="{x:.1}" y="18" text-anchor="middle">fold {}</text>"#, f + 1);
    }
    for (s, row) in cells.iter().enumerate() {
        let y0 = 30.0 + s as f64 * (block_h + 8.0);
        let _ = write!(svg, r#"<text x="4" y="{:.1}">{}</text>"#, y0 + block_h / 2.0 + 4.0, ds.subset_names()[s]);
        for (f, members) in row.iter().enumerate() {
            let x0 = label_w + f as f64 * (block_w + 8.0);
            for (j, &i) in members.iter().enumerate() {
                let x = x0 + (j % per_side) as f64 * cell;
                let y = y0 + (j / per_side) as f64 * cell;
                let fill = match role[i] {
                    2 => "#d62728",
                    1 => "#1f77b4",
                    _ => "#dddddd",
                };
                let _ = write!(
                    svg,
                    r#"<rect x="{x:.1}" y="{y:.1}" width="{w:.1}" height="{w:.1}" fill="{fill}"/>"#,
                    w = cell - 2.0
                );
            }
        }
    }
    svg.push_str("</svg>");
    Ok(svg)
}
