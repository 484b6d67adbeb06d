mod common;

use common::{random_dataset, t_cdf_oracle};
use proptest::prelude::*;
use soak::stats::{student_t_cdf, student_t_two_sided_p};
use soak::stats::{categorize, clamped_log10, LOG10_P_FLOOR};
use soak::{meta_summary, paired_ttest, soak_compare, EvalRecord, Similarity, TrainPolicy};

#[test]
fn t_cdf_matches_quadrature() {
    for df in [1u32, 2, 3, 5, 9, 30] {
        let mut x = -40.0;
        while x <= 40.0 {
            let got = student_t_cdf(x, df as f64);
            let want = t_cdf_oracle(x, df);
            assert!((got - want).abs() <= 1e-10, "df={df} x={x} got={got} want={want}");
            x += 0.37;
        }
    }
}

#[test]
fn known_critical_values() {
    // two-sided 5% critical values
    for (df, t) in [(1.0, 12.706204736), (9.0, 2.262157163), (30.0, 2.042272456)] {
        assert!((student_t_two_sided_p(t, df) - 0.05).abs() < 1e-8);
    }
    assert_eq!(student_t_cdf(0.0, 4.0), 0.5);
}

#[test]
fn p_is_005_at_the_critical_spread() {
    let e = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
    let mean_e = e.iter().sum::<f64>() / 10.0;
    let s = (e.iter().map(|v| (v - mean_e).powi(2)).sum::<f64>() / 9.0).sqrt();
    let shift = 2.262157 * s / 10f64.sqrt();
    let diffs: Vec<f64> = e.iter().map(|v| v - mean_e + shift).collect();
    let tt = paired_ttest(&diffs).unwrap();
    assert!((tt.p_value - 0.05).abs() < 1e-4, "{}", tt.p_value);
    assert_eq!(tt.df, 9);
}

#[test]
fn clamping() {
    assert_eq!(clamped_log10(0.0), LOG10_P_FLOOR);
    assert_eq!(clamped_log10(1e-320), LOG10_P_FLOOR);
    assert!((clamped_log10(0.01) + 2.0).abs() < 1e-12);
}

#[test]
fn categories() {
    assert_eq!(categorize(-3.0, -1.0, -2.0), Similarity::Similar);
    assert_eq!(categorize(1.0, 3.0, 2.0), Similarity::Different);
    assert_eq!(categorize(-1.0, 3.0, 1.0), Similarity::Different);
    assert_eq!(categorize(-3.0, 1.0, -1.0), Similarity::Similar);
}

fn records(subsets: &[&str], errs: &[[f64; 3]]) -> Vec<EvalRecord> {
    let mut out = Vec::new();
    for s in subsets {
        for (fold, row) in errs.iter().enumerate() {
            for (p, policy) in TrainPolicy::ALL.iter().enumerate() {
                out.push(EvalRecord {
                    data: "d".into(),
                    learner: "l".into(),
                    test_subset: s.to_string(),
                    test_fold: fold + 1,
                    policy: *policy,
                    test_error: row[p],
                    n_train: 1,
                    n_test: 1,
                    fit_seconds: 0.0,
                });
            }
        }
    }
    out
}

fn arb_errors() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(0.0f64..1.0), 2..12)
}

proptest! {
    #[test]
    fn cdf_symmetric_and_monotone(x in -50.0f64..50.0, dx in 0.0f64..5.0, df in 1.0f64..60.0) {
        let a = student_t_cdf(x, df);
        prop_assert!((a + student_t_cdf(-x, df) - 1.0).abs() <= 1e-12);
        prop_assert!(student_t_cdf(x + dx, df) >= a);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn ttest_sign_and_range(diffs in prop::collection::vec(-1.0f64..1.0, 2..15)) {
        let tt = paired_ttest(&diffs).unwrap();
        let neg: Vec<f64> = diffs.iter().map(|d| -d).collect();
        let tn = paired_ttest(&neg).unwrap();
        prop_assert!((0.0..=1.0).contains(&tt.p_value));
        prop_assert!((tt.p_value - tn.p_value).abs() < 1e-12);
        prop_assert!((tt.mean_diff + tn.mean_diff).abs() < 1e-12);
    }

    #[test]
    fn compare_ignores_record_order(errs in arb_errors(), rot in 0usize..100) {
        let recs = records(&["a", "b"], &errs);
        let mut shuffled = recs.clone();
        let r = rot % shuffled.len();
        shuffled.rotate_left(r);
        shuffled.reverse();
        prop_assert_eq!(soak_compare(&recs), soak_compare(&shuffled));
    }

    #[test]
    fn comparison_is_treatment_minus_same(errs in arb_errors()) {
        let recs = records(&["a", "b"], &errs);
        let cmp = soak_compare(&recs);
        prop_assert_eq!(cmp.rows.len(), 4);
        for row in &cmp.rows {
            let p = if row.comparison == soak::Comparison::OtherVsSame { 1 } else { 2 };
            let diffs: Vec<f64> = errs.iter().map(|e| e[p] - e[0]).collect();
            let mean = 100.0 * diffs.iter().sum::<f64>() / diffs.len() as f64;
            prop_assert!((row.mean_diff - mean).abs() < 1e-9);
            prop_assert_eq!(row.k_used, errs.len());
        }
    }

    #[test]
    fn meta_is_permutation_invariant(seed in any::<u64>(), n in 4usize..60, s in 1usize..4, c in 2usize..4) {
        let ds = random_dataset(seed, n, 2, s, c, false);
        let mut order: Vec<usize> = (0..ds.n_rows()).collect();
        order.reverse();
        order.rotate_left(seed as usize % ds.n_rows());
        let permuted = ds.permute_rows(&order);
        prop_assert_eq!(meta_summary(&ds), meta_summary(&permuted));
    }

    #[test]
    fn imbalance_is_one_iff_counts_equal(counts in prop::collection::vec(1usize..6, 2..5)) {
        let mut labels = Vec::new();
        for (k, &c) in counts.iter().enumerate() {
            labels.extend(std::iter::repeat_n(k, c));
        }
        let n = labels.len();
        let ds = soak::Dataset::new(
            "m",
            soak::Matrix::new(n, 1, vec![0.0; n]).unwrap(),
            vec![],
            labels,
            (0..counts.len()).map(|k| k.to_string()).collect(),
            vec![0; n],
            vec!["all".into()],
            None,
        ).unwrap();
        let m = meta_summary(&ds);
        let equal = counts.iter().all(|&c| c == counts[0]);
        prop_assert_eq!(m.class_imbalance == 1.0, equal);
        prop_assert!(m.class_imbalance >= 1.0);
        prop_assert_eq!(m.subset_imbalance, 1.0);
    }
}

#[test]
fn single_subset_gives_no_comparisons() {
    let recs: Vec<EvalRecord> = records(&["all"], &[[0.1, 0.2, 0.3], [0.2, 0.1, 0.0]])
        .into_iter()
        .filter(|r| r.policy == TrainPolicy::Same)
        .collect();
    assert!(soak_compare(&recs).rows.is_empty());
    assert_eq!(soak::error_table(&recs).len(), 1);
}
