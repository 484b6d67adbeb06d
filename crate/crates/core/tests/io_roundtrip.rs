mod common;

use common::random_dataset;
use proptest::prelude::*;
use soak::assign_folds;
use soak::io::{load_csv_reader, read_folds_csv, write_dataset_csv, write_folds_csv, ColumnRoles};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dataset_round_trip(seed in any::<u64>(), n in 4usize..40, s in 1usize..4, c in 2usize..4, grouped in any::<bool>()) {
        let ds = random_dataset(seed, n, 3, s, c, grouped);
        let roles = ColumnRoles::new("label", Some("subset"), grouped.then_some("group"));
        let mut buf = Vec::new();
        write_dataset_csv(&ds, &roles, &mut buf).unwrap();
        let back = load_csv_reader(ds.name(), buf.as_slice(), &roles).unwrap();
        prop_assert_eq!(back.features(), ds.features());
        let names = |d: &soak::Dataset| -> Vec<(String, String)> {
            (0..d.n_rows()).map(|i| (d.class_names()[d.labels()[i]].clone(), d.subset_names()[d.subsets()[i]].clone())).collect()
        };
        prop_assert_eq!(names(&back), names(&ds));
    }

    #[test]
    fn folds_round_trip(seed in any::<u64>(), n in 4usize..40, k in 2usize..6) {
        let ds = random_dataset(seed, n, 1, 2, 2, false);
        let fa = assign_folds(&ds, k, seed).unwrap();
        let mut buf = Vec::new();
        write_folds_csv(&fa, &mut buf).unwrap();
        let back = read_folds_csv(&ds, buf.as_slice(), Some(k), seed).unwrap();
        prop_assert_eq!(back.folds, fa.folds);
    }
}
