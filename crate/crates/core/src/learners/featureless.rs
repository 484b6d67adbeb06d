use crate::data::DataView;
use crate::error::{Error, Result};

use super::{timed, FittedModel, LearnerKind, ModelParams, Tuning};

/// Always predicts the most frequent training class (lowest index on ties).
pub fn fit_featureless(train: &DataView<'_>) -> Result<FittedModel> {
    if train.is_empty() {
        return Err(Error::EmptyView("train"));
    }
    let (class, secs) = timed(|| {
        let counts = train.class_counts();
        let mut best = 0;
        for (c, &n) in counts.iter().enumerate() {
            if n > counts[best] {
                best = c;
            }
        }
        Ok(best)
    })?;
    Ok(FittedModel {
        kind: LearnerKind::Featureless,
        params: ModelParams::Featureless { class },
        tuning: Tuning::default(),
        n_features: train.n_features(),
        fit_seconds: secs,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Matrix;
    use crate::stats::error_rate;

    fn predict_labels(labels: &[usize], n_test: usize) -> Vec<usize> {
        let x = Matrix::zeros(labels.len(), 2);
        let v = DataView::full(&x, labels, 2);
        let m = fit_featureless(&v).unwrap();
        m.predict(&Matrix::zeros(n_test, 2)).unwrap()
    }

    #[test]
    fn majority() {
        assert_eq!(predict_labels(&[0, 0, 1], 5), vec![0; 5]);
    }

    #[test]
    fn tie_goes_to_lowest() {
        assert_eq!(predict_labels(&[1, 0], 1), vec![0]);
    }

    #[test]
    fn test_error_from_class_mix() {
        let pred = predict_labels(&[0, 0, 0, 1], 5);
        let truth = [0, 0, 1, 1, 1];
        assert!((error_rate(&pred, &truth).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn empty_train_is_error() {
        let x = Matrix::zeros(0, 1);
        let v = DataView::full(&x, &[], 2);
        assert!(fit_featureless(&v).is_err());
    }
}
