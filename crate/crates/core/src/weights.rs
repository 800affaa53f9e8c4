//! Mixture-weight validation shared by every weighted score.

use thiserror::Error;

/// Tolerance on the unit-sum constraint.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("{name} weights must be non-negative, got {weights:?}")]
    Negative { name: &'static str, weights: Vec<f64> },
    #[error("{name} weights must sum to 1 (within 1e-9), got {weights:?} summing to {sum}")]
    BadSum {
        name: &'static str,
        weights: Vec<f64>,
        sum: f64,
    },
}

/// Checks that `weights` are finite, non-negative and sum to one within [`WEIGHT_SUM_TOLERANCE`].
pub fn check_weights(name: &'static str, weights: &[f64]) -> Result<(), WeightError> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(WeightError::Negative {
            name,
            weights: weights.to_vec(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(WeightError::BadSum {
            name,
            weights: weights.to_vec(),
            sum,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_unit_sums() {
        assert!(check_weights("t", &[0.7, 0.3]).is_ok());
        assert!(check_weights("t", &[0.5, 0.3, 0.2]).is_ok());
        assert!(check_weights("t", &[0.4, 0.4, 0.2]).is_ok());
        assert!(check_weights("t", &[1.0, 0.0]).is_ok());
    }

    #[test]
    fn rejects_off_sums_and_negatives() {
        assert!(matches!(
            check_weights("t", &[0.6, 0.3]),
            Err(WeightError::BadSum { .. })
        ));
        assert!(matches!(
            check_weights("t", &[0.5, 0.5, 0.5]),
            Err(WeightError::BadSum { .. })
        ));
        assert!(matches!(
            check_weights("t", &[1.2, -0.2]),
            Err(WeightError::Negative { .. })
        ));
        assert!(check_weights("t", &[0.7 + 2e-9, 0.3]).is_err());
        assert!(check_weights("t", &[0.7 + 5e-10, 0.3]).is_ok());
        assert!(check_weights("t", &[f64::NAN, 1.0]).is_err());
    }
}
