//! Paired-sample t test on a vector of differences.

use crate::distributions::student_t_two_sided;
use crate::StatsError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedT {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

pub fn paired_t(differences: &[f64]) -> Result<PairedT, StatsError> {
    let n = differences.len();
    if n < 2 {
        return Err(StatsError::SampleTooSmall { min: 2, got: n });
    }
    if differences.iter().any(|d| !d.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let nf = n as f64;
    let mean = differences.iter().sum::<f64>() / nf;
    let var = differences.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let statistic = mean / (var.sqrt() / nf.sqrt());
    let df = nf - 1.0;
    Ok(PairedT {
        statistic,
        df,
        p_value: student_t_two_sided(statistic, df),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mean_gives_p_one() {
        let r = paired_t(&[1.0, -1.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_reference_for_one_to_four() {
        // scipy.stats.ttest_1samp([1, 2, 3, 4], 0)
        let r = paired_t(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((r.statistic - 3.872983346207417).abs() < 1e-12);
        assert_eq!(r.df, 3.0);
        assert!((r.p_value - 0.030466291662170977).abs() < 1e-10);
    }

    #[test]
    fn errors() {
        assert_eq!(
            paired_t(&[1.0]),
            Err(StatsError::SampleTooSmall { min: 2, got: 1 })
        );
        assert_eq!(paired_t(&[2.0, 2.0, 2.0]), Err(StatsError::ZeroVariance));
    }
}
