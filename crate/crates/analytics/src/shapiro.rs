//! Shapiro-Wilk W test for normality (Royston's AS R94 algorithm).

use crate::distributions::{normal_quantile, normal_sf};
use crate::StatsError;

pub const MIN_N: usize = 3;
pub const MAX_N: usize = 50;

const SMALL: f64 = 1e-19;

// Polynomial coefficients, lowest order first.
const G: [f64; 2] = [-2.273, 0.459];
const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p_value: f64,
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Half of the antisymmetric coefficient vector: `a[0]` pairs the extreme
/// order statistics, `a[n/2 - 1]` the innermost pair.
fn coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let an25 = n as f64 + 0.25;
    let m: Vec<f64> = (1..=half)
        .map(|i| normal_quantile((i as f64 - 0.375) / an25))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;

    let mut a = vec![0.0; half];
    a[0] = a1;
    let (first_scaled, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
            / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
            .sqrt();
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    for i in first_scaled..half {
        a[i] = -m[i] / fac;
    }
    a
}

/// Runs the Shapiro-Wilk test on `sample` (3 ≤ n ≤ 50).
pub fn shapiro_wilk(sample: &[f64]) -> Result<ShapiroWilk, StatsError> {
    let n = sample.len();
    if n < MIN_N {
        return Err(StatsError::SampleTooSmall { min: MIN_N, got: n });
    }
    if n > MAX_N {
        return Err(StatsError::SampleTooLarge { max: MAX_N, got: n });
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }

    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range < SMALL {
        return Err(StatsError::ZeroVariance);
    }

    let half = coefficients(n);
    // Full coefficient vector aligned with the ascending order statistics.
    let coeff = |i: usize| -> f64 {
        let j = n - 1 - i;
        if i < j {
            -half[i]
        } else if i > j {
            half[j]
        } else {
            0.0
        }
    };

    let nf = n as f64;
    let mean_a = (0..n).map(coeff).sum::<f64>() / nf;
    let mean_x = x.iter().map(|v| v / range).sum::<f64>() / nf;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (i, xi) in x.iter().enumerate() {
        let asa = coeff(i) - mean_a;
        let xsx = xi / range - mean_x;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = 1.0 - w1;

    let p_value = if n == 3 {
        const PI6: f64 = 1.909_859_317_102_744;
        const STQR: f64 = std::f64::consts::FRAC_PI_3;
        (PI6 * (w.sqrt().asin() - STQR)).max(0.0)
    } else {
        let y = w1.ln();
        let ln_n = nf.ln();
        if n <= 11 {
            let gamma = poly(&G, nf);
            if y >= gamma {
                1e-99
            } else {
                let y = -(gamma - y).ln();
                let mean = poly(&C3, nf);
                let sd = poly(&C4, nf).exp();
                normal_sf((y - mean) / sd)
            }
        } else {
            let mean = poly(&C5, ln_n);
            let sd = poly(&C6, ln_n).exp();
            normal_sf((y - mean) / sd)
        }
    };

    Ok(ShapiroWilk { w, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_sizes() {
        assert_eq!(
            shapiro_wilk(&[1.0, 2.0]),
            Err(StatsError::SampleTooSmall { min: 3, got: 2 })
        );
        let big: Vec<f64> = (0..51).map(f64::from).collect();
        assert!(matches!(shapiro_wilk(&big), Err(StatsError::SampleTooLarge { .. })));
    }

    #[test]
    fn constant_sample_is_zero_variance() {
        assert_eq!(shapiro_wilk(&[4.0; 8]), Err(StatsError::ZeroVariance));
    }

    #[test]
    fn coefficients_have_unit_norm() {
        for n in [4, 5, 6, 11, 12, 20, 50] {
            let a = coefficients(n);
            let ss: f64 = 2.0 * a.iter().map(|v| v * v).sum::<f64>();
            assert!((ss - 1.0).abs() < 1e-12, "n={n}: {ss}");
        }
    }

    #[test]
    fn w_is_location_scale_invariant() {
        let x = [2.1, 3.4, 1.9, 5.6, 4.2, 3.3, 0.7];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 11.0).collect();
        let a = shapiro_wilk(&x).unwrap();
        let b = shapiro_wilk(&y).unwrap();
        assert!((a.w - b.w).abs() < 1e-12);
        assert!((a.p_value - b.p_value).abs() < 1e-10);
    }
}
