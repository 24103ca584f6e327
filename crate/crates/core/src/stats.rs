//! Sample means with 99% confidence radii.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

pub const CONFIDENCE: f64 = 0.99;

/// Below this sample size the radius uses the Student quantile.
pub const STUDENT_BELOW: usize = 10_000;

/// Two-sided quantile for [`CONFIDENCE`] with `n - 1` degrees of freedom.
pub fn critical_value(n: usize) -> f64 {
    let p = 0.5 + CONFIDENCE / 2.0;
    if n < STUDENT_BELOW && n >= 2 {
        StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("valid degrees of freedom")
            .inverse_cdf(p)
    } else {
        Normal::standard().inverse_cdf(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Half-width of the 99% interval.
    pub ci: f64,
    pub std_err: f64,
    pub n: usize,
}

/// Mean and confidence radius, summed in index order.
pub fn mean_ci(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate { mean: f64::NAN, ci: f64::NAN, std_err: f64::NAN, n };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Estimate { mean, ci: f64::INFINITY, std_err: f64::INFINITY, n };
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let std_err = (var / n as f64).sqrt();
    Estimate { mean, ci: critical_value(n) * std_err, std_err, n }
}

/// Ratio `E[y] / E[x]` with a delta-method radius.
pub fn ratio_ci(ys: &[f64], xs: &[f64]) -> Estimate {
    let n = ys.len();
    let my = ys.iter().sum::<f64>() / n as f64;
    let mx = xs.iter().sum::<f64>() / n as f64;
    let r = my / mx;
    if n < 2 {
        return Estimate { mean: r, ci: f64::INFINITY, std_err: f64::INFINITY, n };
    }
    // Residuals of the linearization y - r x.
    let var = ys
        .iter()
        .zip(xs)
        .map(|(y, x)| {
            let e = y - r * x;
            e * e
        })
        .sum::<f64>()
        / (n - 1) as f64;
    let std_err = (var / n as f64).sqrt() / mx.abs();
    Estimate { mean: r, ci: critical_value(n) * std_err, std_err, n }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        assert!((critical_value(1_000_000) - 2.5758293035489).abs() < 1e-9);
        assert!(critical_value(10) > 3.0);
    }

    #[test]
    fn constant_sample_has_zero_radius() {
        let e = mean_ci(&[1.0; 50]);
        assert_eq!((e.mean, e.ci), (1.0, 0.0));
    }

    #[test]
    fn exact_ratio_has_zero_radius() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [2.0, 4.0, 6.0];
        let e = ratio_ci(&ys, &xs);
        assert_eq!(e.mean, 2.0);
        assert!(e.ci.abs() < 1e-12);
    }
}
