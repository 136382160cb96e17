//! Sample summaries, bootstrap errors and χ² tests.

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::statistics::Statistics;

use crate::error::{Error, Result};

/// Resamples used by [`bootstrap_std_err`] unless told otherwise.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of the mean.
    pub std_err: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    let mean = if n == 0 { f64::NAN } else { xs.iter().mean() };
    let variance = if n < 2 { f64::NAN } else { xs.iter().variance() };
    Summary { n, mean, variance, std_err: (variance / n as f64).sqrt() }
}

/// Unbiased sample variance of `xs` and its standard error,
/// `Var s² ≈ (m₄ − s⁴ (n−3)/(n−1)) / n`.
pub fn variance_with_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if n < 4.0 {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().mean();
    let s2 = xs.iter().variance();
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    let var_s2 = (m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n;
    (s2, var_s2.max(0.0).sqrt())
}

/// Bootstrap standard error of `statistic` over `resamples` resamples.
pub fn bootstrap_std_err<R, F>(xs: &[f64], resamples: usize, rng: &mut R, statistic: F) -> f64
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    if xs.is_empty() || resamples < 2 {
        return f64::NAN;
    }
    let mut buf = vec![0.0; xs.len()];
    let values: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = xs[rng.gen_range(0..xs.len())];
            }
            statistic(&buf)
        })
        .collect();
    values.iter().std_dev()
}

/// Pearson correlation; `NaN` when either sample is constant.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return f64::NAN;
    }
    let (xs, ys) = (&xs[..n], &ys[..n]);
    xs.iter().covariance(ys.iter()) / (xs.iter().std_dev() * ys.iter().std_dev())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn chi_square_p(statistic: f64, dof: usize) -> Result<f64> {
    let dist = ChiSquared::new(dof as f64)
        .map_err(|e| Error::Domain(format!("chi-square with {dof} degrees of freedom: {e}")))?;
    Ok(1.0 - dist.cdf(statistic))
}

/// Goodness of fit of `observed` counts to cell probabilities `expected`
/// (which are renormalised over the given cells).
pub fn chi_square_goodness(observed: &[u64], expected: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(Error::Domain("chi-square needs matching cells, at least two".into()));
    }
    let n: u64 = observed.iter().sum();
    let mass: f64 = expected.iter().sum();
    let mut statistic = 0.0;
    for (&o, &p) in observed.iter().zip(expected) {
        let e = n as f64 * p / mass;
        if e <= 0.0 {
            return Err(Error::Domain("chi-square cell with zero expectation".into()));
        }
        statistic += (o as f64 - e).powi(2) / e;
    }
    let dof = observed.len() - 1;
    Ok(ChiSquareTest { statistic, dof, p_value: chi_square_p(statistic, dof)? })
}

/// Test that two count vectors over the same cells share one distribution.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> Result<ChiSquareTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Domain("chi-square needs matching cells, at least two".into()));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let total = na + nb;
    let mut statistic = 0.0;
    let mut cells = 0;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        cells += 1;
        let (ex, ey) = (na * col / total, nb * col / total);
        statistic += (x as f64 - ex).powi(2) / ex + (y as f64 - ey).powi(2) / ey;
    }
    if cells < 2 {
        return Err(Error::Domain("chi-square needs two nonempty cells".into()));
    }
    let dof = cells - 1;
    Ok(ChiSquareTest { statistic, dof, p_value: chi_square_p(statistic, dof)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn summary_of_small_sample() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-12);
        assert!((s.std_err - (5.0f64 / 12.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn chi_square_of_exact_fit_is_zero() {
        let t = chi_square_goodness(&[25, 50, 25], &[0.25, 0.5, 0.25]).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert!((t.p_value - 1.0).abs() < 1e-12);
        let h = chi_square_homogeneity(&[10, 20], &[20, 40]).unwrap();
        assert!(h.statistic.abs() < 1e-12);
    }

    #[test]
    fn chi_square_known_value() {
        // 1 dof, statistic 3.841 is the 95% point.
        let t = chi_square_goodness(&[60, 40], &[0.5, 0.5]).unwrap();
        assert!((t.statistic - 4.0).abs() < 1e-12);
        assert!((t.p_value - 0.0455).abs() < 1e-3);
    }

    #[test]
    fn correlation_of_linear_data_is_one() {
        let xs = [1.0, 2.0, 3.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((correlation(&xs, &ys) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_of_mean_is_near_standard_error() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..400).map(|i| (i % 7) as f64).collect();
        let s = summarize(&xs);
        let b = bootstrap_std_err(&xs, 400, &mut rng, |v| v.iter().sum::<f64>() / v.len() as f64);
        assert!((b / s.std_err - 1.0).abs() < 0.2);
    }
}
