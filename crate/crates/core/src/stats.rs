//! Robust Monte Carlo summaries and least-squares rate fits.

use crate::error::{Error, Result};
use crate::rng::{StreamKey, StreamRng};

/// `sqrt(pi / 2)`: asymptotic efficiency loss of a median relative to a mean
/// for near-Gaussian block means.
const MEDIAN_SE_FACTOR: f64 = 1.253_314_137_315_500_3;
/// MAD to standard deviation under normality.
const MAD_TO_SD: f64 = 1.482_602_218_505_602;

/// Estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

fn median_in_place(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn median(values: &[f64]) -> f64 {
    median_in_place(&mut values.to_vec())
}

/// Means of `blocks` contiguous, nearly equal blocks, in index order.
pub fn block_means(samples: &[f64], blocks: usize) -> Vec<f64> {
    let n = samples.len();
    (0..blocks)
        .map(|b| {
            let lo = b * n / blocks;
            let hi = (b + 1) * n / blocks;
            samples[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Median of block means; the standard error comes from the MAD of the block
/// means, so it stays finite even when the samples have infinite variance.
pub fn robust_mean(samples: &[f64], blocks: usize) -> Result<Estimate> {
    if blocks < 8 {
        return Err(Error::Estimator(format!("median-of-means needs at least 8 blocks, got {blocks}")));
    }
    if samples.len() < 4 * blocks {
        return Err(Error::Estimator(format!(
            "median-of-means with {blocks} blocks needs at least {} samples, got {}",
            4 * blocks,
            samples.len()
        )));
    }
    median_of_block_means(&block_means(samples, blocks))
}

/// `robust_mean` of `|x|^p`.
pub fn robust_moment(samples: &[f64], p: f64, blocks: usize) -> Result<Estimate> {
    let powered: Vec<f64> = samples.iter().map(|x| x.abs().powf(p)).collect();
    robust_mean(&powered, blocks)
}

/// Median-of-means summary of precomputed block means.
pub fn median_of_block_means(means: &[f64]) -> Result<Estimate> {
    if means.is_empty() {
        return Err(Error::Estimator("no block means".into()));
    }
    let mut v = means.to_vec();
    let value = median_in_place(&mut v);
    let mut dev: Vec<f64> = means.iter().map(|m| (m - value).abs()).collect();
    let mad = median_in_place(&mut dev);
    let stderr = MEDIAN_SE_FACTOR * MAD_TO_SD * mad / (means.len() as f64).sqrt();
    Ok(Estimate { value, stderr })
}

/// Median of block means with a bootstrap standard error: the spread of the
/// estimator over `resamples` with-replacement resamples drawn from `key`.
/// Steadier than the MAD of a handful of block means.
pub fn bootstrap_mom(samples: &[f64], blocks: usize, resamples: usize, key: StreamKey) -> Result<Estimate> {
    let n = samples.len();
    if blocks < 2 || n < 2 * blocks {
        return Err(Error::Estimator(format!(
            "bootstrap median-of-means needs >= 2 blocks of >= 2 samples, got {n} samples in {blocks} blocks"
        )));
    }
    if resamples < 2 {
        return Err(Error::Estimator("need at least 2 bootstrap resamples".into()));
    }
    let value = median_in_place(&mut block_means(samples, blocks));
    let mut rng = StreamRng::new(key);
    let mut draw = vec![0.0; n];
    let stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for d in draw.iter_mut() {
                *d = samples[(rng.next_u64() % n as u64) as usize];
            }
            median_in_place(&mut block_means(&draw, blocks))
        })
        .collect();
    let centre = stats.iter().sum::<f64>() / resamples as f64;
    let var = stats.iter().map(|s| (s - centre).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(Estimate {
        value,
        stderr: var.sqrt(),
    })
}

/// Sample mean and `sd / sqrt(n)`.
pub fn mean_stderr(samples: &[f64]) -> Result<Estimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Estimator(format!("need at least 2 samples, got {n}")));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(Estimate {
        value: mean,
        stderr: (var / n as f64).sqrt(),
    })
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::DimensionMismatch { expected: n, got: ys.len() });
    }
    if n < 3 {
        return Err(Error::Fit(format!("need >= 3 points, got {n}")));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 1e-12 * (1.0 + mx * mx)) {
        return Err(Error::Fit("degenerate abscissae: all x values equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_stderr = (ssr / (n - 2) as f64 / sxx).sqrt();
    let r2 = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        r2,
    })
}

/// One rung of a convergence ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub epsilon: f64,
    pub error: f64,
    pub stderr: f64,
}

/// Log-log fit of error against epsilon.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r2: f64,
    /// Indices of points used in the fit.
    pub used: Vec<usize>,
    /// Indices of points dropped because the error is below 3 standard errors.
    pub excluded: Vec<usize>,
}

impl RateFit {
    /// Fitted error at `epsilon`.
    pub fn predict(&self, epsilon: f64) -> f64 {
        (self.intercept + self.slope * epsilon.ln()).exp()
    }
}

/// OLS on `(ln epsilon, ln error)` over the points whose error is at least
/// three standard errors.
pub fn fit_loglog(points: &[RatePoint]) -> Result<RateFit> {
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !(p.epsilon > 0.0) {
            return Err(Error::Fit(format!("epsilon must be positive, got {}", p.epsilon)));
        }
        if p.error > 0.0 && p.error.is_finite() && p.error >= 3.0 * p.stderr {
            used.push(i);
        } else {
            excluded.push(i);
        }
    }
    if used.len() < 3 {
        return Err(Error::Fit(format!(
            "need >= 3 points above the noise floor, got {} of {}",
            used.len(),
            points.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|&i| points[i].epsilon.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|&i| points[i].error.ln()).collect();
    let f = linear_fit(&xs, &ys)?;
    Ok(RateFit {
        slope: f.slope,
        intercept: f.intercept,
        slope_stderr: f.slope_stderr,
        r2: f.r2,
        used,
        excluded,
    })
}
