//! Bias, variance and error metrics, the unbiased-baseline Monte Carlo and
//! the sample MSE decomposition.
//!
//! Per point `i` over `m` results: mean `μ_i`, sample std `s_i` (divisor
//! `m - 1`) and standard error `SE_i = s_i / √m`.
//!
//! * bias = median over points of `|μ_i - y_i| / SE_i`, points with `SE_i = 0` skipped
//! * variance = median `SE_i` (data units); `variance_std` = median `s_i`
//! * error = mean over results of Pearson r(result, truth)

use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Error, Result};
use crate::par::Executor;
use crate::rng::{substream, RngState};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub bias: f64,
    pub variance: f64,
    pub variance_std: f64,
    pub error: f64,
    pub skipped_points: usize,
    /// Results whose correlation with truth was undefined and counted as 0.
    pub degenerate_results: usize,
    pub points: usize,
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseDecomposition {
    pub mse: f64,
    pub bias_sq: f64,
    pub variance: f64,
}

/// Per-point mean, standard error and truth over the retained points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub index: Vec<usize>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub truth: Vec<f64>,
}

/// Median of a slice (mean of the middle pair for even lengths). Reorders `xs`.
pub fn median_in_place(xs: &mut [f64]) -> Option<f64> {
    let n = xs.len();
    if n == 0 {
        return None;
    }
    let mid = n / 2;
    let (lo, upper, _) = xs.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        Some(upper)
    } else {
        let lower = lo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(0.5 * (lower + upper))
    }
}

fn check_results(results: &[Tensor], truth: Option<&Tensor>) -> Result<()> {
    if results.len() < 2 {
        return Err(invalid_param!(
            "metrics need at least 2 results, got {}",
            results.len()
        ));
    }
    let dims = truth.map_or(results[0].dims(), |t| t.dims());
    if let Some(bad) = results.iter().find(|r| r.dims() != dims) {
        return Err(Error::Shape(format!(
            "result dims {:?} differ from {:?}",
            bad.dims(),
            dims
        )));
    }
    Ok(())
}

fn mean_and_std(results: &[Tensor], i: usize) -> (f64, f64) {
    let m = results.len() as f64;
    let mean = results.iter().map(|r| r.values()[i]).sum::<f64>() / m;
    let ss = results
        .iter()
        .map(|r| {
            let d = r.values()[i] - mean;
            d * d
        })
        .sum::<f64>();
    (mean, (ss / (m - 1.0)).sqrt())
}

/// Points used by the metrics: the truth's mask if present, else the first result's.
fn retained(results: &[Tensor], truth: Option<&Tensor>) -> Vec<usize> {
    match truth {
        Some(t) if t.mask().is_some() => t.selected_indices(),
        _ => results[0].selected_indices(),
    }
}

pub fn point_stats(results: &[Tensor], truth: &Tensor) -> Result<PointStats> {
    check_results(results, Some(truth))?;
    let index = retained(results, Some(truth));
    let sqrt_m = (results.len() as f64).sqrt();
    let mut stats = PointStats {
        mean: Vec::with_capacity(index.len()),
        se: Vec::with_capacity(index.len()),
        truth: Vec::with_capacity(index.len()),
        index,
    };
    for &i in &stats.index {
        let (mean, sd) = mean_and_std(results, i);
        stats.mean.push(mean);
        stats.se.push(sd / sqrt_m);
        stats.truth.push(truth.values()[i]);
    }
    Ok(stats)
}

/// Apparent bias and the number of points skipped for zero standard error.
pub fn bias_metric(results: &[Tensor], truth: &Tensor) -> Result<(f64, usize)> {
    let stats = point_stats(results, truth)?;
    bias_from_stats(&stats)
}

fn bias_from_stats(stats: &PointStats) -> Result<(f64, usize)> {
    let mut d: Vec<f64> = stats
        .mean
        .iter()
        .zip(&stats.se)
        .zip(&stats.truth)
        .filter(|((_, &se), _)| se > 0.0)
        .map(|((&mean, &se), &y)| (mean - y).abs() / se)
        .collect();
    let skipped = stats.se.len() - d.len();
    median_in_place(&mut d)
        .map(|v| (v, skipped))
        .ok_or_else(|| Error::UndefinedMetric("standard error is 0 at every point".into()))
}

/// Median standard error across points.
pub fn variance_metric(results: &[Tensor]) -> Result<f64> {
    check_results(results, None)?;
    let sqrt_m = (results.len() as f64).sqrt();
    let mut se: Vec<f64> = retained(results, None)
        .into_iter()
        .map(|i| mean_and_std(results, i).1 / sqrt_m)
        .collect();
    Ok(median_in_place(&mut se).unwrap_or(0.0))
}

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "correlation of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(invalid_param!("correlation needs at least 2 points"));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedMetric(
            "correlation with a constant input".into(),
        ));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Mean correlation between each result and truth over the retained points,
/// and the number of results whose correlation was undefined (counted as 0).
pub fn error_metric(results: &[Tensor], truth: &Tensor) -> Result<(f64, usize)> {
    check_results(results, Some(truth))?;
    let index = retained(results, Some(truth));
    let y: Vec<f64> = index.iter().map(|&i| truth.values()[i]).collect();
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::UndefinedMetric(
            "ground truth is constant over the retained points".into(),
        ));
    }
    let mut degenerate = 0;
    let mut total = 0.0;
    for r in results {
        let x: Vec<f64> = index.iter().map(|&i| r.values()[i]).collect();
        match pearson(&x, &y) {
            Ok(v) => total += v,
            Err(Error::UndefinedMetric(_)) => degenerate += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((total / results.len() as f64, degenerate))
}

/// All three metrics for one method.
pub fn summarize(results: &[Tensor], truth: &Tensor) -> Result<(MetricSummary, PointStats)> {
    let stats = point_stats(results, truth)?;
    let (bias, skipped_points) = bias_from_stats(&stats)?;
    let mut se = stats.se.clone();
    let variance = median_in_place(&mut se).unwrap_or(0.0);
    let sqrt_m = (results.len() as f64).sqrt();
    let mut sd: Vec<f64> = stats.se.iter().map(|s| s * sqrt_m).collect();
    let variance_std = median_in_place(&mut sd).unwrap_or(0.0);
    let (error, degenerate_results) = error_metric(results, truth)?;
    Ok((
        MetricSummary {
            bias,
            variance,
            variance_std,
            error,
            skipped_points,
            degenerate_results,
            points: stats.index.len(),
            m: results.len(),
        },
        stats,
    ))
}

/// Sample-moment split of the mean squared error around `truth`.
pub fn mse_decompose(samples: &[f64], truth: f64) -> Result<MseDecomposition> {
    if samples.len() < 2 {
        return Err(invalid_param!("decomposition needs at least 2 samples"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let mse = samples.iter().map(|x| (x - truth).powi(2)).sum::<f64>() / n;
    let variance = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Ok(MseDecomposition {
        mse,
        bias_sq: (mean - truth).powi(2),
        variance,
    })
}

/// Studentized deviation `|mean| / SE` of `m` standard-normal draws.
fn unbiased_point(rng: &mut RngState, m: usize, buf: &mut [f64]) -> f64 {
    rng.fill_standard_normal(&mut buf[..m]);
    let mf = m as f64;
    let mean = buf[..m].iter().sum::<f64>() / mf;
    let ss: f64 = buf[..m].iter().map(|x| (x - mean).powi(2)).sum();
    let se = (ss / (mf - 1.0)).sqrt() / mf.sqrt();
    mean.abs() / se
}

fn check_baseline_args(m: usize, draws: usize) -> Result<()> {
    if m < 2 {
        return Err(invalid_param!(
            "baseline needs at least 2 measurements, got {m}"
        ));
    }
    if draws < 10_000 {
        return Err(invalid_param!("baseline needs at least 10^4 draws, got {draws}"));
    }
    Ok(())
}

/// Expected apparent bias of an unbiased Gaussian process with `m` results,
/// from `draws` simulated points.
pub fn unbiased_baseline(m: usize, draws: usize, rng: &mut RngState) -> Result<f64> {
    check_baseline_args(m, draws)?;
    let mut buf = vec![0.0; m];
    let mut d: Vec<f64> = (0..draws)
        .map(|_| unbiased_point(rng, m, &mut buf))
        .collect();
    Ok(median_in_place(&mut d).expect("draws > 0"))
}

const BASELINE_CHUNK: usize = 1 << 14;

/// Chunked variant of [`unbiased_baseline`]: chunk `c` draws from
/// `substream(seed, c)`, so the value does not depend on the worker count.
pub fn unbiased_baseline_seeded(exec: &Executor, m: usize, draws: usize, seed: u64) -> Result<f64> {
    check_baseline_args(m, draws)?;
    let chunks = draws.div_ceil(BASELINE_CHUNK);
    let parts = exec.map(chunks, |c| {
        let mut rng = substream(seed, c as u64);
        let len = BASELINE_CHUNK.min(draws - c * BASELINE_CHUNK);
        let mut buf = vec![0.0; m];
        (0..len)
            .map(|_| unbiased_point(&mut rng, m, &mut buf))
            .collect::<Vec<f64>>()
    });
    let mut d: Vec<f64> = parts.concat();
    Ok(median_in_place(&mut d).expect("draws > 0"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;

    fn t(v: Vec<f64>) -> Tensor {
        Tensor::from_vec(v).unwrap()
    }

    #[test]
    fn median_odd_even() {
        assert_eq!(median_in_place(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median_in_place(&mut [4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median_in_place(&mut []), None);
    }

    #[test]
    fn symmetric_residuals_have_zero_bias() {
        let y = t(vec![1.0, 2.0, 5.0]);
        let r = vec![
            t(vec![2.0, 3.0, 6.0]),
            t(vec![0.0, 1.0, 4.0]),
        ];
        let (b, skipped) = bias_metric(&r, &y).unwrap();
        assert_eq!(b, 0.0);
        assert_eq!(skipped, 0);
    }

    #[test]
    fn zero_se_points_are_skipped() {
        let y = t(vec![0.0, 1.0, 2.0]);
        let r = vec![t(vec![0.0, 2.0, 2.5]), t(vec![0.0, 0.0, 1.5])];
        let (_, skipped) = bias_metric(&r, &y).unwrap();
        assert_eq!(skipped, 1);
        let r = vec![t(vec![0.0, 2.0, 2.5]), t(vec![0.0, 2.0, 2.5])];
        assert!(matches!(
            bias_metric(&r, &y),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn identical_results_have_zero_variance() {
        let r = vec![t(vec![1.0, 2.0]); 4];
        assert_eq!(variance_metric(&r).unwrap(), 0.0);
    }

    #[test]
    fn unbiased_gaussian_results() {
        let n = 100_000;
        let m = 10;
        let sigma = 2.0;
        let mut rng = make_rng(21);
        let truth = Tensor::zeros(vec![n]).unwrap();
        let results: Vec<Tensor> = (0..m)
            .map(|_| {
                let v = (0..n).map(|_| sigma * rng.standard_normal()).collect();
                t(v)
            })
            .collect();
        let (b, _) = bias_metric(&results, &truth).unwrap();
        assert!((b - 0.703).abs() < 0.01, "bias {b}");
        let v = variance_metric(&results).unwrap();
        // The median of s_i is sigma * sqrt(median(chi2_9) / 9), a little under sigma.
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let chi_med = ChiSquared::new((m - 1) as f64).unwrap().inverse_cdf(0.5);
        let expect = sigma * (chi_med / (m - 1) as f64).sqrt() / (m as f64).sqrt();
        assert!((v / expect - 1.0).abs() < 0.02, "variance {v} vs {expect}");
        assert!((v / (sigma / (m as f64).sqrt()) - 1.0).abs() < 0.05);
    }

    #[test]
    fn constant_offset_bias_grows_with_m() {
        let n = 20_000;
        let s = 1.0;
        let c = 0.5;
        let mut rng = make_rng(8);
        let truth = Tensor::zeros(vec![n]).unwrap();
        let bias_for = |m: usize, rng: &mut RngState| {
            let results: Vec<Tensor> = (0..m)
                .map(|_| t((0..n).map(|_| c + s * rng.standard_normal()).collect()))
                .collect();
            bias_metric(&results, &truth).unwrap().0
        };
        let b50 = bias_for(50, &mut rng);
        let b200 = bias_for(200, &mut rng);
        assert!(b200 > b50);
        assert!((b200 / (c * 200f64.sqrt() / s) - 1.0).abs() < 0.1, "{b200}");
    }

    #[test]
    fn pearson_cases() {
        let a = [1.0, 2.0, 3.0];
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x + 7.0).collect();
        assert!((pearson(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        // r = 3.5 / sqrt(2 * 14/3)
        let r = pearson(&a, &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.981_980_5).abs() < 1e-6);
        assert!(matches!(
            pearson(&a, &[1.0, 1.0, 1.0]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn error_metric_cases() {
        let y = t(vec![0.0, 1.0, 3.0, 2.0]);
        let same = vec![y.clone(), y.clone()];
        assert!((error_metric(&same, &y).unwrap().0 - 1.0).abs() < 1e-15);
        let neg = t(y.values().iter().map(|v| -v).collect());
        assert!((error_metric(&[neg.clone(), neg], &y).unwrap().0 + 1.0).abs() < 1e-15);
        let aff = t(y.values().iter().map(|v| 3.0 * v - 2.0).collect());
        assert!((error_metric(&[aff.clone(), aff], &y).unwrap().0 - 1.0).abs() < 1e-15);
        let flat = t(vec![5.0; 4]);
        let (e, bad) = error_metric(&[flat, y.clone()], &y).unwrap();
        assert_eq!(bad, 1);
        assert!((e - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mask_restricts_points() {
        let y = t(vec![0.0, 1.0, 2.0, 100.0])
            .with_mask(vec![true, true, true, false])
            .unwrap();
        let r1 = y.with_values(vec![0.1, 1.1, 2.1, -50.0]).unwrap();
        let r2 = y.with_values(vec![-0.1, 0.9, 1.9, 80.0]).unwrap();
        let (s, _) = summarize(&[r1, r2], &y).unwrap();
        assert_eq!(s.points, 3);
        assert_eq!(s.bias, 0.0);
        assert!((s.error - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decomposition_examples() {
        let d = mse_decompose(&[2.0, 2.0, 2.0], 2.0).unwrap();
        assert_eq!((d.mse, d.bias_sq, d.variance), (0.0, 0.0, 0.0));
        let d = mse_decompose(&[3.0, 5.0], 2.0).unwrap();
        assert_eq!((d.mse, d.bias_sq, d.variance), (5.0, 4.0, 1.0));
        assert!(mse_decompose(&[1.0], 0.0).is_err());
    }

    #[test]
    fn baseline_arguments_checked() {
        let mut rng = make_rng(1);
        assert!(unbiased_baseline(1, 10_000, &mut rng).is_err());
        assert!(unbiased_baseline(10, 100, &mut rng).is_err());
    }

    #[test]
    fn seeded_baseline_independent_of_workers() {
        let a = unbiased_baseline_seeded(&Executor::sequential(), 10, 50_000, 3).unwrap();
        let b = unbiased_baseline_seeded(&Executor::with_workers(4), 10, 50_000, 3).unwrap();
        assert_eq!(a, b);
    }
}
