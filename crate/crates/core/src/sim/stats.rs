//! Empirical pmfs and goodness-of-fit checks used to validate the analytic results.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analytic::Pmf;
use crate::error::{Error, Result};

pub fn empirical_pmf(samples: &[u64]) -> Result<Pmf> {
    let (&lo, &hi) = match (samples.iter().min(), samples.iter().max()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(Error::EmptySamples),
    };
    let mut counts = vec![0u64; (hi - lo + 1) as usize];
    for &s in samples {
        counts[(s - lo) as usize] += 1;
    }
    let n = samples.len() as f64;
    Ok(Pmf::new(lo, counts.into_iter().map(|c| c as f64 / n).collect(), 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    /// ½ Σ |p − q| with both tails counted as disagreement.
    pub tv_distance: f64,
    /// Largest gap between the two cdfs.
    pub ks_statistic: f64,
    pub mean_gap: f64,
}

pub fn compare(analytic: &Pmf, empirical: &Pmf) -> Comparison {
    let lo = analytic.min_support.min(empirical.min_support);
    let hi = analytic.max_support().max(empirical.max_support());
    let (mut abs_sum, mut ca, mut cb, mut ks) = (0.0, 0.0, 0.0, 0.0f64);
    for k in lo..=hi {
        let (a, b) = (analytic.prob(k), empirical.prob(k));
        abs_sum += (a - b).abs();
        ca += a;
        cb += b;
        ks = ks.max((ca - cb).abs());
    }
    Comparison {
        tv_distance: 0.5 * (abs_sum + analytic.tail_mass + empirical.tail_mass),
        ks_statistic: ks,
        mean_gap: (analytic.mean - empirical.mean).abs(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample Kolmogorov–Smirnov test against a continuous cdf, with the
/// asymptotic p-value and Stephens' small-sample correction.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsTest> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    Ok(KsTest {
        statistic: d,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d),
        n: xs.len(),
    })
}

/// P{K > x} for the Kolmogorov distribution.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // the alternating series converges slowly here; use the theta-function form
        let c = std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let s: f64 = (1..=20)
            .map(|j| {
                let k = (2 * j - 1) as f64;
                (-k * k * c).exp()
            })
            .sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s).clamp(0.0, 1.0);
    }
    let s: f64 = (1..=100)
        .map(|j| {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * (j * j) as f64 * x * x).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Pearson chi-square test of counts against Geometric(p_suc) on {0, 1, …},
/// pooling adjacent values until every bin expects at least 5 observations.
pub fn chi_square_geometric(samples: &[u64], p_suc: f64) -> Result<ChiSquareTest> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = samples.len() as f64;
    let max = *samples.iter().max().unwrap() as usize;
    let mut observed = vec![0u64; max + 1];
    for &s in samples {
        observed[s as usize] += 1;
    }
    let q = 1.0 - p_suc;
    // (observed, expected) per bin; the last bin is open-ended
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    let mut m = 0usize;
    loop {
        let tail_expected = n * q.powi(m as i32);
        let e_m = n * p_suc * q.powi(m as i32);
        if tail_expected - e_m < 5.0 || e_m == 0.0 {
            let tail_observed: u64 = observed.iter().skip(m).sum();
            bins.push((o_acc + tail_observed as f64, e_acc + tail_expected));
            break;
        }
        o_acc += observed.get(m).copied().unwrap_or(0) as f64;
        e_acc += e_m;
        if e_acc >= 5.0 {
            bins.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
        m += 1;
    }
    if bins.len() < 2 {
        return Ok(ChiSquareTest {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
            bins: bins.len(),
        });
    }
    let statistic: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = bins.len() - 1;
    let p_value = ChiSquared::new(dof as f64).map(|d| d.sf(statistic)).unwrap_or(f64::NAN);
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value,
        bins: bins.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_examples() {
        let p = empirical_pmf(&[1, 1, 1]).unwrap();
        assert_eq!((p.min_support, p.probs.clone()), (1, vec![1.0]));
        let p = empirical_pmf(&[2, 3, 3, 4]).unwrap();
        assert_eq!(p.probs, vec![0.25, 0.5, 0.25]);
        assert_eq!(p.min_support, 2);
        assert!(matches!(empirical_pmf(&[]), Err(Error::EmptySamples)));
    }

    #[test]
    fn compare_extremes() {
        let a = Pmf::new(1, vec![1.0], 0.0);
        let b = Pmf::new(2, vec![1.0], 0.0);
        let c = compare(&a, &b);
        assert_eq!((c.tv_distance, c.ks_statistic, c.mean_gap), (1.0, 1.0, 1.0));
        let same = compare(&a, &a);
        assert_eq!((same.tv_distance, same.ks_statistic, same.mean_gap), (0.0, 0.0, 0.0));
    }

    #[test]
    fn kolmogorov_reference_points() {
        // critical values of the limiting distribution
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_sf(0.5) - 0.9639).abs() < 1e-4);
        assert!((kolmogorov_sf(0.99999) - kolmogorov_sf(1.00001)).abs() < 1e-4);
    }

    #[test]
    fn uniform_samples_pass_ks() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let t = ks_one_sample(&xs, |x| x).unwrap();
        assert!(t.statistic <= 0.0005 + 1e-12);
        assert!(t.p_value > 0.99);
    }

    #[test]
    fn exact_geometric_counts_pass() {
        let p = 0.4;
        let mut xs = Vec::new();
        for m in 0..40u64 {
            let count = (100_000.0 * p * (1.0 - p as f64).powi(m as i32)).round() as usize;
            xs.extend(std::iter::repeat_n(m, count));
        }
        let t = chi_square_geometric(&xs, p).unwrap();
        assert!(t.p_value > 0.99, "{t:?}");
        let wrong = chi_square_geometric(&xs, 0.3).unwrap();
        assert!(wrong.p_value < 1e-6);
    }
}
