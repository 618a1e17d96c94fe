//! Distances between empirical and limiting laws, and scans over the scale
//! `n` that track convergence toward local equilibrium and toward the
//! hydrodynamic limit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::analytics::{self, cdf_f, intensity_with_kernel, macro_site, rho, rho_functional, AnalyticsError};
use crate::ensemble::{
    empirical_functional, CountHistogram, EnsembleError, Experiment, MonteCarloEstimate, RandomSource,
};
use crate::profile::Profile;
use crate::walk::PositionDistribution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("negative or non-finite mass {value} at index {index}")]
    InvalidMass { index: usize, value: f64 },
    #[error("first pmf must sum to 1, got {0}")]
    NotNormalized(f64),
    #[error("second pmf sums to {0}, more than 1")]
    ExcessMass(f64),
    #[error("a scan needs at least two increasing scale points, got {0:?}")]
    BadScaleList(Vec<u64>),
    #[error("replica count must be positive")]
    NoReplicas,
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

/// Discarded Poisson tail mass.
pub const POISSON_TAIL: f64 = 1e-12;

/// Default pass threshold of [`poisson_fit`] (calibrated for 10⁵ replicas).
pub const DEFAULT_POISSON_TV: f64 = 0.01;

const SUM_TOL: f64 = 1e-9;

fn check_masses(p: &[f64]) -> Result<f64, StatsError> {
    let mut sum = 0.0;
    for (index, &value) in p.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(StatsError::InvalidMass { index, value });
        }
        sum += value;
    }
    Ok(sum)
}

/// Total variation distance between pmfs on `{0, 1, 2, …}`.
///
/// `p` must be normalized. `q` may be a truncation of an infinite law; its
/// missing mass `1 − Σq` is counted as lying where `p` has none.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64, StatsError> {
    let sp = check_masses(p)?;
    let sq = check_masses(q)?;
    if (sp - 1.0).abs() > SUM_TOL {
        return Err(StatsError::NotNormalized(sp));
    }
    if sq > 1.0 + SUM_TOL {
        return Err(StatsError::ExcessMass(sq));
    }
    let len = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let diff: f64 = (0..len).map(|i| (at(p, i) - at(q, i)).abs()).sum();
    let tail = (1.0 - sq).max(0.0);
    Ok((0.5 * (diff + tail)).min(1.0))
}

/// Poisson(`mean`) pmf on `0..=K`, with `K` the first index past the mean at
/// which the remaining tail is below `tail`.
pub fn poisson_pmf(mean: f64, tail: f64) -> Vec<f64> {
    assert!(mean.is_finite() && (0.0..700.0).contains(&mean), "mean out of range: {mean}");
    let mut p = (-mean).exp();
    let mut out = vec![p];
    let mut cum = p;
    let mut k = 0u64;
    while (k as f64) < mean || 1.0 - cum >= tail {
        k += 1;
        p *= mean / k as f64;
        if p == 0.0 {
            break;
        }
        out.push(p);
        cum += p;
    }
    out
}

/// Result of comparing a count histogram with a Poisson law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonFit {
    pub tv: f64,
    pub pass: bool,
}

/// TV distance between the histogram and Poisson(`mean`); passes when it is
/// at most `threshold`.
pub fn poisson_fit(histogram: &CountHistogram, mean: f64, threshold: f64) -> Result<PoissonFit, StatsError> {
    if histogram.replicas() == 0 {
        return Err(StatsError::NoReplicas);
    }
    let tv = tv_distance(&histogram.pmf(), &poisson_pmf(mean, POISSON_TAIL))?;
    Ok(PoissonFit {
        tv,
        pass: tv <= threshold,
    })
}

/// Expected TV between Poisson(`mean`) and the empirical pmf of `replicas`
/// exact draws, in the normal approximation `½ Σ_k √(2 q_k(1 − q_k) / (π R))`.
pub fn tv_noise_scale(mean: f64, replicas: u64) -> f64 {
    let r = replicas as f64;
    poisson_pmf(mean, POISSON_TAIL)
        .iter()
        .map(|q| (2.0 * q * (1.0 - q) / (std::f64::consts::PI * r)).sqrt())
        .sum::<f64>()
        * 0.5
}

/// Kolmogorov–Smirnov distance between the law of `X_n / n` given by `dist`
/// and the limit CDF `F`. The supremum sits at an atom of `dist`, so both
/// one-sided limits are checked there.
pub fn ks_distance_to_limit(dist: &PositionDistribution, n: u64) -> f64 {
    let scale = n.max(1) as f64;
    let mut below = 0.0;
    let mut sup: f64 = 0.0;
    for (site, p) in dist.iter() {
        if p == 0.0 {
            continue;
        }
        let limit = cdf_f(site as f64 / scale);
        let above = below + p;
        sup = sup.max((below - limit).abs()).max((above - limit).abs());
        below = above;
    }
    sup
}

/// Metric values along a list of scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub metric_name: String,
    pub scale_points: Vec<u64>,
    pub metric_values: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// Extra per-scale columns, written after `n, metric, stderr`.
    pub aux: BTreeMap<String, Vec<f64>>,
    pub monotone_trend: bool,
}

impl ConvergenceReport {
    pub fn new(
        metric_name: impl Into<String>,
        scale_points: Vec<u64>,
        metric_values: Vec<f64>,
        stderrs: Vec<f64>,
    ) -> Self {
        assert!(scale_points.len() >= 2, "reports need at least two scale points");
        assert_eq!(scale_points.len(), metric_values.len());
        assert_eq!(scale_points.len(), stderrs.len());
        let monotone_trend = trends_down(&metric_values);
        ConvergenceReport {
            metric_name: metric_name.into(),
            scale_points,
            metric_values,
            stderrs,
            aux: BTreeMap::new(),
            monotone_trend,
        }
    }

    pub fn with_aux(mut self, name: &str, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.scale_points.len());
        self.aux.insert(name.to_string(), values);
        self
    }

    pub fn first(&self) -> f64 {
        self.metric_values[0]
    }

    pub fn last(&self) -> f64 {
        *self.metric_values.last().expect("nonempty")
    }

    /// Strictly decreasing at every step, a stronger verdict than the trend.
    pub fn strictly_decreasing(&self) -> bool {
        self.metric_values.windows(2).all(|w| w[1] < w[0])
    }

    /// `n,metric,stderr[,aux…]` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,metric,stderr");
        for name in self.aux.keys() {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for i in 0..self.scale_points.len() {
            let _ = write!(out, "{},{:?},{:?}", self.scale_points[i], self.metric_values[i], self.stderrs[i]);
            for col in self.aux.values() {
                let _ = write!(out, ",{:?}", col[i]);
            }
            out.push('\n');
        }
        out
    }

    pub fn verdict_json(&self) -> serde_json::Value {
        json!({
            "metric": self.metric_name,
            "monotone_trend": self.monotone_trend,
            "strictly_decreasing": self.strictly_decreasing(),
            "first": self.first(),
            "last": self.last(),
        })
    }
}

/// Downward trend: the last value is below the first, or has reached zero.
pub fn trends_down(values: &[f64]) -> bool {
    match (values.first(), values.last()) {
        (Some(first), Some(last)) => last < first || *last == 0.0,
        _ => false,
    }
}

fn check_scan_inputs(n_list: &[u64], replicas: u64) -> Result<(), StatsError> {
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[1] <= w[0]) || n_list[0] == 0 {
        return Err(StatsError::BadScaleList(n_list.to_vec()));
    }
    if replicas == 0 {
        return Err(StatsError::NoReplicas);
    }
    Ok(())
}

/// Streams for scan entry `index` are disjoint from every other entry's.
fn scan_source(source: RandomSource, index: usize) -> RandomSource {
    RandomSource::new(source.seed, source.stream_id.wrapping_add((index as u64) << 40))
}

/// For each `n`, the TV distance between the empirical law of
/// `η_{⌊tn⌋}(⌊xn⌋)` over `replicas` replicas and Poisson(`ρ(t, x)`).
///
/// Aux columns: the exact intensity `B`, the limit `ρ`, the TV to
/// Poisson(`B`), and the TV between the two Poisson laws.
pub fn local_equilibrium_scan(
    profile: &Profile,
    t: f64,
    x: f64,
    n_list: &[u64],
    replicas: u64,
    source: RandomSource,
) -> Result<ConvergenceReport, StatsError> {
    check_scan_inputs(n_list, replicas)?;
    let limit = rho(profile, t, x)?;
    let limit_pmf = poisson_pmf(limit, POISSON_TAIL);
    let mut metric = Vec::new();
    let mut noise = Vec::new();
    let (mut b_col, mut tv_b, mut tv_gap) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &n) in n_list.iter().enumerate() {
        let experiment = Experiment::new(profile, n, t)?;
        let site = macro_site(x, n);
        let counts = experiment.replicate(replicas, scan_source(source, i), |f| f.get(site));
        let hist = CountHistogram::from_samples(counts);
        let pmf = hist.pmf();
        let b = intensity_with_kernel(profile, n, &experiment.positions().averaged_kernel(), site);
        let b_pmf = poisson_pmf(b, POISSON_TAIL);
        metric.push(tv_distance(&pmf, &limit_pmf)?);
        noise.push(tv_noise_scale(limit, replicas));
        b_col.push(b);
        tv_b.push(tv_distance(&pmf, &b_pmf)?);
        tv_gap.push(tv_distance(&b_pmf, &limit_pmf)?);
    }
    let len = n_list.len();
    Ok(ConvergenceReport::new("tv_to_poisson_rho", n_list.to_vec(), metric, noise)
        .with_aux("intensity_b", b_col)
        .with_aux("rho", vec![limit; len])
        .with_aux("tv_to_poisson_b", tv_b)
        .with_aux("tv_poisson_b_rho", tv_gap))
}

/// Exact variance `(1/n²) Σ_k H(k/n)² B(k, steps)` of the empirical functional.
pub fn exact_functional_variance(experiment: &Experiment, test_fn: &Profile) -> f64 {
    let n = experiment.scale();
    let kernel = experiment.positions().averaged_kernel();
    let sum: f64 = analytics::profile_sites(test_fn, n)
        .map(|k| {
            let h = test_fn.eval(k as f64 / n as f64);
            if h == 0.0 {
                0.0
            } else {
                h * h * intensity_with_kernel(experiment.profile(), n, &kernel, k)
            }
        })
        .sum();
    sum / (n as f64 * n as f64)
}

/// For each `n`, `|mean of (1/n)ΣH(k/n)η(k)| − ∫Hρ(t,·)|` over `replicas`.
///
/// Aux columns: replica mean, target, replica standard deviation, the exact
/// standard deviation from the Poisson variance identity, and the relative
/// error.
pub fn hydro_scan(
    profile: &Profile,
    test_fn: &Profile,
    t: f64,
    n_list: &[u64],
    replicas: u64,
    source: RandomSource,
) -> Result<ConvergenceReport, StatsError> {
    check_scan_inputs(n_list, replicas)?;
    let target = rho_functional(profile, test_fn, t)?;
    let mut errors = Vec::new();
    let mut stderrs = Vec::new();
    let (mut means, mut sds, mut exact_sds, mut rel) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, &n) in n_list.iter().enumerate() {
        let experiment = Experiment::new(profile, n, t)?;
        let samples = experiment.replicate(replicas, scan_source(source, i), |f| empirical_functional(f, test_fn));
        let est = MonteCarloEstimate::from_samples(&samples);
        let err = (est.mean - target).abs();
        errors.push(err);
        stderrs.push(est.std_err);
        means.push(est.mean);
        sds.push(est.std_dev);
        exact_sds.push(exact_functional_variance(&experiment, test_fn).sqrt());
        rel.push(if target != 0.0 { err / target.abs() } else { err });
    }
    let len = n_list.len();
    Ok(ConvergenceReport::new("abs_error_functional", n_list.to_vec(), errors, stderrs)
        .with_aux("mean", means)
        .with_aux("target", vec![target; len])
        .with_aux("replica_sd", sds)
        .with_aux("exact_sd", exact_sds)
        .with_aux("relative_error", rel))
}
