//! Systems of independent walkers started from a Poisson field.
//!
//! At scale `n` every basis state `e_k ⊗ |±1⟩` receives an independent
//! Poisson(`½γ(k/n)`) number of walkers. Each walker then evolves on its own
//! and is measured once, and the occupation field `η(j)` counts the walkers
//! seen at site `j`.
//!
//! Walker positions are drawn by inverting a cumulative table of the exact
//! kernel `p_steps(0, ·)` (one table per coin) and shifting by the start
//! site, which is valid because the walk is translation covariant.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{ballistic_steps, profile_sites, AnalyticsError};
use crate::profile::Profile;
use crate::walk::{chirality_kernel, average_kernels, CoinTag, PositionDistribution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("scale n must be at least 1")]
    ZeroScale,
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("Laplace exponent must be finite and nonnegative, got {value} at site {site}")]
    InvalidExponent { site: i64, value: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Seed plus stream selector for a ChaCha8 generator. Distinct stream ids
/// under one seed give independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RandomSource { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Source for replica `index` of an experiment seeded with `self.seed`.
    pub fn replica(&self, index: u64) -> RandomSource {
        RandomSource {
            seed: self.seed,
            stream_id: self.stream_id.wrapping_add(index),
        }
    }
}

/// Below this mean Poisson variates are drawn by sequential inversion.
pub const POISSON_INVERSION_LIMIT: f64 = 30.0;

/// Poisson sampler with the `e^{−mean}` factor precomputed.
#[derive(Debug, Clone, Copy)]
pub struct PoissonSampler {
    mean: f64,
    exp_neg_mean: f64,
}

impl PoissonSampler {
    pub fn new(mean: f64) -> Self {
        assert!(mean.is_finite() && mean >= 0.0, "Poisson mean must be finite and nonnegative");
        PoissonSampler {
            mean,
            exp_neg_mean: (-mean).exp(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.mean == 0.0 {
            return 0;
        }
        if self.mean < POISSON_INVERSION_LIMIT {
            let mut u: f64 = rng.random();
            let mut k = 0u64;
            let mut p = self.exp_neg_mean;
            while u >= p {
                u -= p;
                k += 1;
                p *= self.mean / k as f64;
                if p == 0.0 {
                    break;
                }
            }
            k
        } else {
            let d = rand_distr::Poisson::new(self.mean).expect("mean checked in constructor");
            d.sample(rng) as u64
        }
    }
}

/// Initial configuration: number of walkers per localized state `(site, coin)`.
/// Only nonzero entries are stored, sorted by `(site, coin)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldConfiguration {
    entries: Vec<((i64, CoinTag), u64)>,
}

impl FieldConfiguration {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `count` walkers at `(site, coin)`.
    pub fn add(&mut self, site: i64, coin: CoinTag, count: u64) {
        if count == 0 {
            return;
        }
        let key = (site, coin);
        match self.entries.binary_search_by(|(k, _)| k.cmp(&key)) {
            Ok(i) => self.entries[i].1 += count,
            Err(i) => self.entries.insert(i, (key, count)),
        }
    }

    /// Appends an entry known to sort after every existing key.
    fn push_sorted(&mut self, site: i64, coin: CoinTag, count: u64) {
        debug_assert!(self.entries.last().is_none_or(|(k, _)| *k < (site, coin)));
        if count > 0 {
            self.entries.push(((site, coin), count));
        }
    }

    pub fn get(&self, site: i64, coin: CoinTag) -> u64 {
        let key = (site, coin);
        self.entries
            .binary_search_by(|(k, _)| k.cmp(&key))
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, CoinTag, u64)> + '_ {
        self.entries.iter().map(|&((s, c), n)| (s, c, n))
    }

    pub fn total_walkers(&self) -> u64 {
        self.entries.iter().map(|(_, n)| n).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Smallest and largest occupied start site.
    pub fn site_range(&self) -> Option<(i64, i64)> {
        Some((self.entries.first()?.0 .0, self.entries.last()?.0 .0))
    }
}

/// One measured occupation field `η`, stored densely over a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupationField {
    offset: i64,
    counts: Vec<u64>,
    time_steps: u64,
    scale_n: u64,
}

impl OccupationField {
    pub fn empty(time_steps: u64, scale_n: u64) -> Self {
        OccupationField {
            offset: 0,
            counts: Vec::new(),
            time_steps,
            scale_n,
        }
    }

    fn with_window(lo: i64, hi: i64, time_steps: u64, scale_n: u64) -> Self {
        OccupationField {
            offset: lo,
            counts: vec![0; (hi - lo + 1) as usize],
            time_steps,
            scale_n,
        }
    }

    /// Builds a field from `(site, count)` pairs. Repeated sites accumulate.
    pub fn from_counts(pairs: impl IntoIterator<Item = (i64, u64)>, time_steps: u64, scale_n: u64) -> Self {
        let pairs: Vec<(i64, u64)> = pairs.into_iter().filter(|(_, c)| *c > 0).collect();
        let (Some(lo), Some(hi)) = (
            pairs.iter().map(|p| p.0).min(),
            pairs.iter().map(|p| p.0).max(),
        ) else {
            return OccupationField::empty(time_steps, scale_n);
        };
        let mut field = OccupationField::with_window(lo, hi, time_steps, scale_n);
        for (s, c) in pairs {
            field.counts[(s - lo) as usize] += c;
        }
        field
    }

    pub fn time_steps(&self) -> u64 {
        self.time_steps
    }

    pub fn scale_n(&self) -> u64 {
        self.scale_n
    }

    pub fn get(&self, site: i64) -> u64 {
        let idx = site - self.offset;
        if idx < 0 || idx as usize >= self.counts.len() {
            0
        } else {
            self.counts[idx as usize]
        }
    }

    /// Occupied sites in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(move |(i, &c)| (self.offset + i as i64, c))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Smallest and largest occupied site.
    pub fn support(&self) -> Option<(i64, i64)> {
        let mut it = self.iter();
        let first = it.next()?.0;
        let last = it.last().map_or(first, |(s, _)| s);
        Some((first, last))
    }

    /// `site count` table preceded by `#` metadata lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# time_steps {}", self.time_steps);
        let _ = writeln!(out, "# scale_n {}", self.scale_n);
        for (s, c) in self.iter() {
            let _ = writeln!(out, "{s} {c}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, EnsembleError> {
        let mut batch = parse_fields(text, false)?;
        Ok(batch.pop().unwrap_or_else(|| OccupationField::empty(0, 1)))
    }
}

/// Concatenates fields, each introduced by a `# replica <i>` header.
pub fn write_field_batch(fields: &[OccupationField]) -> String {
    let mut out = String::new();
    for (i, f) in fields.iter().enumerate() {
        let _ = writeln!(out, "# replica {i}");
        out.push_str(&f.to_text());
    }
    out
}

pub fn parse_field_batch(text: &str) -> Result<Vec<OccupationField>, EnsembleError> {
    parse_fields(text, true)
}

fn parse_fields(text: &str, batch: bool) -> Result<Vec<OccupationField>, EnsembleError> {
    struct Pending {
        pairs: Vec<(i64, u64)>,
        steps: u64,
        scale: u64,
    }
    let fresh = || Pending {
        pairs: Vec::new(),
        steps: 0,
        scale: 1,
    };
    let finish = |p: Pending| OccupationField::from_counts(p.pairs, p.steps, p.scale);

    let mut out = Vec::new();
    let mut current: Option<Pending> = if batch { None } else { Some(fresh()) };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| EnsembleError::Parse { line, message };
        if let Some(meta) = content.strip_prefix('#') {
            let mut parts = meta.split_whitespace();
            let key = parts.next();
            let value = parts.next();
            let num = |v: Option<&str>| -> Result<u64, EnsembleError> {
                v.ok_or_else(|| err("missing value".into()))?
                    .parse::<u64>()
                    .map_err(|e| err(e.to_string()))
            };
            match key {
                Some("replica") if batch => {
                    if let Some(p) = current.take() {
                        out.push(finish(p));
                    }
                    current = Some(fresh());
                }
                Some("time_steps") => {
                    let v = num(value)?;
                    current.as_mut().ok_or_else(|| err("metadata before replica header".into()))?.steps = v;
                }
                Some("scale_n") => {
                    let v = num(value)?;
                    if v == 0 {
                        return Err(err("scale_n must be positive".into()));
                    }
                    current.as_mut().ok_or_else(|| err("metadata before replica header".into()))?.scale = v;
                }
                _ => {}
            }
            continue;
        }
        let mut fields = content.split_whitespace();
        let site = fields
            .next()
            .ok_or_else(|| err("missing site".into()))?
            .parse::<i64>()
            .map_err(|e| err(format!("bad site: {e}")))?;
        let count = fields
            .next()
            .ok_or_else(|| err("missing count".into()))?
            .parse::<u64>()
            .map_err(|e| err(format!("bad count: {e}")))?;
        if fields.next().is_some() {
            return Err(err("unexpected trailing field".into()));
        }
        current
            .as_mut()
            .ok_or_else(|| err("data before replica header".into()))?
            .pairs
            .push((site, count));
    }
    if let Some(p) = current.take() {
        out.push(finish(p));
    }
    Ok(out)
}

/// Precomputed Poisson means `½γ(k/n)` for every start site at scale `n`.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    n: u64,
    sites: Vec<(i64, PoissonSampler)>,
}

impl FieldSampler {
    pub fn new(profile: &Profile, n: u64) -> Result<Self, EnsembleError> {
        if n == 0 {
            return Err(EnsembleError::ZeroScale);
        }
        let sites = profile_sites(profile, n)
            .filter_map(|k| {
                let g = profile.eval(k as f64 / n as f64);
                (g > 0.0).then(|| (k, PoissonSampler::new(0.5 * g)))
            })
            .collect();
        Ok(FieldSampler { n, sites })
    }

    pub fn scale(&self) -> u64 {
        self.n
    }

    /// Expected total number of walkers, `Σ_k γ(k/n)`.
    pub fn expected_walkers(&self) -> f64 {
        self.sites.iter().map(|(_, p)| 2.0 * p.mean()).sum()
    }

    /// Draws one configuration. Sites in increasing order, `|+1⟩` before `|−1⟩`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldConfiguration {
        let mut config = FieldConfiguration::new();
        for &(k, sampler) in &self.sites {
            for coin in CoinTag::ALL {
                let count = sampler.sample(rng);
                config.push_sorted(k, coin, count);
            }
        }
        config
    }
}

/// Draws a configuration from the Poisson product measure at scale `n`.
pub fn sample_field(profile: &Profile, n: u64, source: RandomSource) -> Result<FieldConfiguration, EnsembleError> {
    Ok(FieldSampler::new(profile, n)?.sample(&mut source.rng()))
}

/// Cumulative kernel tables `p_steps(0, ·)` for both coins.
#[derive(Debug, Clone)]
pub struct PositionSampler {
    steps: u64,
    plus: CdfTable,
    minus: CdfTable,
}

#[derive(Debug, Clone)]
struct CdfTable {
    offset: i64,
    cdf: Vec<f64>,
    pmf: PositionDistribution,
    /// Last index with positive mass; inversion never returns past it.
    last_positive: usize,
}

impl CdfTable {
    fn new(pmf: PositionDistribution) -> Self {
        let mut acc = 0.0;
        let cdf: Vec<f64> = pmf
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let last_positive = pmf.probs().iter().rposition(|p| *p > 0.0).unwrap_or(0);
        CdfTable {
            offset: pmf.offset(),
            cdf,
            pmf,
            last_positive,
        }
    }

    /// Displacement for a uniform `u ∈ [0, 1)`.
    fn invert(&self, u: f64) -> i64 {
        let idx = self.cdf.partition_point(|&c| c <= u).min(self.last_positive);
        self.offset + idx as i64
    }
}

impl PositionSampler {
    pub fn new(steps: u64) -> Self {
        PositionSampler {
            steps,
            plus: CdfTable::new(chirality_kernel(CoinTag::Plus, steps)),
            minus: CdfTable::new(chirality_kernel(CoinTag::Minus, steps)),
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn kernel(&self, coin: CoinTag) -> &PositionDistribution {
        &self.table(coin).pmf
    }

    /// The equal-weight mixture of the two chirality kernels.
    pub fn averaged_kernel(&self) -> PositionDistribution {
        average_kernels(&self.plus.pmf, &self.minus.pmf)
    }

    fn table(&self, coin: CoinTag) -> &CdfTable {
        match coin {
            CoinTag::Plus => &self.plus,
            CoinTag::Minus => &self.minus,
        }
    }

    /// Position of one walker started at `(site, coin)` after `steps` steps.
    pub fn sample<R: Rng + ?Sized>(&self, site: i64, coin: CoinTag, rng: &mut R) -> i64 {
        site + self.table(coin).invert(rng.random())
    }

    /// Measures every walker of `config` once.
    pub fn measure<R: Rng + ?Sized>(&self, config: &FieldConfiguration, scale_n: u64, rng: &mut R) -> OccupationField {
        let Some((lo, hi)) = config.site_range() else {
            return OccupationField::empty(self.steps, scale_n);
        };
        let reach = self.steps as i64;
        let mut field = OccupationField::with_window(lo - reach, hi + reach, self.steps, scale_n);
        for (site, coin, count) in config.iter() {
            let table = self.table(coin);
            for _ in 0..count {
                let j = site + table.invert(rng.random());
                field.counts[(j - field.offset) as usize] += 1;
            }
        }
        field
    }
}

/// Measures all walkers of `config` after `steps` steps. `scale_n` is
/// recorded on the field for later rescaling.
pub fn measure_field(
    config: &FieldConfiguration,
    steps: u64,
    scale_n: u64,
    source: RandomSource,
) -> OccupationField {
    PositionSampler::new(steps).measure(config, scale_n, &mut source.rng())
}

/// `(1/n) Σ_k H(k/n) η(k)` with `n = field.scale_n()`.
pub fn empirical_functional(field: &OccupationField, test_fn: &Profile) -> f64 {
    let n = field.scale_n as f64;
    let sum: f64 = field
        .iter()
        .map(|(k, c)| test_fn.eval(k as f64 / n) * c as f64)
        .sum();
    sum / n
}

/// Everything needed to draw replicas of `η_{⌊tn⌋}` at one scale.
#[derive(Debug, Clone)]
pub struct Experiment {
    profile: Profile,
    n: u64,
    t: f64,
    fields: FieldSampler,
    positions: PositionSampler,
}

impl Experiment {
    pub fn new(profile: &Profile, n: u64, t: f64) -> Result<Self, EnsembleError> {
        if n == 0 {
            return Err(EnsembleError::ZeroScale);
        }
        let steps = ballistic_steps(n, t)?;
        Ok(Experiment {
            profile: profile.clone(),
            n,
            t,
            fields: FieldSampler::new(profile, n)?,
            positions: PositionSampler::new(steps),
        })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn scale(&self) -> u64 {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> u64 {
        self.positions.steps
    }

    pub fn positions(&self) -> &PositionSampler {
        &self.positions
    }

    pub fn field_sampler(&self) -> &FieldSampler {
        &self.fields
    }

    /// One replica: a fresh initial configuration, then one measurement of
    /// every walker, all drawn from the single stream of `source`.
    pub fn run_replica(&self, source: RandomSource) -> OccupationField {
        let mut rng = source.rng();
        let config = self.fields.sample(&mut rng);
        self.positions.measure(&config, self.n, &mut rng)
    }

    /// Runs `replicas` independent replicas (replica `i` uses stream
    /// `source.stream_id + i`) and maps each field through `f`. Output order
    /// follows the replica index, independent of thread scheduling.
    pub fn replicate<T, F>(&self, replicas: u64, source: RandomSource, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&OccupationField) -> T + Sync,
    {
        (0..replicas)
            .into_par_iter()
            .map(|i| f(&self.run_replica(source.replica(i))))
            .collect()
    }
}

/// Empirical law of a nonnegative integer count across replicas.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountHistogram {
    /// `frequencies[v]` is the number of replicas with count `v`.
    frequencies: Vec<u64>,
    replicas: u64,
}

impl CountHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples(samples: impl IntoIterator<Item = u64>) -> Self {
        let mut h = CountHistogram::new();
        for s in samples {
            h.add(s);
        }
        h
    }

    pub fn add(&mut self, value: u64) {
        let v = value as usize;
        if v >= self.frequencies.len() {
            self.frequencies.resize(v + 1, 0);
        }
        self.frequencies[v] += 1;
        self.replicas += 1;
    }

    pub fn merge(&mut self, other: &CountHistogram) {
        if other.frequencies.len() > self.frequencies.len() {
            self.frequencies.resize(other.frequencies.len(), 0);
        }
        for (a, b) in self.frequencies.iter_mut().zip(&other.frequencies) {
            *a += b;
        }
        self.replicas += other.replicas;
    }

    pub fn replicas(&self) -> u64 {
        self.replicas
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.frequencies
    }

    /// Relative frequencies; empty when no replicas were added.
    pub fn pmf(&self) -> Vec<f64> {
        if self.replicas == 0 {
            return Vec::new();
        }
        let r = self.replicas as f64;
        self.frequencies.iter().map(|&c| c as f64 / r).collect()
    }

    pub fn mean(&self) -> f64 {
        if self.replicas == 0 {
            return 0.0;
        }
        let s: u64 = self
            .frequencies
            .iter()
            .enumerate()
            .map(|(v, &c)| v as u64 * c)
            .sum();
        s as f64 / self.replicas as f64
    }
}

/// Histograms of `η(center + o)` for `o ∈ [−half_width, half_width]`.
pub fn window_histogram(
    fields: &[OccupationField],
    center_site: i64,
    half_width: u64,
) -> BTreeMap<i64, CountHistogram> {
    let hw = half_width as i64;
    let mut out: BTreeMap<i64, CountHistogram> = (-hw..=hw).map(|o| (o, CountHistogram::new())).collect();
    for field in fields {
        for (o, h) in out.iter_mut() {
            h.add(field.get(center_site + o));
        }
    }
    out
}

/// Finitely supported nonnegative exponent `λ` of the Laplace functional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LaplaceExponent {
    weights: BTreeMap<i64, f64>,
}

impl LaplaceExponent {
    pub fn new(weights: BTreeMap<i64, f64>) -> Result<Self, EnsembleError> {
        for (&site, &value) in &weights {
            if !value.is_finite() || value < 0.0 {
                return Err(EnsembleError::InvalidExponent { site, value });
            }
        }
        Ok(LaplaceExponent { weights })
    }

    pub fn from_pairs(pairs: &[(i64, f64)]) -> Result<Self, EnsembleError> {
        LaplaceExponent::new(pairs.iter().copied().collect())
    }

    pub fn weights(&self) -> &BTreeMap<i64, f64> {
        &self.weights
    }

    /// `Σ_k λ(k) η(k)`.
    pub fn pair(&self, field: &OccupationField) -> f64 {
        self.weights
            .iter()
            .map(|(&k, &l)| l * field.get(k) as f64)
            .sum()
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_dev: f64,
    pub std_err: f64,
    pub samples: u64,
}

impl MonteCarloEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return MonteCarloEstimate {
                mean: 0.0,
                std_dev: 0.0,
                std_err: 0.0,
                samples: 0,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let std_dev = var.sqrt();
        MonteCarloEstimate {
            mean,
            std_dev,
            std_err: std_dev / (n as f64).sqrt(),
            samples: n as u64,
        }
    }
}

/// `E exp(−Σ λ(k) η(k))` computed from the exact kernels:
/// `exp(Σ_k ½γ(k/n)(β⁺_k − 1) + ½γ(k/n)(β⁻_k − 1))` with
/// `β^c_k = Σ_j e^{−λ(j)} p^c(k, j)`. Each chirality gets its own `β`.
pub fn laplace_exact(
    profile: &Profile,
    n: u64,
    t: f64,
    lambda: &LaplaceExponent,
) -> Result<f64, EnsembleError> {
    if n == 0 {
        return Err(EnsembleError::ZeroScale);
    }
    let steps = ballistic_steps(n, t)?;
    let kernels = [
        chirality_kernel(CoinTag::Plus, steps),
        chirality_kernel(CoinTag::Minus, steps),
    ];
    Ok(laplace_exact_with_kernels(profile, n, &kernels, lambda))
}

fn laplace_exact_with_kernels(
    profile: &Profile,
    n: u64,
    kernels: &[PositionDistribution; 2],
    lambda: &LaplaceExponent,
) -> f64 {
    let mut exponent = 0.0;
    for k in profile_sites(profile, n) {
        let g = profile.eval(k as f64 / n as f64);
        if g == 0.0 {
            continue;
        }
        for kernel in kernels {
            // β − 1 = Σ_j (e^{−λ(j)} − 1) p(k, j), summed over supp λ only.
            let beta_minus_one: f64 = lambda
                .weights
                .iter()
                .map(|(&j, &l)| (-l).exp_m1() * kernel.prob(j - k))
                .sum();
            exponent += 0.5 * g * beta_minus_one;
        }
    }
    exponent.exp()
}

/// Monte Carlo estimate of `E exp(−Σ λ(k) η(k))` over `replicas` replicas.
pub fn laplace_monte_carlo(
    experiment: &Experiment,
    lambda: &LaplaceExponent,
    replicas: u64,
    source: RandomSource,
) -> MonteCarloEstimate {
    let samples = experiment.replicate(replicas, source, |field| (-lambda.pair(field)).exp());
    MonteCarloEstimate::from_samples(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle(peak: f64) -> Profile {
        Profile::triangle(-1.0, 0.0, 1.0, peak).unwrap()
    }

    #[test]
    fn random_source_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(RandomSource::new(7, 0).rng(), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(RandomSource::new(7, 0).rng(), |r, _| Some(r.random())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(RandomSource::new(7, 1).rng(), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(RandomSource::new(7, 3).replica(2), RandomSource::new(7, 5));
    }

    #[test]
    fn poisson_sampler_moments() {
        let mut rng = RandomSource::new(11, 0).rng();
        for mean in [0.3, 2.0, 45.0] {
            let s = PoissonSampler::new(mean);
            let draws: Vec<f64> = (0..200_000).map(|_| s.sample(&mut rng) as f64).collect();
            let est = MonteCarloEstimate::from_samples(&draws);
            assert!((est.mean - mean).abs() < 4.0 * (mean / 200_000f64).sqrt(), "mean {mean}: {est:?}");
            let var = est.std_dev * est.std_dev;
            assert!((var - mean).abs() < 0.03 * mean + 0.01, "var {mean}: {var}");
        }
        assert_eq!(PoissonSampler::new(0.0).sample(&mut rng), 0);
    }

    #[test]
    fn zero_profile_gives_empty_configuration() {
        let g = Profile::zero(-1.0, 1.0).unwrap();
        let c = sample_field(&g, 100, RandomSource::new(1, 0)).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.total_walkers(), 0);
        assert!(sample_field(&g, 0, RandomSource::new(1, 0)).is_err());
    }

    #[test]
    fn total_walkers_near_mass() {
        let g = triangle(2.0);
        let sampler = FieldSampler::new(&g, 1000).unwrap();
        let expected = sampler.expected_walkers();
        // Σ_k γ(k/n) equals n ∫γ exactly for this triangle.
        assert!((expected - 2000.0).abs() < 1e-9);
        let c = sample_field(&g, 1000, RandomSource::new(2024, 0)).unwrap();
        assert!((c.total_walkers() as f64 - 2000.0).abs() < 3.0 * 2000f64.sqrt());
    }

    #[test]
    fn mean_count_at_origin() {
        let g = triangle(2.0);
        let sampler = FieldSampler::new(&g, 1000).unwrap();
        let mut rng = RandomSource::new(5, 0).rng();
        let draws: Vec<f64> = (0..100_000)
            .map(|_| sampler.sample(&mut rng).get(0, CoinTag::Plus) as f64)
            .collect();
        let est = MonteCarloEstimate::from_samples(&draws);
        assert!((est.mean - 1.0).abs() < 3.0 * est.std_err, "{est:?}");
    }

    #[test]
    fn configuration_only_has_localized_keys_in_support() {
        let g = triangle(1.0);
        let c = sample_field(&g, 50, RandomSource::new(3, 9)).unwrap();
        for (site, _, count) in c.iter() {
            assert!(count > 0);
            assert!(site > -50 && site < 50);
        }
    }

    #[test]
    fn measure_without_motion_counts_starts() {
        let mut config = FieldConfiguration::new();
        config.add(-2, CoinTag::Plus, 3);
        config.add(-2, CoinTag::Minus, 1);
        config.add(5, CoinTag::Minus, 2);
        config.add(5, CoinTag::Minus, 1);
        assert_eq!(config.get(5, CoinTag::Minus), 3);
        let field = measure_field(&config, 0, 10, RandomSource::new(0, 0));
        assert_eq!(field.get(-2), 4);
        assert_eq!(field.get(5), 3);
        assert_eq!(field.total(), config.total_walkers());
        assert_eq!(field.support(), Some((-2, 5)));
    }

    #[test]
    fn single_walker_two_steps() {
        let mut config = FieldConfiguration::new();
        config.add(0, CoinTag::Plus, 1);
        let sampler = PositionSampler::new(2);
        let mut rng = RandomSource::new(99, 0).rng();
        let mut hist = BTreeMap::new();
        let trials = 100_000;
        for _ in 0..trials {
            let f = sampler.measure(&config, 1, &mut rng);
            let (site, _) = f.iter().next().unwrap();
            *hist.entry(site).or_insert(0u64) += 1;
        }
        assert_eq!(hist.keys().copied().collect::<Vec<_>>(), vec![-2, 0, 2]);
        for (site, p) in [(-2, 0.25), (0, 0.5), (2, 0.25)] {
            let freq = hist[&site] as f64 / trials as f64;
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((freq - p).abs() < 3.0 * se, "site {site}: {freq}");
        }
    }

    #[test]
    fn single_walker_three_steps_frequencies() {
        let sampler = PositionSampler::new(3);
        let mut rng = RandomSource::new(123, 4).rng();
        let trials = 100_000;
        let mut counts = BTreeMap::new();
        for _ in 0..trials {
            *counts.entry(sampler.sample(0, CoinTag::Plus, &mut rng)).or_insert(0u64) += 1;
        }
        for (site, p) in [(-3, 0.125), (-1, 0.125), (1, 0.625), (3, 0.125)] {
            let freq = counts[&site] as f64 / trials as f64;
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((freq - p).abs() < 3.0 * se, "site {site}: {freq}");
        }
        assert_eq!(counts.len(), 4);
    }

    #[test]
    fn field_stays_inside_cone() {
        let g = triangle(1.0);
        let e = Experiment::new(&g, 40, 0.5).unwrap();
        for i in 0..50 {
            let f = e.run_replica(RandomSource::new(8, i));
            if let Some((lo, hi)) = f.support() {
                assert!(lo >= -39 - 20 && hi <= 39 + 20);
            }
        }
    }

    #[test]
    fn functional_trivial_cases() {
        let h = Profile::triangle(-1.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(empirical_functional(&OccupationField::empty(3, 10), &h), 0.0);
        let field = OccupationField::from_counts([(-5, 2), (0, 1), (7, 4)], 3, 10);
        let one = Profile::trapezoid(-3.0, -2.0, 2.0, 3.0, 1.0).unwrap();
        assert!((empirical_functional(&field, &one) - 0.7).abs() < 1e-15);
        // H(−0.5) = 0.5, H(0) = 1, H(0.7) = 0.3
        let expected = (2.0 * 0.5 + 1.0 + 4.0 * 0.3) / 10.0;
        assert!((empirical_functional(&field, &h) - expected).abs() < 1e-15);
    }

    #[test]
    fn histogram_edge_cases() {
        let empty = window_histogram(&[], 0, 2);
        assert_eq!(empty.len(), 5);
        assert!(empty.values().all(|h| h.replicas() == 0 && h.pmf().is_empty()));

        let g = Profile::zero(-1.0, 1.0).unwrap();
        let e = Experiment::new(&g, 32, 1.0).unwrap();
        let fields = e.replicate(20, RandomSource::new(1, 0), |f| f.clone());
        for h in window_histogram(&fields, 0, 3).values() {
            assert_eq!(h.pmf(), vec![1.0]);
        }

        let mut a = CountHistogram::from_samples([0, 2, 2]);
        a.merge(&CountHistogram::from_samples([5]));
        assert_eq!(a.frequencies(), &[1, 0, 2, 0, 0, 1]);
        assert!((a.mean() - 9.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn replicate_is_deterministic() {
        let g = triangle(1.5);
        let e = Experiment::new(&g, 30, 1.0).unwrap();
        let a = e.replicate(16, RandomSource::new(77, 0), |f| f.clone());
        let b = e.replicate(16, RandomSource::new(77, 0), |f| f.clone());
        assert_eq!(a, b);
        let c = e.replicate(16, RandomSource::new(78, 0), |f| f.clone());
        assert_ne!(a, c);
        // Replica i is the same whether run alone or in a batch.
        assert_eq!(a[5], e.run_replica(RandomSource::new(77, 5)));
    }

    #[test]
    fn replica_equals_sample_then_measure() {
        let g = triangle(1.0);
        let e = Experiment::new(&g, 24, 1.0).unwrap();
        let src = RandomSource::new(4, 2);
        let mut rng = src.rng();
        let config = e.field_sampler().sample(&mut rng);
        let field = e.positions().measure(&config, 24, &mut rng);
        assert_eq!(field, e.run_replica(src));
        assert_eq!(field.total(), config.total_walkers());
    }

    #[test]
    fn field_text_round_trip() {
        let field = OccupationField::from_counts([(-3, 1), (0, 5), (4, 2)], 12, 16);
        assert_eq!(OccupationField::parse(&field.to_text()).unwrap(), field);
        let batch = vec![field.clone(), OccupationField::empty(12, 16), field];
        let parsed = parse_field_batch(&write_field_batch(&batch)).unwrap();
        assert_eq!(parsed.len(), 3);
        assert_eq!(parsed[0], batch[0]);
        assert_eq!(parsed[1].total(), 0);
        assert!(matches!(
            OccupationField::parse("1 x\n"),
            Err(EnsembleError::Parse { line: 1, .. })
        ));
        assert!(parse_field_batch("3 1\n").is_err());
    }

    #[test]
    fn laplace_exact_trivial_cases() {
        let g = triangle(1.0);
        let none = LaplaceExponent::default();
        assert_eq!(laplace_exact(&g, 20, 1.0, &none).unwrap(), 1.0);
        let zero = Profile::zero(-1.0, 1.0).unwrap();
        let lam = LaplaceExponent::from_pairs(&[(0, 0.5), (3, 1.0)]).unwrap();
        assert_eq!(laplace_exact(&zero, 20, 1.0, &lam).unwrap(), 1.0);
        assert!(LaplaceExponent::from_pairs(&[(0, -0.1)]).is_err());
    }

    #[test]
    fn laplace_exact_at_zero_time_is_poisson_product() {
        // No motion: η(j) ~ Poisson(γ(j/n)) independently.
        let g = triangle(1.0);
        let n = 10;
        let lam = LaplaceExponent::from_pairs(&[(-2, 0.4), (0, 1.0), (5, 0.1)]).unwrap();
        let exact = laplace_exact(&g, n, 0.05, &lam).unwrap();
        let mut expected = 0.0;
        for (&j, &l) in lam.weights() {
            expected += g.eval(j as f64 / n as f64) * ((-l).exp() - 1.0);
        }
        assert!((exact - expected.exp()).abs() < 1e-14);
    }
}
