//! The sampler-vs-adversary game, its metrics, and Monte Carlo sweeps.
//!
//! Metrics only depend on how each set of the family traces the realized
//! stream, so they are computed through [`StreamFamily`]: explicit
//! [`SetFamily`] values over domain elements, or the implicit [`Thresholds`]
//! over any totally ordered item type (used by the binary-search adversary,
//! whose grid is far too large to enumerate).
//!
//! Metric values are exact fractions; floating point only appears in
//! aggregates.

use std::time::Instant;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{
    make_adversary, make_element_adversary, Adversary, AdversarySpec, BuiltAdversary,
};
use crate::bits::BitSet;
use crate::error::{invalid, Error, Result};
use crate::family::{build_family, Element, FamilySpec, SetFamily};
use crate::rng::trial_seed;
use crate::sampler::{make_sampler, Feedback, OnlineSampler, SamplerScheme, SchemeKind};

/// Exact metric value.
pub type Frac = Ratio<i64>;

/// Renders a fraction as `p/q`, always with an explicit denominator.
pub fn frac_string(r: &Frac) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn frac_f64(r: &Frac) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Everything that happened in one game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript<T> {
    pub stream: Vec<T>,
    pub decisions: Vec<Feedback>,
    /// Final retained round indices `I = I_n`, ascending.
    pub sample: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler_seed: Option<u64>,
}

impl<T> Transcript<T> {
    pub fn len(&self) -> usize {
        self.stream.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stream.is_empty()
    }

    /// Retained index set `I_t` after the first `t` rounds, replayed from the decisions.
    pub fn retained_after(&self, t: usize) -> Vec<usize> {
        let mut retained = Vec::new();
        for (round, fb) in self.decisions[..t].iter().enumerate() {
            if let Some(e) = fb.evicted {
                retained.retain(|&i| i != e);
            }
            if fb.kept {
                retained.push(round);
            }
        }
        retained
    }

    pub fn sample_mask(&self) -> BitSet {
        BitSet::from_indices(self.len(), self.sample.iter().copied())
    }

    /// The sampled items `x_I` in round order.
    pub fn sampled_items(&self) -> Vec<&T> {
        self.sample.iter().map(|&i| &self.stream[i]).collect()
    }
}

/// Plays `n` rounds: the adversary sees the feedback of all earlier rounds
/// before committing to `x_t`, then the sampler decides on `x_t`.
pub fn run_game<S, A>(sampler: &mut S, adversary: &mut A, n: usize) -> Result<Transcript<A::Item>>
where
    S: OnlineSampler + ?Sized,
    A: Adversary + ?Sized,
{
    if sampler.horizon() != n {
        return Err(Error::HorizonMismatch(sampler.horizon(), n));
    }
    if adversary.horizon() != n {
        return Err(Error::HorizonMismatch(adversary.horizon(), n));
    }
    let mut stream = Vec::with_capacity(n);
    let mut decisions = Vec::with_capacity(n);
    for _ in 0..n {
        stream.push(adversary.next_item(&decisions)?);
        decisions.push(sampler.step()?);
    }
    Ok(Transcript {
        stream,
        decisions,
        sample: sampler.retained().to_vec(),
        sampler_seed: None,
    })
}

/// How a family traces a concrete stream.
pub trait StreamFamily<T> {
    fn is_empty(&self) -> bool;

    /// `max_E |sum_{t : x_t in E} w_t|`, 0 for the empty family.
    fn max_abs_sum(&self, stream: &[T], weights: &[i64]) -> i64;

    /// `(|x ∩ E|, |x_marked ∩ E|)` for every set `E`.
    fn count_profiles(&self, stream: &[T], marked: &BitSet) -> Vec<(usize, usize)>;
}

impl StreamFamily<Element> for SetFamily {
    fn is_empty(&self) -> bool {
        SetFamily::is_empty(self)
    }

    fn max_abs_sum(&self, stream: &[Element], weights: &[i64]) -> i64 {
        let mut per_element = vec![0i64; self.domain_size()];
        for (x, w) in stream.iter().zip(weights) {
            per_element[x.index()] += w;
        }
        self.iter()
            .map(|s| s.iter().map(|x| per_element[x]).sum::<i64>().abs())
            .max()
            .unwrap_or(0)
    }

    fn count_profiles(&self, stream: &[Element], marked: &BitSet) -> Vec<(usize, usize)> {
        let m = self.domain_size();
        let (mut total, mut inside) = (vec![0usize; m], vec![0usize; m]);
        for (t, x) in stream.iter().enumerate() {
            total[x.index()] += 1;
            if marked.contains(t) {
                inside[x.index()] += 1;
            }
        }
        self.iter()
            .map(|s| s.iter().fold((0, 0), |(a, b), x| (a + total[x], b + inside[x])))
            .collect()
    }
}

/// All thresholds `{x : x <= r}` over a totally ordered item type, the
/// empty threshold included.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Thresholds;

impl Thresholds {
    /// Positions sorted by item, grouped into runs of equal items.
    fn runs<T: Ord>(stream: &[T]) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..stream.len()).collect();
        order.sort_by(|&a, &b| stream[a].cmp(&stream[b]));
        let mut runs: Vec<Vec<usize>> = Vec::new();
        for t in order {
            match runs.last_mut() {
                Some(run) if stream[run[0]] == stream[t] => run.push(t),
                _ => runs.push(vec![t]),
            }
        }
        runs
    }
}

impl<T: Ord> StreamFamily<T> for Thresholds {
    fn is_empty(&self) -> bool {
        false
    }

    fn max_abs_sum(&self, stream: &[T], weights: &[i64]) -> i64 {
        let mut acc = 0i64;
        let mut best = 0i64;
        for run in Self::runs(stream) {
            acc += run.iter().map(|&t| weights[t]).sum::<i64>();
            best = best.max(acc.abs());
        }
        best
    }

    fn count_profiles(&self, stream: &[T], marked: &BitSet) -> Vec<(usize, usize)> {
        let mut out = vec![(0, 0)];
        let (mut a, mut b) = (0, 0);
        for run in Self::runs(stream) {
            a += run.len();
            b += run.iter().filter(|&&t| marked.contains(t)).count();
            out.push((a, b));
        }
        out
    }
}

fn check_indices(indices: &[usize], n: usize) -> Result<()> {
    match indices.iter().find(|&&i| i >= n) {
        Some(&i) => Err(Error::OutOfRange {
            what: "stream position",
            index: i,
            limit: n,
        }),
        None => Ok(()),
    }
}

/// `max_E | |E ∩ x_I| / |I| - |E ∩ x| / n |`, or `None` when `I` is empty.
pub fn app_error_of<T, F: StreamFamily<T> + ?Sized>(
    family: &F,
    stream: &[T],
    sample: &[usize],
) -> Result<Option<Frac>> {
    let n = stream.len();
    check_indices(sample, n)?;
    let k = sample.len();
    if k == 0 {
        return Ok(None);
    }
    let mut weights = vec![-(k as i64); n];
    for &i in sample {
        weights[i] += n as i64;
    }
    let top = family.max_abs_sum(stream, &weights);
    Ok(Some(Frac::new(top, (k * n) as i64)))
}

/// Approximation error of the transcript's final sample; `None` if it is empty.
pub fn app_error<T, F: StreamFamily<T> + ?Sized>(
    family: &F,
    transcript: &Transcript<T>,
) -> Option<Frac> {
    app_error_of(family, &transcript.stream, &transcript.sample)
        .expect("transcript sample lies within the stream")
}

/// `max_E | |E ∩ x_I| - |E ∩ x_{[n] \ I}| |`.
pub fn discrepancy<T, F: StreamFamily<T> + ?Sized>(
    family: &F,
    stream: &[T],
    sample: &[usize],
) -> Result<i64> {
    check_indices(sample, stream.len())?;
    let mut weights = vec![-1i64; stream.len()];
    for &i in sample {
        weights[i] = 1;
    }
    Ok(family.max_abs_sum(stream, &weights))
}

/// Whether some `E` has `|x ∩ E| >= m_hi` yet `|x_I ∩ E| <= m_lo`.
pub fn net_indicator<T, F: StreamFamily<T> + ?Sized>(
    family: &F,
    transcript: &Transcript<T>,
    m_hi: usize,
    m_lo: usize,
) -> Result<bool> {
    if m_lo > m_hi || m_hi > transcript.len() {
        return Err(invalid(format!(
            "net thresholds need m_lo <= m_hi <= n, got {m_lo}, {m_hi}, {}",
            transcript.len()
        )));
    }
    Ok(family
        .count_profiles(&transcript.stream, &transcript.sample_mask())
        .into_iter()
        .any(|(total, sampled)| total >= m_hi && sampled <= m_lo))
}

/// `max_E | |E ∩ x_I| / |I| - |E ∩ x_J| / |J| |` for disjoint equal-size `I`, `J`.
pub fn test_deviation<T, F: StreamFamily<T> + ?Sized>(
    family: &F,
    stream: &[T],
    sample: &[usize],
    ghost: &[usize],
) -> Result<Frac> {
    let n = stream.len();
    check_indices(sample, n)?;
    check_indices(ghost, n)?;
    if sample.is_empty() || sample.len() != ghost.len() {
        return Err(invalid(format!(
            "test deviation needs equal non-empty index sets, got {} and {}",
            sample.len(),
            ghost.len()
        )));
    }
    let mut weights = vec![0i64; n];
    for &i in sample {
        weights[i] += 1;
    }
    for &j in ghost {
        if weights[j] != 0 {
            return Err(invalid(format!("index {j} in both sample and ghost sample")));
        }
        weights[j] = -1;
    }
    let top = family.max_abs_sum(stream, &weights);
    Ok(Frac::new(top, sample.len() as i64))
}

/// Approximation error of `I_t` against the prefix `x_[t]`, for `t = 1..=n`.
pub fn continuous_trace<T, F: StreamFamily<T> + ?Sized>(
    family: &F,
    transcript: &Transcript<T>,
) -> Vec<Option<Frac>> {
    let mut retained: Vec<usize> = Vec::new();
    let mut out = Vec::with_capacity(transcript.len());
    for (t, fb) in transcript.decisions.iter().enumerate() {
        if let Some(e) = fb.evicted {
            retained.retain(|&i| i != e);
        }
        if fb.kept {
            retained.push(t);
        }
        out.push(
            app_error_of(family, &transcript.stream[..=t], &retained)
                .expect("retained indices precede the current round"),
        );
    }
    out
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: usize,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Estimate {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean,
            std_err,
            trials: n,
        }
    }
}

/// Sequential Rademacher estimate: the adversary plays against a fair coin
/// sampler `Ber(n, 1/2)` and the discrepancy of the coloring is averaged.
pub fn estimate_rad_with<T, F, A, M>(
    family: &F,
    make_adversary: M,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Estimate>
where
    F: StreamFamily<T> + Sync + ?Sized,
    A: Adversary<Item = T>,
    M: Fn(u64) -> Result<A> + Sync,
{
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let scheme = SamplerScheme::new(SchemeKind::Bernoulli { p: 0.5 }, n)?;
    let values = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let s = trial_seed(seed, i);
            let mut sampler = make_sampler(scheme, s)?;
            let mut adversary = make_adversary(s)?;
            let tr = run_game(&mut sampler, &mut adversary, n)?;
            Ok(discrepancy(family, &tr.stream, &tr.sample)? as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_samples(&values))
}

/// [`estimate_rad_with`] for element-valued adversary specs.
pub fn estimate_rad(
    family: &SetFamily,
    adversary: &AdversarySpec,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    if adversary.horizon != n {
        return Err(Error::HorizonMismatch(adversary.horizon, n));
    }
    estimate_rad_with(
        family,
        |s| make_element_adversary(&adversary.for_trial(s)),
        n,
        trials,
        seed,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    App,
    Disc,
    Net,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::App => "app",
            Metric::Disc => "disc",
            Metric::Net => "net",
        }
    }
}

/// One Monte Carlo experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Family the metrics range over; must be absent for the binary-search
    /// adversary, which is measured against all thresholds of its grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    pub sampler: SchemeKind,
    pub adversary: AdversarySpec,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    /// App failure threshold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Net thresholds `(m_hi, m_lo)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub net: Option<(usize, usize)>,
    #[serde(skip)]
    pub jobs: Option<usize>,
    #[serde(skip)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("need at least one trial"));
        }
        if self.metrics.is_empty() {
            return Err(invalid("no metric selected"));
        }
        if self.adversary.horizon != self.n {
            return Err(Error::HorizonMismatch(self.adversary.horizon, self.n));
        }
        SamplerScheme::new(self.sampler, self.n)?;
        self.adversary.validate()?;
        match (self.adversary.is_binary_search(), &self.family) {
            (true, Some(_)) => Err(invalid(
                "the binary-search adversary is measured against its own thresholds; drop the family",
            )),
            (false, None) => Err(invalid("a family is required for this adversary")),
            _ => Ok(()),
        }?;
        if self.metrics.contains(&Metric::Net) && self.net.is_none() {
            return Err(invalid("the net metric needs (m_hi, m_lo)"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub metric: Metric,
    /// `p/q` for app, an integer for disc, `true`/`false` for net, `undefined` for an empty sample.
    pub value: String,
    #[serde(skip)]
    pub numeric: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: Metric,
    pub trials: usize,
    pub defined: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub q10: Option<f64>,
    pub q90: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub summaries: Vec<MetricSummary>,
    pub trials: Vec<TrialRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl Report {
    /// One row per trial and metric: `trial,seed,metric,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,seed,metric,value\n");
        for r in &self.trials {
            out.push_str(&format!("{},{},{},{}\n", r.trial, r.seed, r.metric.name(), r.value));
        }
        out
    }

    pub fn summary(&self, metric: Metric) -> Option<&MetricSummary> {
        self.summaries.iter().find(|s| s.metric == metric)
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

fn summarize(metric: Metric, records: &[&TrialRecord], config: &ExperimentConfig) -> MetricSummary {
    let mut values: Vec<f64> = records.iter().filter_map(|r| r.numeric).collect();
    values.sort_by(f64::total_cmp);
    let failures = match metric {
        Metric::App => config.eps.map(|eps| {
            records
                .iter()
                .filter(|r| r.numeric.is_none_or(|v| v > eps))
                .count()
        }),
        Metric::Net => Some(records.iter().filter(|r| r.value == "true").count()),
        Metric::Disc => None,
    };
    MetricSummary {
        metric,
        trials: records.len(),
        defined: values.len(),
        mean: (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64),
        median: quantile(&values, 0.5),
        q10: quantile(&values, 0.1),
        q90: quantile(&values, 0.9),
        min: values.first().copied(),
        max: values.last().copied(),
        failure_rate: failures.map(|f| f as f64 / records.len() as f64),
    }
}

fn measure<T, F: StreamFamily<T> + ?Sized>(
    family: &F,
    tr: &Transcript<T>,
    config: &ExperimentConfig,
    trial: u64,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    config
        .metrics
        .iter()
        .map(|&metric| {
            let (value, numeric) = match metric {
                Metric::App => match app_error(family, tr) {
                    Some(r) => (frac_string(&r), Some(frac_f64(&r))),
                    None => ("undefined".to_string(), None),
                },
                Metric::Disc => {
                    let d = discrepancy(family, &tr.stream, &tr.sample)?;
                    (d.to_string(), Some(d as f64))
                }
                Metric::Net => {
                    let (hi, lo) = config.net.expect("validated");
                    let hit = net_indicator(family, tr, hi, lo)?;
                    (hit.to_string(), Some(hit as u8 as f64))
                }
            };
            Ok(TrialRecord {
                trial,
                seed,
                metric,
                value,
                numeric,
            })
        })
        .collect()
}

fn run_trials<T, F, A, M>(
    family: &F,
    make: M,
    config: &ExperimentConfig,
) -> Result<Vec<TrialRecord>>
where
    F: StreamFamily<T> + Sync + ?Sized,
    A: Adversary<Item = T>,
    M: Fn(&AdversarySpec) -> Result<A> + Sync,
{
    let scheme = SamplerScheme::new(config.sampler, config.n)?;
    let per_trial = (0..config.trials as u64)
        .into_par_iter()
        .map(|i| {
            let s = trial_seed(config.seed, i);
            let mut sampler = make_sampler(scheme, s)?;
            let mut adversary = make(&config.adversary.for_trial(s))?;
            let mut tr = run_game(&mut sampler, &mut adversary, config.n)?;
            tr.sampler_seed = Some(s);
            measure(family, &tr, config, i, s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

/// Runs `config.trials` independent games and aggregates the selected metrics.
/// The report is a deterministic function of the config.
pub fn sweep(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let started = Instant::now();
    let work = || -> Result<Vec<TrialRecord>> {
        if config.adversary.is_binary_search() {
            run_trials(
                &Thresholds,
                |spec| match make_adversary(spec)? {
                    BuiltAdversary::Dyadic(a) => Ok(a),
                    BuiltAdversary::Element(_) => unreachable!(),
                },
                config,
            )
        } else {
            let family = build_family(config.family.as_ref().expect("validated"), config.seed)?;
            run_trials(&family, make_element_adversary, config)
        }
    };
    let records = match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| invalid(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let summaries = config
        .metrics
        .iter()
        .map(|&m| {
            let rs: Vec<&TrialRecord> = records.iter().filter(|r| r.metric == m).collect();
            summarize(m, &rs, config)
        })
        .collect();
    Ok(Report {
        config: config.clone(),
        summaries,
        trials: records,
        elapsed_ms: config
            .record_timing
            .then(|| started.elapsed().as_secs_f64() * 1e3),
    })
}
