//! Dynamic sets, exact and fractional covers, and the online learners
//! built from them.
//!
//! A dynamic set `B_I` walks the stream with a current subfamily, starting
//! from the whole family. At rounds in `I` it restricts to the side of
//! `x_t` that disagrees with the Littlestone majority; it retains `x_t` iff
//! `x_t` is in the Littlestone majority of the (possibly updated)
//! subfamily. All subfamily bookkeeping goes through a shared
//! [`Littlestone`] engine so repeated states are computed once.

use std::collections::HashSet;

use num_rational::Ratio;
use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::dimension::{Littlestone, SubId};
use crate::error::{invalid, Error, Result};
use crate::family::{binomial, binomial_up_to, check_cap, Element, Limits, SetFamily};
use crate::rng::{rng_from_seed, substream, trial_seed, SALT_LABELS, SALT_LEARNER, SALT_SECOND};

/// Positive rational parameter such as `ε`.
pub type Rational = Ratio<u64>;

/// Parses `1/4`, `0.25` or `1` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("{text:?} is not a rational number"));
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: u64 = p.trim().parse().map_err(|_| bad())?;
        let q: u64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    if frac.len() > 18 || (whole.is_empty() && frac.is_empty()) {
        return Err(bad());
    }
    let digits = |s: &str| s.is_empty() || s.bytes().all(|b| b.is_ascii_digit());
    if !digits(whole) || !digits(frac) {
        return Err(bad());
    }
    let scale = 10u64.pow(frac.len() as u32);
    let whole: u64 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| bad())? };
    let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let num = whole
        .checked_mul(scale)
        .and_then(|w| w.checked_add(frac))
        .ok_or_else(bad)?;
    Ok(Rational::new(num, scale))
}

fn rational_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Outcome of running one dynamic set over a stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicSetRun {
    /// Retained stream positions, ascending.
    pub trace: Vec<usize>,
    /// Subfamily after each round.
    pub states: Vec<SubId>,
}

impl DynamicSetRun {
    pub fn trace_mask(&self) -> BitSet {
        BitSet::from_indices(self.states.len(), self.trace.iter().copied())
    }
}

fn check_positions(index: &[usize], n: usize) -> Result<BitSet> {
    let mut mask = BitSet::new(n);
    for &t in index {
        if t >= n {
            return Err(Error::OutOfRange {
                what: "index set position",
                index: t,
                limit: n,
            });
        }
        mask.insert(t);
    }
    Ok(mask)
}

fn check_stream(family: &SetFamily, stream: &[Element]) -> Result<()> {
    let m = family.domain_size();
    match stream.iter().find(|x| x.index() >= m) {
        Some(x) => Err(Error::OutOfRange {
            what: "stream element",
            index: x.index(),
            limit: m,
        }),
        None => Ok(()),
    }
}

/// Executes `B_I` on `stream`.
pub fn run_dynamic_set(
    engine: &mut Littlestone<'_>,
    index: &[usize],
    stream: &[Element],
) -> Result<DynamicSetRun> {
    check_stream(engine.family(), stream)?;
    let marked = check_positions(index, stream.len())?;
    let mut state = engine.root();
    let mut trace = Vec::new();
    let mut states = Vec::with_capacity(stream.len());
    for (t, &x) in stream.iter().enumerate() {
        if marked.contains(t) {
            let majority = engine.in_lmaj(state, x);
            state = engine.restrict(state, x, !majority);
        }
        if engine.in_lmaj(state, x) {
            trace.push(t);
        }
        states.push(state);
    }
    Ok(DynamicSetRun { trace, states })
}

/// Convenience wrapper building a fresh engine.
pub fn dynamic_set_trace(family: &SetFamily, index: &[usize], stream: &[Element]) -> Result<Vec<usize>> {
    let mut engine = Littlestone::new(family)?;
    Ok(run_dynamic_set(&mut engine, index, stream)?.trace)
}

/// The rounds at which a learner following `E` would be surprised by the
/// Littlestone majority, restricted to `positions` (ascending). With all
/// positions this is the index set `I(E)` whose dynamic set traces `E`.
fn index_on(
    engine: &mut Littlestone<'_>,
    set: &BitSet,
    stream: &[Element],
    positions: impl Iterator<Item = usize>,
) -> Vec<usize> {
    let mut state = engine.root();
    let mut out = Vec::new();
    for t in positions {
        let x = stream[t];
        let truth = set.contains(x.index());
        if engine.in_lmaj(state, x) != truth {
            out.push(t);
            state = engine.restrict(state, x, truth);
        }
    }
    out
}

/// The index set `I(E)` for the set with index `set_index`.
pub fn index_for(engine: &mut Littlestone<'_>, set_index: usize, stream: &[Element]) -> Result<Vec<usize>> {
    check_stream(engine.family(), stream)?;
    let set = engine.family().set(set_index)?.clone();
    Ok(index_on(engine, &set, stream, 0..stream.len()))
}

/// Number of distinct traces over all `B_I` with `|I| <= max(ldim, 0)`.
pub fn count_traces(engine: &mut Littlestone<'_>, stream: &[Element], limits: &Limits) -> Result<usize> {
    check_stream(engine.family(), stream)?;
    let root = engine.root();
    let d = engine.ldim(root).max(0) as usize;
    let n = stream.len();
    check_cap(
        "dynamic sets to enumerate",
        binomial_up_to(n as u64, d as u64),
        limits.max_enumeration,
    )?;
    let mut traces = HashSet::new();
    let mut trace = BitSet::new(n);
    enumerate_traces(engine, stream, 0, root, d, &mut trace, &mut traces);
    Ok(traces.len())
}

fn enumerate_traces(
    engine: &mut Littlestone<'_>,
    stream: &[Element],
    t: usize,
    state: SubId,
    budget: usize,
    trace: &mut BitSet,
    out: &mut HashSet<BitSet>,
) {
    if t == stream.len() {
        out.insert(trace.clone());
        return;
    }
    let x = stream[t];
    let majority = engine.in_lmaj(state, x);
    trace.set(t, majority);
    enumerate_traces(engine, stream, t + 1, state, budget, trace, out);
    if budget > 0 {
        let next = engine.restrict(state, x, !majority);
        trace.set(t, engine.in_lmaj(next, x));
        enumerate_traces(engine, stream, t + 1, next, budget - 1, trace, out);
    }
    trace.set(t, false);
}

/// `p = min(1, 3d / (ε n))`.
pub fn cover_rate(d: usize, n: usize, eps: Rational) -> Result<Rational> {
    if *eps.numer() == 0 || eps > Rational::from(1) {
        return Err(invalid(format!("eps must lie in (0, 1], got {eps}")));
    }
    if n == 0 {
        return Err(invalid("fractional cover needs n >= 1"));
    }
    let p = Rational::from(3 * d as u64) / (eps * Rational::from(n as u64));
    Ok(p.min(Rational::from(1)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FractionalDraw {
    /// The Bernoulli subset `I'`.
    pub candidates: Vec<usize>,
    /// `I`, uniform among subsets of `I'` of size at most `d`.
    pub index: Vec<usize>,
}

fn draw_fractional(rng: &mut crate::rng::Rng, n: usize, d: usize, p: Rational) -> FractionalDraw {
    let (num, den) = (*p.numer(), *p.denom());
    let candidates: Vec<usize> = (0..n).filter(|_| rng.random_range(0..den) < num).collect();
    let c = candidates.len() as u64;
    let top = d.min(candidates.len());
    let total = binomial_up_to(c, top as u64);
    let mut pick = rng.random_range(0..total);
    let mut size = 0;
    for s in 0..=top {
        let w = binomial(c, s as u64);
        if pick < w {
            size = s;
            break;
        }
        pick -= w;
    }
    let mut index: Vec<usize> = index::sample(rng, candidates.len(), size)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    index.sort_unstable();
    FractionalDraw { candidates, index }
}

/// One draw of the two-step fractional cover construction with `d = ldim`.
pub fn sample_fractional_cover(family: &SetFamily, n: usize, eps: Rational, seed: u64) -> Result<FractionalDraw> {
    let d = crate::dimension::ldim(family)?;
    if d < 0 {
        return Err(Error::EmptyFamily);
    }
    let p = cover_rate(d as usize, n, eps)?;
    Ok(draw_fractional(&mut rng_from_seed(seed), n, d as usize, p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub d: usize,
    pub n: usize,
    /// Sampling rate as `p/q`.
    pub rate: String,
    pub trials: usize,
    /// Miss threshold `3d / p` for the lazy learner.
    pub miss_threshold: f64,
    /// Fraction of trials with `|M| <= 3d / p`.
    pub lazy_success: f64,
    pub lazy_std_err: f64,
    pub mean_miss: f64,
    /// Trace distance threshold for the two-step draw.
    pub count_threshold: f64,
    /// Fraction of trials whose drawn `B_I` is within the count threshold of `E`.
    pub cover_success: f64,
    pub cover_std_err: f64,
    /// Trials in which the drawn `I` equals the lazy learner's `I*`.
    pub exact_hits: usize,
    /// `(1/3) / C(ceil(9d/ε), <= d)`, for reference only.
    pub reference_bound: f64,
}

fn bernoulli_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Monte Carlo estimate of the two fractional-cover probabilities for the
/// set `set_index` on a fixed stream. `count_threshold` defaults to `ε n`.
pub fn coverage_estimate(
    family: &SetFamily,
    set_index: usize,
    stream: &[Element],
    eps: Rational,
    count_threshold: Option<f64>,
    trials: usize,
    seed: u64,
) -> Result<CoverageEstimate> {
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    check_stream(family, stream)?;
    let set = family.set(set_index)?.clone();
    let mut engine = Littlestone::new(family)?;
    let root = engine.root();
    let d = engine.ldim(root) as usize;
    let n = stream.len();
    let p = cover_rate(d, n, eps)?;
    let miss_threshold = if d == 0 {
        0.0
    } else {
        3.0 * d as f64 / rational_f64(&p)
    };
    let count_threshold = count_threshold.unwrap_or(rational_f64(&eps) * n as f64);
    let truth = BitSet::from_indices(n, (0..n).filter(|&t| set.contains(stream[t].index())));

    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map_init(
            || Littlestone::new(family).expect("checked above"),
            |engine, i| {
                let mut rng = rng_from_seed(trial_seed(seed, i));
                let draw = draw_fractional(&mut rng, n, d, p);
                let lazy = index_on(engine, &set, stream, draw.candidates.iter().copied());
                let lazy_miss = run_dynamic_set(engine, &lazy, stream)
                    .expect("valid positions")
                    .trace_mask()
                    .xor(&truth)
                    .count();
                let drawn_miss = run_dynamic_set(engine, &draw.index, stream)
                    .expect("valid positions")
                    .trace_mask()
                    .xor(&truth)
                    .count();
                (lazy_miss, drawn_miss, lazy == draw.index)
            },
        )
        .collect::<Vec<_>>();

    let lazy_ok = outcomes.iter().filter(|o| o.0 as f64 <= miss_threshold).count();
    let cover_ok = outcomes.iter().filter(|o| o.1 as f64 <= count_threshold).count();
    let lazy_success = lazy_ok as f64 / trials as f64;
    let cover_success = cover_ok as f64 / trials as f64;
    let budget = (9.0 * d as f64 / rational_f64(&eps)).ceil() as u64;
    Ok(CoverageEstimate {
        d,
        n,
        rate: format!("{}/{}", p.numer(), p.denom()),
        trials,
        miss_threshold,
        lazy_success,
        lazy_std_err: bernoulli_se(lazy_success, trials),
        mean_miss: outcomes.iter().map(|o| o.0 as f64).sum::<f64>() / trials as f64,
        count_threshold,
        cover_success,
        cover_std_err: bernoulli_se(cover_success, trials),
        exact_hits: outcomes.iter().filter(|o| o.2).count(),
        reference_bound: 1.0 / (3.0 * binomial_up_to(budget, d as u64) as f64),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoaRun {
    pub predictions: Vec<bool>,
    pub mistakes: usize,
}

/// Standard optimal algorithm: predict Littlestone-majority membership,
/// restrict to the consistent side after every mistake.
pub fn run_soa(engine: &mut Littlestone<'_>, labeled: &[(Element, bool)]) -> Result<SoaRun> {
    let xs: Vec<Element> = labeled.iter().map(|&(x, _)| x).collect();
    check_stream(engine.family(), &xs)?;
    let mut state = engine.root();
    let mut predictions = Vec::with_capacity(labeled.len());
    let mut mistakes = 0;
    for &(x, y) in labeled {
        let guess = engine.in_lmaj(state, x);
        predictions.push(guess);
        if guess != y {
            mistakes += 1;
            state = engine.restrict(state, x, y);
        }
    }
    Ok(SoaRun { predictions, mistakes })
}

/// Walks a maximal shattered tree against SOA, always labelling against
/// its prediction. Returns the realizable labelled stream it produced.
pub fn soa_tree_duel(engine: &mut Littlestone<'_>) -> Result<(Vec<(Element, bool)>, SoaRun)> {
    let root = engine.root();
    let d = engine.ldim(root);
    if d < 0 {
        return Err(Error::EmptyFamily);
    }
    let tree = engine
        .shattered_tree(root, d as usize)
        .expect("depth equals the dimension");
    let mut state = root;
    let mut node = 0;
    let mut labeled = Vec::with_capacity(d as usize);
    for _ in 0..d {
        let x = tree.labels[node];
        let y = !engine.in_lmaj(state, x);
        labeled.push((x, y));
        state = engine.restrict(state, x, y);
        node = 2 * node + if y { 2 } else { 1 };
    }
    let run = run_soa(engine, &labeled)?;
    Ok((labeled, run))
}

/// Mistakes of every set of the family on a labelled stream.
pub fn set_mistakes(family: &SetFamily, labeled: &[(Element, bool)]) -> Vec<usize> {
    family
        .iter()
        .map(|s| labeled.iter().filter(|&&(x, y)| s.contains(x.index()) != y).count())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MwRun {
    pub rounds: usize,
    /// `ln` of the number of experts `C(T, <= d)`.
    pub ln_experts: f64,
    pub eta: f64,
    /// Realized mistakes of the randomized learner.
    pub mistakes: usize,
    /// Sum over rounds of the learner's mistake probability.
    pub expected_mistakes: f64,
    pub best_expert_mistakes: usize,
    pub best_set_mistakes: usize,
    /// `mistakes - best_set_mistakes`.
    pub regret: i64,
    /// `expected_mistakes - best_set_mistakes`.
    pub expected_regret: f64,
    /// Peak number of distinct expert classes tracked.
    pub peak_classes: usize,
}

/// `sqrt(8 ln N / T)`.
pub fn default_eta(ln_experts: f64, rounds: usize) -> f64 {
    (8.0 * ln_experts / rounds as f64).sqrt()
}

#[derive(Clone, Copy)]
struct Class {
    state: SubId,
    used: usize,
    weight: f64,
    best: usize,
}

#[derive(Clone, Copy)]
struct Move {
    majority: bool,
    moved: SubId,
    moved_majority: bool,
}

/// Per-(subfamily, element) cache of the dynamic-set step.
#[derive(Default)]
struct MoveTable {
    entries: Vec<Option<Move>>,
}

impl MoveTable {
    fn get(&mut self, engine: &mut Littlestone<'_>, m: usize, state: SubId, x: Element) -> Move {
        let key = state as usize * m + x.index();
        if key >= self.entries.len() {
            self.entries.resize((key + 1).max(2 * self.entries.len()), None);
        }
        if let Some(mv) = self.entries[key] {
            return mv;
        }
        let majority = engine.in_lmaj(state, x);
        let moved = engine.restrict(state, x, !majority);
        let mv = Move {
            majority,
            moved,
            moved_majority: engine.in_lmaj(moved, x),
        };
        self.entries[key] = Some(mv);
        mv
    }
}

/// Randomized weighted majority over all dynamic sets `B_I` with
/// `|I| <= d` for the stream's length `T`.
///
/// Experts whose prefixes led to the same subfamily with the same number of
/// used indices behave identically from then on, so they are tracked as one
/// class carrying their total weight. A class's weight is split at every
/// round in proportion to the number of index sets completing each branch.
/// Predicts 1 on an exact weight tie when `eta` makes the learner
/// deterministic (infinite `eta`).
pub fn run_mw(
    engine: &mut Littlestone<'_>,
    labeled: &[(Element, bool)],
    eta: Option<f64>,
    seed: u64,
    limits: &Limits,
) -> Result<MwRun> {
    let xs: Vec<Element> = labeled.iter().map(|&(x, _)| x).collect();
    check_stream(engine.family(), &xs)?;
    let root = engine.root();
    let d = engine.ldim(root);
    if d < 0 {
        return Err(Error::EmptyFamily);
    }
    let d = d as usize;
    let rounds = labeled.len();
    let best_set_mistakes = set_mistakes(engine.family(), labeled)
        .into_iter()
        .min()
        .expect("non-empty family");
    if rounds == 0 {
        return Ok(MwRun {
            rounds,
            ln_experts: 0.0,
            eta: eta.unwrap_or(0.0),
            mistakes: 0,
            expected_mistakes: 0.0,
            best_expert_mistakes: 0,
            best_set_mistakes,
            regret: 0,
            expected_regret: 0.0,
            peak_classes: 1,
        });
    }
    let experts = binomial_up_to(rounds as u64, d as u64);
    if experts == u128::MAX {
        return Err(Error::CapExceeded {
            what: "expert count",
            value: experts,
            cap: u128::MAX - 1,
        });
    }
    let ln_experts = (experts as f64).ln();
    let eta = eta.unwrap_or_else(|| default_eta(ln_experts, rounds));
    if eta.is_nan() || eta <= 0.0 {
        return Err(invalid(format!("learning rate must be positive, got {eta}")));
    }
    let penalty = (-eta).exp();
    let mut rng = rng_from_seed(seed);

    // split[left][used] = share of completions (skipping, taking) round t
    let split: Vec<Vec<(f64, f64)>> = (0..=rounds)
        .map(|left| {
            (0..=d)
                .map(|used| {
                    if left == 0 {
                        return (1.0, 0.0);
                    }
                    let r = (left - 1) as u64;
                    let s = (d - used) as u64;
                    let all = binomial_up_to(left as u64, s) as f64;
                    let take = if s == 0 { 0.0 } else { binomial_up_to(r, s - 1) as f64 };
                    (binomial_up_to(r, s) as f64 / all, take / all)
                })
                .collect()
        })
        .collect();
    let m = engine.family().domain_size();
    let mut moves = MoveTable::default();
    let mut classes = vec![Class {
        state: root,
        used: 0,
        weight: 1.0,
        best: 0,
    }];
    // slot[state * (d + 1) + used] = position in `next`, or u32::MAX
    let mut slot: Vec<u32> = Vec::new();
    let mut next: Vec<Class> = Vec::new();
    let mut branches: Vec<(Class, bool)> = Vec::new();
    let mut peak = 1;
    let (mut mistakes, mut expected) = (0usize, 0.0f64);

    for (t, &(x, y)) in labeled.iter().enumerate() {
        let left = rounds - t;
        branches.clear();
        let (mut mass_one, mut mass_total) = (0.0f64, 0.0f64);
        for class in &classes {
            let mv = moves.get(engine, m, class.state, x);
            let (skip_share, take_share) = split[left][class.used];
            let stay = class.weight * skip_share;
            branches.push((Class { weight: stay, ..*class }, mv.majority));
            if class.used < d {
                let flip = class.weight * take_share;
                let moved = Class {
                    state: mv.moved,
                    used: class.used + 1,
                    weight: flip,
                    best: class.best,
                };
                branches.push((moved, mv.moved_majority));
            }
        }
        for (c, guess) in &branches {
            mass_total += c.weight;
            if *guess {
                mass_one += c.weight;
            }
        }
        let prob_one = if eta.is_infinite() {
            if mass_one * 2.0 >= mass_total { 1.0 } else { 0.0 }
        } else {
            mass_one / mass_total
        };
        let guess = rng.random::<f64>() < prob_one;
        expected += if y { 1.0 - prob_one } else { prob_one };
        mistakes += usize::from(guess != y);

        slot.resize(engine.interned_count() * (d + 1), u32::MAX);
        next.clear();
        for &(mut c, guess) in &branches {
            if guess != y {
                c.weight *= penalty;
                c.best += 1;
            }
            let key = c.state as usize * (d + 1) + c.used;
            match slot[key] {
                u32::MAX => {
                    slot[key] = next.len() as u32;
                    next.push(c);
                }
                i => {
                    let e = &mut next[i as usize];
                    e.weight += c.weight;
                    e.best = e.best.min(c.best);
                }
            }
        }
        for c in &next {
            slot[c.state as usize * (d + 1) + c.used] = u32::MAX;
        }
        let total: f64 = next.iter().map(|c| c.weight).sum();
        if total > 0.0 {
            next.iter_mut().for_each(|c| c.weight /= total);
        }
        check_cap("expert classes", next.len() as u128, limits.max_enumeration)?;
        peak = peak.max(next.len());
        std::mem::swap(&mut classes, &mut next);
    }
    let best_expert_mistakes = classes.iter().map(|c| c.best).min().expect("classes never vanish");
    Ok(MwRun {
        rounds,
        ln_experts,
        eta,
        mistakes,
        expected_mistakes: expected,
        best_expert_mistakes,
        best_set_mistakes,
        regret: mistakes as i64 - best_set_mistakes as i64,
        expected_regret: expected - best_set_mistakes as f64,
        peak_classes: peak,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretSummary {
    pub rounds: usize,
    pub seeds: usize,
    pub d: usize,
    pub ln_experts: f64,
    pub eta: f64,
    pub mean_regret: f64,
    pub std_dev: f64,
    pub std_err: f64,
    pub mean_expected_regret: f64,
    /// `mean_regret / sqrt(d T)`.
    pub normalized: f64,
    pub normalized_std_err: f64,
}

/// Regret of [`run_mw`] on `seeds` independent noisy realizable streams.
pub fn regret_study(family: &SetFamily, rounds: usize, seeds: usize, noise: Rational, seed: u64) -> Result<RegretSummary> {
    if seeds == 0 {
        return Err(invalid("need at least one seed"));
    }
    let limits = Limits::default();
    let runs = (0..seeds as u64)
        .into_par_iter()
        .map_init(
            || Littlestone::new(family),
            |engine, i| {
                let engine = engine.as_mut().map_err(|e| e.clone())?;
                let s = trial_seed(seed, i);
                let labeled = noisy_labels(family, rounds, noise, s)?;
                run_mw(engine, &labeled, None, substream(s, SALT_LEARNER), &limits)
            },
        )
        .collect::<Result<Vec<MwRun>>>()?;
    let d = crate::dimension::ldim(family)?.max(0) as usize;
    let regrets: Vec<f64> = runs.iter().map(|r| r.regret as f64).collect();
    let est = crate::game::Estimate::from_samples(&regrets);
    let scale = ((d.max(1) * rounds.max(1)) as f64).sqrt();
    Ok(RegretSummary {
        rounds,
        seeds,
        d,
        ln_experts: runs[0].ln_experts,
        eta: runs[0].eta,
        mean_regret: est.mean,
        std_dev: est.std_err * (seeds as f64).sqrt(),
        std_err: est.std_err,
        mean_expected_regret: runs.iter().map(|r| r.expected_regret).sum::<f64>() / seeds as f64,
        normalized: est.mean / scale,
        normalized_std_err: est.std_err / scale,
    })
}

/// A labelled stream: items iid uniform over the domain, labels from a
/// uniformly chosen set of the family, each label flipped with odds
/// `noise`.
pub fn noisy_labels(family: &SetFamily, rounds: usize, noise: Rational, seed: u64) -> Result<Vec<(Element, bool)>> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if noise > Rational::from(1) {
        return Err(invalid(format!("noise {noise} exceeds 1")));
    }
    let m = family.domain_size();
    if m == 0 {
        return Err(invalid("labelled streams need a non-empty domain"));
    }
    let mut items = rng_from_seed(substream(seed, SALT_SECOND));
    let mut flips = rng_from_seed(substream(seed, SALT_LABELS));
    let target = family.set(items.random_range(0..family.len()))?.clone();
    Ok((0..rounds)
        .map(|_| {
            let x = items.random_range(0..m);
            let flip = flips.random_range(0..*noise.denom()) < *noise.numer();
            (Element(x as u32), target.contains(x) != flip)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{build_family, FamilySpec};

    fn elems(v: &[u32]) -> Vec<Element> {
        v.iter().map(|&x| Element(x)).collect()
    }

    fn family(spec: FamilySpec) -> SetFamily {
        build_family(&spec, 0).unwrap()
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("0.25").unwrap(), Rational::new(1, 4));
        assert_eq!(parse_rational("3/12").unwrap(), Rational::new(1, 4));
        assert_eq!(parse_rational("1").unwrap(), Rational::from(1));
        assert_eq!(parse_rational(".5").unwrap(), Rational::new(1, 2));
        for bad in ["", ".", "1/0", "-1", "a", "1e3"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn singleton_family_traces_its_set() {
        let f = SetFamily::new(4, vec![BitSet::from_indices(4, [1, 3])], "one").unwrap();
        let stream = elems(&[0, 1, 2, 3, 3, 1]);
        assert_eq!(dynamic_set_trace(&f, &[], &stream).unwrap(), vec![1, 3, 4, 5]);
        let mut engine = Littlestone::new(&f).unwrap();
        assert!(index_for(&mut engine, 0, &stream).unwrap().is_empty());
        assert_eq!(count_traces(&mut engine, &stream, &Limits::default()).unwrap(), 1);
    }

    #[test]
    fn thresholds_example() {
        let f = family(FamilySpec::Thresholds { m: 7 });
        let mut engine = Littlestone::new(&f).unwrap();
        let stream = elems(&[3, 1, 5, 0, 6, 2, 4]);
        let e = f.iter().position(|s| *s == BitSet::from_indices(7, 0..4)).unwrap();
        let index = index_for(&mut engine, e, &stream).unwrap();
        assert!(index.len() <= 3);
        let run = run_dynamic_set(&mut engine, &index, &stream).unwrap();
        let expected: Vec<usize> = (0..7).filter(|&t| stream[t].0 < 4).collect();
        assert_eq!(run.trace, expected);
        for &s in &run.states {
            assert!(engine.contains_set(s, e));
        }
        let sorted = elems(&[0, 1, 2, 3, 4, 5, 6]);
        assert!(count_traces(&mut engine, &sorted, &Limits::default()).unwrap() <= 64);
    }

    #[test]
    fn powerset_traces_are_all_distinct() {
        for d in 1..=4u32 {
            let f = family(FamilySpec::Powerset { m: d as usize });
            let mut engine = Littlestone::new(&f).unwrap();
            let stream: Vec<Element> = (0..d).map(Element).collect();
            assert_eq!(
                count_traces(&mut engine, &stream, &Limits::default()).unwrap(),
                1 << d
            );
        }
    }

    #[test]
    fn empty_family_retains_nothing() {
        let f = SetFamily::empty(3);
        let trace = dynamic_set_trace(&f, &[0, 1], &elems(&[0, 1, 2])).unwrap();
        assert!(trace.is_empty());
        assert!(sample_fractional_cover(&f, 5, Rational::new(1, 2), 0).is_err());
    }

    #[test]
    fn bad_positions_rejected() {
        let f = family(FamilySpec::Thresholds { m: 3 });
        assert!(dynamic_set_trace(&f, &[3], &elems(&[0, 1, 2])).is_err());
        assert!(dynamic_set_trace(&f, &[], &elems(&[0, 5])).is_err());
    }

    #[test]
    fn fractional_draw_shape() {
        let f = family(FamilySpec::Thresholds { m: 7 });
        for seed in 0..200 {
            let draw = sample_fractional_cover(&f, 40, Rational::new(1, 2), seed).unwrap();
            assert!(draw.index.len() <= 3);
            assert!(draw.index.iter().all(|i| draw.candidates.contains(i)));
        }
        let draw = sample_fractional_cover(&f, 5, Rational::from(1), 1).unwrap();
        assert_eq!(draw.candidates, vec![0, 1, 2, 3, 4]);
        assert_eq!(cover_rate(3, 5, Rational::from(1)).unwrap(), Rational::from(1));
        assert!(cover_rate(3, 5, Rational::from(0)).is_err());
        assert!(cover_rate(3, 5, Rational::new(3, 2)).is_err());
    }

    #[test]
    fn coverage_of_singleton_is_perfect() {
        let f = SetFamily::new(3, vec![BitSet::from_indices(3, [2])], "one").unwrap();
        let est = coverage_estimate(&f, 0, &elems(&[0, 2, 1, 2]), Rational::new(1, 2), None, 50, 4).unwrap();
        assert_eq!(est.lazy_success, 1.0);
        assert_eq!(est.mean_miss, 0.0);
        assert_eq!(est.cover_success, 1.0);
    }

    #[test]
    fn soa_bounds_and_duel() {
        let f = family(FamilySpec::Thresholds { m: 7 });
        let mut engine = Littlestone::new(&f).unwrap();
        let labeled: Vec<(Element, bool)> = elems(&[6, 0, 3, 5, 1, 2, 4]).into_iter().map(|x| (x, x.0 < 2)).collect();
        assert!(run_soa(&mut engine, &labeled).unwrap().mistakes <= 3);
        let (path, run) = soa_tree_duel(&mut engine).unwrap();
        assert_eq!(path.len(), 3);
        assert_eq!(run.mistakes, 3);
        assert!(f.iter().any(|s| path.iter().all(|&(x, y)| s.contains(x.index()) == y)));
    }

    #[test]
    fn mw_zero_rounds() {
        let f = family(FamilySpec::Thresholds { m: 7 });
        let mut engine = Littlestone::new(&f).unwrap();
        let run = run_mw(&mut engine, &[], None, 0, &Limits::default()).unwrap();
        assert_eq!((run.regret, run.expected_regret), (0, 0.0));
    }

    #[test]
    fn mw_best_expert_matches_best_set_when_realizable() {
        let f = family(FamilySpec::Thresholds { m: 15 });
        let mut engine = Littlestone::new(&f).unwrap();
        let labeled = noisy_labels(&f, 200, Rational::from(0), 5).unwrap();
        let run = run_mw(&mut engine, &labeled, None, 1, &Limits::default()).unwrap();
        assert_eq!(run.best_set_mistakes, 0);
        assert_eq!(run.best_expert_mistakes, 0);
        assert!(run.expected_regret <= (run.rounds as f64 * run.ln_experts / 2.0).sqrt());
    }
}
