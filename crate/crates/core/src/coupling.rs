//! Online couplings between sampling schemes, and exact marginal laws.
//!
//! Two couplings are provided:
//!
//! * uniform against Bernoulli on `2k` rounds: every round draws the
//!   Bernoulli bit first and then the uniform bit from the maximal
//!   (monotone) coupling of the two conditional keep probabilities;
//! * reservoir against uniform: a uniform final set `I'` is drawn up front
//!   and a reservoir trajectory is simulated conditioned on ending in it.
//!
//! Exact laws use `BigRational`; Monte Carlo aggregates use `f64`.

use std::collections::BTreeMap;
use std::ops::Sub;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};
use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::Rational;
use crate::error::{invalid, Error, Result};
use crate::family::binomial;
use crate::game::quantile;
use crate::rng::{rng_from_seed, trial_seed, Rng};
use crate::sampler::Feedback;

/// Largest horizon accepted by the exact enumerations.
pub const MAX_EXACT_N: usize = 12;

/// Joint law `[ber][uni]` of the maximal coupling of `Bernoulli(p)` and
/// `Bernoulli(q)`: the two bits agree except with probability `|p - q|`,
/// and the larger parameter's bit dominates.
pub fn monotone_joint<T>(p: &T, q: &T) -> [[T; 2]; 2]
where
    T: Clone + Ord + Zero + One + Sub<Output = T>,
{
    let gap = |a: &T, b: &T| if a > b { a.clone() - b.clone() } else { T::zero() };
    let both = p.min(q).clone();
    let top = p.max(q).clone();
    [
        [T::one() - top, gap(q, p)],
        [gap(p, q), both],
    ]
}

/// `P(uni = 1 | ber)` under [`monotone_joint`]; zero when `ber` has
/// probability zero.
pub fn uni_given_ber<T>(p: &T, q: &T, ber: bool) -> T
where
    T: Clone + Ord + Zero + One + Sub<Output = T> + std::ops::Div<Output = T>,
{
    let joint = monotone_joint(p, q);
    let row = &joint[ber as usize];
    let mass = row[0].clone() + row[1].clone();
    if mass.is_zero() {
        T::zero()
    } else {
        row[1].clone() / mass
    }
}

/// `q_t = (k - kept) / (2k - t)` for 0-based round `t`.
pub fn uniform_rate(k: usize, t: usize, kept: usize) -> Rational {
    Rational::new((k - kept) as u64, (2 * k - t) as u64)
}

fn coin(rng: &mut Rng, r: &Ratio<u128>) -> bool {
    let (num, den) = (*r.numer(), *r.denom());
    num >= den || (num > 0 && rng.random_range(0..den) < num)
}

fn widen(r: Rational) -> Ratio<u128> {
    Ratio::new(*r.numer() as u128, *r.denom() as u128)
}

fn check_probability(p: Rational) -> Result<()> {
    if p > Rational::one() {
        return Err(invalid(format!("probability {p} exceeds 1")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoupledRound {
    /// Uniform keep probability `q_t` as `p/q`.
    pub q: String,
    pub ber: bool,
    pub uni: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingTrace {
    pub k: usize,
    pub p: String,
    pub rounds: Vec<CoupledRound>,
    /// `I'`, the Bernoulli sample.
    pub ber_set: Vec<usize>,
    /// `I`, the uniform sample.
    pub uni_set: Vec<usize>,
    /// `|I Δ I'|`.
    pub mismatches: usize,
    /// Rounds with `p <= q_t` where the Bernoulli bit was not dominated.
    pub monotone_violations: usize,
}

/// One run of the uniform/Bernoulli coupling on `2k` rounds.
pub fn couple_uni_ber(k: usize, p: Rational, seed: u64) -> Result<CouplingTrace> {
    check_probability(p)?;
    let mut rng = rng_from_seed(seed);
    Ok(couple_uni_ber_with(k, p, &mut rng))
}

fn couple_uni_ber_with(k: usize, p: Rational, rng: &mut Rng) -> CouplingTrace {
    let wide_p = widen(p);
    let mut rounds = Vec::with_capacity(2 * k);
    let (mut ber_set, mut uni_set) = (Vec::new(), Vec::new());
    let mut violations = 0;
    for t in 0..2 * k {
        let q = uniform_rate(k, t, uni_set.len());
        let ber = coin(rng, &wide_p);
        let uni = coin(rng, &uni_given_ber(&wide_p, &widen(q), ber));
        if p <= q && ber && !uni {
            violations += 1;
        }
        if ber {
            ber_set.push(t);
        }
        if uni {
            uni_set.push(t);
        }
        rounds.push(CoupledRound {
            q: format!("{}/{}", q.numer(), q.denom()),
            ber,
            uni,
        });
    }
    let mismatches = rounds.iter().filter(|r| r.ber != r.uni).count();
    CouplingTrace {
        k,
        p: format!("{}/{}", p.numer(), p.denom()),
        rounds,
        ber_set,
        uni_set,
        mismatches,
        monotone_violations: violations,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniBerSummary {
    pub k: usize,
    pub p: String,
    pub trials: usize,
    pub mean_mismatch: f64,
    pub std_err: f64,
    pub p99_mismatch: f64,
    /// `sqrt(2k)`.
    pub reference: f64,
    /// Trials where `|I| != k`; always zero.
    pub wrong_size: usize,
    pub monotone_violations: usize,
}

/// Monte Carlo summary of [`couple_uni_ber`].
pub fn uni_ber_experiment(k: usize, p: Rational, trials: usize, seed: u64) -> Result<UniBerSummary> {
    check_probability(p)?;
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let traces: Vec<(usize, usize, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let tr = couple_uni_ber_with(k, p, &mut rng_from_seed(trial_seed(seed, i)));
            (tr.mismatches, tr.uni_set.len(), tr.monotone_violations)
        })
        .collect();
    let mut diffs: Vec<f64> = traces.iter().map(|t| t.0 as f64).collect();
    let est = crate::game::Estimate::from_samples(&diffs);
    diffs.sort_by(f64::total_cmp);
    Ok(UniBerSummary {
        k,
        p: format!("{}/{}", p.numer(), p.denom()),
        trials,
        mean_mismatch: est.mean,
        std_err: est.std_err,
        p99_mismatch: quantile(&diffs, 0.99).expect("at least one trial"),
        reference: (2.0 * k as f64).sqrt(),
        wrong_size: traces.iter().filter(|t| t.1 != k).count(),
        monotone_violations: traces.iter().map(|t| t.2).sum(),
    })
}

fn big(r: Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Exact joint law of `(I', I)` under the uniform/Bernoulli coupling, as
/// bit masks over the `2k` rounds. Zero-probability outcomes are omitted.
pub fn uni_ber_law(k: usize, p: Rational) -> Result<BTreeMap<(u64, u64), BigRational>> {
    check_probability(p)?;
    if 2 * k > MAX_EXACT_N {
        return Err(Error::CapExceeded {
            what: "exact coupling horizon",
            value: 2 * k as u128,
            cap: MAX_EXACT_N as u128,
        });
    }
    let p = big(p);
    let mut states: BTreeMap<(u64, u64), BigRational> = BTreeMap::new();
    states.insert((0, 0), BigRational::one());
    for t in 0..2 * k {
        let mut next = BTreeMap::new();
        for ((ber, uni), mass) in states {
            let kept = uni.count_ones() as usize;
            let q = big(uniform_rate(k, t, kept));
            let joint = monotone_joint(&p, &q);
            for (b, row) in joint.iter().enumerate() {
                for (u, w) in row.iter().enumerate() {
                    if w.is_zero() {
                        continue;
                    }
                    let key = (ber | (b as u64) << t, uni | (u as u64) << t);
                    *next.entry(key).or_insert_with(BigRational::zero) += &mass * w;
                }
            }
        }
        states = next;
    }
    Ok(states)
}

/// Exact `E|I Δ I'|` under the uniform/Bernoulli coupling.
pub fn exact_mean_mismatch(k: usize, p: Rational) -> Result<BigRational> {
    Ok(uni_ber_law(k, p)?
        .iter()
        .map(|(&(b, u), w)| w * BigRational::from_integer(BigInt::from((b ^ u).count_ones())))
        .fold(BigRational::zero(), |a, b| a + b))
}

/// An action of the conditioned reservoir in one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResAction {
    Skip,
    Insert { evict: Option<usize> },
}

impl ResAction {
    pub fn feedback(self) -> Feedback {
        match self {
            ResAction::Skip => Feedback::DISCARDED,
            ResAction::Insert { evict } => Feedback {
                kept: true,
                evicted: evict,
            },
        }
    }
}

/// Integer-weighted options of a reservoir of size `k` at 0-based round
/// `t`, conditioned on its final set being `target`. `retained` is the
/// reservoir content before the round. Options with zero weight are left
/// out.
pub fn conditional_options(k: usize, t: usize, retained: &[usize], target: &[bool]) -> Vec<(ResAction, u64)> {
    if t < k {
        return vec![(ResAction::Insert { evict: None }, 1)];
    }
    let free: Vec<usize> = retained.iter().copied().filter(|&e| !target[e]).collect();
    let evictions = free.iter().map(|&e| (ResAction::Insert { evict: Some(e) }, 1));
    if target[t] {
        assert!(!free.is_empty(), "a forced insert always has an unprotected slot");
        evictions.collect()
    } else {
        let skip = (t + 1 - k) as u64;
        std::iter::once((ResAction::Skip, skip)).chain(evictions).collect()
    }
}

fn apply(retained: &mut Vec<usize>, t: usize, action: ResAction) {
    if let ResAction::Insert { evict } = action {
        if let Some(e) = evict {
            retained.retain(|&i| i != e);
        }
        retained.push(t);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReservoirCoupling {
    pub n: usize,
    pub k: usize,
    /// `I'`, drawn uniformly.
    pub target: Vec<usize>,
    pub decisions: Vec<Feedback>,
    /// `J_1, ..., J_n`, each ascending.
    pub trajectory: Vec<Vec<usize>>,
}

impl ReservoirCoupling {
    pub fn ends_in_target(&self) -> bool {
        self.trajectory.last().map_or(self.target.is_empty(), |j| *j == self.target)
    }
}

/// Draws `I' ~ Uni(n, k)` and a reservoir trajectory conditioned to end in it.
pub fn couple_res_uni(n: usize, k: usize, seed: u64) -> Result<ReservoirCoupling> {
    if k > n {
        return Err(invalid(format!("sample size {k} exceeds horizon {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut target: Vec<usize> = index::sample(&mut rng, n, k).into_vec();
    target.sort_unstable();
    let mut member = vec![false; n];
    target.iter().for_each(|&i| member[i] = true);
    let mut retained: Vec<usize> = Vec::with_capacity(k);
    let mut decisions = Vec::with_capacity(n);
    let mut trajectory = Vec::with_capacity(n);
    for t in 0..n {
        let options = conditional_options(k, t, &retained, &member);
        let total: u64 = options.iter().map(|o| o.1).sum();
        let mut pick = rng.random_range(0..total);
        let action = options
            .iter()
            .find(|o| {
                let hit = pick < o.1;
                pick = pick.saturating_sub(o.1);
                hit
            })
            .expect("pick below total")
            .0;
        apply(&mut retained, t, action);
        decisions.push(action.feedback());
        let mut snapshot = retained.clone();
        snapshot.sort_unstable();
        trajectory.push(snapshot);
    }
    Ok(ReservoirCoupling {
        n,
        k,
        target,
        decisions,
        trajectory,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResUniSummary {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    /// Trials where the last reservoir content equals `I'`.
    pub matched: usize,
    /// Trials with an eviction during the first `k` rounds; always zero.
    pub early_evictions: usize,
}

pub fn res_uni_experiment(n: usize, k: usize, trials: usize, seed: u64) -> Result<ResUniSummary> {
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let runs = (0..trials as u64)
        .into_par_iter()
        .map(|i| couple_res_uni(n, k, trial_seed(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResUniSummary {
        n,
        k,
        trials,
        matched: runs.iter().filter(|r| r.ends_in_target()).count(),
        early_evictions: runs
            .iter()
            .filter(|r| r.decisions[..k].iter().any(|f| !f.kept || f.evicted.is_some()))
            .count(),
    })
}

fn check_exact(n: usize, k: usize) -> Result<()> {
    if k > n {
        return Err(invalid(format!("sample size {k} exceeds horizon {n}")));
    }
    if n > MAX_EXACT_N {
        return Err(Error::CapExceeded {
            what: "exact enumeration horizon",
            value: n as u128,
            cap: MAX_EXACT_N as u128,
        });
    }
    Ok(())
}

/// Law of the reservoir trajectory under the conditioned construction, the
/// target being uniform over `k`-subsets. Keys list `J_1, ..., J_n` as bit masks.
pub fn coupled_trajectory_law(n: usize, k: usize) -> Result<BTreeMap<Vec<u64>, BigRational>> {
    check_exact(n, k)?;
    let targets = binomial(n as u64, k as u64);
    let mut law = BTreeMap::new();
    for mask in 0u64..1 << n {
        if mask.count_ones() as usize != k {
            continue;
        }
        let member: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let start = BigRational::new(BigInt::one(), BigInt::from(targets));
        walk_conditioned(k, &member, 0, &[], &mut Vec::new(), start, &mut law);
    }
    Ok(law)
}

fn walk_conditioned(
    k: usize,
    member: &[bool],
    t: usize,
    retained: &[usize],
    path: &mut Vec<u64>,
    mass: BigRational,
    law: &mut BTreeMap<Vec<u64>, BigRational>,
) {
    if t == member.len() {
        *law.entry(path.clone()).or_insert_with(BigRational::zero) += mass;
        return;
    }
    let options = conditional_options(k, t, retained, member);
    let total: u64 = options.iter().map(|o| o.1).sum();
    for (action, w) in options {
        let mut next = retained.to_vec();
        apply(&mut next, t, action);
        path.push(next.iter().fold(0, |m, &i| m | 1 << i));
        let share = BigRational::new(BigInt::from(w), BigInt::from(total));
        walk_conditioned(k, member, t + 1, &next, path, &mass * share, law);
        path.pop();
    }
}

/// Exact distribution of a sampler's final index set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactDistribution {
    pub n: usize,
    pub k: usize,
    pub probabilities: BTreeMap<u64, BigRational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactEntry {
    pub set: Vec<usize>,
    pub probability: String,
}

impl ExactDistribution {
    pub fn total(&self) -> BigRational {
        self.probabilities.values().fold(BigRational::zero(), |a, b| a + b)
    }

    /// Entries in mask order with probabilities rendered as `p/q`.
    pub fn entries(&self) -> Vec<ExactEntry> {
        self.probabilities
            .iter()
            .map(|(&mask, pr)| ExactEntry {
                set: (0..self.n).filter(|i| mask >> i & 1 == 1).collect(),
                probability: format!("{}/{}", pr.numer(), pr.denom()),
            })
            .collect()
    }

    pub fn is_uniform(&self) -> bool {
        let expected = BigRational::new(BigInt::one(), BigInt::from(binomial(self.n as u64, self.k as u64)));
        self.probabilities.len() as u128 == binomial(self.n as u64, self.k as u64)
            && self.probabilities.values().all(|p| *p == expected)
    }
}

/// Final-set law of `Res(n, k)` by dynamic programming over reservoir contents.
pub fn reservoir_marginal_exact(n: usize, k: usize) -> Result<ExactDistribution> {
    check_exact(n, k)?;
    let mut states: BTreeMap<u64, BigRational> = BTreeMap::new();
    states.insert(0, BigRational::one());
    for t in 0..n {
        let mut next = BTreeMap::new();
        for (mask, mass) in states {
            let mut add = |m: u64, w: BigRational| {
                *next.entry(m).or_insert_with(BigRational::zero) += w;
            };
            if t < k {
                add(mask | 1 << t, mass);
                continue;
            }
            let i = BigInt::from(t as u64 + 1);
            add(mask, &mass * BigRational::new(BigInt::from((t + 1 - k) as u64), i.clone()));
            let each = &mass * BigRational::new(BigInt::one(), i);
            for e in (0..t).filter(|e| mask >> e & 1 == 1) {
                add(mask & !(1 << e) | 1 << t, each.clone());
            }
        }
        states = next;
    }
    Ok(ExactDistribution {
        n,
        k,
        probabilities: states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn joint_law_rows() {
        let j = monotone_joint(&r(1, 2), &r(1, 3));
        assert_eq!(j, [[r(1, 2), r(0, 1)], [r(1, 6), r(1, 3)]]);
        let j = monotone_joint(&r(1, 4), &r(3, 4));
        assert_eq!(j[1][0], r(0, 1));
        assert_eq!(j[0][1], r(1, 2));
        assert_eq!(uni_given_ber(&r(0, 1), &r(1, 2), true), r(0, 1));
        assert_eq!(uni_given_ber(&r(1, 2), &r(1, 2), true), r(1, 1));
    }

    #[test]
    fn k_one_mismatch() {
        let law = uni_ber_law(1, Rational::new(1, 2)).unwrap();
        let mean: BigRational = law
            .iter()
            .map(|(&(b, u), w)| w * BigRational::from_integer(BigInt::from((b ^ u).count_ones())))
            .fold(BigRational::zero(), |a, b| a + b);
        assert_eq!(mean, r(1, 2));
        // round 0 never mismatches
        assert!(law.keys().all(|&(b, u)| (b ^ u) & 1 == 0));
    }

    #[test]
    fn sampled_coupling_shapes() {
        for seed in 0..100 {
            let tr = couple_uni_ber(5, Rational::new(1, 2), seed).unwrap();
            assert_eq!(tr.uni_set.len(), 5);
            assert_eq!(tr.monotone_violations, 0);
            assert_eq!(tr.rounds[0].q, "1/2");
        }
        assert!(couple_uni_ber(2, Rational::new(3, 2), 0).is_err());
    }

    #[test]
    fn reservoir_small_cases() {
        let d = reservoir_marginal_exact(1, 1).unwrap();
        assert_eq!(d.probabilities[&1], r(1, 1));
        let d = reservoir_marginal_exact(3, 1).unwrap();
        assert_eq!(d.probabilities.len(), 3);
        assert!(d.probabilities.values().all(|p| *p == r(1, 3)));
        let d = reservoir_marginal_exact(5, 2).unwrap();
        assert!(d.is_uniform());
        assert_eq!(d.entries()[0].probability, "1/10");
        assert!(reservoir_marginal_exact(13, 2).is_err());
    }

    #[test]
    fn conditioned_reservoir_ends_in_target() {
        for seed in 0..300 {
            let run = couple_res_uni(12, 4, seed).unwrap();
            assert!(run.ends_in_target());
            assert!(run.decisions[..4].iter().all(|f| *f == Feedback::KEPT));
        }
        assert!(couple_res_uni(2, 3, 0).is_err());
    }

    #[test]
    fn coupled_law_sums_to_one() {
        let law = coupled_trajectory_law(4, 2).unwrap();
        let total = law.values().fold(BigRational::zero(), |a, b| a + b);
        assert_eq!(total, BigRational::one());
    }
}
