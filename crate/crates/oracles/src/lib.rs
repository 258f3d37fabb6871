//! Slow, independent reference computations used by the test suites.
//!
//! Nothing here shares code paths with the algorithms under test beyond
//! the plain data types.

use std::collections::BTreeMap;

use advsample::{BitSet, Element, SetFamily};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

fn frac(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Whether some labelling of the complete depth-`h` tree is shattered by
/// `sets`, found by exhaustive search over node labels in preorder.
pub fn has_shattered_tree(sets: &[BitSet], domain: usize, h: usize) -> bool {
    if sets.is_empty() {
        return false;
    }
    if h == 0 {
        return true;
    }
    (0..domain).any(|x| {
        let (inside, outside): (Vec<BitSet>, Vec<BitSet>) =
            sets.iter().cloned().partition(|s| s.contains(x));
        has_shattered_tree(&outside, domain, h - 1) && has_shattered_tree(&inside, domain, h - 1)
    })
}

/// Enumerates every labelled tree of depth `h` and checks each of its
/// `2^h` branches against the family directly.
pub fn has_shattered_tree_enumerated(sets: &[BitSet], domain: usize, h: usize) -> bool {
    if sets.is_empty() {
        return false;
    }
    let nodes = (1usize << h) - 1;
    let mut labels = vec![0usize; nodes];
    loop {
        let ok = (0..1u64 << h).all(|branches| {
            let mut node = 0;
            let mut path = Vec::with_capacity(h);
            for level in 0..h {
                let y = branches >> level & 1 == 1;
                path.push((labels[node], y));
                node = 2 * node + if y { 2 } else { 1 };
            }
            sets.iter().any(|s| path.iter().all(|&(x, y)| s.contains(x) == y))
        });
        if ok {
            return true;
        }
        // odometer over labellings
        let mut i = 0;
        loop {
            if i == nodes {
                return false;
            }
            labels[i] += 1;
            if labels[i] < domain {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

/// Littlestone dimension by explicit tree enumeration; `-1` when empty.
pub fn brute_ldim(family: &SetFamily) -> i32 {
    let sets = family.sets();
    if sets.is_empty() {
        return -1;
    }
    let mut h = 0;
    // a shattered depth-h tree has 2^h distinct leaves
    while (1usize << (h + 1)) <= sets.len()
        && has_shattered_tree_enumerated(sets, family.domain_size(), h + 1)
    {
        h += 1;
    }
    h as i32
}

/// VC dimension by checking every subset of the domain.
pub fn brute_vcdim(family: &SetFamily) -> i32 {
    let m = family.domain_size();
    let sets = family.sets();
    if sets.is_empty() {
        return -1;
    }
    let mut best = 0;
    for mask in 0u64..1 << m {
        let size = mask.count_ones();
        if size as i32 <= best {
            continue;
        }
        let points: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let mut seen = std::collections::HashSet::new();
        for s in sets {
            let pattern: Vec<bool> = points.iter().map(|&x| s.contains(x)).collect();
            seen.insert(pattern);
        }
        if seen.len() == 1 << size {
            best = size as i32;
        }
    }
    best
}

/// Approximation error straight from the definition, or `None` for an
/// empty sample.
pub fn brute_app_error(family: &SetFamily, stream: &[Element], sample: &[usize]) -> Option<BigRational> {
    if sample.is_empty() {
        return None;
    }
    let n = stream.len() as i64;
    let k = sample.len() as i64;
    family
        .iter()
        .map(|s| {
            let a = sample.iter().filter(|&&i| s.contains(stream[i].index())).count() as i64;
            let b = stream.iter().filter(|x| s.contains(x.index())).count() as i64;
            let d = frac(a, k) - frac(b, n);
            if d < BigRational::zero() { -d } else { d }
        })
        .max()
}

/// Trajectory law `J_1, ..., J_n` (bit masks) of the plain reservoir
/// sampler: keep round `t` (0-based) with odds `k / (t + 1)` once full,
/// evicting a uniform slot.
pub fn reservoir_trajectory_law(n: usize, k: usize) -> BTreeMap<Vec<u64>, BigRational> {
    let mut paths: BTreeMap<Vec<u64>, BigRational> = BTreeMap::new();
    paths.insert(Vec::new(), BigRational::one());
    for t in 0..n {
        let mut next = BTreeMap::new();
        for (path, mass) in paths {
            let current = path.last().copied().unwrap_or(0);
            let mut push = |m: u64, w: BigRational| {
                let mut p = path.clone();
                p.push(m);
                *next.entry(p).or_insert_with(BigRational::zero) += w;
            };
            if t < k {
                push(current | 1 << t, mass);
                continue;
            }
            let i = (t + 1) as i64;
            push(current, &mass * frac(i - k as i64, i));
            for e in 0..t {
                if current >> e & 1 == 1 {
                    push(current & !(1 << e) | 1 << t, &mass * frac(k as i64, i) * frac(1, k as i64));
                }
            }
        }
        paths = next;
    }
    paths
}

/// Exact `E` and `Var` of `|I ∩ U|` for `I` uniform over `k`-subsets of
/// `[n]`, by enumerating all subsets.
pub fn hypergeometric_moments(n: usize, k: usize, u: u64) -> (BigRational, BigRational) {
    let subsets: Vec<u64> = (0u64..1 << n).filter(|m| m.count_ones() as usize == k).collect();
    let count = BigRational::from_integer(BigInt::from(subsets.len()));
    let hits: Vec<BigRational> = subsets
        .iter()
        .map(|m| BigRational::from_integer(BigInt::from((m & u).count_ones())))
        .collect();
    let mean = hits.iter().fold(BigRational::zero(), |a, b| a + b) / &count;
    let var = hits
        .iter()
        .map(|h| (h - &mean) * (h - &mean))
        .fold(BigRational::zero(), |a, b| a + b)
        / &count;
    (mean, var)
}

/// Final-set law of the sequential uniform rule by enumerating every
/// keep/discard path.
pub fn uniform_rule_law(n: usize, k: usize) -> BTreeMap<u64, BigRational> {
    let mut law = BTreeMap::new();
    fn go(n: usize, k: usize, t: usize, mask: u64, mass: BigRational, law: &mut BTreeMap<u64, BigRational>) {
        if t == n {
            *law.entry(mask).or_insert_with(BigRational::zero) += mass;
            return;
        }
        let kept = mask.count_ones() as i64;
        let keep = frac(k as i64 - kept, (n - t) as i64);
        if !keep.is_zero() {
            go(n, k, t + 1, mask | 1 << t, &mass * &keep, law);
        }
        let skip = BigRational::one() - keep;
        if !skip.is_zero() {
            go(n, k, t + 1, mask, mass * skip, law);
        }
    }
    go(n, k, 0, 0, BigRational::one(), &mut law);
    law
}

/// `P(I = mask)` for `I ~ Ber(n, p)`.
pub fn bernoulli_mask_probability(n: usize, p: &BigRational, mask: u64) -> BigRational {
    (0..n).fold(BigRational::one(), |acc, i| {
        if mask >> i & 1 == 1 {
            acc * p
        } else {
            acc * (BigRational::one() - p)
        }
    })
}

/// Expected regret bound of exponential weights with `N` experts over `T`
/// rounds at the tuned rate `sqrt(8 ln N / T)`: by Hoeffding's lemma the
/// per-round log-partition increment is at most `-η E[loss] + η²/8`, so
/// `E[L] - min L_i <= ln N / η + η T / 8 = sqrt(T ln N / 2)`.
pub fn hedge_regret_bound(rounds: usize, ln_experts: f64) -> f64 {
    (rounds as f64 * ln_experts / 2.0).sqrt()
}

/// `ln C(n, <= d)`, accumulated in `f64` term by term.
pub fn ln_count_up_to(n: u64, d: u64) -> f64 {
    let mut total = 0f64;
    let mut c = 1f64;
    for i in 0..=d.min(n) {
        if i > 0 {
            c = c * (n - i + 1) as f64 / i as f64;
        }
        total += c;
    }
    total.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_searches_agree_on_thresholds() {
        let sets: Vec<BitSet> = (0..=4).map(|i| BitSet::from_indices(4, 0..i)).collect();
        let f = SetFamily::new(4, sets.clone(), "t4").unwrap();
        for h in 0..4 {
            assert_eq!(has_shattered_tree(&sets, 4, h), has_shattered_tree_enumerated(&sets, 4, h));
        }
        assert_eq!(brute_ldim(&f), 2);
        assert_eq!(brute_vcdim(&f), 1);
    }

    #[test]
    fn reservoir_law_sums_to_one() {
        let law = reservoir_trajectory_law(5, 2);
        assert_eq!(law.values().fold(BigRational::zero(), |a, b| a + b), BigRational::one());
    }

    #[test]
    fn uniform_rule_is_uniform() {
        let law = uniform_rule_law(5, 2);
        assert_eq!(law.len(), 10);
        assert!(law.values().all(|p| *p == frac(1, 10)));
    }

    #[test]
    fn hypergeometric_small() {
        let (m, v) = hypergeometric_moments(4, 2, 0b0011);
        assert_eq!(m, frac(1, 1));
        assert_eq!(v, frac(1, 3));
    }
}
