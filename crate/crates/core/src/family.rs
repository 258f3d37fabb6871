//! Finite set families over an indexed domain `0..m`.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::error::{invalid, Error, Result};
use crate::rng::rng_from_seed;

/// An item of a finite domain, identified by its index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Element(pub u32);

impl Element {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Size limits protecting the exponential computations downstream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_domain: usize,
    pub max_powerset_domain: usize,
    /// Largest family the dimension recursion accepts.
    pub max_family: usize,
    /// Largest number of index sets / subsets any enumeration may visit.
    pub max_enumeration: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_domain: 64,
            max_powerset_domain: 24,
            max_family: 1 << 16,
            max_enumeration: 20_000_000,
        }
    }
}

pub(crate) fn check_cap(what: &'static str, value: u128, cap: u128) -> Result<()> {
    if value > cap {
        Err(Error::CapExceeded { what, value, cap })
    } else {
        Ok(())
    }
}

/// A domain of size `domain_size` and an ordered list of its subsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetFamily {
    domain_size: usize,
    sets: Vec<BitSet>,
    label: String,
}

impl SetFamily {
    /// Builds a family, dropping repeated sets (first occurrence wins).
    pub fn new(domain_size: usize, sets: Vec<BitSet>, label: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        let sets = sets.into_iter().filter(|s| seen.insert(s.clone())).collect();
        Self::with_duplicates(domain_size, sets, label)
    }

    /// Builds a family keeping repeated sets.
    pub fn with_duplicates(
        domain_size: usize,
        sets: Vec<BitSet>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if let Some(bad) = sets.iter().find(|s| s.len() != domain_size) {
            return Err(invalid(format!(
                "set of width {} in a family over domain {domain_size}",
                bad.len()
            )));
        }
        Ok(SetFamily {
            domain_size,
            sets,
            label: label.into(),
        })
    }

    pub fn empty(domain_size: usize) -> Self {
        SetFamily {
            domain_size,
            sets: Vec::new(),
            label: "empty".into(),
        }
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn sets(&self) -> &[BitSet] {
        &self.sets
    }

    pub fn set(&self, index: usize) -> Result<&BitSet> {
        self.sets.get(index).ok_or(Error::OutOfRange {
            what: "set index",
            index,
            limit: self.sets.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn iter(&self) -> impl Iterator<Item = &BitSet> {
        self.sets.iter()
    }

    pub(crate) fn check_element(&self, x: Element) -> Result<()> {
        if x.index() < self.domain_size {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "element",
                index: x.index(),
                limit: self.domain_size,
            })
        }
    }

    /// The half-family of sets containing `x` (`keep = true`) or avoiding it.
    pub fn restrict(&self, x: Element, keep: bool) -> Result<SetFamily> {
        self.check_element(x)?;
        let sets = self
            .sets
            .iter()
            .filter(|s| s.contains(x.index()) == keep)
            .cloned()
            .collect();
        Ok(SetFamily {
            domain_size: self.domain_size,
            sets,
            label: format!("{}|{}{}", self.label, if keep { "+" } else { "-" }, x),
        })
    }

    /// Number of stream positions (with multiplicity) whose element lies in set `set_index`.
    pub fn intersection_count(&self, set_index: usize, stream: &[Element]) -> Result<usize> {
        let set = self.set(set_index)?;
        Ok(stream.iter().filter(|x| set.contains(x.index())).count())
    }
}

/// Description of a family to build.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// Prefixes `{0..i}` for `i = 0..=m`, including the empty prefix.
    Thresholds { m: usize },
    /// Given sets, as hex bit-vectors (lowest bit = element 0).
    Explicit {
        domain_size: usize,
        sets: Vec<String>,
    },
    /// One random half of every line of the projective plane of odd prime order `p`.
    HalfLines {
        p: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// `count` uniform subsets of size `n/2` of a domain of size `n`.
    RandomHalfsets {
        n: usize,
        count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default)]
        keep_duplicates: bool,
    },
    Powerset { m: usize },
}

impl FamilySpec {
    pub fn explicit(domain_size: usize, sets: &[BitSet]) -> Self {
        FamilySpec::Explicit {
            domain_size,
            sets: sets.iter().map(BitSet::to_hex).collect(),
        }
    }

    /// Parses an inline spec (`thresholds:7`, `powerset:4`, `halflines:3[:seed]`,
    /// `halfsets:n=8,N=16[,seed=7][,dups]`) or, failing that, reads a TOML spec file.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let num = |s: &str, what: &str| -> Result<u64> {
            s.trim()
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad {what} {s:?} in family spec {text:?}")))
        };
        match kind {
            "thresholds" => Ok(FamilySpec::Thresholds {
                m: num(rest, "m")? as usize,
            }),
            "powerset" => Ok(FamilySpec::Powerset {
                m: num(rest, "m")? as usize,
            }),
            "halflines" => {
                let mut parts = rest.split(':');
                let p = num(parts.next().unwrap_or(""), "p")? as u32;
                let seed = parts.next().map(|s| num(s, "seed")).transpose()?;
                Ok(FamilySpec::HalfLines { p, seed })
            }
            "halfsets" => {
                let (mut n, mut count, mut seed, mut dups) = (None, None, None, false);
                for field in rest.split(',').filter(|f| !f.is_empty()) {
                    match field.split_once('=') {
                        Some(("n", v)) => n = Some(num(v, "n")? as usize),
                        Some(("N", v)) => count = Some(num(v, "N")? as usize),
                        Some(("seed", v)) => seed = Some(num(v, "seed")?),
                        None if field == "dups" => dups = true,
                        _ => return Err(Error::Parse(format!("unknown halfsets field {field:?}"))),
                    }
                }
                Ok(FamilySpec::RandomHalfsets {
                    n: n.ok_or_else(|| Error::Parse("halfsets needs n=".into()))?,
                    count: count.ok_or_else(|| Error::Parse("halfsets needs N=".into()))?,
                    seed,
                    keep_duplicates: dups,
                })
            }
            _ => Self::from_file(Path::new(text)),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read family spec {}: {e}", path.display())))?;
        toml::from_str(&body).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// Number of `k`-subsets of an `n`-set; saturates at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `sum_{i <= d} C(n, i)`, saturating.
pub fn binomial_up_to(n: u64, d: u64) -> u128 {
    (0..=d.min(n)).fold(0u128, |acc, i| acc.saturating_add(binomial(n, i)))
}

/// The projective plane PG(2, p): points and lines are normalized nonzero
/// triples over `Z_p`, a point lies on a line when their dot product vanishes.
#[derive(Clone, Debug)]
pub struct ProjectivePlane {
    pub p: u32,
    pub points: Vec<[u32; 3]>,
    /// Each line as the set of point indices on it.
    pub lines: Vec<BitSet>,
}

impl ProjectivePlane {
    pub fn new(p: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(invalid(format!("projective plane order {p} is not prime")));
        }
        let mut points = Vec::new();
        for a in 0..p {
            for b in 0..p {
                points.push([1, a, b]);
            }
        }
        for b in 0..p {
            points.push([0, 1, b]);
        }
        points.push([0, 0, 1]);
        let n = points.len();
        let lines = points
            .iter()
            .map(|l| {
                BitSet::from_indices(
                    n,
                    points.iter().enumerate().filter_map(|(i, q)| {
                        let dot: u64 = (0..3).map(|c| l[c] as u64 * q[c] as u64).sum();
                        dot.is_multiple_of(p as u64).then_some(i)
                    }),
                )
            })
            .collect();
        Ok(ProjectivePlane { p, points, lines })
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }
}

/// Builds a family. Randomized kinds use their own `seed` when given, else `rng_seed`.
pub fn build_family(spec: &FamilySpec, rng_seed: u64) -> Result<SetFamily> {
    build_family_with(spec, rng_seed, &Limits::default())
}

pub fn build_family_with(spec: &FamilySpec, rng_seed: u64, limits: &Limits) -> Result<SetFamily> {
    let domain_cap = |m: usize, cap: usize| check_cap("domain size", m as u128, cap as u128);
    match *spec {
        FamilySpec::Thresholds { m } => {
            domain_cap(m, limits.max_domain)?;
            let sets = (0..=m).map(|i| BitSet::from_indices(m, 0..i)).collect();
            SetFamily::new(m, sets, format!("thresholds:{m}"))
        }
        FamilySpec::Powerset { m } => {
            domain_cap(m, limits.max_powerset_domain)?;
            let sets = (0u64..1 << m)
                .map(|mask| BitSet::from_indices(m, (0..m).filter(|&i| mask >> i & 1 == 1)))
                .collect();
            SetFamily::new(m, sets, format!("powerset:{m}"))
        }
        FamilySpec::Explicit {
            domain_size,
            ref sets,
        } => {
            domain_cap(domain_size, limits.max_domain)?;
            let sets = sets
                .iter()
                .map(|h| BitSet::from_hex(domain_size, h))
                .collect::<Result<Vec<_>>>()?;
            SetFamily::new(domain_size, sets, "explicit")
        }
        FamilySpec::HalfLines { p, seed } => {
            if p == 2 {
                return Err(invalid("half lines need an odd prime order"));
            }
            let points = p as u128 * p as u128 + p as u128 + 1;
            check_cap("domain size", points, limits.max_domain as u128)?;
            let plane = ProjectivePlane::new(p)?;
            let seed = seed.unwrap_or(rng_seed);
            let mut rng = rng_from_seed(seed);
            let half = (p as usize).div_ceil(2);
            let n = plane.point_count();
            let sets = plane
                .lines
                .iter()
                .map(|line| {
                    let on_line: Vec<usize> = line.iter().collect();
                    let pick = index::sample(&mut rng, on_line.len(), half);
                    BitSet::from_indices(n, pick.iter().map(|j| on_line[j]))
                })
                .collect();
            SetFamily::new(n, sets, format!("halflines:{p}:{seed}"))
        }
        FamilySpec::RandomHalfsets {
            n,
            count,
            seed,
            keep_duplicates,
        } => {
            if n % 2 != 0 {
                return Err(invalid(format!("random half-sets need an even domain, got {n}")));
            }
            domain_cap(n, limits.max_domain)?;
            if !keep_duplicates && count as u128 > binomial(n as u64, n as u64 / 2) {
                return Err(invalid(format!(
                    "cannot draw {count} distinct half-sets of a {n}-element domain"
                )));
            }
            let seed = seed.unwrap_or(rng_seed);
            let mut rng = rng_from_seed(seed);
            let mut draw = || BitSet::from_indices(n, index::sample(&mut rng, n, n / 2).iter());
            let label = format!("halfsets:n={n},N={count},seed={seed}");
            if keep_duplicates {
                let sets = (0..count).map(|_| draw()).collect();
                SetFamily::with_duplicates(n, sets, label)
            } else {
                let mut seen = HashSet::new();
                let mut sets = Vec::with_capacity(count);
                while sets.len() < count {
                    let s = draw();
                    if seen.insert(s.clone()) {
                        sets.push(s);
                    }
                }
                SetFamily::with_duplicates(n, sets, label)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn members(s: &BitSet) -> Vec<usize> {
        s.iter().collect()
    }

    #[test]
    fn thresholds_include_empty_prefix() {
        let f = build_family(&FamilySpec::Thresholds { m: 3 }, 0).unwrap();
        assert_eq!(f.domain_size(), 3);
        let sets: Vec<_> = f.iter().map(members).collect();
        assert_eq!(sets, vec![vec![], vec![0], vec![0, 1], vec![0, 1, 2]]);
    }

    #[test]
    fn half_lines_order_three() {
        let f = build_family(&FamilySpec::HalfLines { p: 3, seed: Some(1) }, 0).unwrap();
        assert_eq!(f.domain_size(), 13);
        assert_eq!(f.len(), 13);
        assert!(f.iter().all(|s| s.count() == 2));
        let plane = ProjectivePlane::new(3).unwrap();
        assert!(plane.lines.iter().all(|l| l.count() == 4));
    }

    #[test]
    fn halfsets_have_exact_size() {
        let spec = FamilySpec::parse("halfsets:n=8,N=16,seed=7").unwrap();
        let f = build_family(&spec, 0).unwrap();
        assert_eq!(f.len(), 16);
        assert_eq!(f.domain_size(), 8);
        assert!(f.iter().all(|s| s.count() == 4));
    }

    #[test]
    fn halfsets_keep_duplicates_on_request() {
        let spec = FamilySpec::RandomHalfsets {
            n: 2,
            count: 5,
            seed: Some(3),
            keep_duplicates: true,
        };
        assert_eq!(build_family(&spec, 0).unwrap().len(), 5);
        let spec = FamilySpec::RandomHalfsets {
            n: 2,
            count: 5,
            seed: Some(3),
            keep_duplicates: false,
        };
        assert!(build_family(&spec, 0).is_err());
    }

    #[test]
    fn spec_errors() {
        assert!(build_family(&FamilySpec::HalfLines { p: 4, seed: None }, 0).is_err());
        assert!(build_family(&FamilySpec::HalfLines { p: 2, seed: None }, 0).is_err());
        assert!(build_family(&FamilySpec::HalfLines { p: 11, seed: None }, 0).is_err());
        let odd = FamilySpec::RandomHalfsets {
            n: 7,
            count: 2,
            seed: None,
            keep_duplicates: false,
        };
        assert!(build_family(&odd, 0).is_err());
        assert!(matches!(
            build_family(&FamilySpec::Powerset { m: 25 }, 0),
            Err(Error::CapExceeded { .. })
        ));
        assert!(build_family(&FamilySpec::Thresholds { m: 65 }, 0).is_err());
    }

    #[test]
    fn restrict_examples() {
        let f = build_family(&FamilySpec::Thresholds { m: 3 }, 0).unwrap();
        let r = f.restrict(Element(1), true).unwrap();
        assert_eq!(
            r.iter().map(members).collect::<Vec<_>>(),
            vec![vec![0, 1], vec![0, 1, 2]]
        );
        let plus = f.restrict(Element(0), true).unwrap().len();
        let minus = f.restrict(Element(0), false).unwrap().len();
        assert_eq!((plus, minus), (3, 1));
        assert!(SetFamily::empty(3).restrict(Element(2), true).unwrap().is_empty());
        assert!(f.restrict(Element(3), true).is_err());
    }

    #[test]
    fn intersection_counts_multiset() {
        let f = SetFamily::new(
            4,
            vec![
                BitSet::from_indices(4, [1, 2]),
                BitSet::new(4),
                BitSet::full(4),
            ],
            "t",
        )
        .unwrap();
        let s = |v: &[u32]| v.iter().map(|&x| Element(x)).collect::<Vec<_>>();
        assert_eq!(f.intersection_count(0, &s(&[1, 1, 3])).unwrap(), 2);
        assert_eq!(f.intersection_count(1, &s(&[0, 1, 2])).unwrap(), 0);
        assert_eq!(f.intersection_count(2, &s(&[0, 1, 2, 3, 3])).unwrap(), 5);
        assert!(f.intersection_count(3, &[]).is_err());
    }

    #[test]
    fn parse_inline_and_file() {
        assert_eq!(
            FamilySpec::parse("halflines:3:9").unwrap(),
            FamilySpec::HalfLines { p: 3, seed: Some(9) }
        );
        let dir = std::env::temp_dir().join(format!("advsample-spec-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("fam.toml");
        std::fs::write(&path, "kind = \"explicit\"\ndomain_size = 3\nsets = [\"3\", \"4\"]\n").unwrap();
        let spec = FamilySpec::parse(path.to_str().unwrap()).unwrap();
        let f = build_family(&spec, 0).unwrap();
        assert_eq!(f.len(), 2);
        assert!(f.set(1).unwrap().contains(2));
        assert!(FamilySpec::parse("nonsense:1").is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(7, 3), 35);
        assert_eq!(binomial_up_to(7, 3), 64);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(4096, 6), 6_534_856_347_522_607_104);
        assert_eq!(binomial_up_to(4096, 6), 6_544_452_312_920_894_465);
    }
}
