//! Stream generators for the sampling game.
//!
//! An [`Adversary`] is a deterministic function of its spec and the
//! feedback history: before round `t` it is handed the feedback of rounds
//! `0..t` and must emit `x_t`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::dimension::MistakeTree;
use crate::error::{invalid, Error, Result};
use crate::family::{check_cap, Element, Limits, SetFamily};
use crate::rng::{rng_from_seed, Rng};
use crate::sampler::Feedback;

pub trait Adversary {
    type Item: Clone + Ord + std::hash::Hash + fmt::Debug + Send + Sync;

    fn horizon(&self) -> usize;

    /// Emits the next item given the feedback of every earlier round.
    fn next_item(&mut self, feedback: &[Feedback]) -> Result<Self::Item>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IidWeights {
    Uniform { domain: usize },
    Explicit { weights: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryKind {
    /// A fixed stream, feedback ignored.
    Oblivious { items: Vec<Element> },
    /// Independent draws from a fixed distribution.
    Iid { weights: IidWeights, seed: u64 },
    /// Bisection over the dyadic grid of resolution `2^horizon`.
    BinarySearch,
    /// Walks a shattered tree: retained items lead left, discarded right.
    Tree { tree: MistakeTree },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarySpec {
    #[serde(flatten)]
    pub kind: AdversaryKind,
    pub horizon: usize,
}

impl AdversarySpec {
    pub fn new(kind: AdversaryKind, horizon: usize) -> Self {
        AdversarySpec { kind, horizon }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            AdversaryKind::Oblivious { items } if items.len() != self.horizon => Err(invalid(
                format!("oblivious stream has {} items, horizon {}", items.len(), self.horizon),
            )),
            AdversaryKind::Iid { weights, .. } => match weights {
                IidWeights::Uniform { domain: 0 } => Err(invalid("iid over an empty domain")),
                IidWeights::Explicit { weights }
                    if weights.is_empty()
                        || weights.iter().any(|w| !w.is_finite() || *w < 0.0)
                        || weights.iter().all(|w| *w == 0.0) =>
                {
                    Err(invalid("iid weights must be finite, non-negative, not all zero"))
                }
                _ => Ok(()),
            },
            AdversaryKind::Tree { tree } if tree.depth < self.horizon => Err(invalid(format!(
                "tree of depth {} cannot drive {} rounds",
                tree.depth, self.horizon
            ))),
            _ => Ok(()),
        }
    }

    /// Same adversary with its private randomness re-keyed for one trial.
    pub fn for_trial(&self, trial_seed: u64) -> AdversarySpec {
        let mut spec = self.clone();
        if let AdversaryKind::Iid { seed, .. } = &mut spec.kind {
            *seed = crate::rng::substream(*seed ^ trial_seed, crate::rng::SALT_ADVERSARY);
        }
        spec
    }

    pub fn is_binary_search(&self) -> bool {
        matches!(self.kind, AdversaryKind::BinarySearch)
    }
}

/// An adversary over a finite element domain.
#[derive(Clone, Debug)]
pub enum ElementAdversary {
    Oblivious(ObliviousAdversary),
    Iid(Box<IidAdversary>),
    Tree(TreeAdversary),
}

/// Result of [`make_adversary`]: element-valued or dyadic-valued.
#[derive(Clone, Debug)]
pub enum BuiltAdversary {
    Element(ElementAdversary),
    Dyadic(BinarySearchAdversary),
}

pub fn make_adversary(spec: &AdversarySpec) -> Result<BuiltAdversary> {
    spec.validate()?;
    let n = spec.horizon;
    Ok(match &spec.kind {
        AdversaryKind::Oblivious { items } => {
            BuiltAdversary::Element(ElementAdversary::Oblivious(ObliviousAdversary::new(items.clone())))
        }
        AdversaryKind::Iid { weights, seed } => {
            BuiltAdversary::Element(ElementAdversary::Iid(Box::new(IidAdversary::new(weights, *seed, n)?)))
        }
        AdversaryKind::BinarySearch => BuiltAdversary::Dyadic(BinarySearchAdversary::new(n)),
        AdversaryKind::Tree { tree } => {
            BuiltAdversary::Element(ElementAdversary::Tree(TreeAdversary::new(tree.clone(), n)?))
        }
    })
}

/// Builds an element-valued adversary, rejecting the binary-search kind.
pub fn make_element_adversary(spec: &AdversarySpec) -> Result<ElementAdversary> {
    match make_adversary(spec)? {
        BuiltAdversary::Element(a) => Ok(a),
        BuiltAdversary::Dyadic(_) => Err(invalid(
            "the binary-search adversary emits dyadic points, not domain elements",
        )),
    }
}

impl Adversary for ElementAdversary {
    type Item = Element;

    fn horizon(&self) -> usize {
        match self {
            ElementAdversary::Oblivious(a) => a.horizon(),
            ElementAdversary::Iid(a) => a.horizon(),
            ElementAdversary::Tree(a) => a.horizon(),
        }
    }

    fn next_item(&mut self, feedback: &[Feedback]) -> Result<Element> {
        match self {
            ElementAdversary::Oblivious(a) => a.next_item(feedback),
            ElementAdversary::Iid(a) => a.next_item(feedback),
            ElementAdversary::Tree(a) => a.next_item(feedback),
        }
    }
}

fn check_round(emitted: usize, horizon: usize, feedback: &[Feedback]) -> Result<()> {
    if emitted >= horizon {
        return Err(Error::HorizonExceeded(horizon));
    }
    if feedback.len() != emitted {
        return Err(Error::FeedbackMismatch {
            expected: emitted,
            got: feedback.len(),
        });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ObliviousAdversary {
    items: Vec<Element>,
    emitted: usize,
}

impl ObliviousAdversary {
    pub fn new(items: Vec<Element>) -> Self {
        ObliviousAdversary { items, emitted: 0 }
    }
}

impl Adversary for ObliviousAdversary {
    type Item = Element;

    fn horizon(&self) -> usize {
        self.items.len()
    }

    fn next_item(&mut self, feedback: &[Feedback]) -> Result<Element> {
        check_round(self.emitted, self.items.len(), feedback)?;
        self.emitted += 1;
        Ok(self.items[self.emitted - 1])
    }
}

#[derive(Clone, Debug)]
pub struct IidAdversary {
    dist: WeightedIndex<f64>,
    rng: Rng,
    horizon: usize,
    emitted: usize,
}

impl IidAdversary {
    pub fn new(weights: &IidWeights, seed: u64, horizon: usize) -> Result<Self> {
        let w = match weights {
            IidWeights::Uniform { domain } => vec![1.0; *domain],
            IidWeights::Explicit { weights } => weights.clone(),
        };
        let dist = WeightedIndex::new(w).map_err(|e| invalid(format!("iid weights: {e}")))?;
        Ok(IidAdversary {
            dist,
            rng: rng_from_seed(seed),
            horizon,
            emitted: 0,
        })
    }
}

impl Adversary for IidAdversary {
    type Item = Element;

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn next_item(&mut self, feedback: &[Feedback]) -> Result<Element> {
        check_round(self.emitted, self.horizon, feedback)?;
        self.emitted += 1;
        Ok(Element(self.dist.sample(&mut self.rng) as u32))
    }
}

/// `n` independent uniform draws from a domain of size `domain`.
pub fn uniform_stream(domain: usize, n: usize, seed: u64) -> Result<Vec<Element>> {
    let mut adv = IidAdversary::new(&IidWeights::Uniform { domain }, seed, n)?;
    (0..n).map(|_| adv.next_item_unchecked()).collect()
}

impl IidAdversary {
    fn next_item_unchecked(&mut self) -> Result<Element> {
        self.emitted += 1;
        Ok(Element(self.dist.sample(&mut self.rng) as u32))
    }
}

/// Presents the root label of the current subtree; a retained item sends
/// the walk to the left subtree (sets avoiding it), a discarded one to the
/// right subtree (sets containing it).
#[derive(Clone, Debug)]
pub struct TreeAdversary {
    tree: MistakeTree,
    horizon: usize,
    node: usize,
    emitted: usize,
}

impl TreeAdversary {
    pub fn new(tree: MistakeTree, horizon: usize) -> Result<Self> {
        if tree.depth < horizon {
            return Err(invalid(format!(
                "tree of depth {} cannot drive {horizon} rounds",
                tree.depth
            )));
        }
        Ok(TreeAdversary {
            tree,
            horizon,
            node: 0,
            emitted: 0,
        })
    }
}

impl Adversary for TreeAdversary {
    type Item = Element;

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn next_item(&mut self, feedback: &[Feedback]) -> Result<Element> {
        check_round(self.emitted, self.horizon, feedback)?;
        if let Some(last) = feedback.last() {
            self.node = 2 * self.node + if last.kept { 1 } else { 2 };
        }
        self.emitted += 1;
        Ok(self.tree.labels[self.node])
    }
}

/// A point `num / 2^bits` of the dyadic grid in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dyadic {
    num: BigUint,
    bits: usize,
}

impl Dyadic {
    pub fn new(num: BigUint, bits: usize) -> Self {
        Dyadic { num, bits }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.num
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Grid index `num`, when it fits in 64 bits.
    pub fn grid_id(&self) -> Option<u64> {
        self.num.to_u64()
    }

    pub fn to_f64(&self) -> f64 {
        // exact for the first 53 bisection levels
        let shift = self.bits.saturating_sub(60);
        let head = (&self.num >> shift).to_f64().unwrap_or(0.0);
        head / 2f64.powi((self.bits - shift) as i32)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.bits)
    }
}

/// Bisection adversary for thresholds: starts at `[0, 1)`, presents the
/// midpoint, and moves the lower end up on retention, the upper end down
/// otherwise.
#[derive(Clone, Debug)]
pub struct BinarySearchAdversary {
    n: usize,
    lo: BigUint,
    hi: BigUint,
    last: Option<BigUint>,
    emitted: usize,
}

impl BinarySearchAdversary {
    pub fn new(n: usize) -> Self {
        BinarySearchAdversary {
            n,
            lo: BigUint::zero(),
            hi: BigUint::from(1u8) << n,
            last: None,
            emitted: 0,
        }
    }

    /// Current interval `(a_t, b_t)` as grid numerators.
    pub fn interval(&self) -> (&BigUint, &BigUint) {
        (&self.lo, &self.hi)
    }

    /// All thresholds `{j : j < i}`, `i = 0..=2^n`, over the grid ids `0..2^n`.
    pub fn companion_family(n: usize, limits: &Limits) -> Result<SetFamily> {
        check_cap("grid size", 1u128.checked_shl(n as u32).unwrap_or(u128::MAX), limits.max_domain as u128)?;
        let m = 1usize << n;
        let sets = (0..=m).map(|i| BitSet::from_indices(m, 0..i)).collect();
        SetFamily::new(m, sets, format!("grid-thresholds:{n}"))
    }
}

impl Adversary for BinarySearchAdversary {
    type Item = Dyadic;

    fn horizon(&self) -> usize {
        self.n
    }

    fn next_item(&mut self, feedback: &[Feedback]) -> Result<Dyadic> {
        check_round(self.emitted, self.n, feedback)?;
        if let (Some(last), Some(x)) = (feedback.last(), self.last.take()) {
            if last.kept {
                self.lo = x;
            } else {
                self.hi = x;
            }
        }
        let mid: BigUint = (&self.lo + &self.hi) >> 1usize;
        self.last = Some(mid.clone());
        self.emitted += 1;
        Ok(Dyadic::new(mid, self.n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(num: u64, bits: usize) -> Dyadic {
        Dyadic::new(BigUint::from(num), bits)
    }

    #[test]
    fn bisection_starts_at_half() {
        let mut a = BinarySearchAdversary::new(4);
        assert_eq!(a.next_item(&[]).unwrap(), grid(8, 4));
        assert_eq!(a.next_item(&[Feedback::KEPT]).unwrap(), grid(12, 4));
        assert_eq!(
            a.next_item(&[Feedback::KEPT, Feedback::DISCARDED]).unwrap(),
            grid(10, 4)
        );
        assert!((grid(12, 4).to_f64() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn feedback_length_is_checked() {
        let mut a = BinarySearchAdversary::new(4);
        assert!(matches!(
            a.next_item(&[Feedback::KEPT]),
            Err(Error::FeedbackMismatch { .. })
        ));
        let mut o = ObliviousAdversary::new(vec![Element(1)]);
        o.next_item(&[]).unwrap();
        assert_eq!(
            o.next_item(&[Feedback::KEPT]),
            Err(Error::HorizonExceeded(1))
        );
    }

    #[test]
    fn tree_walk_directions() {
        let tree = MistakeTree::new(2, vec![Element(0), Element(1), Element(2)]).unwrap();
        let mut a = TreeAdversary::new(tree.clone(), 2).unwrap();
        assert_eq!(a.next_item(&[]).unwrap(), Element(0));
        assert_eq!(a.next_item(&[Feedback::KEPT]).unwrap(), Element(1));
        let mut b = TreeAdversary::new(tree.clone(), 2).unwrap();
        b.next_item(&[]).unwrap();
        assert_eq!(b.next_item(&[Feedback::DISCARDED]).unwrap(), Element(2));
        assert!(TreeAdversary::new(tree, 3).is_err());
    }

    #[test]
    fn spec_validation() {
        let bad = AdversarySpec::new(AdversaryKind::Oblivious { items: vec![Element(0)] }, 2);
        assert!(make_adversary(&bad).is_err());
        let bad = AdversarySpec::new(
            AdversaryKind::Iid {
                weights: IidWeights::Explicit { weights: vec![0.0, 0.0] },
                seed: 1,
            },
            2,
        );
        assert!(make_adversary(&bad).is_err());
        let bs = AdversarySpec::new(AdversaryKind::BinarySearch, 3);
        assert!(make_element_adversary(&bs).is_err());
    }

    #[test]
    fn companion_family_is_grid_thresholds() {
        let f = BinarySearchAdversary::companion_family(3, &Limits::default()).unwrap();
        assert_eq!(f.domain_size(), 8);
        assert_eq!(f.len(), 9);
        assert!(BinarySearchAdversary::companion_family(7, &Limits::default()).is_err());
    }
}
