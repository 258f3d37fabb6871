//! Exact Littlestone dimension, VC dimension, Littlestone majority and
//! shattered mistake trees.
//!
//! The [`Littlestone`] engine represents every subfamily reachable by
//! restrictions as a mask over the parent family's set indices, interns the
//! masks, and memoizes `Ldim` and restriction transitions per interned id.
//! Dynamic sets and learners in [`crate::cover`] run on top of it.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::error::Result;
use crate::family::{binomial, check_cap, Element, Limits, SetFamily};

/// Interned subfamily handle, valid for the engine that produced it.
pub type SubId = u32;

#[derive(Debug)]
struct Node {
    mask: BitSet,
    size: usize,
    ldim: Option<i32>,
}

/// Memoized Littlestone recursion over the subfamilies of one family.
#[derive(Debug)]
pub struct Littlestone<'f> {
    family: &'f SetFamily,
    /// For each element, the set indices containing it.
    members: Vec<BitSet>,
    interned: HashMap<BitSet, SubId>,
    nodes: Vec<Node>,
    restrictions: HashMap<(SubId, u32, bool), SubId>,
}

impl<'f> Littlestone<'f> {
    pub fn new(family: &'f SetFamily) -> Result<Self> {
        Self::with_limits(family, &Limits::default())
    }

    pub fn with_limits(family: &'f SetFamily, limits: &Limits) -> Result<Self> {
        check_cap("family size", family.len() as u128, limits.max_family as u128)?;
        let members = (0..family.domain_size())
            .map(|x| {
                BitSet::from_indices(
                    family.len(),
                    family
                        .iter()
                        .enumerate()
                        .filter(|(_, s)| s.contains(x))
                        .map(|(i, _)| i),
                )
            })
            .collect();
        let mut engine = Littlestone {
            family,
            members,
            interned: HashMap::new(),
            nodes: Vec::new(),
            restrictions: HashMap::new(),
        };
        engine.intern(BitSet::full(family.len()));
        Ok(engine)
    }

    pub fn family(&self) -> &'f SetFamily {
        self.family
    }

    /// The whole family.
    pub fn root(&self) -> SubId {
        0
    }

    pub fn intern(&mut self, mask: BitSet) -> SubId {
        if let Some(&id) = self.interned.get(&mask) {
            return id;
        }
        let id = self.nodes.len() as SubId;
        self.nodes.push(Node {
            size: mask.count(),
            mask: mask.clone(),
            ldim: None,
        });
        self.interned.insert(mask, id);
        id
    }

    pub fn mask(&self, id: SubId) -> &BitSet {
        &self.nodes[id as usize].mask
    }

    pub fn size(&self, id: SubId) -> usize {
        self.nodes[id as usize].size
    }

    pub fn contains_set(&self, id: SubId, set_index: usize) -> bool {
        self.nodes[id as usize].mask.contains(set_index)
    }

    /// Number of distinct subfamilies interned so far.
    pub fn interned_count(&self) -> usize {
        self.nodes.len()
    }

    /// The subfamily of `id` whose sets contain `x` (`keep`) or avoid it.
    pub fn restrict(&mut self, id: SubId, x: Element, keep: bool) -> SubId {
        if let Some(&r) = self.restrictions.get(&(id, x.0, keep)) {
            return r;
        }
        let member = &self.members[x.index()];
        let mask = &self.nodes[id as usize].mask;
        let restricted = if keep {
            mask.and(member)
        } else {
            mask.and_not(member)
        };
        let r = self.intern(restricted);
        self.restrictions.insert((id, x.0, keep), r);
        r
    }

    /// Littlestone dimension of a subfamily; `-1` when empty.
    pub fn ldim(&mut self, id: SubId) -> i32 {
        let node = &self.nodes[id as usize];
        if let Some(d) = node.ldim {
            return d;
        }
        let size = node.size;
        let d = match size {
            0 => -1,
            1 => 0,
            _ => {
                // A depth-h shattered tree needs 2^h distinct leaves.
                let bound = (usize::BITS - 1 - size.leading_zeros()) as i32;
                let mut best = 0;
                for x in 0..self.members.len() {
                    let x = Element(x as u32);
                    let inside = self.restrict(id, x, true);
                    let outside = self.restrict(id, x, false);
                    let (small, large) = if self.size(inside) <= self.size(outside) {
                        (inside, outside)
                    } else {
                        (outside, inside)
                    };
                    if self.size(small) == 0 {
                        continue;
                    }
                    let small_dim = self.ldim(small);
                    if small_dim < best {
                        continue;
                    }
                    let large_dim = self.ldim(large);
                    best = best.max(1 + small_dim.min(large_dim));
                    if best == bound {
                        break;
                    }
                }
                best
            }
        };
        self.nodes[id as usize].ldim = Some(d);
        d
    }

    /// Whether `x` belongs to the Littlestone majority of the subfamily.
    pub fn in_lmaj(&mut self, id: SubId, x: Element) -> bool {
        if self.size(id) == 0 {
            return false;
        }
        let inside = self.restrict(id, x, true);
        self.ldim(inside) == self.ldim(id)
    }

    /// `{x : Ldim(F_{∋x}) = Ldim(F)}`, empty for the empty family.
    pub fn lmaj(&mut self, id: SubId) -> BitSet {
        let m = self.members.len();
        let mut out = BitSet::new(m);
        for x in 0..m {
            if self.in_lmaj(id, Element(x as u32)) {
                out.insert(x);
            }
        }
        out
    }

    /// A depth-`h` tree shattered by the subfamily, choosing the lowest
    /// splitting element at every node.
    pub fn shattered_tree(&mut self, id: SubId, h: usize) -> Option<MistakeTree> {
        if (self.ldim(id) as i64) < h as i64 {
            return None;
        }
        let mut labels = vec![Element(0); (1usize << h) - 1];
        self.fill_tree(id, h, 0, &mut labels);
        Some(MistakeTree { depth: h, labels })
    }

    fn fill_tree(&mut self, id: SubId, h: usize, node: usize, labels: &mut [Element]) {
        if h == 0 {
            return;
        }
        let need = h as i32 - 1;
        for x in 0..self.members.len() {
            let x = Element(x as u32);
            let inside = self.restrict(id, x, true);
            let outside = self.restrict(id, x, false);
            if self.ldim(inside) >= need && self.ldim(outside) >= need {
                labels[node] = x;
                self.fill_tree(outside, h - 1, 2 * node + 1, labels);
                self.fill_tree(inside, h - 1, 2 * node + 2, labels);
                return;
            }
        }
        unreachable!("Ldim >= {h} guarantees a splitting element");
    }
}

/// Complete binary tree with element-labelled internal nodes, stored in
/// level order. The left child of node `i` is `2i + 1` (branch `y = 0`,
/// element absent), the right child `2i + 2` (branch `y = 1`, present).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MistakeTree {
    pub depth: usize,
    pub labels: Vec<Element>,
}

impl MistakeTree {
    pub fn new(depth: usize, labels: Vec<Element>) -> Result<Self> {
        if labels.len() != (1usize << depth) - 1 {
            return Err(crate::error::invalid(format!(
                "a depth-{depth} tree needs {} labels, got {}",
                (1usize << depth) - 1,
                labels.len()
            )));
        }
        Ok(MistakeTree { depth, labels })
    }

    /// The `(x_i, y_i)` pairs along the path whose branches are the low
    /// `depth` bits of `branches`, first branch in bit 0.
    pub fn path(&self, branches: u64) -> Vec<(Element, bool)> {
        let mut node = 0;
        (0..self.depth)
            .map(|i| {
                let y = branches >> i & 1 == 1;
                let x = self.labels[node];
                node = 2 * node + 1 + y as usize;
                (x, y)
            })
            .collect()
    }
}

/// Dimensions of a family, with an optional witness tree for `ldim`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimReport {
    pub ldim: i32,
    pub vcdim: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<MistakeTree>,
}

pub fn ldim(family: &SetFamily) -> Result<i32> {
    let mut engine = Littlestone::new(family)?;
    let root = engine.root();
    Ok(engine.ldim(root))
}

pub fn lmaj(family: &SetFamily) -> Result<BitSet> {
    let mut engine = Littlestone::new(family)?;
    let root = engine.root();
    Ok(engine.lmaj(root))
}

pub fn shattered_tree(family: &SetFamily, h: usize) -> Result<Option<MistakeTree>> {
    let mut engine = Littlestone::new(family)?;
    let root = engine.root();
    Ok(engine.shattered_tree(root, h))
}

/// Whether every root-to-leaf pattern of `tree` is realized by a set of the family.
pub fn is_shattered(family: &SetFamily, tree: &MistakeTree) -> bool {
    if family.is_empty() {
        return false;
    }
    if tree
        .labels
        .iter()
        .any(|x| x.index() >= family.domain_size())
    {
        return false;
    }
    (0..1u64 << tree.depth).all(|branches| {
        let path = tree.path(branches);
        family
            .iter()
            .any(|s| path.iter().all(|&(x, y)| s.contains(x.index()) == y))
    })
}

/// Largest `s` such that some `s`-subset of the domain is shattered; `-1` when empty.
pub fn vcdim(family: &SetFamily) -> Result<i32> {
    vcdim_with(family, &Limits::default())
}

pub fn vcdim_with(family: &SetFamily, limits: &Limits) -> Result<i32> {
    if family.is_empty() {
        return Ok(-1);
    }
    let m = family.domain_size();
    let mut best = 0;
    for s in 1..=m.min(63) {
        if family.len() < 1 << s {
            break;
        }
        check_cap("VC subset enumeration", binomial(m as u64, s as u64), limits.max_enumeration)?;
        if !any_shattered_subset(family, s) {
            break;
        }
        best = s as i32;
    }
    Ok(best)
}

fn any_shattered_subset(family: &SetFamily, s: usize) -> bool {
    let m = family.domain_size();
    let mut combo: Vec<usize> = (0..s).collect();
    let mut patterns = std::collections::HashSet::with_capacity(1 << s);
    loop {
        patterns.clear();
        for set in family.iter() {
            let pattern = combo
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &x)| acc | (set.contains(x) as u64) << i);
            patterns.insert(pattern);
        }
        if patterns.len() == 1 << s {
            return true;
        }
        // next combination in lexicographic order
        let mut i = s;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if combo[i] < m - s + i {
                break;
            }
        }
        combo[i] += 1;
        for j in i + 1..s {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

pub fn dim_report(family: &SetFamily, with_witness: bool) -> Result<DimReport> {
    let mut engine = Littlestone::new(family)?;
    let root = engine.root();
    let l = engine.ldim(root);
    let witness = if with_witness && l >= 0 {
        engine.shattered_tree(root, l as usize)
    } else {
        None
    };
    Ok(DimReport {
        ldim: l,
        vcdim: vcdim(family)?,
        witness,
    })
}
