//! Bernoulli, uniform and reservoir sampling as online state machines.
//!
//! Rounds are indexed from 0. In every round the adversary has already
//! committed to the item; [`OnlineSampler::step`] then decides and returns
//! the [`Feedback`] the adversary sees before choosing the next item.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{rng_from_seed, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemeKind {
    /// Keep every round independently with probability `p`.
    Bernoulli { p: f64 },
    /// Keep a uniformly random `k`-subset of the rounds.
    Uniform { k: usize },
    /// Classic reservoir of size `k` with uniform eviction.
    Reservoir { k: usize },
}

/// A scheme together with its horizon `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerScheme {
    #[serde(flatten)]
    pub kind: SchemeKind,
    pub n: usize,
}

impl SamplerScheme {
    pub fn new(kind: SchemeKind, n: usize) -> Result<Self> {
        let s = SamplerScheme { kind, n };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SchemeKind::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                Err(invalid(format!("bernoulli probability {p} outside [0, 1]")))
            }
            SchemeKind::Uniform { k } | SchemeKind::Reservoir { k } if k > self.n => Err(invalid(
                format!("sample size {k} exceeds horizon {}", self.n),
            )),
            _ => Ok(()),
        }
    }

    /// Parses `ber:p=0.5`, `uni:k=64` or `res:k=64`.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let (kind, arg) = text
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("sampler {text:?} is not kind:param")))?;
        let value = |key: &str| -> Result<&str> {
            arg.strip_prefix(key)
                .and_then(|v| v.strip_prefix('='))
                .ok_or_else(|| Error::Parse(format!("sampler {text:?} needs {key}=")))
        };
        let int = |key: &str| -> Result<usize> {
            value(key)?
                .parse()
                .map_err(|_| Error::Parse(format!("bad {key} in sampler {text:?}")))
        };
        let kind = match kind {
            "ber" => SchemeKind::Bernoulli {
                p: value("p")?
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad p in sampler {text:?}")))?,
            },
            "uni" => SchemeKind::Uniform { k: int("k")? },
            "res" => SchemeKind::Reservoir { k: int("k")? },
            other => return Err(Error::Parse(format!("unknown sampler kind {other:?}"))),
        };
        SamplerScheme::new(kind, n)
    }

    pub fn inserts_only(&self) -> bool {
        !matches!(self.kind, SchemeKind::Reservoir { .. })
    }
}

/// What the adversary learns after each round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Feedback {
    pub kept: bool,
    /// Round index removed from the reservoir to make room.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evicted: Option<usize>,
}

impl Feedback {
    pub const KEPT: Feedback = Feedback {
        kept: true,
        evicted: None,
    };
    pub const DISCARDED: Feedback = Feedback {
        kept: false,
        evicted: None,
    };
}

pub trait OnlineSampler {
    fn horizon(&self) -> usize;
    /// Rounds completed so far.
    fn round(&self) -> usize;
    fn step(&mut self) -> Result<Feedback>;
    /// Currently retained round indices, ascending.
    fn retained(&self) -> &[usize];
}

/// Keep odds `(num, den)` of the sequential uniform rule at round `t`
/// (0-based) after `kept` keeps: `(k - kept) / (n - t)`.
pub fn uniform_keep_odds(n: usize, k: usize, t: usize, kept: usize) -> (u64, u64) {
    ((k - kept) as u64, (n - t) as u64)
}

/// Keep odds of the reservoir rule at round `t` (0-based): 1 while the
/// reservoir fills, then `k / (t + 1)`.
pub fn reservoir_keep_odds(k: usize, t: usize) -> (u64, u64) {
    if t < k {
        (1, 1)
    } else {
        (k as u64, t as u64 + 1)
    }
}

#[derive(Clone, Debug)]
pub struct Sampler {
    scheme: SamplerScheme,
    round: usize,
    kept_count: usize,
    retained: Vec<usize>,
    rng: Rng,
}

pub fn make_sampler(scheme: SamplerScheme, seed: u64) -> Result<Sampler> {
    scheme.validate()?;
    Ok(Sampler {
        scheme,
        round: 0,
        kept_count: 0,
        retained: Vec::new(),
        rng: rng_from_seed(seed),
    })
}

impl Sampler {
    pub fn scheme(&self) -> &SamplerScheme {
        &self.scheme
    }

    /// Number of rounds in which the item was kept (evictions not subtracted).
    pub fn kept_count(&self) -> usize {
        self.kept_count
    }

    fn coin(&mut self, (num, den): (u64, u64)) -> bool {
        num >= den || (num > 0 && self.rng.random_range(0..den) < num)
    }
}

impl OnlineSampler for Sampler {
    fn horizon(&self) -> usize {
        self.scheme.n
    }

    fn round(&self) -> usize {
        self.round
    }

    fn step(&mut self) -> Result<Feedback> {
        let t = self.round;
        let n = self.scheme.n;
        if t >= n {
            return Err(Error::HorizonExceeded(n));
        }
        let feedback = match self.scheme.kind {
            SchemeKind::Bernoulli { p } => {
                let kept = p >= 1.0 || (p > 0.0 && self.rng.random::<f64>() < p);
                Feedback {
                    kept,
                    evicted: None,
                }
            }
            SchemeKind::Uniform { k } => {
                let kept = self.coin(uniform_keep_odds(n, k, t, self.kept_count));
                Feedback {
                    kept,
                    evicted: None,
                }
            }
            SchemeKind::Reservoir { k } => {
                let kept = self.coin(reservoir_keep_odds(k, t));
                let evicted = if kept && t >= k {
                    let slot = self.rng.random_range(0..k);
                    Some(self.retained.remove(slot))
                } else {
                    None
                };
                Feedback { kept, evicted }
            }
        };
        if feedback.kept {
            self.kept_count += 1;
            self.retained.push(t);
        }
        self.round += 1;
        Ok(feedback)
    }

    fn retained(&self) -> &[usize] {
        &self.retained
    }
}

/// Deterministic insertion-only sampler following a fixed keep pattern.
#[derive(Clone, Debug)]
pub struct KeepPattern {
    pattern: Vec<bool>,
    round: usize,
    retained: Vec<usize>,
}

impl KeepPattern {
    pub fn new(pattern: Vec<bool>) -> Self {
        KeepPattern {
            pattern,
            round: 0,
            retained: Vec::new(),
        }
    }

    /// Pattern whose round `t` keeps iff bit `t` of `mask` is set.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self::new((0..n).map(|t| mask >> t & 1 == 1).collect())
    }
}

impl OnlineSampler for KeepPattern {
    fn horizon(&self) -> usize {
        self.pattern.len()
    }

    fn round(&self) -> usize {
        self.round
    }

    fn step(&mut self) -> Result<Feedback> {
        let kept = *self
            .pattern
            .get(self.round)
            .ok_or(Error::HorizonExceeded(self.pattern.len()))?;
        if kept {
            self.retained.push(self.round);
        }
        self.round += 1;
        Ok(Feedback {
            kept,
            evicted: None,
        })
    }

    fn retained(&self) -> &[usize] {
        &self.retained
    }
}
