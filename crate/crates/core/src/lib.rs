//! Simulation and verification toolkit for sampling against adaptive adversaries.
//!
//! The crate is organised bottom-up:
//!
//! * [`family`]: finite set families and their constructions.
//! * [`dimension`]: Littlestone / VC dimension, Littlestone majority, mistake trees.
//! * [`sampler`]: Bernoulli, uniform and reservoir sampling as online state machines.
//! * [`adversary`]: oblivious, i.i.d., binary-search and tree adversaries.
//! * [`game`]: the sampler-vs-adversary game, its metrics, and Monte Carlo sweeps.
//! * [`cover`]: dynamic sets, covers and online learners.
//! * [`coupling`]: online couplings between sampling schemes and exact laws.

pub mod adversary;
pub mod bits;
pub mod coupling;
pub mod cover;
pub mod dimension;
pub mod error;
pub mod family;
pub mod game;
pub mod rng;
pub mod sampler;

pub use adversary::{Adversary, AdversaryKind, AdversarySpec};
pub use bits::BitSet;
pub use dimension::{DimReport, Littlestone, MistakeTree};
pub use error::{Error, Result};
pub use family::{build_family, Element, FamilySpec, Limits, SetFamily};
pub use game::{run_game, ExperimentConfig, Frac, Metric, Report, StreamFamily, Thresholds, Transcript};
pub use sampler::{Feedback, OnlineSampler, SamplerScheme, SchemeKind};
