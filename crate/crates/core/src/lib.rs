//! Spell correction that consumes per-character probability distributions
//! instead of hard strings.

pub mod alphabet;
pub mod channel;
pub mod error;
pub mod eval;
pub mod lexicon;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod spellnet;
pub mod statistical;

pub use error::{Error, Result};

pub type SpellNet = spellnet::SpellNet<f64>;
pub type SpellNetF32 = spellnet::SpellNet<f32>;
pub type TrainingPair = spellnet::TrainingPair<f64>;
pub type Tensor = nn::Tensor2<f64>;
pub type Batch = nn::Batch<f64>;
