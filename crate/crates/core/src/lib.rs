//! Decomposed max-margin learning for structured output spaces.
//!
//! Scoring models ([`model`]) assign linear scores to joint labelings,
//! [`space`] describes which labelings are feasible, and [`learning`] trains
//! weights by subgradient descent on a hinge objective whose inner
//! maximization ranges either over the whole space or over neighborhoods of
//! the gold labeling given by a [`decomposition`].

pub mod decomposition;
pub mod error;
pub mod inference;
pub mod io;
pub mod lab;
pub mod learning;
pub mod model;
pub mod rng;
pub mod space;

pub use decomposition::{neighborhood, Decomposition};
pub use error::{Error, Result};
pub use inference::{map_chain, map_decomposed, map_exact, map_loss_augmented, InferenceResult};
pub use learning::{LossFn, TrainConfig, TrainReport};
pub use model::{Assignment, Family, Input, Instance, ScoringModel, WeightVector};
pub use space::{ConstraintSet, OutputSpace};
