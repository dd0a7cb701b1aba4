//! Losses, hinge objectives and trainers.

mod loss;
mod objective;
mod train;

pub use loss::{check_subadditive, hamming, Loss, LossFn, SubadditivityReport, SubadditivityViolation, EXHAUSTIVE_MAX_N};
pub use objective::{decl_hinges, decl_objective, global_hinges, global_objective};
pub use train::{
    local_objective, train_global, train_local, train_subgradient, train_subgradient_from, ObjectiveKind,
    StepSchedule, TrainConfig, TrainReport,
};
