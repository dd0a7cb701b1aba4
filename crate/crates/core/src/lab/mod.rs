//! Synthetic problems, exactness checks, evaluation and the benchmark runner.

mod bench;
mod exactness;
mod metrics;
mod synthetic;

pub use bench::{
    run_benchmark, train_algorithm, Algorithm, BenchAggregate, BenchConfig, BenchResult, BenchRow, MeanStd,
};
pub use exactness::{
    exactness_certificate_cor1, exactness_probe_sampling, exactness_probe_sampling_with, ExactnessMode,
    ExactnessOutcome, ExactnessVerdict, ProbeConfig, COUNTEREXAMPLE_TOL,
};
pub use metrics::{evaluate, f1_score, Metrics};
pub use synthetic::{
    gen_synthetic, random_clause_space, random_linear_constraint, random_one_overlap_space, random_positive_clause,
    SyntheticConfig, SyntheticData, SyntheticFamily, MAX_REGENERATIONS,
};
