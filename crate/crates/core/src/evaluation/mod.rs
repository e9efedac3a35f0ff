//! Answer scoring and batch benchmarks.

mod benchmark;
mod metrics;

pub use benchmark::{
    run_benchmark, Aggregates, BenchmarkOptions, EvalError, EvalReport, ItemRecord,
};
pub use metrics::{bleu, exact_match, normalize_answer, rouge_l, rouge_l_pair};
