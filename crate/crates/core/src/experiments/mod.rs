//! Config-driven sweeps, the classification benchmark, landscape and bound
//! reports, and their CSV/JSON serialization.

mod classify;
mod config;
mod io;
mod reports;
mod sweep;

pub use classify::{
    classification_benchmark, evaluate, AccuracySummary, ClassificationRecord, ClassificationTable,
};
pub use config::{
    load_config, parse_config, CheckSettings, ClassificationConfig, ClassificationProblem,
    ClassificationTraining, Grid, InstanceConfig, LandscapeConfig, OptimizerGrid, ProblemGrid,
    ProblemKind, ProblemPoint, RunSettings, ScanSettings, SweepConfig, TheoryConfig, Variant,
    VariantPoint,
};
pub use io::{
    atomic_write, classification_to_csv, dataset_from_csv, dataset_to_csv, read_dataset,
    runs_from_csv, runs_to_csv, scan_to_csv, summaries_to_csv, to_json, write_dataset, RUN_COLUMNS,
    RUN_SCHEMA_VERSION, SCAN_COLUMNS,
};
pub use reports::{landscape, theory_check, LandscapeReport, LandscapeSummary, TheoryReport};
pub use sweep::{run_sweep, summarize, CellSummary, RunRecord, Stats};
