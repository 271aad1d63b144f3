//! Instance generation, ratio estimation over arrival orders, and report export.

mod experiment;
mod generate;
mod report;

pub use experiment::{
    collect_over_orders, estimate_ratio, estimate_static_ratio, AlgorithmChoice, ExperimentConfig,
    InstanceSource, Mode, RatioStats, DEFAULT_TRIALS,
};
pub use generate::{generate_instance, random_weight_matrix, Family, GeneratorParams};
pub use report::{
    export_report, import_report_json, Report, ReportFormat, ReportRow, LIBRARY_VERSION,
};
