//! Batch experiment driver: instances, training sets, end-to-end runs,
//! validation and report files. Everything here is `f64`.

pub mod config;
pub mod instance;
pub mod report;
pub mod run;
pub mod synthetic;
pub mod validate;

pub use config::RunConfig;
pub use instance::{generate_instance, sample_training_set, Instance, TrainingSample};
pub use report::emit_report;
pub use run::{execute, run_pathway, run_state_determination, RunMode, RunReport, Timings};
pub use validate::{validate, ValidationReport};
