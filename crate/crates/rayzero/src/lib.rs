//! File formats, bundled datasets and the command-line driver built on
//! [`rayzero_core`].

pub mod bundled;
pub mod cli;
pub mod csv_io;
pub mod dataset;
pub mod problem;
pub mod report;
pub mod scan;
pub mod synth;

pub use bundled::{cesium, lithium, open_dataset};
pub use dataset::{load_system, parse_dataset, DatasetError, ValueKind};
pub use problem::{load_problem, ProblemFile};
