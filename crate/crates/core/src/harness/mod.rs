//! Command-line entry point, toy datasets, and file formats.

mod cli;
pub mod datasets;
pub mod io;

pub use cli::{run_cli, sidecar, TOOL, VERSION};
pub use datasets::{generate_toy, generate_toy_dataset, ToyDataset, ToyDatasetSpec, ToyKind};
pub use io::{load_dataset, load_model, save_dataset, save_model};
