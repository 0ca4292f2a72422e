//! Files in and out: configs, count data, gate sets and report tables.

pub mod config;
pub mod convert;
pub mod dataset;
pub mod json;
pub mod report;

pub use config::{parse_config, parse_config_str, Builtin, DesignSource, Mode, PriorSource, RunConfig, TruthSource};
pub use convert::{convert_gst_counts, format_gst_counts, format_gst_sequence, parse_gst_sequence};
pub use dataset::{format_dataset, ingest_dataset, parse_dataset, write_dataset, DataSet};
pub use json::{read_gate_set, read_json, to_json, write_gate_set, write_json, GateSetFile, OperationalRepFile};
pub use report::{read_rows, read_table, write_rows, write_table, PredictionRow, SimulationRow, SurvivalRow, TvdCsvRow};
