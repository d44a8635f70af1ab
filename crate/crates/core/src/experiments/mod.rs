//! Configuration-driven parameter sweeps producing tables.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod system;
pub mod table;

pub use commands::{
    cmd_bloch_sweep, cmd_floquet, cmd_pulse, cmd_spectrum, cmd_tau_sweep, cmd_zeno_report, floquet_record,
    poisson_record, sweep_records, Output, RowStatus, SweepRecord, SweepScheme,
};
pub use config::{ExperimentConfig, Format, Grid, SweepVariable};
pub use system::{Environment, Measured};
pub use table::{Cell, Table};
