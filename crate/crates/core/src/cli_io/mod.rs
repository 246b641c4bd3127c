//! Configuration files, subcommands and the artifacts they write.

mod commands;
mod config;
mod output;

pub use commands::{
    cmd_check, cmd_diagnose, cmd_refine, cmd_simulate, cmd_sweep, exit_code, initial_state, refine_studies,
    simulate_failed, summarize, CheckSummary, ConvergenceRow, DiagnosticsReport, MomentExponents, MomentSummary,
    OdiEntry, PhaseRow, RunSummary, SimulateReport,
};
pub use config::{
    ControlSection, DiagnoseSection, GammaSpec, GridSection, ModelSection, MomentEntry, OutputSection, RefineSection,
    RunConfig, SweepSection,
};
pub use output::{
    fmt_num, read_snapshot, read_timeseries, timeseries_header, write_json, write_snapshot, write_timeseries,
    SnapshotColumns,
};
