//! Experiment driver: ε sweeps against the finite-difference reference and
//! the reports printed by the command-line tool.

mod reports;
mod sweep;

pub use reports::{
    expand_report, grid_report, max_report, resolve_profile, torsion_report, AlphaRow, ExpandReport, GridReport,
    MaxReport, PointValue, TorsionReport, WosReport,
};
pub use sweep::{
    parse_epsilons, read_sweep_csv, sweep, write_sweep_csv, SweepOptions, SweepRow, DEFAULT_ORDER,
    DEFAULT_RESOLUTION, DEFAULT_SAMPLES,
};
