//! Reproducible campaigns over `ε`-ladders, with report writers.

pub mod campaigns;
pub mod fit;
pub mod invariants;
pub mod report;

pub use campaigns::{
    run_consistency, run_duhamel_check, run_energy, run_moderateness, run_moderateness_with_solution, run_uniqueness,
    ConsistencyReport, DuhamelReport, EnergyLedger, ModeratenessReport, UniquenessReport,
};
pub use fit::{detect_floor, fit_rate, Direction, FitMethod, RateFit, RateReport, FLOOR_FACTOR, MIN_FIT_POINTS};
pub use invariants::{check_operator, h2_bound_ratio, summed_by_parts, time_derivative_gap, OperatorCheck};
pub use report::{write_report, PlotSpec, Report};
