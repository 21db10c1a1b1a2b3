//! Spatial operator assembly and norm-preserving time evolution.

pub mod operator;
mod shifted;
pub mod stepper;
mod tridiag;

pub use shifted::shifted_solve;
pub use operator::{assemble_operator, FaceMean, SpatialOperator};
pub use stepper::{
    duhamel_compose, duhamel_quadrature, solve_forced, solve_homogeneous, step_cn, time_derivative_data, ConstantSource,
    CrankNicolson, FnSource, Snapshot, SolutionTrace, SourceTerm, StepperConfig, TraceSource, ZeroSource,
    DEFAULT_TOLERANCE,
};
pub use tridiag::CyclicTridiagonal;
