//! Very weak solutions of `i u_t + ∇·(g ∇u) = 0` with singular `g`.
//!
//! The coefficient and the initial data are regularized by a mollifier at
//! scale `ε`, the regularized problem is stepped with Crank–Nicolson on a
//! periodic grid, and the resulting nets are studied as `ε → 0`.

pub mod coefficients;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod grid;
pub mod oracle;
pub mod problem;

pub use coefficients::{
    make_mollifier, moderateness_ladder, regularize, regularize_data, scale_mollifier, Atom, CoefficientSpec, DataSpec,
    EpsilonLadder, Mollifier, MollifierKind, RegularizedCoefficient,
};
pub use error::{Error, Result};
pub use evolution::{
    assemble_operator, duhamel_compose, solve_forced, solve_homogeneous, step_cn, time_derivative_data, SolutionTrace,
    SourceTerm, SpatialOperator, StepperConfig,
};
pub use grid::{ComplexField, Field, Grid, RealField};
pub use oracle::{dense_reference_step, fine_grid_reference, fourier_constant_solution, OracleMethod, OracleResult};
pub use problem::{Problem, Solved, TimeSettings, TimeStep};
