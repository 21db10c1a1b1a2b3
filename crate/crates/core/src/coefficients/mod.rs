//! Singular coefficients, initial data and their mollifications.

pub mod data;
pub mod mollifier;
mod quadrature;
pub mod regularize;
pub mod spec;
mod syntax;

pub use data::DataSpec;
pub use mollifier::{make_mollifier, scale_mollifier, Mollifier, MollifierKind};
pub use regularize::{moderateness_ladder, regularize, regularize_data, EpsilonLadder, RegularizedCoefficient};
pub use spec::{Atom, CoefficientSpec, BUMP_SHARPNESS};
