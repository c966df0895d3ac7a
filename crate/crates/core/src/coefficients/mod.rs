//! Piecewise coefficients, their modification at jumps, and the
//! time-change family.

mod model;
mod modified;
mod piecewise;
mod tilde;
mod transforms;

pub use model::{validate_bounds, Bounds, SdeModel};
pub use modified::{modify, BreakpointChoice, ModifiedPair, Rule};
pub use piecewise::{merge_breakpoints, Location, PiecewiseFunction, Segment};
pub use tilde::{hat_coefficients, tilde_decomposition, SpeedFactor, TildeDecomposition};
