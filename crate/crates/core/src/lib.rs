pub mod action;
pub mod coefficients;
pub mod error;
pub mod harness;
pub mod path;
pub mod pathopt;
pub mod quadrature;
pub mod simulate;
pub mod stats;
pub mod timechange;
