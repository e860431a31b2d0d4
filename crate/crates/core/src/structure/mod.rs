//! Symbolic model space of the SQG regularity structure.

mod generate;
mod homogeneity;
mod symbol;

pub use generate::{
    critical_mu, cycle_increment, default_gamma, generate, is_subcritical, negative_report, negative_symbols, Entry,
    Family, GenerateError, GenerateParams, ModelSpace, NegativeReport, ShapeCount, Subcriticality,
};
pub use homogeneity::{parse_rational, Homogeneity};
pub use symbol::{MultiIndex, ParseSymbolError, Symbol};
