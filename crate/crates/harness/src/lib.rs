//! Verification suites, configuration and report output behind the `lhk` tool.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod config;
pub mod emit;
pub mod oracle;
pub mod run;
pub mod suites;
