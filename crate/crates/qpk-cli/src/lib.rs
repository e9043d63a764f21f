//! Library surface of the `qpk` command-line driver, exposed so the
//! integration and acceptance suites can run commands in-process.

pub mod commands;
pub mod dsl;
pub mod report;
pub mod suites;
