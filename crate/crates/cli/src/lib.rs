//! Configuration, study drivers and CSV output for the `monodrift` binary.

pub mod config;
pub mod expr;
pub mod output;
pub mod studies;
