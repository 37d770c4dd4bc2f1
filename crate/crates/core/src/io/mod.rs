//! Configuration files, sample records, commands, and plots.

pub mod config;
pub mod records;
pub mod commands;
pub mod svg;
