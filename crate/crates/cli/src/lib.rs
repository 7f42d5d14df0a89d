//! Command-line driver, result files and the gallery batch runner.

pub mod app;
pub mod config;
pub mod error;
pub mod gallery;
pub mod io;
pub mod run;
