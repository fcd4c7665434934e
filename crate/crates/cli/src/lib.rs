//! Experiment driver behind the `lvbench` binary: config-file-defined runs
//! that regenerate desk-scale sampler-comparison studies, with CSV data,
//! SVG plots, and digest-stable manifests.

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod pgm;
pub mod plot;
