//! Configuration-driven experiment runner for `lrmr-sar`.

pub mod config;
pub mod experiment;
