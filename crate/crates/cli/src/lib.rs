//! Command implementations behind the `scatsynth` binary.

pub mod commands;
pub mod exit;
pub mod selftest;
