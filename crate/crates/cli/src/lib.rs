//! Pipeline runner, benchmark harness and exporters behind the `voxskel`
//! binary.

pub mod bench;
pub mod commands;
pub mod config;
