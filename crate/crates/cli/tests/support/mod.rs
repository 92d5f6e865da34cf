//! Independent oracles for the acceptance and integration tests.

#![allow(dead_code)]

pub mod grid;

use std::path::Path;

use towerplex_cli::{cmd_build, RunConfig};
use towerplex_core::Chain;

pub fn build(toml: &str, dir: &Path) -> Chain {
    let cfg = RunConfig::from_toml_str(toml).expect("valid config");
    cmd_build(&cfg, dir).expect("chain builds")
}
