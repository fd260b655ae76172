#![allow(dead_code)]

use std::path::PathBuf;

use snsradar::scenario::{load_scenario, Scenario};

pub fn bundled(name: &str) -> Scenario {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", name]
        .iter()
        .collect();
    load_scenario(path).unwrap()
}
