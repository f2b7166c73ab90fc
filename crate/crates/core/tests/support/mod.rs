#![allow(dead_code)]

pub mod gen;
pub mod oracle;
pub mod props;

use std::path::{Path, PathBuf};

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}
