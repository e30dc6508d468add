//! Test support for the pgakv workspace: reference oracles, a random Cypher
//! script generator, a scripted stand-in model and fixture paths.

pub mod cypher_gen;
pub mod golden;
pub mod oracle;
pub mod scripted;

use std::path::PathBuf;

/// The workspace `fixtures/` directory.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}
