use std::fs;

use pgakv_core::{Cassette, ReplayClient};
use pgakv_testkit::fixture;
use pgakv_testkit::golden::{golden_outputs, toy_index, DEGRADED_CASSETTE, TOY_CASSETTE, TOY_INDEX};

fn replayed() -> Vec<(String, String)> {
    let toy = ReplayClient::new(Cassette::load(&fixture(TOY_CASSETTE)).unwrap());
    let degraded = ReplayClient::new(Cassette::load(&fixture(DEGRADED_CASSETTE)).unwrap());
    golden_outputs(&toy, &degraded)
}

#[test]
fn replay_matches_pinned_files() {
    for (path, contents) in replayed() {
        let pinned = fs::read_to_string(fixture(&path)).unwrap();
        assert!(pinned == contents, "{path} differs from its pinned copy");
    }
}

#[test]
fn consecutive_runs_are_byte_identical() {
    assert_eq!(replayed(), replayed());
}

#[test]
fn index_file_is_reproducible() {
    let mut bytes = Vec::new();
    toy_index().write_to(&mut bytes).unwrap();
    assert_eq!(bytes, fs::read(fixture(TOY_INDEX)).unwrap());
}
