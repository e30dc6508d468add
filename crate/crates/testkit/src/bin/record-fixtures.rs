//! Re-records the fixture cassettes with the scripted model, then replays
//! them to rewrite every golden file. Review the diff before committing.

use std::fs;

use pgakv_core::{RecordingClient, ReplayClient};
use pgakv_testkit::fixture;
use pgakv_testkit::golden::{golden_outputs, toy_index, DEGRADED_CASSETTE, TOY_CASSETTE, TOY_INDEX};
use pgakv_testkit::scripted::{sample_scenarios, toy_scenarios, ScriptedLlm};

fn main() {
    let mut scenarios = toy_scenarios();
    scenarios.extend(sample_scenarios());
    let model = ScriptedLlm::new(scenarios);
    let toy = RecordingClient::new(&model);
    let degraded = RecordingClient::new(&model);
    golden_outputs(&toy, &degraded);

    let toy = toy.cassette();
    let degraded = degraded.cassette();
    toy.save(&fixture(TOY_CASSETTE)).expect("write toy cassette");
    degraded
        .save(&fixture(DEGRADED_CASSETTE))
        .expect("write degraded cassette");
    println!("{TOY_CASSETTE}: {} entries", toy.len());
    println!("{DEGRADED_CASSETTE}: {} entries", degraded.len());

    let mut index = Vec::new();
    toy_index().write_to(&mut index).expect("serialize index");
    fs::write(fixture(TOY_INDEX), index).expect("write index");

    for (path, contents) in golden_outputs(&ReplayClient::new(toy), &ReplayClient::new(degraded)) {
        fs::write(fixture(&path), contents).expect("write golden file");
        println!("{path}");
    }
}
