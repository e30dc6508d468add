//! The toy-KG fixture runs whose outputs are pinned under `fixtures/golden/`.

use std::fs::File;
use std::io::BufReader;

use pgakv_core::{
    build_index, load_dataset, parse_triple_file, run_eval, run_pipeline, DatasetFormat, EvalConfig, EvalDeps, Graph,
    HashEmbedder, LlmClient, PipelineConfig, PipelineOutcome, PromptBundle, Providers, QaItem, Strategy, TripleIndex,
};

use crate::fixture;

pub const TOY_KG: &str = "toy_kg.tsv";
pub const TOY_QUESTIONS: &str = "toy_questions.jsonl";
pub const NATURE_SAMPLE: &str = "nature_sample.jsonl";
pub const QALD_SAMPLE: &str = "qald_sample.jsonl";
pub const TOY_CASSETTE: &str = "cassettes/toy.json";
pub const DEGRADED_CASSETTE: &str = "cassettes/degraded.json";
pub const TOY_INDEX: &str = "toy.index";
/// Its cassette answers every pseudo-graph prompt with prose.
pub const DEGRADED_QUESTION: &str = "Who wrote Hamlet?";

pub fn toy_graph() -> Graph {
    let f = File::open(fixture(TOY_KG)).expect("toy KG fixture");
    parse_triple_file(BufReader::new(f)).expect("toy KG parses")
}

pub fn toy_index() -> TripleIndex {
    build_index(&toy_graph(), &HashEmbedder::default()).expect("toy index builds")
}

pub fn load_items(name: &str, format: DatasetFormat) -> Vec<QaItem> {
    let f = File::open(fixture(name)).expect("dataset fixture");
    load_dataset(BufReader::new(f), format).expect("dataset fixture loads")
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializes");
    s.push('\n');
    s
}

pub fn toy_outcomes(llm: &dyn LlmClient, index: &TripleIndex) -> Vec<PipelineOutcome> {
    let embedder = HashEmbedder::default();
    let bundle = PromptBundle::default();
    load_items(TOY_QUESTIONS, DatasetFormat::SimpleQuestions)
        .iter()
        .map(|item| {
            run_pipeline(
                &item.question,
                index,
                Providers {
                    embedder: &embedder,
                    llm,
                },
                &bundle,
                &PipelineConfig::default(),
            )
            .expect("toy question runs")
        })
        .collect()
}

pub fn degraded_outcome(llm: &dyn LlmClient, index: &TripleIndex) -> PipelineOutcome {
    run_pipeline(
        DEGRADED_QUESTION,
        index,
        Providers {
            embedder: &HashEmbedder::default(),
            llm,
        },
        &PromptBundle::default(),
        &PipelineConfig::default(),
    )
    .expect("degraded question still completes")
}

/// Every pinned output as `(path under fixtures/, contents)`.
pub fn golden_outputs(toy: &dyn LlmClient, degraded: &dyn LlmClient) -> Vec<(String, String)> {
    let index = toy_index();
    let embedder = HashEmbedder::default();
    let bundle = PromptBundle::default();
    let mut out = vec![
        ("golden/toy_traces.json".to_string(), pretty(&toy_outcomes(toy, &index))),
        (
            "golden/degraded_trace.json".to_string(),
            pretty(&degraded_outcome(degraded, &index)),
        ),
    ];
    let deps = EvalDeps {
        llm: toy,
        embedder: Some(&embedder),
        index: Some(&index),
        bundle: &bundle,
    };
    let toy_items = load_items(TOY_QUESTIONS, DatasetFormat::SimpleQuestions);
    for strategy in Strategy::ALL {
        let cfg = EvalConfig::new(DatasetFormat::SimpleQuestions.metric());
        let report = run_eval(&toy_items, strategy, deps, &cfg).expect("toy eval runs");
        out.push((format!("golden/report_{}.json", strategy.name()), report.to_json()));
    }
    for (name, format) in [
        (NATURE_SAMPLE, DatasetFormat::Nature),
        (QALD_SAMPLE, DatasetFormat::Qald10),
    ] {
        let items = load_items(name, format);
        let report = run_eval(&items, Strategy::Io, deps, &EvalConfig::new(format.metric())).expect("sample eval runs");
        out.push((format!("golden/report_{}_io.json", format.name()), report.to_json()));
    }
    out
}
