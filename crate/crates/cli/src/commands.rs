use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use pgakv_core::eval::EvalError;
use pgakv_core::index::IndexError;
use pgakv_core::llm::{CassetteMode, ChatClient, Throttled};
use pgakv_core::pipeline::PipelineError;
use pgakv_core::{
    build_index, load_dataset, parse_triple_file, run_eval, run_pipeline, Cassette, DatasetFormat, EmbeddingProvider,
    EvalConfig, EvalDeps, HashEmbedder, LlmClient, PromptBundle, Providers, RecordingClient, RemoteEmbedder,
    ReplayClient, Strategy, TripleIndex,
};
use serde::Serialize;

use crate::args::{AskArgs, EvalArgs, IndexArgs};
use crate::config::{AppConfig, FileConfig, BUILTIN_PROVIDER};
use crate::error::CliError;

fn input<E: std::fmt::Display>(path: &Path) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", path.display()))
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn make_embedder(provider: &str) -> Result<Box<dyn EmbeddingProvider>, CliError> {
    if provider == BUILTIN_PROVIDER {
        Ok(Box::new(HashEmbedder::default()))
    } else if provider.starts_with("http://") || provider.starts_with("https://") {
        let remote = RemoteEmbedder::connect(provider).map_err(runtime)?;
        Ok(Box::new(remote))
    } else {
        Err(CliError::Input(format!(
            "unknown embedding provider `{provider}`: use `{BUILTIN_PROVIDER}` or an http(s) URL"
        )))
    }
}

fn read_kg(path: &Path) -> Result<pgakv_core::Graph, CliError> {
    let f = File::open(path).map_err(input(path))?;
    parse_triple_file(BufReader::new(f)).map_err(input(path))
}

fn index_error(e: IndexError) -> CliError {
    match e {
        IndexError::EmptyGraph | IndexError::StaleIndex { .. } | IndexError::Format { .. } => {
            CliError::Input(e.to_string())
        }
        other => CliError::Runtime(other.to_string()),
    }
}

pub fn index(args: IndexArgs, file: FileConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let kg = args
        .kg
        .or(file.kg)
        .ok_or_else(|| CliError::Input("index needs --kg".into()))?;
    let target = args
        .index
        .or(file.index)
        .ok_or_else(|| CliError::Input("index needs --index (the output path)".into()))?;
    let provider = args
        .provider
        .or(file.provider)
        .unwrap_or_else(|| BUILTIN_PROVIDER.to_string());
    let graph = read_kg(&kg)?;
    let embedder = make_embedder(&provider)?;
    let idx = build_index(&graph, embedder.as_ref()).map_err(index_error)?;
    let mut w = BufWriter::new(File::create(&target).map_err(input(&target))?);
    idx.write_to(&mut w).and_then(|()| w.flush()).map_err(input(&target))?;
    writeln!(
        out,
        "indexed {} triples, dimension {} ({}) -> {}",
        idx.len(),
        idx.dimension(),
        idx.fingerprint(),
        target.display()
    )
    .map_err(runtime)
}

fn load_index(cfg: &AppConfig, embedder: &dyn EmbeddingProvider) -> Result<Option<TripleIndex>, CliError> {
    if let Some(path) = &cfg.index {
        let f = File::open(path).map_err(input(path))?;
        let idx = TripleIndex::read_checked(BufReader::new(f), embedder).map_err(|e| match e {
            IndexError::StaleIndex { .. } | IndexError::Format { .. } | IndexError::Io(_) => {
                CliError::Input(format!("{}: {e}", path.display()))
            }
            other => index_error(other),
        })?;
        return Ok(Some(idx));
    }
    if let Some(kg) = &cfg.kg {
        info!("no index cache given, embedding {} in memory", kg.display());
        return build_index(&read_kg(kg)?, embedder).map(Some).map_err(index_error);
    }
    Ok(None)
}

/// The configured LLM, plus where to save a cassette being recorded.
enum Llm {
    Replay(ReplayClient),
    Record(RecordingClient<Throttled<ChatClient>>, PathBuf),
    Live(Throttled<ChatClient>),
}

impl Llm {
    fn from_config(cfg: &AppConfig) -> Result<Self, CliError> {
        let live = || -> Result<Throttled<ChatClient>, CliError> {
            let (Some(url), Some(model)) = (&cfg.llm_url, &cfg.model) else {
                return Err(CliError::Input(
                    "no LLM configured: give --cassette to replay, or --llm-url and --model".into(),
                ));
            };
            let chat = ChatClient::new(url, model.clone(), None).map_err(runtime)?;
            Ok(Throttled::new(chat, cfg.concurrency, None))
        };
        match (&cfg.cassette, cfg.cassette_mode) {
            (Some(path), CassetteMode::Replay) => {
                let cassette = Cassette::load(path).map_err(input(path))?;
                info!("replaying {} recorded calls from {}", cassette.len(), path.display());
                Ok(Llm::Replay(ReplayClient::new(cassette)))
            }
            (Some(path), CassetteMode::Record) => {
                let existing = if path.is_file() {
                    Cassette::load(path).map_err(input(path))?
                } else {
                    Cassette::default()
                };
                Ok(Llm::Record(RecordingClient::extending(live()?, existing), path.clone()))
            }
            (None, _) => Ok(Llm::Live(live()?)),
        }
    }

    fn client(&self) -> &dyn LlmClient {
        match self {
            Llm::Replay(c) => c,
            Llm::Record(c, _) => c,
            Llm::Live(c) => c,
        }
    }

    fn finish(self) -> Result<(), CliError> {
        if let Llm::Record(c, path) = self {
            let cassette = c.cassette();
            cassette.save(&path).map_err(input(&path))?;
            info!("saved {} calls to {}", cassette.len(), path.display());
        }
        Ok(())
    }
}

fn pipeline_error(e: PipelineError) -> CliError {
    match e {
        PipelineError::Llm(e) => e.into(),
        PipelineError::EmptyQuestion => CliError::Input("the question is empty".into()),
        other => CliError::Runtime(other.to_string()),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(input(path))
}

pub fn ask(args: AskArgs, file: FileConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = AppConfig::resolve(&args.run, file)?;
    info!(
        "effective config: {}",
        serde_json::to_string(&cfg).expect("config serializes")
    );
    let embedder = make_embedder(&cfg.provider)?;
    let index =
        load_index(&cfg, embedder.as_ref())?.ok_or_else(|| CliError::Input("ask needs --index or --kg".into()))?;
    let llm = Llm::from_config(&cfg)?;
    let result = run_pipeline(
        &args.question,
        &index,
        Providers {
            embedder: embedder.as_ref(),
            llm: llm.client(),
        },
        &PromptBundle::default(),
        &cfg.pipeline(),
    );
    llm.finish()?;
    let outcome = result.map_err(pipeline_error)?;
    if let Some(path) = &args.trace {
        let mut json = serde_json::to_string_pretty(&outcome.trace).expect("trace serializes");
        json.push('\n');
        write_file(path, &json)?;
    }
    if outcome.trace.degraded {
        warn!("degraded run: no usable pseudo-graph, answered directly");
    }
    writeln!(out, "answer: {}", outcome.answer).map_err(runtime)?;
    writeln!(out, "degraded: {}", outcome.trace.degraded).map_err(runtime)?;
    writeln!(out, "llm calls: {}", outcome.trace.llm_calls).map_err(runtime)?;
    Ok(())
}

#[derive(Serialize)]
struct EffectiveEval<'a> {
    dataset: &'a Path,
    format: DatasetFormat,
    strategy: Strategy,
    subset: Option<usize>,
    #[serde(flatten)]
    app: &'a AppConfig,
    run: serde_json::Value,
}

pub fn eval(args: EvalArgs, file: FileConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = AppConfig::resolve(&args.run, file)?;
    let f = File::open(&args.dataset).map_err(input(&args.dataset))?;
    let items = load_dataset(BufReader::new(f), args.format).map_err(input(&args.dataset))?;
    let embedder = make_embedder(&cfg.provider)?;
    let index = load_index(&cfg, embedder.as_ref())?;
    let llm = Llm::from_config(&cfg)?;
    let eval_cfg = EvalConfig {
        metric: args.format.metric(),
        pipeline: cfg.pipeline(),
        concurrency: cfg.concurrency,
        subset: args.subset,
        seed: cfg.seed,
    };
    let bundle = PromptBundle::default();
    let deps = EvalDeps {
        llm: llm.client(),
        embedder: Some(embedder.as_ref()),
        index: index.as_ref(),
        bundle: &bundle,
    };
    let result = run_eval(&items, args.strategy, deps, &eval_cfg);
    llm.finish()?;
    let mut report = result.map_err(|e| match e {
        EvalError::NoItems | EvalError::MissingIndex(_) => CliError::Input(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    })?;
    report.config = serde_json::to_value(EffectiveEval {
        dataset: &args.dataset,
        format: args.format,
        strategy: args.strategy,
        subset: args.subset,
        app: &cfg,
        run: report.config,
    })
    .expect("config serializes");
    if let Some(path) = &args.out {
        write_file(path, &report.to_json())?;
    }
    write!(out, "{}", report.render_table()).map_err(runtime)?;
    let misses: Vec<String> = report.replay_misses().into_iter().map(String::from).collect();
    if misses.is_empty() {
        Ok(())
    } else {
        Err(CliError::ReplayMiss(misses))
    }
}
