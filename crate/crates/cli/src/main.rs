use std::collections::BTreeMap;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use nefmath::corpus::{self, glyphs::Jitter, CorpusConfig, Split};
use nefmath::engine::server::{serve, ServeConfig};
use nefmath::engine::{Engine, EngineConfig};
use nefmath::eval::{evaluate, evaluate_oracle};
use nefmath::features::SimplifyParams;
use nefmath::ink::parse_ink;
use nefmath::nefclass::{FuzzyModel, InferenceConfig, TNorm};
use nefmath::recognize::recognize;
use nefmath::render::{render, RenderOptions, Target};
use nefmath::store::{self, KnowledgeFile, ModelFile, Provenance, Store, StorePaths};
use nefmath::structure::KnowledgeBase;
use nefmath::train::cg::CgConfig;
use nefmath::train::ga::GaConfig;
use nefmath::train::{fine_tune, train_initial, DEFAULT_CALIBRATION_TARGET, FINE_TUNE_BATCH};
use nefmath::{InkError, ModelError, StoreError};

#[derive(Parser)]
#[command(name = "nefmath", version, about = "Handwritten math expression recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model with the genetic algorithm, or fine-tune one on stored corrections.
    Train(TrainArgs),
    /// Recognize an ink document.
    Recognize(RecognizeArgs),
    /// Score a model on a labeled corpus.
    Eval(EvalArgs),
    /// Generate a synthetic labeled corpus.
    GenCorpus(GenCorpusArgs),
    /// Run the session service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Cold-start GA training from a corpus.
    #[arg(long, conflicts_with = "finetune", required_unless_present = "finetune")]
    init: bool,
    /// CG fine-tuning on the correction reservoir next to the model.
    #[arg(long)]
    finetune: bool,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Model to fine-tune.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Reservoir to fine-tune on; defaults to corrections.json beside the model.
    #[arg(long)]
    corrections: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 40)]
    population: usize,
    #[arg(long, default_value_t = 60)]
    generations: usize,
    #[arg(long, default_value_t = 5)]
    terms: usize,
    #[arg(long, default_value_t = 3)]
    max_rules: usize,
    #[arg(long, value_enum, default_value_t = TNormArg::Min)]
    tnorm: TNormArg,
    #[arg(long, default_value_t = 0.1)]
    reject_threshold: f64,
    /// Share of correct training strokes kept above the reject threshold.
    #[arg(long, default_value_t = DEFAULT_CALIBRATION_TARGET)]
    calibration: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum TNormArg {
    Min,
    Product,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Latex,
    Mathml,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Args)]
struct RecognizeArgs {
    /// Ink document.
    ink: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    knowledge: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Latex)]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, required_unless_present = "oracle_labels")]
    model: Option<PathBuf>,
    #[arg(long)]
    knowledge: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    /// Feed the true stroke labels to analysis instead of classifying.
    #[arg(long)]
    oracle_labels: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenCorpusArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    train: usize,
    #[arg(long, default_value_t = 150)]
    test: usize,
    /// Render glyphs without noise, rotation or scaling.
    #[arg(long)]
    no_jitter: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    /// Model file; its directory holds the correction reservoir.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    knowledge: Option<PathBuf>,
    /// Corpus whose training strokes anchor retraining and fine-tuning.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// NDJSON port; 0 picks a free port.
    #[arg(long, default_value_t = 7878)]
    port: u16,
    #[arg(long)]
    http_port: Option<u16>,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
}

enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<InkError> for Failure {
    fn from(e: InkError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Recognize(a) => cmd_recognize(a),
        Command::Eval(a) => cmd_eval(a),
        Command::GenCorpus(a) => cmd_gen_corpus(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}

fn emit(value: &serde_json::Value, out: Option<&Path>) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).expect("values serialize");
    text.push('\n');
    match out {
        Some(p) => store::write_atomic(p, text.as_bytes())?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::Internal(e.to_string()))?;
        }
    }
    Ok(())
}

fn knowledge_at(path: Option<&Path>) -> Result<KnowledgeBase, Failure> {
    Ok(match path {
        Some(p) => store::load_knowledge(p)?.knowledge,
        None => KnowledgeBase::builtin(),
    })
}

fn require<'a>(v: &'a Option<PathBuf>, flag: &str, mode: &str) -> Result<&'a Path, Failure> {
    v.as_deref().ok_or_else(|| Failure::Usage(format!("{mode} requires {flag}")))
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.with_file_name(name)
}

fn cmd_train(a: TrainArgs) -> CliResult {
    if a.init {
        let corpus_path = require(&a.corpus, "--corpus", "train --init")?;
        let out = require(&a.out, "--out", "train --init")?;
        let corpus = corpus::load_corpus(corpus_path)?;
        let features = SimplifyParams::default();
        let inference = InferenceConfig {
            tnorm: match a.tnorm {
                TNormArg::Min => TNorm::Min,
                TNormArg::Product => TNorm::Product,
            },
            terms_per_input: a.terms,
            max_rules_per_class: a.max_rules,
            reject_threshold: a.reject_threshold,
        };
        if a.terms == 0 || !(0.0..=1.0).contains(&a.reject_threshold) {
            return Err(Failure::Usage("--terms must be positive and --reject-threshold in [0, 1]".into()));
        }
        let ga = GaConfig { population_size: a.population, generations: a.generations, rng_seed: a.seed, ..GaConfig::default() };
        ga.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        let samples = corpus.samples(Split::Train, &features);
        let template = FuzzyModel::untrained(corpus.classes.clone(), features, inference);
        let t0 = Instant::now();
        let trained = train_initial(&ga, a.calibration, &samples, &template)?;
        let seconds = t0.elapsed().as_secs_f64();
        let digest_input = json!({ "ga": ga, "inference": inference, "features": features, "calibration": a.calibration });
        let file = ModelFile::new(trained.model, Provenance::new("ga", &digest_input, a.seed, samples.len()));
        store::save_model(out, &file)?;
        emit(
            &json!({
                "trainer": "ga",
                "samples": samples.len(),
                "generations": ga.generations,
                "fitness": trained.ga.best_fitness,
                "history": trained.ga.history,
                "calibration": trained.calibration,
                "rules": file.model.rules.len(),
                "seconds": seconds,
                "model": out,
            }),
            None,
        )
    } else {
        let model_path = require(&a.model, "--model", "train --finetune")?;
        let out = a.out.clone().unwrap_or_else(|| model_path.to_path_buf());
        let mut file = store::load_model(model_path)?;
        let reservoir_path = a.corrections.clone().unwrap_or_else(|| sibling(model_path, "corrections.json"));
        let reservoir = if reservoir_path.exists() { store::load_corrections(&reservoir_path)? } else { Default::default() };
        let samples = reservoir.labeled(&file.model);
        if samples.is_empty() {
            eprintln!("notice: correction reservoir {} is empty; model left unchanged", reservoir_path.display());
            return emit(&json!({ "trainer": "cg", "applied": false, "samples": 0 }), None);
        }
        let cg = CgConfig { rng_seed: a.seed, ..CgConfig::default() };
        let recent = &samples[samples.len().saturating_sub(FINE_TUNE_BATCH)..];
        let t0 = Instant::now();
        let (result, metrics) = fine_tune(&cg, &file.model, recent, &[])?;
        file = ModelFile::new(result.model, Provenance::new("cg", &cg, a.seed, metrics.batch_size));
        store::save_model(&out, &file)?;
        emit(
            &json!({
                "trainer": "cg",
                "applied": true,
                "samples": metrics.batch_size,
                "loss_before": metrics.loss_before,
                "loss_after": metrics.loss_after,
                "iterations": metrics.iterations,
                "converged": metrics.converged,
                "narrowed_terms": metrics.narrowed_terms,
                "seconds": t0.elapsed().as_secs_f64(),
                "model": out,
            }),
            None,
        )
    }
}

fn cmd_recognize(a: RecognizeArgs) -> CliResult {
    let model = store::load_model(&a.model)?.model;
    let knowledge = knowledge_at(a.knowledge.as_deref())?;
    let bytes = std::fs::read(&a.ink).map_err(|e| Failure::Data(format!("{}: {e}", a.ink.display())))?;
    let session = parse_ink(&bytes)?;
    let report = recognize(&model, &knowledge, session.strokes(), &BTreeMap::new())?;
    let target = match a.format {
        FormatArg::Latex => Target::Latex,
        FormatArg::Mathml => Target::Mathml,
    };
    let output = render(&report.tree, &RenderOptions { target, ..RenderOptions::default() });
    emit(
        &json!({
            "format": target,
            "output": output,
            "latex": render(&report.tree, &RenderOptions::latex()),
            "symbols": report.symbols,
            "tree": report.tree,
            "diagnostics": report.diagnostics,
        }),
        a.out.as_deref(),
    )
}

fn cmd_eval(a: EvalArgs) -> CliResult {
    let corpus = corpus::load_corpus(&a.corpus)?;
    let knowledge = knowledge_at(a.knowledge.as_deref())?;
    let split = match a.split {
        SplitArg::Train => Split::Train,
        SplitArg::Test => Split::Test,
    };
    let exprs = corpus.split(split);
    let report = if a.oracle_labels {
        evaluate_oracle(&knowledge, exprs)
    } else {
        let path = a.model.as_deref().ok_or_else(|| Failure::Usage("eval requires --model".into()))?;
        evaluate(&store::load_model(path)?.model, &knowledge, exprs)?
    };
    eprintln!(
        "strokes {:.2}%  reconstruction {:.2}%  structure {:.2}%  latency mean {:.3} ms p95 {:.3} ms",
        report.stroke_accuracy,
        report.reconstruction_accuracy,
        report.structural_accuracy,
        report.latency_mean_ms,
        report.latency_p95_ms
    );
    emit(&serde_json::to_value(&report).expect("reports serialize"), a.out.as_deref())
}

fn cmd_gen_corpus(a: GenCorpusArgs) -> CliResult {
    let config = CorpusConfig {
        seed: a.seed,
        train_count: a.train,
        test_count: a.test,
        jitter: if a.no_jitter { Jitter::NONE } else { Jitter::default() },
    };
    let c = corpus::generate(&config);
    corpus::save_corpus(&a.out, &c)?;
    eprintln!("wrote {} train and {} test expressions to {}", c.train.len(), c.test.len(), a.out.display());
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> CliResult {
    let paths = StorePaths {
        knowledge: a.knowledge.clone().unwrap_or_else(|| sibling(&a.model, "knowledge.json")),
        corrections: sibling(&a.model, "corrections.json"),
        model: a.model.clone(),
    };
    if let Some(k) = &a.knowledge {
        // an explicit knowledge file must exist; the default may be created
        store::load_knowledge(k)?;
    } else if !paths.knowledge.exists() {
        store::save_knowledge(&paths.knowledge, &KnowledgeFile::builtin())?;
    }
    let store = Store::open(paths)?;
    let mut config = EngineConfig::default();
    if let Some(c) = &a.corpus {
        config.base_samples = corpus::load_corpus(c)?.samples(Split::Train, &store.model().model.features);
    }
    let engine = Arc::new(Engine::with_store(store, config));
    let serve_config = ServeConfig {
        ndjson: Some(SocketAddr::new(a.host, a.port)),
        http: a.http_port.map(|p| SocketAddr::new(a.host, p)),
    };
    let service = serve(engine, &serve_config).map_err(|e| Failure::Internal(format!("cannot listen: {e}")))?;
    let describe = |addr: Option<SocketAddr>| addr.map_or_else(|| "off".to_string(), |a| a.to_string());
    println!("listening ndjson={} http={}", describe(service.ndjson_addr()), describe(service.http_addr()));
    let _ = std::io::stdout().flush();
    service.wait();
    Ok(())
}
